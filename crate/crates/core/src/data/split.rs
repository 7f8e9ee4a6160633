//! Train/validation/test partitions and the `sample_id,split` file format.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Val, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            other => Err(Error::Split(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Splits<T> {
    pub fn get(&self, name: SplitName) -> &[T] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }

    fn get_mut(&mut self, name: SplitName) -> &mut Vec<T> {
        match name {
            SplitName::Train => &mut self.train,
            SplitName::Val => &mut self.val,
            SplitName::Test => &mut self.test,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }
}

/// Split sizes for `n` items: floor each share, then hand the leftover to
/// the largest fractional remainders (earlier split wins ties). A split
/// that rounds to zero borrows one item from the largest split.
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> Result<[usize; 3]> {
    if fractions.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
        return Err(Error::Split(format!(
            "fractions must be positive, got {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!(
            "fractions must sum to 1, got {total}"
        )));
    }
    if n < fractions.len() {
        return Err(Error::Split(format!(
            "{n} samples cannot fill 3 non-empty splits"
        )));
    }
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        // Guard against 0.1 * 10 = 0.9999999999999999 style shortfalls.
        *s = (e + 1e-9).floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut leftover = n - sizes.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        sizes[i] += 1;
        leftover -= 1;
    }
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let donor = (0..3)
            .max_by_key(|&i| (sizes[i], std::cmp::Reverse(i)))
            .expect("three splits");
        sizes[donor] -= 1;
        sizes[empty] += 1;
    }
    Ok(sizes)
}

/// Deterministic shuffled partition of `items` into train/val/test.
pub fn split_samples<T: Clone>(items: &[T], fractions: [f64; 3], seed: u64) -> Result<Splits<T>> {
    let sizes = split_sizes(items.len(), fractions)?;
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut splits = Splits {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    let mut it = idx.into_iter();
    for (name, size) in SplitName::ALL.into_iter().zip(sizes) {
        splits
            .get_mut(name)
            .extend(it.by_ref().take(size).map(|i| items[i].clone()));
    }
    Ok(splits)
}

/// Parses `sample_id,split` lines. A leading `sample_id,split` header is
/// skipped.
pub fn parse_split_file(text: &str) -> Result<Splits<String>> {
    let mut splits = Splits::default();
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line == "sample_id,split") {
            continue;
        }
        let (id, split) = line
            .split_once(',')
            .ok_or_else(|| Error::Split(format!("line {}: expected sample_id,split", n + 1)))?;
        let (id, split) = (id.trim(), split.trim());
        if id.is_empty() {
            return Err(Error::Split(format!("line {}: empty sample id", n + 1)));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::Split(format!("sample '{id}' listed twice")));
        }
        splits.get_mut(split.parse()?).push(id.to_string());
    }
    Ok(splits)
}

pub fn write_split_file(splits: &Splits<String>) -> String {
    let mut out = String::from("sample_id,split\n");
    for name in SplitName::ALL {
        for id in splits.get(name) {
            writeln!(out, "{id},{}", name.as_str()).expect("write to String");
        }
    }
    out
}

pub fn load_split_file(path: impl AsRef<Path>) -> Result<Splits<String>> {
    parse_split_file(&std::fs::read_to_string(path)?)
}
