//! Feature streams, label tracks and their CSV encodings.
//!
//! Modality CSV: header `t,dim0,...,dim{d-1}`, one row per timestep with
//! `t` counting up from 0. Label CSV: `t,valence[,arousal]` or `t,class`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, IngestKind, Result};
use crate::nn::Tensor;

/// Number of categorical classes (26 emotions plus "None").
pub const NUM_CLASSES: usize = 27;

/// One modality's `T × d` time series.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStream {
    pub modality_id: usize,
    pub modality_name: String,
    values: Tensor,
}

impl FeatureStream {
    pub fn new(
        modality_id: usize,
        modality_name: impl Into<String>,
        values: Tensor,
    ) -> Result<Self> {
        if values.shape().len() != 2 || values.rows() == 0 || values.cols() == 0 {
            return Err(Error::Shape(format!(
                "feature stream needs a non-empty T x d matrix, got {:?}",
                values.shape()
            )));
        }
        if !values.is_finite() {
            return Err(Error::ingest(
                IngestKind::Parse,
                "feature values must be finite",
            ));
        }
        Ok(Self {
            modality_id,
            modality_name: modality_name.into(),
            values,
        })
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t)
    }

    pub(crate) fn truncate(&mut self, t: usize) {
        self.values.truncate_rows(t);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Continuous,
    Categorical,
}

/// Per-timestep emotion labels.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelTrack {
    /// `T × c` with `c` in {1, 2}: valence, optionally arousal.
    Continuous(Tensor),
    /// Class ids in `0..27`.
    Categorical(Vec<usize>),
}

impl LabelTrack {
    pub fn continuous(values: Tensor) -> Result<Self> {
        let c = values.cols();
        if values.shape().len() != 2 || !(1..=2).contains(&c) || values.rows() == 0 {
            return Err(Error::Shape(format!(
                "continuous labels must be T x 1 or T x 2, got {:?}",
                values.shape()
            )));
        }
        if !values.is_finite() {
            return Err(Error::ingest(
                IngestKind::Parse,
                "label values must be finite",
            ));
        }
        Ok(LabelTrack::Continuous(values))
    }

    pub fn categorical(classes: Vec<usize>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Shape("empty label track".into()));
        }
        if let Some(bad) = classes.iter().find(|c| **c >= NUM_CLASSES) {
            return Err(Error::ingest(
                IngestKind::Parse,
                format!("class {bad} outside 0..{NUM_CLASSES}"),
            ));
        }
        Ok(LabelTrack::Categorical(classes))
    }

    pub fn kind(&self) -> LabelKind {
        match self {
            LabelTrack::Continuous(_) => LabelKind::Continuous,
            LabelTrack::Categorical(_) => LabelKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LabelTrack::Continuous(v) => v.rows(),
            LabelTrack::Categorical(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Channels: `c` for continuous tracks, 1 for categorical.
    pub fn channels(&self) -> usize {
        match self {
            LabelTrack::Continuous(v) => v.cols(),
            LabelTrack::Categorical(_) => 1,
        }
    }

    pub(crate) fn truncate(&mut self, t: usize) {
        match self {
            LabelTrack::Continuous(v) => v.truncate_rows(t),
            LabelTrack::Categorical(c) => c.truncate(t),
        }
    }
}

/// `p ≥ 2` time-aligned streams with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedSample {
    pub sample_id: String,
    pub streams: Vec<FeatureStream>,
    pub labels: LabelTrack,
}

impl AlignedSample {
    pub fn new(
        sample_id: impl Into<String>,
        streams: Vec<FeatureStream>,
        labels: LabelTrack,
    ) -> Result<Self> {
        if streams.len() < 2 {
            return Err(Error::Align(format!(
                "need at least 2 streams, got {}",
                streams.len()
            )));
        }
        let t = streams[0].len();
        if streams.iter().any(|s| s.len() != t) || labels.len() != t {
            return Err(Error::Align("streams and labels must share T".into()));
        }
        for (i, s) in streams.iter().enumerate() {
            if streams[..i].iter().any(|o| o.modality_id == s.modality_id) {
                return Err(Error::Align(format!(
                    "duplicate modality id {}",
                    s.modality_id
                )));
            }
        }
        Ok(Self {
            sample_id: sample_id.into(),
            streams,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_modalities(&self) -> usize {
        self.streams.len()
    }

    pub fn modality_dims(&self) -> Vec<usize> {
        self.streams.iter().map(FeatureStream::dim).collect()
    }
}

fn parse_err(line: usize, what: impl std::fmt::Display) -> Error {
    Error::ingest(IngestKind::Parse, format!("line {line}: {what}"))
}

/// Parses numeric rows, checking the `t` column runs 0, 1, 2, ...
fn parse_rows(text: &str, expect_header: impl Fn(&[&str]) -> Result<()>) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::ingest(IngestKind::Empty, "file is empty"));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    expect_header(&cols)?;
    let mut rows = Vec::new();
    for (n, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            return Err(parse_err(
                n + 1,
                format!("expected {} cells, got {}", cols.len(), cells.len()),
            ));
        }
        let t: usize = cells[0]
            .parse()
            .map_err(|_| parse_err(n + 1, format!("bad timestep '{}'", cells[0])))?;
        if t != rows.len() {
            return Err(Error::ingest(
                IngestKind::Gap,
                format!(
                    "line {}: timestep {t} where {} was expected",
                    n + 1,
                    rows.len()
                ),
            ));
        }
        let vals = cells[1..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(n + 1, format!("non-numeric cell '{c}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::ingest(IngestKind::Empty, "no data rows"));
    }
    Ok(rows)
}

pub fn parse_modality_csv(text: &str, modality_id: usize, name: &str) -> Result<FeatureStream> {
    let rows = parse_rows(text, |cols| {
        let ok = cols.len() >= 2
            && cols[0] == "t"
            && cols[1..]
                .iter()
                .enumerate()
                .all(|(j, c)| *c == format!("dim{j}"));
        if ok {
            Ok(())
        } else {
            Err(Error::ingest(
                IngestKind::Header,
                format!("expected t,dim0,... got {}", cols.join(",")),
            ))
        }
    })?;
    let values = Tensor::from_rows(&rows)?;
    FeatureStream::new(modality_id, name, values)
}

/// Loads a modality CSV; the file stem becomes the modality name.
pub fn load_modality_csv(path: impl AsRef<Path>, modality_id: usize) -> Result<FeatureStream> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("modality");
    parse_modality_csv(&text, modality_id, name)
}

fn push_f64(out: &mut String, v: f64) {
    // Display for f64 is the shortest representation that round-trips.
    write!(out, "{v}").expect("write to String");
}

pub fn write_modality_csv(stream: &FeatureStream) -> String {
    let mut out = String::from("t");
    for j in 0..stream.dim() {
        write!(out, ",dim{j}").expect("write to String");
    }
    out.push('\n');
    for t in 0..stream.len() {
        write!(out, "{t}").expect("write to String");
        for v in stream.row(t) {
            out.push(',');
            push_f64(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

pub fn parse_label_csv(text: &str) -> Result<LabelTrack> {
    let mut kind = None;
    let rows = parse_rows(text, |cols| match cols {
        ["t", "valence"] | ["t", "valence", "arousal"] => Ok(()),
        ["t", "class"] => Ok(()),
        _ => Err(Error::ingest(
            IngestKind::Header,
            format!(
                "expected t,valence[,arousal] or t,class, got {}",
                cols.join(",")
            ),
        )),
    })?;
    if let Some(header) = text.lines().find(|l| !l.trim().is_empty()) {
        kind = Some(if header.contains("class") {
            LabelKind::Categorical
        } else {
            LabelKind::Continuous
        });
    }
    match kind.expect("header present") {
        LabelKind::Continuous => LabelTrack::continuous(Tensor::from_rows(&rows)?),
        LabelKind::Categorical => {
            let classes = rows
                .iter()
                .map(|r| {
                    let v = r[0];
                    if v.fract() == 0.0 && v >= 0.0 && (v as usize) < NUM_CLASSES {
                        Ok(v as usize)
                    } else {
                        Err(Error::ingest(
                            IngestKind::Parse,
                            format!("invalid class '{v}'"),
                        ))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            LabelTrack::categorical(classes)
        }
    }
}

pub fn load_label_csv(path: impl AsRef<Path>) -> Result<LabelTrack> {
    parse_label_csv(&std::fs::read_to_string(path)?)
}

pub fn write_label_csv(labels: &LabelTrack) -> String {
    let mut out = String::new();
    match labels {
        LabelTrack::Continuous(v) => {
            out.push_str(if v.cols() == 2 {
                "t,valence,arousal\n"
            } else {
                "t,valence\n"
            });
            for t in 0..v.rows() {
                write!(out, "{t}").expect("write to String");
                for x in v.row(t) {
                    out.push(',');
                    push_f64(&mut out, *x);
                }
                out.push('\n');
            }
        }
        LabelTrack::Categorical(c) => {
            out.push_str("t,class\n");
            for (t, k) in c.iter().enumerate() {
                writeln!(out, "{t},{k}").expect("write to String");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_five_rows_three_dims() {
        let text = "t,dim0,dim1,dim2\n0,1,2,3\n1,1,2,3\n2,0.5,2,3\n3,1,2,3\n4,1,-2e-3,3\n";
        let s = parse_modality_csv(text, 1, "face").unwrap();
        assert_eq!((s.len(), s.dim()), (5, 3));
        assert_eq!(s.row(4)[1], -2e-3);
    }

    #[test]
    fn gap_parse_and_empty_errors() {
        let gap = parse_modality_csv("t,dim0\n0,1\n1,1\n3,1\n", 1, "x").unwrap_err();
        assert!(matches!(
            gap,
            Error::Ingest {
                kind: IngestKind::Gap,
                ..
            }
        ));
        let dup = parse_modality_csv("t,dim0\n0,1\n0,1\n", 1, "x").unwrap_err();
        assert!(matches!(
            dup,
            Error::Ingest {
                kind: IngestKind::Gap,
                ..
            }
        ));
        let bad = parse_modality_csv("t,dim0\n0,abc\n", 1, "x").unwrap_err();
        assert!(matches!(
            bad,
            Error::Ingest {
                kind: IngestKind::Parse,
                ..
            }
        ));
        let nan = parse_modality_csv("t,dim0\n0,NaN\n", 1, "x").unwrap_err();
        assert!(matches!(
            nan,
            Error::Ingest {
                kind: IngestKind::Parse,
                ..
            }
        ));
        let empty = parse_modality_csv("", 1, "x").unwrap_err();
        assert!(matches!(
            empty,
            Error::Ingest {
                kind: IngestKind::Empty,
                ..
            }
        ));
        let header_only = parse_modality_csv("t,dim0\n", 1, "x").unwrap_err();
        assert!(matches!(
            header_only,
            Error::Ingest {
                kind: IngestKind::Empty,
                ..
            }
        ));
    }

    #[test]
    fn label_files() {
        let l = parse_label_csv("t,valence,arousal\n0,0.1,0.2\n1,0.3,0.4\n").unwrap();
        assert_eq!(
            (l.kind(), l.len(), l.channels()),
            (LabelKind::Continuous, 2, 2)
        );
        let c = parse_label_csv("t,class\n0,3\n1,26\n").unwrap();
        assert_eq!(c, LabelTrack::Categorical(vec![3, 26]));
        assert!(parse_label_csv("t,class\n0,27\n").is_err());
        assert!(parse_label_csv("t,mood\n0,1\n").is_err());
        assert_eq!(write_label_csv(&c), "t,class\n0,3\n1,26\n");
    }

    #[test]
    fn load_from_disk_uses_file_stem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audio.csv");
        std::fs::write(&path, "t,dim0\n0,1.5\n").unwrap();
        let s = load_modality_csv(&path, 2).unwrap();
        assert_eq!((s.modality_name.as_str(), s.modality_id), ("audio", 2));
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in 1usize..8, dims in 1usize..4, seed in proptest::collection::vec(-1e3f64..1e3, 32)) {
            let data: Vec<f64> = (0..rows * dims).map(|i| seed[i % seed.len()] * (i as f64 + 0.37)).collect();
            let s = FeatureStream::new(0, "m", Tensor::matrix(rows, dims, data).unwrap()).unwrap();
            let text = write_modality_csv(&s);
            let back = parse_modality_csv(&text, 0, "m").unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(write_modality_csv(&back), text);
        }
    }
}
