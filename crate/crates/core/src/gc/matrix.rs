//! Granger-causality matrices, edge-recovery scores and the GC report file.
//!
//! Row `j` is the target series, column `k` the source: `adjacency[j][k]`
//! means series `k` Granger-causes series `j`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GCMatrix {
    /// Raw block norms, `p × p`, nonnegative.
    pub strengths: Vec<Vec<f64>>,
    pub adjacency: Vec<Vec<bool>>,
    pub epsilon: f64,
}

fn check_square<T>(m: &[Vec<T>]) -> Result<usize> {
    let p = m.len();
    if p == 0 || m.iter().any(|r| r.len() != p) {
        return Err(Error::Shape(
            "GC matrix must be square and non-empty".into(),
        ));
    }
    Ok(p)
}

impl GCMatrix {
    /// Thresholds `strengths` at `epsilon`: an edge exists iff strength > ε.
    pub fn from_strengths(strengths: Vec<Vec<f64>>, epsilon: f64) -> Result<Self> {
        check_square(&strengths)?;
        if !(epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        if strengths.iter().flatten().any(|s| !(*s >= 0.0)) {
            return Err(Error::Shape("GC strengths must be nonnegative".into()));
        }
        let adjacency = strengths
            .iter()
            .map(|r| r.iter().map(|s| *s > epsilon).collect())
            .collect();
        Ok(Self {
            strengths,
            adjacency,
            epsilon,
        })
    }

    /// Ground-truth style matrix with unit strength on every edge.
    pub fn from_adjacency(adjacency: Vec<Vec<bool>>) -> Result<Self> {
        check_square(&adjacency)?;
        let strengths = adjacency
            .iter()
            .map(|r| r.iter().map(|a| if *a { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok(Self {
            strengths,
            adjacency,
            epsilon: 0.5,
        })
    }

    pub fn p(&self) -> usize {
        self.strengths.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().flatten().filter(|a| **a).count()
    }

    /// Strengths divided by their row maximum; all-zero rows stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.strengths
            .iter()
            .map(|row| {
                let max = row.iter().copied().fold(0.0, f64::max);
                row.iter()
                    .map(|s| if max > 0.0 { s / max } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

/// Edge-recovery scores of an estimate against a ground-truth adjacency,
/// computed over all `p²` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    /// `None` when the truth has only one class.
    pub auroc: Option<f64>,
}

pub fn edge_metrics(estimate: &GCMatrix, truth: &[Vec<bool>]) -> Result<EdgeMetrics> {
    if truth.len() != estimate.p() || truth.iter().any(|r| r.len() != estimate.p()) {
        return Err(Error::Shape(
            "ground truth and estimate sizes differ".into(),
        ));
    }
    let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (est_row, true_row) in estimate.adjacency.iter().zip(truth) {
        for (e, t) in est_row.iter().zip(true_row) {
            match (e, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
            if e == t {
                correct += 1;
            }
        }
    }
    let total = estimate.p() * estimate.p();
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok(EdgeMetrics {
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        accuracy: correct as f64 / total as f64,
        auroc: auroc(&estimate.strengths, truth),
    })
}

/// Area under the ROC curve of `scores` ranking true edges above non-edges
/// (Mann-Whitney form, ties count one half).
pub fn auroc(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Option<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (srow, trow) in scores.iter().zip(truth) {
        for (s, t) in srow.iter().zip(trow) {
            if *t {
                pos.push(*s);
            } else {
                neg.push(*s);
            }
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for a in &pos {
        for b in &neg {
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

fn label(k: usize) -> String {
    format!("f{}", k + 1)
}

/// GC report CSV: raw, row-normalised and 0/1 adjacency blocks followed by
/// the `epsilon` and (when given) `lambda` used.
pub fn write_gc_report(gc: &GCMatrix, lambda: Option<f64>) -> String {
    let p = gc.p();
    let mut out = String::from("matrix,target");
    for k in 0..p {
        write!(out, ",{}", label(k)).expect("write to String");
    }
    out.push('\n');
    let normalized = gc.normalized();
    let blocks: [(&str, Vec<Vec<String>>); 3] = [
        (
            "raw",
            gc.strengths
                .iter()
                .map(|r| r.iter().map(|v| v.to_string()).collect())
                .collect(),
        ),
        (
            "normalized",
            normalized
                .iter()
                .map(|r| r.iter().map(|v| v.to_string()).collect())
                .collect(),
        ),
        (
            "adjacency",
            gc.adjacency
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|a| if *a { "1" } else { "0" }.to_string())
                        .collect()
                })
                .collect(),
        ),
    ];
    for (name, rows) in blocks {
        for (j, row) in rows.iter().enumerate() {
            write!(out, "{name},{}", label(j)).expect("write to String");
            for v in row {
                write!(out, ",{v}").expect("write to String");
            }
            out.push('\n');
        }
    }
    writeln!(out, "param,epsilon,{}", gc.epsilon).expect("write to String");
    if let Some(l) = lambda {
        writeln!(out, "param,lambda,{l}").expect("write to String");
    }
    out
}

/// Parses a report written by [`write_gc_report`]; returns the matrix and
/// the recorded λ, if any. Adjacency is read as written, not re-thresholded.
pub fn parse_gc_report(text: &str) -> Result<(GCMatrix, Option<f64>)> {
    let bad = |m: &str| Error::Format(format!("GC report: {m}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let p = header
        .split(',')
        .count()
        .checked_sub(2)
        .filter(|p| *p > 0)
        .ok_or_else(|| bad("bad header"))?;
    let mut raw = Vec::new();
    let mut adjacency = Vec::new();
    let mut epsilon = None;
    let mut lambda = None;
    for line in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(&format!("bad number '{s}'")))
        };
        match cells[0] {
            "raw" | "normalized" | "adjacency" => {
                if cells.len() != p + 2 {
                    return Err(bad("row width"));
                }
                let vals = cells[2..]
                    .iter()
                    .map(|c| num(c))
                    .collect::<Result<Vec<f64>>>()?;
                match cells[0] {
                    "raw" => raw.push(vals),
                    "adjacency" => {
                        adjacency.push(vals.iter().map(|v| *v != 0.0).collect::<Vec<bool>>())
                    }
                    _ => {}
                }
            }
            "param" if cells.len() == 3 => match cells[1] {
                "epsilon" => epsilon = Some(num(cells[2])?),
                "lambda" => lambda = Some(num(cells[2])?),
                _ => return Err(bad(&format!("unknown param '{}'", cells[1]))),
            },
            other => return Err(bad(&format!("unknown row '{other}'"))),
        }
    }
    if raw.len() != p || adjacency.len() != p {
        return Err(bad("missing matrix rows"));
    }
    let gc = GCMatrix {
        strengths: raw,
        adjacency,
        epsilon: epsilon.ok_or_else(|| bad("missing epsilon"))?,
    };
    Ok((gc, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_and_normalize() {
        let gc = GCMatrix::from_strengths(vec![vec![2.0, 0.5], vec![0.0, 0.0]], 1e-3).unwrap();
        assert_eq!(gc.adjacency, vec![vec![true, true], vec![false, false]]);
        assert_eq!(gc.normalized(), vec![vec![1.0, 0.25], vec![0.0, 0.0]]);
        assert!(GCMatrix::from_strengths(vec![vec![-1.0]], 0.1).is_err());
        assert!(GCMatrix::from_strengths(vec![vec![1.0, 2.0]], 0.1).is_err());
    }

    #[test]
    fn metrics_against_truth() {
        let truth = vec![vec![true, false], vec![true, true]];
        let perfect = GCMatrix::from_strengths(vec![vec![1.0, 0.0], vec![0.3, 2.0]], 0.1).unwrap();
        let m = edge_metrics(&perfect, &truth).unwrap();
        assert_eq!(
            (m.precision, m.recall, m.accuracy, m.auroc),
            (1.0, 1.0, 1.0, Some(1.0))
        );
        let empty = GCMatrix::from_strengths(vec![vec![0.0; 2]; 2], 0.1).unwrap();
        let m = edge_metrics(&empty, &truth).unwrap();
        assert_eq!((m.recall, m.accuracy, m.auroc), (0.0, 0.25, Some(0.5)));
        assert_eq!(
            auroc(&empty.strengths, &[vec![true; 2], vec![true; 2]]),
            None
        );
    }

    #[test]
    fn report_round_trip() {
        let gc = GCMatrix::from_strengths(
            vec![
                vec![0.7, 0.0, 0.1],
                vec![0.0, 1.0, 0.0],
                vec![0.2, 0.3, 0.4],
            ],
            1e-3,
        )
        .unwrap();
        let text = write_gc_report(&gc, Some(0.05));
        assert!(text.starts_with("matrix,target,f1,f2,f3\nraw,f1,0.7,0,0.1\n"));
        let (back, lambda) = parse_gc_report(&text).unwrap();
        assert_eq!(back, gc);
        assert_eq!(lambda, Some(0.05));
    }
}
