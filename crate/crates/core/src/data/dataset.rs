//! On-disk dataset layout:
//!
//! ```text
//! <dir>/modalities.csv          modality_id,name
//! <dir>/<sample_id>/<name>.csv  one per modality
//! <dir>/<sample_id>/labels.csv
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::{
    align_streams, load_label_csv, load_modality_csv, write_label_csv, write_modality_csv,
    AlignPolicy, AlignedSample,
};
use crate::error::{Error, IngestKind, Result};

pub const MODALITIES_FILE: &str = "modalities.csv";
pub const LABELS_FILE: &str = "labels.csv";

fn parse_modalities(text: &str) -> Result<Vec<(usize, String)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("modality_id,name") => {}
        Some(other) => {
            return Err(Error::ingest(
                IngestKind::Header,
                format!("bad modalities header '{other}'"),
            ))
        }
        None => return Err(Error::ingest(IngestKind::Empty, "modalities file is empty")),
    }
    lines
        .map(|l| {
            let (id, name) = l.split_once(',').ok_or_else(|| {
                Error::ingest(IngestKind::Parse, format!("bad modality row '{l}'"))
            })?;
            let id = id
                .trim()
                .parse()
                .map_err(|_| Error::ingest(IngestKind::Parse, format!("bad modality id '{id}'")))?;
            Ok((id, name.trim().to_string()))
        })
        .collect()
}

pub fn load_sample(
    dir: &Path,
    modalities: &[(usize, String)],
    policy: AlignPolicy,
) -> Result<AlignedSample> {
    let id = dir
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    let streams = modalities
        .iter()
        .map(|(mid, name)| load_modality_csv(dir.join(format!("{name}.csv")), *mid))
        .collect::<Result<Vec<_>>>()?;
    let labels = load_label_csv(dir.join(LABELS_FILE))?;
    align_streams(&id, streams, labels, policy)
}

/// Loads every sample directory under `dir`, sorted by sample id.
pub fn load_dataset(dir: impl AsRef<Path>, policy: AlignPolicy) -> Result<Vec<AlignedSample>> {
    let dir = dir.as_ref();
    let modalities = parse_modalities(&fs::read_to_string(dir.join(MODALITIES_FILE))?)?;
    let mut sample_dirs: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    sample_dirs.sort();
    if sample_dirs.is_empty() {
        return Err(Error::ingest(
            IngestKind::Empty,
            format!("no samples under {}", dir.display()),
        ));
    }
    sample_dirs
        .iter()
        .map(|d| load_sample(d, &modalities, policy))
        .collect()
}

/// Writes samples sharing one modality layout.
pub fn save_dataset(dir: impl AsRef<Path>, samples: &[AlignedSample]) -> Result<()> {
    let dir = dir.as_ref();
    let first = samples
        .first()
        .ok_or_else(|| Error::Config("no samples to save".into()))?;
    let layout: Vec<(usize, &str)> = first
        .streams
        .iter()
        .map(|s| (s.modality_id, s.modality_name.as_str()))
        .collect();
    fs::create_dir_all(dir)?;
    let mut index = String::from("modality_id,name\n");
    for (id, name) in &layout {
        writeln!(index, "{id},{name}").expect("write to String");
    }
    fs::write(dir.join(MODALITIES_FILE), index)?;
    for sample in samples {
        let this: Vec<(usize, &str)> = sample
            .streams
            .iter()
            .map(|s| (s.modality_id, s.modality_name.as_str()))
            .collect();
        if this != layout {
            return Err(Error::Config(format!(
                "sample '{}' has a different modality layout",
                sample.sample_id
            )));
        }
        let sdir = dir.join(&sample.sample_id);
        fs::create_dir_all(&sdir)?;
        for s in &sample.streams {
            fs::write(
                sdir.join(format!("{}.csv", s.modality_name)),
                write_modality_csv(s),
            )?;
        }
        fs::write(sdir.join(LABELS_FILE), write_label_csv(&sample.labels))?;
    }
    Ok(())
}
