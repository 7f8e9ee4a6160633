use serde::{Deserialize, Serialize};

use crate::data::{AlignedSample, FeatureStream, LabelTrack};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignPolicy {
    /// Crop every stream and the label track to the shortest length.
    #[default]
    TruncateMin,
    /// Reject any length mismatch.
    Strict,
}

impl std::str::FromStr for AlignPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncate_min" => Ok(AlignPolicy::TruncateMin),
            "strict" => Ok(AlignPolicy::Strict),
            other => Err(Error::Config(format!("unknown alignment policy '{other}'"))),
        }
    }
}

pub fn align_streams(
    sample_id: &str,
    mut streams: Vec<FeatureStream>,
    mut labels: LabelTrack,
    policy: AlignPolicy,
) -> Result<AlignedSample> {
    if streams.len() < 2 {
        return Err(Error::Align(format!(
            "need at least 2 streams, got {}",
            streams.len()
        )));
    }
    let lengths: Vec<usize> = streams.iter().map(FeatureStream::len).collect();
    let min = lengths
        .iter()
        .copied()
        .chain([labels.len()])
        .min()
        .unwrap_or(0);
    match policy {
        AlignPolicy::Strict => {
            if lengths.iter().any(|l| *l != labels.len()) {
                return Err(Error::Align(format!(
                    "stream lengths {lengths:?} and label length {} differ",
                    labels.len()
                )));
            }
        }
        AlignPolicy::TruncateMin => {
            if min == 0 {
                return Err(Error::Align("a stream or the label track is empty".into()));
            }
            streams.iter_mut().for_each(|s| s.truncate(min));
            labels.truncate(min);
        }
    }
    AlignedSample::new(sample_id, streams, labels)
}
