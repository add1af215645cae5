//! NRMSE dissimilarity and duplicate-frame marking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{GrayFrame, SampledSequence};

/// Default duplicate threshold: small enough that cursor motion or a ticking
/// clock still counts as "no change".
pub const DEFAULT_DUP_THRESHOLD: f64 = 0.05;

/// Dissimilarity in `[0, 1]`; 0 means identical.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DissimilarityScore(f64);

impl DissimilarityScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Root of the squared difference energy over the reference energy, clamped
/// to `[0, 1]`. An all-zero reference scores 0 against an all-zero frame and
/// 1 against anything else.
pub fn nrmse_values<T: Copy + Into<f64>>(reference: &[T], other: &[T]) -> Result<DissimilarityScore> {
    if reference.len() != other.len() {
        return Err(Error::Parameter(format!(
            "frames differ in size: {} vs {} pixels",
            reference.len(),
            other.len()
        )));
    }
    let mut diff = 0.0f64;
    let mut energy = 0.0f64;
    for (&r, &o) in reference.iter().zip(other) {
        let (r, o): (f64, f64) = (r.into(), o.into());
        diff += (r - o) * (r - o);
        energy += r * r;
    }
    let score = if energy == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        (diff / energy).sqrt().min(1.0)
    };
    Ok(DissimilarityScore(score))
}

pub fn nrmse(reference: &GrayFrame, other: &GrayFrame) -> Result<DissimilarityScore> {
    if (reference.width(), reference.height()) != (other.width(), other.height()) {
        return Err(Error::Parameter(format!(
            "frame dimensions differ: {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            other.width(),
            other.height()
        )));
    }
    nrmse_values(reference.pixels(), other.pixels())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateMarking {
    pub duplicate_flags: Vec<bool>,
    /// For each frame, the reference it was compared against when marked as a
    /// duplicate; `None` for non-duplicates.
    pub reference_indices: Vec<Option<usize>>,
}

impl DuplicateMarking {
    pub fn non_duplicate_count(&self) -> usize {
        self.duplicate_flags.iter().filter(|d| !**d).count()
    }
}

/// Sequential scan against a running reference frame. A frame whose
/// dissimilarity to the reference is at most `threshold` is a duplicate;
/// the first frame above it becomes the new reference.
pub fn mark_duplicates(seq: &SampledSequence, threshold: f64) -> Result<DuplicateMarking> {
    mark_frames(&seq.frames, threshold)
}

pub fn mark_frames(frames: &[GrayFrame], threshold: f64) -> Result<DuplicateMarking> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Parameter(format!(
            "duplicate threshold must be in [0, 1], got {threshold}"
        )));
    }
    if frames.is_empty() {
        return Err(Error::Parameter("cannot mark duplicates in an empty sequence".into()));
    }
    let mut flags = vec![false; frames.len()];
    let mut refs = vec![None; frames.len()];
    let mut reference = 0;
    for j in 1..frames.len() {
        if nrmse(&frames[reference], &frames[j])?.value() <= threshold {
            flags[j] = true;
            refs[j] = Some(reference);
        } else {
            reference = j;
        }
    }
    Ok(DuplicateMarking {
        duplicate_flags: flags,
        reference_indices: refs,
    })
}
