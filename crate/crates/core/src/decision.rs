//! Video-level verdict from per-frame annotations.
//!
//! A video is a live-coding screencast when it has a run of at least `s`
//! consecutive sampled frames that are all non-duplicate IDE frames, and IDE
//! frames make up at least a fraction `t` of its non-duplicate frames.
//! A duplicate inside a window breaks the run: a static screenshot of an IDE
//! must not count as live coding.

use serde::{Deserialize, Serialize};

use crate::classifier::{FrameLabel, Label};
use crate::error::{Error, Result};
use crate::similarity::DEFAULT_DUP_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    pub index: usize,
    pub duplicate: bool,
    /// Absent exactly when the frame is a duplicate.
    pub label: Option<FrameLabel>,
}

impl FrameAnnotation {
    pub fn duplicate(index: usize) -> Self {
        Self {
            index,
            duplicate: true,
            label: None,
        }
    }

    pub fn labeled(index: usize, label: FrameLabel) -> Self {
        Self {
            index,
            duplicate: false,
            label: Some(label),
        }
    }

    /// Non-duplicate and labeled IDE.
    pub fn is_eligible(&self) -> bool {
        !self.duplicate && matches!(self.label, Some(l) if l.label == Label::Ide)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionParams {
    /// Minimum run length `s`.
    pub min_run: usize,
    /// Minimum IDE ratio `t`.
    pub min_ratio: f64,
    pub dup_threshold: f64,
    pub interval_s: f64,
}

impl Default for DecisionParams {
    fn default() -> Self {
        Self {
            min_run: 4,
            min_ratio: 0.5,
            dup_threshold: DEFAULT_DUP_THRESHOLD,
            interval_s: 30.0,
        }
    }
}

impl DecisionParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_run < 1 {
            return Err(Error::Parameter("min_run must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_ratio) {
            return Err(Error::Parameter(format!("min_ratio {} outside [0, 1]", self.min_ratio)));
        }
        if !(0.0..=1.0).contains(&self.dup_threshold) {
            return Err(Error::Parameter(format!(
                "dup_threshold {} outside [0, 1]",
                self.dup_threshold
            )));
        }
        if !(self.interval_s.is_finite() && self.interval_s > 0.0) {
            return Err(Error::Parameter(format!("interval {} must be positive", self.interval_s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoVerdict {
    pub video_id: String,
    pub is_screencast: bool,
    pub n_ide: usize,
    pub n_info: usize,
    pub longest_run: usize,
    pub ratio: f64,
    pub sampled_count: usize,
}

pub fn longest_eligible_run(annotations: &[FrameAnnotation]) -> usize {
    let mut best = 0;
    let mut current = 0;
    for a in annotations {
        if a.is_eligible() {
            current += 1;
            best = best.max(current);
        } else {
            current = 0;
        }
    }
    best
}

fn counts(annotations: &[FrameAnnotation]) -> (usize, usize) {
    let n_info = annotations.iter().filter(|a| !a.duplicate).count();
    let n_ide = annotations.iter().filter(|a| a.is_eligible()).count();
    (n_ide, n_info)
}

/// `n_ide / n_info`, or 0 when every frame is a duplicate.
pub fn ide_ratio(annotations: &[FrameAnnotation]) -> f64 {
    let (n_ide, n_info) = counts(annotations);
    if n_info == 0 {
        0.0
    } else {
        n_ide as f64 / n_info as f64
    }
}

pub fn decide(video_id: &str, annotations: &[FrameAnnotation], params: &DecisionParams) -> VideoVerdict {
    let (n_ide, n_info) = counts(annotations);
    let ratio = ide_ratio(annotations);
    let longest_run = longest_eligible_run(annotations);
    VideoVerdict {
        video_id: video_id.to_string(),
        is_screencast: longest_run >= params.min_run && ratio >= params.min_ratio,
        n_ide,
        n_info,
        longest_run,
        ratio,
        sampled_count: annotations.len(),
    }
}
