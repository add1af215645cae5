//! Live-coding screencast detection.
//!
//! Frames are sampled from each video (one every 30 s by default), frames that
//! barely differ from the last kept frame are marked as duplicates by NRMSE,
//! the rest go through a frame classifier (IDE or not), and a two-stage rule
//! turns the per-frame labels into a verdict: a long enough run of changing
//! IDE frames, and enough IDE frames overall.
//!
//! ```no_run
//! use livecode_scan::{Manifest, ScanConfig, Scanner};
//!
//! # fn main() -> livecode_scan::Result<()> {
//! let config = ScanConfig { classifier: Some("marker".into()), ..ScanConfig::default() };
//! let scanner = Scanner::new(config)?;
//! let report = scanner.run(&Manifest::load("videos.jsonl".as_ref())?);
//! for hit in report.positives() {
//!     println!("{}", hit.video_id);
//! }
//! # Ok(())
//! # }
//! ```

pub mod cache;
pub mod classifier;
pub mod config;
pub mod decision;
pub mod decoder;
mod error;
pub mod eval;
pub mod frame;
pub mod manifest;
pub mod scan;
pub mod similarity;
pub mod synthetic;

pub use classifier::{ClassifierGateway, ClassifierSpec, FrameClassifier, FrameInput, FrameLabel, Label};
pub use config::ScanConfig;
pub use decision::{decide, ide_ratio, longest_eligible_run, DecisionParams, FrameAnnotation, VideoVerdict};
pub use error::{Error, Result};
pub use eval::{all_positive_baseline, confusion, metrics, random_baseline, ConfusionCounts, EvalReport, EvalSummary};
pub use frame::{acquire_frames, load_frame, sample_schedule, GrayFrame, SampledSequence, SamplingKind, SamplingMode, VideoSource};
pub use manifest::{Manifest, ManifestEntry};
pub use scan::{run_evaluate, ScanRecord, ScanReport, ScanStatus, Scanner};
pub use similarity::{mark_duplicates, nrmse, DissimilarityScore, DuplicateMarking};
