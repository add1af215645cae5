//! Frame classification boundary.
//!
//! Every classifier answers one question per frame: does it show an IDE
//! window? [`ClassifierGateway`] fronts whichever implementation is
//! configured, enforces ordering and confidence bounds, and identifies the
//! failing frame when a batch fails.

mod local;
pub mod conformance;
pub mod protocol;
pub mod serve;
pub mod worker;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::GrayFrame;

pub use local::{ConstantClassifier, MarkerOracle, SidecarClassifier, MARKER_BLOCK, MARKER_THRESHOLD};
pub use protocol::{WorkerMessage, PROTOCOL_VERSION};
pub use worker::{spawn_worker, WorkerClassifier, WorkerSession};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Ide,
    NonIde,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Ide => "ide",
            Label::NonIde => "non_ide",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ide" => Ok(Label::Ide),
            "non_ide" | "non-ide" | "nonide" => Ok(Label::NonIde),
            other => Err(Error::Parameter(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub label: Label,
    pub confidence: f64,
}

impl FrameLabel {
    /// Label from a deterministic classifier.
    pub fn certain(label: Label) -> Self {
        Self { label, confidence: 1.0 }
    }

    pub fn is_ide(&self) -> bool {
        self.label == Label::Ide
    }
}

/// One frame submitted for classification.
#[derive(Debug, Clone, Copy)]
pub struct FrameInput<'a> {
    pub video_id: &'a str,
    pub frame: &'a GrayFrame,
}

impl<'a> FrameInput<'a> {
    pub fn new(video_id: &'a str, frame: &'a GrayFrame) -> Self {
        Self { video_id, frame }
    }

    /// Human-readable frame identity for error messages.
    pub fn describe(&self) -> String {
        match &self.frame.source_path {
            Some(p) => format!("{}#{} ({})", self.video_id, self.frame.index, p.display()),
            None => format!("{}#{}", self.video_id, self.frame.index),
        }
    }
}

pub trait FrameClassifier: Send + Sync {
    /// Short name recorded in scan reports.
    fn kind(&self) -> &str;

    fn classify(&self, input: &FrameInput<'_>) -> Result<FrameLabel>;

    /// Classifies frames concurrently; output order follows input order.
    fn classify_batch(&self, inputs: &[FrameInput<'_>]) -> Result<Vec<FrameLabel>> {
        inputs
            .par_iter()
            .map(|input| self.classify(input).map_err(|e| attribute(input, e)))
            .collect()
    }
}

/// Attaches the frame identity to errors that do not already carry it.
pub(crate) fn attribute(input: &FrameInput<'_>, err: Error) -> Error {
    match err {
        e @ (Error::Timeout { .. } | Error::Lookup { .. } | Error::Classification { .. }) => e,
        other => Error::Classification {
            frame: input.describe(),
            message: other.to_string(),
        },
    }
}

pub const DEFAULT_WORKER_TIMEOUT_S: f64 = 60.0;
pub const DEFAULT_WORKER_BATCH: usize = 8;

/// Which classifier to use, parsed from `kind[:arg]`:
/// `marker`, `constant:ide`, `sidecar:<path>`, `worker:<command>`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    Worker {
        command: String,
        timeout_s: f64,
        batch_size: usize,
    },
    Sidecar {
        path: PathBuf,
    },
    MarkerOracle,
    Constant(FrameLabel),
}

impl ClassifierSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassifierSpec::Worker { .. } => "worker",
            ClassifierSpec::Sidecar { .. } => "sidecar",
            ClassifierSpec::MarkerOracle => "marker_oracle",
            ClassifierSpec::Constant(_) => "constant",
        }
    }

    /// Overrides worker tuning; no effect on other kinds.
    pub fn with_worker_limits(mut self, timeout: Option<f64>, batch: Option<usize>) -> Self {
        if let ClassifierSpec::Worker {
            timeout_s,
            batch_size,
            ..
        } = &mut self
        {
            if let Some(t) = timeout {
                *timeout_s = t;
            }
            if let Some(b) = batch {
                *batch_size = b;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let ClassifierSpec::Worker {
            command,
            timeout_s,
            batch_size,
        } = self
        {
            if command.trim().is_empty() {
                return Err(Error::Parameter("worker command is empty".into()));
            }
            if !(timeout_s.is_finite() && *timeout_s > 0.0) {
                return Err(Error::Parameter(format!("worker timeout {timeout_s} must be positive")));
            }
            if *batch_size == 0 {
                return Err(Error::Parameter("worker batch size must be positive".into()));
            }
        }
        Ok(())
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let spec = match (kind, arg) {
            ("marker" | "marker_oracle", None) => ClassifierSpec::MarkerOracle,
            ("constant", Some(label)) => ClassifierSpec::Constant(FrameLabel::certain(label.trim().parse()?)),
            ("sidecar", Some(path)) if !path.is_empty() => ClassifierSpec::Sidecar { path: path.into() },
            ("worker", Some(command)) if !command.trim().is_empty() => ClassifierSpec::Worker {
                command: command.to_string(),
                timeout_s: DEFAULT_WORKER_TIMEOUT_S,
                batch_size: DEFAULT_WORKER_BATCH,
            },
            _ => {
                return Err(Error::Parameter(format!(
                    "bad classifier {s:?}; expected marker, constant:<label>, sidecar:<path> or worker:<command>"
                )))
            }
        };
        Ok(spec)
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierSpec::Worker { command, .. } => write!(f, "worker:{command}"),
            ClassifierSpec::Sidecar { path } => write!(f, "sidecar:{}", path.display()),
            ClassifierSpec::MarkerOracle => f.write_str("marker"),
            ClassifierSpec::Constant(l) => write!(f, "constant:{}", l.label),
        }
    }
}

pub struct ClassifierGateway {
    inner: Box<dyn FrameClassifier>,
}

impl fmt::Debug for ClassifierGateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassifierGateway")
            .field("kind", &self.inner.kind())
            .finish()
    }
}

impl ClassifierGateway {
    /// Builds the configured classifier. Worker specs start one session
    /// immediately so that a broken worker fails before any video is read.
    pub fn from_spec(spec: &ClassifierSpec) -> Result<Self> {
        spec.validate()?;
        let inner: Box<dyn FrameClassifier> = match spec {
            ClassifierSpec::Worker { .. } => Box::new(WorkerClassifier::start(spec)?),
            ClassifierSpec::Sidecar { path } => Box::new(SidecarClassifier::load(path)?),
            ClassifierSpec::MarkerOracle => Box::new(MarkerOracle),
            ClassifierSpec::Constant(label) => Box::new(ConstantClassifier(*label)),
        };
        Ok(Self { inner })
    }

    pub fn new(classifier: impl FrameClassifier + 'static) -> Self {
        Self {
            inner: Box::new(classifier),
        }
    }

    pub fn kind(&self) -> &str {
        self.inner.kind()
    }

    pub fn classify(&self, input: &FrameInput<'_>) -> Result<FrameLabel> {
        let label = self.inner.classify(input)?;
        check_confidence(input, label)
    }

    pub fn classify_batch(&self, inputs: &[FrameInput<'_>]) -> Result<Vec<FrameLabel>> {
        if inputs.is_empty() {
            return Err(Error::Parameter("classify_batch needs at least one frame".into()));
        }
        let labels = self.inner.classify_batch(inputs)?;
        if labels.len() != inputs.len() {
            return Err(Error::Protocol(format!(
                "classifier returned {} labels for {} frames",
                labels.len(),
                inputs.len()
            )));
        }
        inputs
            .iter()
            .zip(labels)
            .map(|(input, label)| check_confidence(input, label))
            .collect()
    }
}

fn check_confidence(input: &FrameInput<'_>, label: FrameLabel) -> Result<FrameLabel> {
    if (0.0..=1.0).contains(&label.confidence) {
        Ok(label)
    } else {
        Err(Error::Classification {
            frame: input.describe(),
            message: format!("confidence {} outside [0, 1]", label.confidence),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        assert_eq!("marker".parse::<ClassifierSpec>().unwrap(), ClassifierSpec::MarkerOracle);
        assert_eq!(
            "constant:ide".parse::<ClassifierSpec>().unwrap(),
            ClassifierSpec::Constant(FrameLabel::certain(Label::Ide))
        );
        assert_eq!(
            "sidecar:/tmp/labels.json".parse::<ClassifierSpec>().unwrap(),
            ClassifierSpec::Sidecar { path: "/tmp/labels.json".into() }
        );
        match "worker:python3 serve.py --model m:v2".parse::<ClassifierSpec>().unwrap() {
            ClassifierSpec::Worker { command, batch_size, .. } => {
                assert_eq!(command, "python3 serve.py --model m:v2");
                assert_eq!(batch_size, DEFAULT_WORKER_BATCH);
            }
            other => panic!("{other:?}"),
        }
        for bad in ["", "constant", "constant:maybe", "worker:", "sidecar", "vit"] {
            assert!(bad.parse::<ClassifierSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn spec_display_roundtrips() {
        for s in ["marker", "constant:non_ide", "sidecar:x.json", "worker:./w --flag"] {
            let spec: ClassifierSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<ClassifierSpec>().unwrap(), spec);
        }
    }

    struct Overconfident;
    impl FrameClassifier for Overconfident {
        fn kind(&self) -> &str {
            "overconfident"
        }
        fn classify(&self, _: &FrameInput<'_>) -> Result<FrameLabel> {
            Ok(FrameLabel { label: Label::Ide, confidence: 1.5 })
        }
    }

    #[test]
    fn gateway_enforces_contract() {
        let g = ClassifierGateway::new(Overconfident);
        let f = GrayFrame::uniform(2, 2, 0.5).unwrap();
        assert!(matches!(g.classify(&FrameInput::new("v", &f)), Err(Error::Classification { .. })));
        assert!(matches!(g.classify_batch(&[]), Err(Error::Parameter(_))));
    }
}
