use std::collections::HashMap;
use std::path::Path;

use super::{FrameClassifier, FrameInput, FrameLabel, Label};
use crate::error::{Error, Result};

/// Side of the top-left block the marker oracle inspects.
pub const MARKER_BLOCK: u32 = 8;
/// Block mean above which the marker oracle reports an IDE frame.
pub const MARKER_THRESHOLD: f64 = 0.9;

/// Always answers the same label.
#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier(pub FrameLabel);

impl FrameClassifier for ConstantClassifier {
    fn kind(&self) -> &str {
        "constant"
    }

    fn classify(&self, _input: &FrameInput<'_>) -> Result<FrameLabel> {
        Ok(self.0)
    }
}

/// Synthetic ground truth: IDE iff the top-left 8×8 block is bright.
#[derive(Debug, Clone, Copy, Default)]
pub struct MarkerOracle;

impl MarkerOracle {
    pub fn label_of(frame: &crate::frame::GrayFrame) -> Label {
        if frame.top_left_mean(MARKER_BLOCK) > MARKER_THRESHOLD {
            Label::Ide
        } else {
            Label::NonIde
        }
    }
}

impl FrameClassifier for MarkerOracle {
    fn kind(&self) -> &str {
        "marker_oracle"
    }

    fn classify(&self, input: &FrameInput<'_>) -> Result<FrameLabel> {
        Ok(FrameLabel::certain(Self::label_of(input.frame)))
    }
}

/// Replays labels from a JSON table. Keys are `"<video_id>:<index>"` or a
/// bare `"<index>"` that applies to any video; the qualified key wins.
#[derive(Debug, Clone)]
pub struct SidecarClassifier {
    table: HashMap<String, Label>,
}

impl SidecarClassifier {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let table: HashMap<String, Label> = serde_json::from_slice(&raw)
            .map_err(|e| Error::Config(format!("sidecar {}: {e}", path.display())))?;
        Ok(Self { table })
    }

    pub fn from_table(table: HashMap<String, Label>) -> Self {
        Self { table }
    }
}

impl FrameClassifier for SidecarClassifier {
    fn kind(&self) -> &str {
        "sidecar"
    }

    fn classify(&self, input: &FrameInput<'_>) -> Result<FrameLabel> {
        let qualified = format!("{}:{}", input.video_id, input.frame.index);
        let bare = input.frame.index.to_string();
        self.table
            .get(&qualified)
            .or_else(|| self.table.get(&bare))
            .map(|&l| FrameLabel::certain(l))
            .ok_or(Error::Lookup { key: qualified })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::ClassifierGateway;
    use crate::frame::GrayFrame;

    fn marked(level: f32) -> GrayFrame {
        GrayFrame::from_fn(32, 32, |r, c| if r < 8 && c < 8 { level } else { 0.3 }).unwrap()
    }

    #[test]
    fn constant_answers_constant() {
        let g = ClassifierGateway::new(ConstantClassifier(FrameLabel::certain(Label::Ide)));
        let f = GrayFrame::uniform(4, 4, 0.2).unwrap();
        assert_eq!(g.classify(&FrameInput::new("v", &f)).unwrap(), FrameLabel::certain(Label::Ide));
    }

    #[test]
    fn marker_oracle_reads_corner() {
        let g = ClassifierGateway::new(MarkerOracle);
        let ide = marked(0.95);
        let plain = marked(0.5);
        let edge = marked(0.9);
        assert_eq!(g.classify(&FrameInput::new("v", &ide)).unwrap().label, Label::Ide);
        assert_eq!(g.classify(&FrameInput::new("v", &edge)).unwrap().label, Label::NonIde);
        let labels = g
            .classify_batch(&[FrameInput::new("v", &ide), FrameInput::new("v", &plain)])
            .unwrap();
        assert_eq!(labels.iter().map(|l| l.label).collect::<Vec<_>>(), [Label::Ide, Label::NonIde]);
        assert!(labels.iter().all(|l| l.confidence == 1.0));
    }

    #[test]
    fn sidecar_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.json");
        std::fs::write(&path, r#"{"0": "non_ide", "clip:1": "ide"}"#).unwrap();
        let g = ClassifierGateway::new(SidecarClassifier::load(&path).unwrap());
        let f0 = GrayFrame::uniform(2, 2, 0.1).unwrap();
        let f1 = f0.clone().with_timing(1, 30.0);
        let f2 = f0.clone().with_timing(2, 60.0);
        assert_eq!(g.classify(&FrameInput::new("clip", &f0)).unwrap().label, Label::NonIde);
        assert_eq!(g.classify(&FrameInput::new("clip", &f1)).unwrap().label, Label::Ide);
        assert!(matches!(
            g.classify(&FrameInput::new("other", &f1)),
            Err(Error::Lookup { key }) if key == "other:1"
        ));
        let err = g
            .classify_batch(&[FrameInput::new("clip", &f0), FrameInput::new("clip", &f2)])
            .unwrap_err();
        assert!(err.to_string().contains("clip:2"), "{err}");
    }
}
