//! Video manifests: one JSON object per line.
//!
//! ```text
//! {"video_id":"intro-java","source":"videos/intro.mp4","truth_label":true}
//! {"video_id":"slides","source":"frames/slides","truth_label":false,"notes":"talk"}
//! ```
//!
//! Relative sources resolve against the manifest's directory. Blank lines and
//! lines starting with `#` are ignored.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub source: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_label: Option<bool>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

impl ManifestEntry {
    pub fn new(video_id: impl Into<String>, source: impl Into<PathBuf>) -> Self {
        Self {
            video_id: video_id.into(),
            source: source.into(),
            truth_label: None,
            notes: String::new(),
        }
    }

    pub fn with_truth(mut self, truth: bool) -> Self {
        self.truth_label = Some(truth);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = Self { entries };
        manifest.check_unique(Path::new("<memory>"))?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, path)
    }

    fn parse(text: &str, base: &Path, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut entry: ManifestEntry = serde_json::from_str(trimmed).map_err(|e| Error::Manifest {
                path: origin.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
            if entry.video_id.is_empty() {
                return Err(Error::Manifest {
                    path: origin.to_path_buf(),
                    line: n + 1,
                    message: "empty video_id".into(),
                });
            }
            if entry.source.is_relative() {
                entry.source = base.join(&entry.source);
            }
            entries.push(entry);
        }
        let manifest = Self { entries };
        manifest.check_unique(origin)?;
        Ok(manifest)
    }

    fn check_unique(&self, origin: &Path) -> Result<()> {
        let mut seen = HashSet::new();
        for (n, e) in self.entries.iter().enumerate() {
            if !seen.insert(e.video_id.as_str()) {
                return Err(Error::Manifest {
                    path: origin.to_path_buf(),
                    line: n + 1,
                    message: format!("duplicate video_id {:?}", e.video_id),
                });
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, video_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.video_id == video_id)
    }

    /// Truth labels of entries that have one.
    pub fn truth(&self) -> BTreeMap<String, bool> {
        self.entries
            .iter()
            .filter_map(|e| e.truth_label.map(|t| (e.video_id.clone(), t)))
            .collect()
    }
}
