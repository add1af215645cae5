//! Scan configuration: one flat TOML table.
//!
//! ```toml
//! interval_s = 30
//! dup_threshold = 0.05
//! min_run = 4
//! min_ratio = 0.5
//! classifier = "worker:python3 -m vit_worker serve model/"
//! jobs = 4
//! cache_dir = "/var/cache/livecode"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{ClassifierSpec, DEFAULT_WORKER_BATCH, DEFAULT_WORKER_TIMEOUT_S};
use crate::decision::DecisionParams;
use crate::decoder::DEFAULT_DECODER_TEMPLATE;
use crate::error::{Error, Result};
use crate::frame::{SamplingKind, SamplingMode};
use crate::similarity::DEFAULT_DUP_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub interval_s: f64,
    pub dup_threshold: f64,
    pub min_run: usize,
    pub min_ratio: f64,
    /// `kind[:arg]`, see [`ClassifierSpec`].
    pub classifier: Option<String>,
    pub worker_timeout_s: f64,
    pub worker_batch_size: usize,
    pub seed: u64,
    /// Parallel videos; 0 means one per logical CPU.
    pub jobs: usize,
    /// Frame cap for training extraction.
    pub cap: usize,
    pub decoder: String,
    pub cache_dir: Option<PathBuf>,
    pub random_runs: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let params = DecisionParams::default();
        Self {
            interval_s: params.interval_s,
            dup_threshold: DEFAULT_DUP_THRESHOLD,
            min_run: params.min_run,
            min_ratio: params.min_ratio,
            classifier: None,
            worker_timeout_s: DEFAULT_WORKER_TIMEOUT_S,
            worker_batch_size: DEFAULT_WORKER_BATCH,
            seed: 0,
            jobs: 0,
            cap: SamplingMode::TRAINING_CAP,
            decoder: DEFAULT_DECODER_TEMPLATE.to_string(),
            cache_dir: None,
            random_runs: 20,
        }
    }
}

impl ScanConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn decision_params(&self) -> DecisionParams {
        DecisionParams {
            min_run: self.min_run,
            min_ratio: self.min_ratio,
            dup_threshold: self.dup_threshold,
            interval_s: self.interval_s,
        }
    }

    pub fn sampling_mode(&self, kind: SamplingKind) -> SamplingMode {
        SamplingMode {
            kind,
            interval_s: self.interval_s,
            cap: self.cap,
            seed: self.seed,
        }
    }

    pub fn classifier_spec(&self) -> Result<ClassifierSpec> {
        let raw = self
            .classifier
            .as_deref()
            .ok_or_else(|| Error::Config("no classifier configured (use --classifier)".into()))?;
        let spec: ClassifierSpec = raw.parse()?;
        Ok(spec.with_worker_limits(Some(self.worker_timeout_s), Some(self.worker_batch_size)))
    }

    pub fn validate(&self) -> Result<()> {
        self.decision_params().validate()?;
        self.sampling_mode(SamplingKind::Training).validate()?;
        if self.random_runs == 0 {
            return Err(Error::Config("random_runs must be positive".into()));
        }
        Ok(())
    }

    /// Short stable digest of the configuration, used in report names.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&canonical)[..4])
    }

    pub fn effective_jobs(&self) -> usize {
        if self.jobs == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.jobs
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_decision_defaults() {
        let c = ScanConfig::default();
        assert_eq!(c.decision_params(), DecisionParams::default());
        assert!(c.validate().is_ok());
        assert!(c.classifier_spec().is_err());
    }

    #[test]
    fn loads_flat_toml() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.toml");
        std::fs::write(
            &path,
            "interval_s = 10.0\nmin_run = 3\nclassifier = \"worker:./w\"\nworker_batch_size = 2\n",
        )
        .unwrap();
        let c = ScanConfig::load(&path).unwrap();
        assert_eq!(c.interval_s, 10.0);
        assert_eq!(c.min_run, 3);
        assert_eq!(c.min_ratio, 0.5);
        match c.classifier_spec().unwrap() {
            ClassifierSpec::Worker { batch_size, .. } => assert_eq!(batch_size, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.toml");
        std::fs::write(&path, "min_runs = 3\n").unwrap();
        assert!(matches!(ScanConfig::load(&path), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_changes() {
        let a = ScanConfig::default();
        let b = ScanConfig { min_run: 5, ..ScanConfig::default() };
        assert_eq!(a.hash(), ScanConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 8);
    }
}
