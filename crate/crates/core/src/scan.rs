//! End-to-end scanning: sample, mark duplicates, classify the rest, decide.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::FrameCache;
use crate::classifier::{ClassifierGateway, FrameInput};
use crate::config::ScanConfig;
use crate::decision::{decide, DecisionParams, FrameAnnotation, VideoVerdict};
use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::eval::{confusion, metrics, EvalSummary, TOOL_METHOD};
use crate::frame::{acquire_frames, SampledSequence, SamplingKind, SamplingMode, VideoSource};
use crate::manifest::{Manifest, ManifestEntry};
use crate::similarity::mark_duplicates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedFrame {
    #[serde(flatten)]
    pub annotation: FrameAnnotation,
    pub timestamp_s: f64,
    /// Reference frame this one duplicated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<usize>,
}

/// Wall-clock seconds per stage, with the frame counts that drive them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub acquire_s: f64,
    pub dedup_s: f64,
    pub classify_s: f64,
    pub decide_s: f64,
    pub total_s: f64,
    pub frames_sampled: usize,
    pub frames_classified: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub video_id: String,
    pub source: PathBuf,
    pub status: ScanStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub verdict: Option<VideoVerdict>,
    pub annotations: Vec<AnnotatedFrame>,
    pub classifier: String,
    pub params: DecisionParams,
    pub timing: StageTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub started_unix_s: u64,
    pub config_hash: String,
    pub config: ScanConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub run: RunInfo,
    pub records: Vec<ScanRecord>,
}

impl ScanReport {
    pub fn failures(&self) -> impl Iterator<Item = &ScanRecord> {
        self.records.iter().filter(|r| r.status == ScanStatus::Failed)
    }

    pub fn positives(&self) -> impl Iterator<Item = &ScanRecord> {
        self.records
            .iter()
            .filter(|r| r.verdict.as_ref().is_some_and(|v| v.is_screencast))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&raw)?)
    }

    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut copy = self.clone();
        copy.run.started_unix_s = 0;
        for r in &mut copy.records {
            let t = &mut r.timing;
            t.acquire_s = 0.0;
            t.dedup_s = 0.0;
            t.classify_s = 0.0;
            t.decide_s = 0.0;
            t.total_s = 0.0;
        }
        copy
    }

    /// Writes the report without ever replacing an existing file. A target
    /// ending in `.json` is used as-is; anything else is a directory that
    /// receives `scan-<unix seconds>-<config hash>.json`.
    pub fn write_new(&self, target: &Path) -> Result<PathBuf> {
        let path = if target.extension().is_some_and(|e| e == "json") {
            if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            target.to_path_buf()
        } else {
            std::fs::create_dir_all(target).map_err(|e| Error::io(target, e))?;
            let stem = format!("scan-{}-{}", self.run.started_unix_s, self.run.config_hash);
            let mut candidate = target.join(format!("{stem}.json"));
            let mut n = 1;
            while candidate.exists() {
                candidate = target.join(format!("{stem}-{n}.json"));
                n += 1;
            }
            candidate
        };
        let body = serde_json::to_vec_pretty(self)?;
        let mut file = std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        std::io::Write::write_all(&mut file, &body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub struct Scanner {
    config: ScanConfig,
    params: DecisionParams,
    mode: SamplingMode,
    gateway: Arc<ClassifierGateway>,
    decoder: Decoder,
    pool: rayon::ThreadPool,
}

impl Scanner {
    /// Builds a scanner with the classifier named in the config.
    pub fn new(config: ScanConfig) -> Result<Self> {
        config.validate()?;
        let gateway = ClassifierGateway::from_spec(&config.classifier_spec()?)?;
        Self::with_gateway(config, Arc::new(gateway))
    }

    pub fn with_gateway(config: ScanConfig, gateway: Arc<ClassifierGateway>) -> Result<Self> {
        config.validate()?;
        let mut decoder = Decoder::new(&config.decoder)?;
        if let Some(dir) = &config.cache_dir {
            decoder = decoder.with_cache(FrameCache::new(dir)?);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.effective_jobs())
            .build()
            .map_err(|e| Error::Environment(format!("cannot build worker pool: {e}")))?;
        Ok(Self {
            params: config.decision_params(),
            mode: config.sampling_mode(SamplingKind::Classification),
            config,
            gateway,
            decoder,
            pool,
        })
    }

    pub fn config(&self) -> &ScanConfig {
        &self.config
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    pub fn source_for(&self, path: &Path) -> Result<VideoSource> {
        if path.is_dir() {
            Ok(VideoSource::FrameDir(path.to_path_buf()))
        } else if path.is_file() {
            Ok(VideoSource::VideoFile {
                path: path.to_path_buf(),
                decoder: self.decoder.clone(),
            })
        } else {
            Err(Error::decode(path, "source not found"))
        }
    }

    /// Scans every manifest entry; records stay in manifest order and a
    /// failing video never aborts the others.
    pub fn run(&self, manifest: &Manifest) -> ScanReport {
        let started_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let records = self
            .pool
            .install(|| manifest.entries.par_iter().map(|e| self.scan_entry(e)).collect());
        ScanReport {
            run: RunInfo {
                started_unix_s,
                config_hash: self.config.hash(),
                config: self.config.clone(),
            },
            records,
        }
    }

    pub fn scan_entry(&self, entry: &ManifestEntry) -> ScanRecord {
        let started = Instant::now();
        let mut timing = StageTiming::default();
        let outcome = self.source_for(&entry.source).and_then(|source| {
            let t = Instant::now();
            let mut seq = acquire_frames(&source, &self.mode)?;
            seq.video_id = entry.video_id.clone();
            timing.acquire_s = t.elapsed().as_secs_f64();
            self.scan_sequence(&seq, &mut timing)
        });
        timing.total_s = started.elapsed().as_secs_f64();
        let classifier = self.gateway.kind().to_string();
        match outcome {
            Ok((annotations, verdict)) => ScanRecord {
                video_id: entry.video_id.clone(),
                source: entry.source.clone(),
                status: ScanStatus::Ok,
                error: None,
                verdict: Some(verdict),
                annotations,
                classifier,
                params: self.params.clone(),
                timing,
            },
            Err(e) => {
                log::warn!("scan of {} failed: {e}", entry.video_id);
                ScanRecord {
                    video_id: entry.video_id.clone(),
                    source: entry.source.clone(),
                    status: ScanStatus::Failed,
                    error: Some(e.to_string()),
                    verdict: None,
                    annotations: Vec::new(),
                    classifier,
                    params: self.params.clone(),
                    timing,
                }
            }
        }
    }

    /// Dedup, classification of non-duplicates, and the verdict for an
    /// already-sampled sequence.
    pub fn scan_sequence(
        &self,
        seq: &SampledSequence,
        timing: &mut StageTiming,
    ) -> Result<(Vec<AnnotatedFrame>, VideoVerdict)> {
        if seq.is_empty() {
            return Err(Error::EmptySequence(seq.video_id.clone()));
        }
        timing.frames_sampled = seq.len();

        let t = Instant::now();
        let marking = mark_duplicates(seq, self.params.dup_threshold)?;
        timing.dedup_s = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let informative: Vec<FrameInput<'_>> = seq
            .frames
            .iter()
            .zip(&marking.duplicate_flags)
            .filter(|(_, dup)| !**dup)
            .map(|(f, _)| FrameInput::new(&seq.video_id, f))
            .collect();
        let mut labels = self.gateway.classify_batch(&informative)?.into_iter();
        timing.frames_classified = informative.len();
        timing.classify_s = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let annotated: Vec<AnnotatedFrame> = seq
            .frames
            .iter()
            .enumerate()
            .map(|(k, frame)| {
                let annotation = if marking.duplicate_flags[k] {
                    FrameAnnotation::duplicate(frame.index)
                } else {
                    FrameAnnotation::labeled(frame.index, labels.next().expect("one label per informative frame"))
                };
                AnnotatedFrame {
                    annotation,
                    timestamp_s: frame.timestamp_s,
                    duplicate_of: marking.reference_indices[k],
                }
            })
            .collect();
        let plain: Vec<FrameAnnotation> = annotated.iter().map(|a| a.annotation.clone()).collect();
        let verdict = decide(&seq.video_id, &plain, &self.params);
        timing.decide_s = t.elapsed().as_secs_f64();
        Ok((annotated, verdict))
    }
}

/// Scores a scan against the manifest's truth labels and runs both
/// baselines over the same videos. Failed scans are left out and listed.
pub fn run_evaluate(report: &ScanReport, manifest: &Manifest, random_runs: usize, seed: u64) -> Result<EvalSummary> {
    let truth_all = manifest.truth();
    let evaluated: Vec<&ScanRecord> = report.records.iter().filter(|r| r.status == ScanStatus::Ok).collect();
    let missing: Vec<&str> = evaluated
        .iter()
        .filter(|r| !truth_all.contains_key(&r.video_id))
        .map(|r| r.video_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parameter(format!("no truth label for: {}", missing.join(", "))));
    }
    let predictions = evaluated
        .iter()
        .map(|r| (r.video_id.clone(), r.verdict.as_ref().is_some_and(|v| v.is_screencast)))
        .collect();
    let truth = evaluated
        .iter()
        .map(|r| (r.video_id.clone(), truth_all[&r.video_id]))
        .collect();
    let counts = confusion(&predictions, &truth)?;
    let truth_vec: Vec<bool> = evaluated.iter().map(|r| truth_all[&r.video_id]).collect();
    let mut summary = EvalSummary::build(metrics(counts, TOOL_METHOD), &truth_vec, random_runs, seed)?;
    summary.skipped = report.failures().map(|r| r.video_id.clone()).collect();
    Ok(summary)
}

/// Result of a training-frame extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub video_id: String,
    pub extracted: usize,
    pub duplicates_removed: usize,
    pub kept: usize,
    pub frames: Vec<ExtractedFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedFrame {
    pub index: usize,
    pub timestamp_s: f64,
    pub file: PathBuf,
}

/// Builds a training set for one video: frames at `mode.interval_s`
/// (1 fps by default), near-duplicates dropped against a running reference,
/// then at most `mode.cap` kept by seeded random choice. Frames are written
/// as normalized grayscale PNGs named `frame_<seconds>.png`, with an
/// `index.json` describing them.
pub fn extract_training_frames(
    source: &VideoSource,
    video_id: &str,
    mode: &SamplingMode,
    dup_threshold: f64,
    out_dir: &Path,
) -> Result<ExtractionSummary> {
    use crate::frame::{cap_selection, load_frame, plan_frames};
    use crate::similarity::nrmse;

    if !(0.0..=1.0).contains(&dup_threshold) {
        return Err(Error::Parameter(format!("duplicate threshold {dup_threshold} outside [0, 1]")));
    }
    let plan = plan_frames(source, mode)?;
    let mut kept = Vec::new();
    let mut reference = None;
    for planned in &plan.frames {
        let frame = load_frame(&planned.path)?;
        let fresh = match &reference {
            None => true,
            Some(r) => nrmse(r, &frame)?.value() > dup_threshold,
        };
        if fresh {
            kept.push(planned);
            reference = Some(frame);
        }
    }
    let selected = cap_selection(kept.len(), mode.cap, mode.seed);

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let frames = selected
        .par_iter()
        .enumerate()
        .map(|(index, &k)| {
            let planned = kept[k];
            let file = out_dir.join(format!("frame_{}.png", planned.timestamp_s));
            load_frame(&planned.path)?.save_png(&file)?;
            Ok(ExtractedFrame {
                index,
                timestamp_s: planned.timestamp_s,
                file,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = ExtractionSummary {
        video_id: video_id.to_string(),
        extracted: plan.frames.len(),
        duplicates_removed: plan.frames.len() - kept.len(),
        kept: frames.len(),
        frames,
    };
    let index_path = out_dir.join("index.json");
    std::fs::write(&index_path, serde_json::to_vec_pretty(&summary)?).map_err(|e| Error::io(&index_path, e))?;
    Ok(summary)
}
