use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use livecode_scan::classifier::conformance::run_conformance;
use livecode_scan::classifier::serve::{serve, serve_recording};
use livecode_scan::decoder::Decoder;
use livecode_scan::eval::{all_positive_baseline, random_baseline, EvalSummary};
use livecode_scan::scan::extract_training_frames;
use livecode_scan::{
    ClassifierGateway, ClassifierSpec, Error, FrameInput, Manifest, Result, SamplingKind, ScanConfig, ScanReport,
    Scanner, VideoSource,
};

#[derive(Parser)]
#[command(name = "livecode-scan", version, about = "Find live-coding screencasts among videos")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Video manifest (one JSON object per line)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// TOML config; flags override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seconds between sampled frames [default: 30, or 1 for extract-frames]
    #[arg(long, global = true)]
    interval: Option<f64>,
    /// NRMSE at or below which a frame is a duplicate [default: 0.05]
    #[arg(long, global = true)]
    dup_threshold: Option<f64>,
    /// Minimum run of changing IDE frames [default: 4]
    #[arg(long, global = true)]
    min_run: Option<usize>,
    /// Minimum IDE share of non-duplicate frames [default: 0.5]
    #[arg(long, global = true)]
    min_ratio: Option<f64>,
    /// marker | constant:<ide|non_ide> | sidecar:<path> | worker:<command>
    #[arg(long, global = true)]
    classifier: Option<String>,
    /// Seed for frame capping and the random baseline [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Videos processed in parallel [default: logical CPUs]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Per-burst deadline for worker classifiers, seconds [default: 60]
    #[arg(long, global = true)]
    worker_timeout: Option<f64>,
    /// Frames per worker request [default: 8]
    #[arg(long, global = true)]
    worker_batch_size: Option<usize>,
    /// Frames kept per video in extract-frames [default: 600]
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Decoder command template with {input}, {fps} and {outdir}
    #[arg(long, global = true)]
    decoder: Option<String>,
    /// Directory for cached decoder output
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Random-baseline repetitions [default: 20]
    #[arg(long, global = true)]
    random_runs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan every video in the manifest and write a report
    Scan,
    /// Score a scan report against the manifest's truth labels
    Evaluate {
        #[arg(long)]
        report: PathBuf,
    },
    /// Extract 1 fps training frames, deduplicated and capped
    ExtractFrames {
        /// Single video file or frame directory instead of a manifest
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Classify individual images and print one JSON label per line
    ClassifyFrames {
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Run the random and all-positive baselines over truth labels
    Baseline {
        #[arg(long)]
        positives: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        /// Chance the random baseline calls a video positive
        #[arg(long, default_value_t = 0.5)]
        probability: f64,
    },
    /// Serve an in-process classifier over the worker protocol on stdio
    Worker {
        /// Append every received line to this file
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Check an external worker command against the protocol
    Conformance {
        #[arg(long)]
        worker: String,
        #[arg(long)]
        ide_frame: PathBuf,
        #[arg(long)]
        non_ide_frame: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
}

fn resolve_config(common: &Common) -> Result<ScanConfig> {
    let mut config = match &common.config {
        Some(path) => ScanConfig::load(path)?,
        None => ScanConfig::default(),
    };
    if let Some(v) = common.interval {
        config.interval_s = v;
    }
    if let Some(v) = common.dup_threshold {
        config.dup_threshold = v;
    }
    if let Some(v) = common.min_run {
        config.min_run = v;
    }
    if let Some(v) = common.min_ratio {
        config.min_ratio = v;
    }
    if let Some(v) = &common.classifier {
        config.classifier = Some(v.clone());
    }
    if let Some(v) = common.seed {
        config.seed = v;
    }
    if let Some(v) = common.jobs {
        config.jobs = v;
    }
    if let Some(v) = common.worker_timeout {
        config.worker_timeout_s = v;
    }
    if let Some(v) = common.worker_batch_size {
        config.worker_batch_size = v;
    }
    if let Some(v) = common.cap {
        config.cap = v;
    }
    if let Some(v) = &common.decoder {
        config.decoder = v.clone();
    }
    if let Some(v) = &common.cache_dir {
        config.cache_dir = Some(v.clone());
    }
    if let Some(v) = common.random_runs {
        config.random_runs = v;
    }
    config.validate()?;
    Ok(config)
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Parameter(format!("{flag} is required")))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = &cli.common;
    match cli.command {
        Cmd::Scan => {
            let config = resolve_config(common)?;
            let manifest = Manifest::load(require(&common.manifest, "--manifest")?)?;
            let scanner = Scanner::new(config)?;
            let report = scanner.run(&manifest);
            let path = report.write_new(common.out.as_deref().unwrap_or(Path::new("reports")))?;
            let failed = report.failures().count();
            eprintln!(
                "scanned {} videos: {} screencasts, {} failed",
                report.records.len(),
                report.positives().count(),
                failed
            );
            for r in report.failures() {
                eprintln!("  failed {}: {}", r.video_id, r.error.as_deref().unwrap_or(""));
            }
            println!("{}", path.display());
            Ok(if failed > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Cmd::Evaluate { report } => {
            let config = resolve_config(common)?;
            let manifest = Manifest::load(require(&common.manifest, "--manifest")?)?;
            let scan = ScanReport::load(&report)?;
            let summary = livecode_scan::run_evaluate(&scan, &manifest, config.random_runs, config.seed)?;
            emit_summary(&summary, common.out.as_deref())
        }
        Cmd::ExtractFrames { input } => {
            let mut config = resolve_config(common)?;
            config.interval_s = common.interval.unwrap_or(1.0);
            let mode = config.sampling_mode(SamplingKind::Training);
            mode.validate()?;
            let out = require(&common.out, "--out")?;
            let mut decoder = Decoder::new(&config.decoder)?;
            if let Some(dir) = &config.cache_dir {
                decoder = decoder.with_cache(livecode_scan::cache::FrameCache::new(dir)?);
            }
            let targets: Vec<(String, PathBuf)> = match (&input, &common.manifest) {
                (Some(path), _) => vec![(
                    path.file_stem().map_or("video".into(), |s| s.to_string_lossy().into_owned()),
                    path.clone(),
                )],
                (None, Some(m)) => Manifest::load(m)?
                    .entries
                    .into_iter()
                    .map(|e| (e.video_id, e.source))
                    .collect(),
                (None, None) => return Err(Error::Parameter("--input or --manifest is required".into())),
            };
            for (id, path) in targets {
                let source = if path.is_dir() {
                    VideoSource::FrameDir(path)
                } else {
                    VideoSource::VideoFile {
                        path,
                        decoder: decoder.clone(),
                    }
                };
                let summary = extract_training_frames(&source, &id, &mode, config.dup_threshold, &out.join(&id))?;
                println!(
                    "{id}: {} extracted, {} duplicates, {} kept",
                    summary.extracted, summary.duplicates_removed, summary.kept
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ClassifyFrames { images } => {
            let config = resolve_config(common)?;
            let gateway = ClassifierGateway::from_spec(&config.classifier_spec()?)?;
            let frames = images
                .iter()
                .enumerate()
                .map(|(k, p)| livecode_scan::load_frame(p).map(|f| f.with_timing(k, 0.0)))
                .collect::<Result<Vec<_>>>()?;
            let inputs: Vec<FrameInput<'_>> = frames.iter().map(|f| FrameInput::new("frames", f)).collect();
            let labels = gateway.classify_batch(&inputs)?;
            for (path, label) in images.iter().zip(labels) {
                println!(
                    "{}",
                    serde_json::json!({"frame": path, "label": label.label, "confidence": label.confidence})
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Baseline {
            positives,
            negatives,
            probability,
        } => {
            let config = resolve_config(common)?;
            let truth: Vec<bool> = match (positives, negatives, &common.manifest) {
                (Some(p), Some(n), _) => std::iter::repeat_n(true, p)
                    .chain(std::iter::repeat_n(false, n))
                    .collect(),
                (None, None, Some(m)) => Manifest::load(m)?.truth().into_values().collect(),
                _ => {
                    return Err(Error::Parameter(
                        "give --positives and --negatives, or a --manifest with truth labels".into(),
                    ))
                }
            };
            let random = random_baseline(&truth, probability, config.random_runs, config.seed)?;
            let all_positive = all_positive_baseline(&truth);
            let divergences = if livecode_scan::eval::matches_reference_split(&truth) {
                [&random, &all_positive]
                    .into_iter()
                    .flat_map(livecode_scan::eval::reference_divergences)
                    .collect()
            } else {
                Vec::new()
            };
            let summary = EvalSummary {
                reports: vec![random, all_positive],
                improvements: Vec::new(),
                divergences,
                skipped: Vec::new(),
            };
            emit_summary(&summary, common.out.as_deref())
        }
        Cmd::Worker { record } => {
            let config = resolve_config(common)?;
            let spec = config.classifier_spec()?;
            if matches!(spec, ClassifierSpec::Worker { .. }) {
                return Err(Error::Parameter("the worker subcommand serves an in-process classifier".into()));
            }
            let gateway = ClassifierGateway::from_spec(&spec)?;
            let classifier = GatewayClassifier(gateway);
            let stdin = BufReader::new(io::stdin().lock());
            let stdout = io::stdout().lock();
            match record {
                Some(path) => {
                    let file = std::fs::OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(&path)
                        .map_err(|e| Error::Environment(format!("{}: {e}", path.display())))?;
                    serve_recording(stdin, stdout, &classifier, file)?
                }
                None => serve(stdin, stdout, &classifier)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Conformance {
            worker,
            ide_frame,
            non_ide_frame,
            timeout,
        } => {
            let report = run_conformance(&worker, &ide_frame, &non_ide_frame, timeout);
            print!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

struct GatewayClassifier(ClassifierGateway);

impl livecode_scan::FrameClassifier for GatewayClassifier {
    fn kind(&self) -> &str {
        self.0.kind()
    }

    fn classify(&self, input: &FrameInput<'_>) -> Result<livecode_scan::FrameLabel> {
        self.0.classify(input)
    }
}

fn emit_summary(summary: &EvalSummary, out: Option<&Path>) -> Result<ExitCode> {
    print!("{}", summary.render_table());
    if let Some(path) = out {
        std::fs::write(path, summary.to_json_lines()?).map_err(|e| Error::Environment(format!("{}: {e}", path.display())))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
