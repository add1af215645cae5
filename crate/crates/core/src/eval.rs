//! Precision / recall / F1 over video verdicts, plus the random and
//! all-positive baselines.
//!
//! Undefined ratios (no predicted positives, no actual positives) count as 0.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut counts = Self::default();
        for (predicted, actual) in pairs {
            counts.add(predicted, actual);
        }
        counts
    }
}

/// Confusion counts over matching video ids.
pub fn confusion(predictions: &BTreeMap<String, bool>, truth: &BTreeMap<String, bool>) -> Result<ConfusionCounts> {
    let missing: Vec<&str> = predictions
        .keys()
        .filter(|k| !truth.contains_key(*k))
        .chain(truth.keys().filter(|k| !predictions.contains_key(*k)))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parameter(format!(
            "prediction and truth sets differ on: {}",
            missing.join(", ")
        )));
    }
    Ok(ConfusionCounts::from_pairs(
        predictions.iter().map(|(id, &p)| (p, truth[id])),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method_name: String,
    /// Exact counts for single-run methods; absent for averaged reports.
    pub counts: Option<ConfusionCounts>,
    pub runs: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn scores(c: &ConfusionCounts) -> (f64, f64, f64) {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

pub fn metrics(counts: ConfusionCounts, method_name: &str) -> EvalReport {
    let (precision, recall, f1) = scores(&counts);
    EvalReport {
        method_name: method_name.to_string(),
        counts: Some(counts),
        runs: 1,
        precision,
        recall,
        f1,
    }
}

pub const TOOL_METHOD: &str = "screencast detector";
pub const RANDOM_METHOD: &str = "random baseline";
pub const ALL_POSITIVE_METHOD: &str = "all positive baseline";

pub fn all_positive_baseline(truth: &[bool]) -> EvalReport {
    metrics(
        ConfusionCounts::from_pairs(truth.iter().map(|&t| (true, t))),
        ALL_POSITIVE_METHOD,
    )
}

/// Labels each video positive with probability `p`, `runs` times, and
/// averages each metric across runs. Run `k` draws from its own generator
/// seeded from `seed`, so the result does not depend on scheduling.
pub fn random_baseline(truth: &[bool], p: f64, runs: usize, seed: u64) -> Result<EvalReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("probability {p} outside [0, 1]")));
    }
    if runs == 0 {
        return Err(Error::Parameter("random baseline needs at least one run".into()));
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let run_seeds: Vec<u64> = (0..runs).map(|_| seeder.gen()).collect();
    let per_run: Vec<(f64, f64, f64)> = run_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let counts = ConfusionCounts::from_pairs(truth.iter().map(|&t| (rng.gen_bool(p), t)));
            scores(&counts)
        })
        .collect();
    let n = runs as f64;
    let (sp, sr, sf) = per_run
        .iter()
        .fold((0.0, 0.0, 0.0), |(a, b, c), (p, r, f)| (a + p, b + r, c + f));
    Ok(EvalReport {
        method_name: RANDOM_METHOD.to_string(),
        counts: None,
        runs,
        precision: sp / n,
        recall: sr / n,
        f1: sf / n,
    })
}

/// Relative gain of the tool over a baseline, in percent:
/// `(tool / baseline − 1) × 100`. Absent when the baseline scored 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub baseline: String,
    pub recall_pct: Option<f64>,
    pub precision_pct: Option<f64>,
    pub f1_pct: Option<f64>,
}

pub fn improvement(tool: &EvalReport, baseline: &EvalReport) -> Improvement {
    let gain = |t: f64, b: f64| (b > 0.0).then(|| (t / b - 1.0) * 100.0);
    Improvement {
        baseline: baseline.method_name.clone(),
        recall_pct: gain(tool.recall, baseline.recall),
        precision_pct: gain(tool.precision, baseline.precision),
        f1_pct: gain(tool.f1, baseline.f1),
    }
}

/// Published figures (two decimals) for the 16 positive / 7 negative test
/// split, kept to flag where recomputed values disagree with them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub method: &'static str,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// Largest gap still attributed to rounding or sampling noise.
    pub tolerance: f64,
}

pub const REFERENCE_POSITIVES: usize = 16;
pub const REFERENCE_NEGATIVES: usize = 7;

pub const REFERENCE_ROWS: [ReferenceRow; 3] = [
    ReferenceRow {
        method: RANDOM_METHOD,
        recall: 0.52,
        precision: 0.66,
        f1: 0.58,
        tolerance: 0.1,
    },
    ReferenceRow {
        method: ALL_POSITIVE_METHOD,
        recall: 1.0,
        precision: 0.73,
        f1: 0.84,
        tolerance: 0.005,
    },
    ReferenceRow {
        method: TOOL_METHOD,
        recall: 1.0,
        precision: 0.94,
        f1: 0.97,
        tolerance: 0.005,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub method: String,
    pub metric: String,
    pub computed: f64,
    pub reference: f64,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: computed {:.4}, reference table prints {:.2}",
            self.method, self.metric, self.computed, self.reference
        )
    }
}

/// Metrics of `report` that disagree with its reference row beyond the row's
/// tolerance. Empty when no row exists for the method.
pub fn reference_divergences(report: &EvalReport) -> Vec<Divergence> {
    let Some(row) = REFERENCE_ROWS.iter().find(|r| r.method == report.method_name) else {
        return Vec::new();
    };
    [
        ("recall", report.recall, row.recall),
        ("precision", report.precision, row.precision),
        ("f1", report.f1, row.f1),
    ]
    .into_iter()
    .filter(|(_, computed, reference)| (computed - reference).abs() > row.tolerance)
    .map(|(metric, computed, reference)| Divergence {
        method: report.method_name.clone(),
        metric: metric.to_string(),
        computed,
        reference,
    })
    .collect()
}

/// Whether a truth set has the reference split's class balance.
pub fn matches_reference_split(truth: &[bool]) -> bool {
    let positives = truth.iter().filter(|t| **t).count();
    positives == REFERENCE_POSITIVES && truth.len() - positives == REFERENCE_NEGATIVES
}

/// Tool row, both baselines, and the tool's gains over each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub reports: Vec<EvalReport>,
    pub improvements: Vec<Improvement>,
    pub divergences: Vec<Divergence>,
    /// Videos left out of evaluation (failed scans).
    pub skipped: Vec<String>,
}

impl EvalSummary {
    /// Builds the summary. Divergences from the reference table are only
    /// computed when the truth set has the reference split's balance.
    pub fn build(tool: EvalReport, truth: &[bool], random_runs: usize, seed: u64) -> Result<Self> {
        let random = random_baseline(truth, 0.5, random_runs, seed)?;
        let all_positive = all_positive_baseline(truth);
        let improvements = vec![improvement(&tool, &random), improvement(&tool, &all_positive)];
        let reports = vec![tool, random, all_positive];
        let divergences = if matches_reference_split(truth) {
            reports.iter().flat_map(reference_divergences).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            reports,
            improvements,
            divergences,
            skipped: Vec::new(),
        })
    }

    /// Fixed-width table followed by improvements and flagged divergences.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>7} {:>9} {:>7} {:>5} {:>5} {:>5} {:>5}",
            "method", "recall", "precision", "f1", "tp", "fp", "fn", "tn"
        );
        for r in &self.reports {
            let counts = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
            let c = r.counts;
            let _ = writeln!(
                out,
                "{:<24} {:>7.4} {:>9.4} {:>7.4} {:>5} {:>5} {:>5} {:>5}",
                if r.runs > 1 { format!("{} (x{})", r.method_name, r.runs) } else { r.method_name.clone() },
                r.recall,
                r.precision,
                r.f1,
                counts(c.map(|c| c.tp)),
                counts(c.map(|c| c.fp)),
                counts(c.map(|c| c.fn_)),
                counts(c.map(|c| c.tn)),
            );
        }
        for imp in &self.improvements {
            let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:+.2}%"));
            let _ = writeln!(
                out,
                "vs {}: recall {}, precision {}, f1 {}",
                imp.baseline,
                pct(imp.recall_pct),
                pct(imp.precision_pct),
                pct(imp.f1_pct)
            );
        }
        for d in &self.divergences {
            let _ = writeln!(out, "note: {d}");
        }
        if !self.skipped.is_empty() {
            let _ = writeln!(out, "skipped (scan failed): {}", self.skipped.join(", "));
        }
        out
    }

    /// One JSON object per line, one per method.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}
