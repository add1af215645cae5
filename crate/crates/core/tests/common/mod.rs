#![allow(dead_code)]

use std::path::{Path, PathBuf};

use livecode_scan::synthetic::marker_frame;
use livecode_scan::{GrayFrame, Label};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_livecode-scan")
}

/// Command line for the bundled reference worker.
pub fn reference_worker(extra: &str) -> String {
    format!("'{}' worker --classifier marker {extra}", bin())
}

/// Writes a shell script and returns a command line that runs it.
pub fn script(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    format!("sh '{}'", path.display())
}

pub const HELLO: &str = r#"echo '{"type":"hello","protocol_version":1}'"#;

pub fn frames(labels: &[Label], seed: u64) -> Vec<GrayFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels
        .iter()
        .enumerate()
        .map(|(k, &l)| marker_frame(l, &mut rng).with_timing(k, k as f64 * 30.0))
        .collect()
}

pub fn frame_png(dir: &Path, name: &str, label: Label, seed: u64) -> PathBuf {
    let path = dir.join(name);
    frames(&[label], seed)[0].save_png(&path).unwrap();
    path
}
