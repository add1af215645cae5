//! Generates the 20-video synthetic benchmark, scans it with the marker
//! oracle, and writes a scan report.
//!
//!     cargo run --example synthetic_scan -- [out-dir]

use std::path::PathBuf;

use livecode_scan::synthetic::{benchmark_corpus, write_corpus};
use livecode_scan::{ScanConfig, Scanner};

fn main() -> livecode_scan::Result<()> {
    let scratch = tempfile::tempdir().expect("temp dir");
    let out = std::env::args().nth(1).map_or_else(|| scratch.path().to_path_buf(), PathBuf::from);

    let corpus = benchmark_corpus();
    let manifest = write_corpus(&out.join("videos"), &corpus, 30.0, 1)?;
    manifest.write(&out.join("manifest.jsonl"))?;

    let config = ScanConfig {
        classifier: Some("marker".into()),
        ..ScanConfig::default()
    };
    let report = Scanner::new(config)?.run(&manifest);

    println!("{:<10} {:<12} {:>5} {:>4} {:>6}  verdict", "video", "frames", "info", "run", "ratio");
    for (video, r) in corpus.iter().zip(&report.records) {
        let v = r.verdict.as_ref().expect("synthetic videos always scan");
        let mark = if v.is_screencast == video.is_screencast { "" } else { "  <-- wrong" };
        println!(
            "{:<10} {:<12} {:>5} {:>4} {:>6.2}  {}{mark}",
            r.video_id, video.pattern, v.n_info, v.longest_run, v.ratio, v.is_screencast
        );
    }
    let path = report.write_new(&out.join("reports"))?;
    println!("report: {}", path.display());
    Ok(())
}
