//! Builds a training set from a 1 fps frame directory: near-duplicates are
//! dropped, then a seeded random subset is kept.
//!
//!     cargo run --example extract_training_frames -- [cap]

use livecode_scan::scan::extract_training_frames;
use livecode_scan::synthetic::{write_frame_dir, Shot};
use livecode_scan::{SamplingMode, VideoSource};

fn main() -> livecode_scan::Result<()> {
    let cap = std::env::args().nth(1).map_or(8, |s| s.parse().expect("cap"));
    let dir = tempfile::tempdir().expect("temp dir");

    // 40 seconds of a tutorial: long stills while the narrator talks.
    let pattern = "N====I====I~~~~II==IN====I=I~I==IIIIN===";
    write_frame_dir(&dir.path().join("clip"), &Shot::parse_pattern(pattern), 1.0, 7)?;

    let source = VideoSource::FrameDir(dir.path().join("clip"));
    let mode = SamplingMode::training().with_cap(cap).with_seed(42);
    let out = dir.path().join("train");
    let summary = extract_training_frames(&source, "clip", &mode, 0.05, &out)?;
    println!(
        "{} sampled, {} near-duplicates dropped, {} kept (cap {cap})",
        summary.extracted, summary.duplicates_removed, summary.kept
    );
    for f in &summary.frames {
        println!("  t={:>4}s  {}", f.timestamp_s, f.file.file_name().unwrap().to_string_lossy());
    }
    Ok(())
}
