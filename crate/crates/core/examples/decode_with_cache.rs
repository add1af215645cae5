//! Decodes a video through an external command with an on-disk frame cache.
//!
//!     cargo run --example decode_with_cache -- video.mp4 [cache-dir]
//!
//! Uses ffmpeg by default; set LIVECODE_DECODER to any template with
//! `{input}`, `{fps}` and `{outdir}` placeholders. A second run with the
//! same video and interval is served from the cache.

use std::path::PathBuf;

use livecode_scan::cache::FrameCache;
use livecode_scan::decoder::{Decoder, DEFAULT_DECODER_TEMPLATE};
use livecode_scan::{acquire_frames, SamplingMode, VideoSource};

fn main() -> livecode_scan::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(video) = args.next().map(PathBuf::from) else {
        eprintln!("usage: decode_with_cache <video> [cache-dir]");
        std::process::exit(2);
    };
    let cache_dir = args.next().map_or_else(|| std::env::temp_dir().join("livecode-frame-cache"), PathBuf::from);
    let template = std::env::var("LIVECODE_DECODER").unwrap_or_else(|_| DEFAULT_DECODER_TEMPLATE.into());

    let decoder = Decoder::new(&template)?.with_cache(FrameCache::new(&cache_dir)?);
    let source = VideoSource::VideoFile {
        path: video,
        decoder: decoder.clone(),
    };
    let mode = SamplingMode::classification();
    for attempt in 1..=2 {
        let seq = acquire_frames(&source, &mode)?;
        println!(
            "pass {attempt}: {} frames, decoder run {} time(s) so far",
            seq.len(),
            decoder.invocations()
        );
    }
    println!("cache: {}", cache_dir.display());
    Ok(())
}
