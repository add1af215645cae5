//! External video decoder invocation.
//!
//! The decoder is any command that, given `{input}`, `{fps}` and `{outdir}`,
//! writes numbered image files into `{outdir}`. Frames it produces are taken
//! to be evenly spaced at the requested rate.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use tempfile::TempDir;

use crate::cache::FrameCache;
use crate::error::{Error, Result};
use crate::frame::{list_images, SamplingMode};

pub const DEFAULT_DECODER_TEMPLATE: &str =
    "ffmpeg -nostdin -loglevel error -i {input} -vf fps={fps} {outdir}/img_%06d.png";

#[derive(Debug, Clone)]
pub struct Decoder {
    template: Vec<String>,
    cache: Option<FrameCache>,
    invocations: Arc<AtomicUsize>,
}

impl Decoder {
    /// Parses a command template. Arguments are split shell-style, then each
    /// placeholder is substituted per argument, so paths never need quoting.
    pub fn new(template: &str) -> Result<Self> {
        let words = shell_words::split(template)
            .map_err(|e| Error::Config(format!("decoder template: {e}")))?;
        if words.is_empty() {
            return Err(Error::Config("decoder template is empty".into()));
        }
        for placeholder in ["{input}", "{outdir}"] {
            if !words.iter().any(|w| w.contains(placeholder)) {
                return Err(Error::Config(format!(
                    "decoder template is missing {placeholder}"
                )));
            }
        }
        Ok(Self {
            template: words,
            cache: None,
            invocations: Arc::new(AtomicUsize::new(0)),
        })
    }

    pub fn with_cache(mut self, cache: FrameCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Number of times the external command has been run by this decoder
    /// (and its clones).
    pub fn invocations(&self) -> usize {
        self.invocations.load(Ordering::SeqCst)
    }

    /// Decodes `input` into image files sampled at `mode.interval_s`, going
    /// through the frame cache when one is configured.
    pub fn extract(&self, input: &Path, mode: &SamplingMode) -> Result<ExtractedFrames> {
        if !input.is_file() {
            return Err(Error::decode(input, "video file not found"));
        }
        if let Some(cache) = &self.cache {
            let dir = cache.cache_frames(input, mode, self)?;
            return Ok(ExtractedFrames {
                files: list_images(&dir)?,
                _scratch: None,
            });
        }
        let scratch = tempfile::Builder::new()
            .prefix("livecode-frames-")
            .tempdir()
            .map_err(|e| Error::Environment(format!("cannot create scratch dir: {e}")))?;
        self.run(input, mode.interval_s, scratch.path())?;
        Ok(ExtractedFrames {
            files: list_images(scratch.path())?,
            _scratch: Some(scratch),
        })
    }

    /// Runs the command once, writing frames into `outdir`.
    pub fn run(&self, input: &Path, interval_s: f64, outdir: &Path) -> Result<()> {
        let fps = fps_arg(interval_s);
        let args: Vec<String> = self
            .template
            .iter()
            .map(|w| {
                w.replace("{input}", &input.to_string_lossy())
                    .replace("{fps}", &fps)
                    .replace("{outdir}", &outdir.to_string_lossy())
            })
            .collect();
        self.invocations.fetch_add(1, Ordering::SeqCst);
        log::debug!("running decoder: {args:?}");
        let output = Command::new(&args[0])
            .args(&args[1..])
            .output()
            .map_err(|e| Error::decode(input, format!("cannot run decoder {:?}: {e}", args[0])))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            let tail: Vec<&str> = stderr.lines().rev().take(8).collect();
            let tail: Vec<&str> = tail.into_iter().rev().collect();
            return Err(Error::decode(
                input,
                format!("decoder exited with {}: {}", output.status, tail.join(" | ")),
            ));
        }
        Ok(())
    }
}

/// Decoded frame files, in frame order.
#[derive(Debug)]
pub struct ExtractedFrames {
    files: Vec<PathBuf>,
    _scratch: Option<TempDir>,
}

impl ExtractedFrames {
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

/// Frame rate as a rational where possible: 30 s → `1/30`.
fn fps_arg(interval_s: f64) -> String {
    if interval_s.fract() == 0.0 && interval_s >= 1.0 {
        format!("1/{}", interval_s as u64)
    } else {
        format!("{}", 1.0 / interval_s)
    }
}
