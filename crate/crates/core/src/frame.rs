//! Frame acquisition: decoding, grayscale normalization, and sampling.
//!
//! Every frame handed to the rest of the pipeline is a 300×300 single-channel
//! raster with luminance in `[0, 1]`. Frames come either from a directory of
//! images or from a video file run through an external decoder command.

use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::{DynamicImage, ImageBuffer, Luma};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{Decoder, ExtractedFrames};
use crate::error::{Error, Result};

/// Side length of a normalized frame.
pub const FRAME_SIZE: u32 = 300;

/// BT.601 luma weights.
const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// Normalized grayscale frame, row-major, luminance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    width: u32,
    height: u32,
    pixels: Vec<f32>,
    pub timestamp_s: f64,
    pub index: usize,
    /// Image file the frame was decoded from, when there is one.
    pub source_path: Option<PathBuf>,
}

impl GrayFrame {
    pub fn new(width: u32, height: u32, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Parameter(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!(
                "luminance {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            timestamp_s: 0.0,
            index: 0,
            source_path: None,
        })
    }

    pub fn uniform(width: u32, height: u32, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Builds a frame from a per-pixel function of `(row, col)`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn with_timing(mut self, index: usize, timestamp_s: f64) -> Self {
        self.index = index;
        self.timestamp_s = timestamp_s;
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, row: u32, col: u32) -> f32 {
        self.pixels[(row * self.width + col) as usize]
    }

    pub fn mean(&self) -> f64 {
        if self.pixels.is_empty() {
            return 0.0;
        }
        self.pixels.iter().map(|&v| v as f64).sum::<f64>() / self.pixels.len() as f64
    }

    /// Mean luminance of the `size`×`size` block anchored at the top-left
    /// corner (clipped to the frame).
    pub fn top_left_mean(&self, size: u32) -> f64 {
        let rows = size.min(self.height);
        let cols = size.min(self.width);
        if rows == 0 || cols == 0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for row in 0..rows {
            for col in 0..cols {
                sum += self.get(row, col) as f64;
            }
        }
        sum / (rows * cols) as f64
    }

    /// Encodes the frame as an 8-bit grayscale PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(self.width, self.height, |x, y| {
            Luma([(self.get(y, x) * 255.0).round().clamp(0.0, 255.0) as u8])
        });
        buf.save(path).map_err(|e| Error::decode(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    Classification,
    Training,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingMode {
    pub kind: SamplingKind,
    pub interval_s: f64,
    /// Upper bound on retained frames; only honored in training mode.
    pub cap: usize,
    pub seed: u64,
}

impl SamplingMode {
    pub const CLASSIFICATION_INTERVAL_S: f64 = 30.0;
    pub const TRAINING_INTERVAL_S: f64 = 1.0;
    pub const TRAINING_CAP: usize = 600;

    pub fn classification() -> Self {
        Self {
            kind: SamplingKind::Classification,
            interval_s: Self::CLASSIFICATION_INTERVAL_S,
            cap: Self::TRAINING_CAP,
            seed: 0,
        }
    }

    pub fn training() -> Self {
        Self {
            kind: SamplingKind::Training,
            interval_s: Self::TRAINING_INTERVAL_S,
            cap: Self::TRAINING_CAP,
            seed: 0,
        }
    }

    pub fn with_interval(mut self, interval_s: f64) -> Self {
        self.interval_s = interval_s;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.interval_s.is_finite() && self.interval_s > 0.0) {
            return Err(Error::Parameter(format!(
                "sampling interval must be positive, got {}",
                self.interval_s
            )));
        }
        if self.cap == 0 {
            return Err(Error::Parameter("frame cap must be positive".into()));
        }
        Ok(())
    }

    fn effective_cap(&self) -> Option<usize> {
        match self.kind {
            SamplingKind::Classification => None,
            SamplingKind::Training => Some(self.cap),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSequence {
    pub video_id: String,
    pub frames: Vec<GrayFrame>,
    pub mode: SamplingMode,
}

impl SampledSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Sampling instants `0, interval, 2·interval, …` up to and including
/// `duration_s`. A zero duration still yields the frame at `t = 0`.
pub fn sample_schedule(duration_s: f64, interval_s: f64) -> Result<Vec<f64>> {
    if !(interval_s.is_finite() && interval_s > 0.0) {
        return Err(Error::Parameter(format!(
            "sampling interval must be positive, got {interval_s}"
        )));
    }
    if !(duration_s.is_finite() && duration_s >= 0.0) {
        return Err(Error::Parameter(format!(
            "duration must be non-negative, got {duration_s}"
        )));
    }
    // Tolerate float noise so that e.g. 90/30 lands on 3, not 2.999….
    let last = (duration_s / interval_s + 1e-9).floor() as usize;
    Ok((0..=last).map(|k| k as f64 * interval_s).collect())
}

/// Decodes an image file into a normalized 300×300 grayscale frame.
pub fn load_frame(image_path: &Path) -> Result<GrayFrame> {
    let img = image::ImageReader::open(image_path)
        .map_err(|e| Error::decode(image_path, e))?
        .with_guessed_format()
        .map_err(|e| Error::decode(image_path, e))?
        .decode()
        .map_err(|e| Error::decode(image_path, e))?;
    let mut frame = normalize_image(&img)?;
    frame.source_path = Some(image_path.to_path_buf());
    Ok(frame)
}

/// Converts to BT.601 luminance and resamples to 300×300.
pub fn normalize_image(img: &DynamicImage) -> Result<GrayFrame> {
    let rgb = img.to_rgb32f();
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::Parameter("image has zero area".into()));
    }
    let gray: ImageBuffer<Luma<f32>, Vec<f32>> = ImageBuffer::from_fn(w, h, |x, y| {
        let p = rgb.get_pixel(x, y).0;
        let l = LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2];
        Luma([l.clamp(0.0, 1.0)])
    });
    let resized = if (w, h) == (FRAME_SIZE, FRAME_SIZE) {
        gray
    } else {
        imageops::resize(&gray, FRAME_SIZE, FRAME_SIZE, FilterType::Triangle)
    };
    let pixels = resized.into_raw().into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    GrayFrame::new(FRAME_SIZE, FRAME_SIZE, pixels)
}

/// Where a video's frames come from.
#[derive(Debug, Clone)]
pub enum VideoSource {
    /// Directory of PNG/JPEG frames. Files named `frame_<seconds>` carry their
    /// own timestamps; anything else is taken in name order, one per interval.
    FrameDir(PathBuf),
    /// Video file decoded by an external command.
    VideoFile { path: PathBuf, decoder: Decoder },
}

impl VideoSource {
    pub fn path(&self) -> &Path {
        match self {
            VideoSource::FrameDir(p) => p,
            VideoSource::VideoFile { path, .. } => path,
        }
    }

    pub fn default_id(&self) -> String {
        self.path()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path().display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedFrame {
    pub path: PathBuf,
    pub timestamp_s: f64,
}

/// Frames selected for sampling but not yet decoded. Holds the decoder's
/// scratch directory alive until dropped.
#[derive(Debug)]
pub struct FramePlan {
    pub frames: Vec<PlannedFrame>,
    _extracted: Option<ExtractedFrames>,
}

/// Lists the frames `mode` would sample from `source`, without capping.
pub fn plan_frames(source: &VideoSource, mode: &SamplingMode) -> Result<FramePlan> {
    mode.validate()?;
    match source {
        VideoSource::FrameDir(dir) => {
            let files = list_images(dir)?;
            if files.is_empty() {
                return Err(Error::EmptySequence(dir.display().to_string()));
            }
            Ok(FramePlan {
                frames: plan_directory(files, mode.interval_s)?,
                _extracted: None,
            })
        }
        VideoSource::VideoFile { path, decoder } => {
            let extracted = decoder.extract(path, mode)?;
            let frames: Vec<PlannedFrame> = extracted
                .files()
                .iter()
                .enumerate()
                .map(|(k, p)| PlannedFrame {
                    path: p.clone(),
                    timestamp_s: k as f64 * mode.interval_s,
                })
                .collect();
            if frames.is_empty() {
                return Err(Error::EmptySequence(path.display().to_string()));
            }
            Ok(FramePlan {
                frames,
                _extracted: Some(extracted),
            })
        }
    }
}

/// Seeded uniform choice of `cap` out of `len` positions, returned ascending.
/// Returns all positions when `len <= cap`.
pub fn cap_selection(len: usize, cap: usize, seed: u64) -> Vec<usize> {
    if len <= cap {
        return (0..len).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, len, cap).into_vec();
    picked.sort_unstable();
    picked
}

/// Samples and decodes a video's frames according to `mode`.
pub fn acquire_frames(source: &VideoSource, mode: &SamplingMode) -> Result<SampledSequence> {
    let plan = plan_frames(source, mode)?;
    let selected: Vec<&PlannedFrame> = match mode.effective_cap() {
        Some(cap) => cap_selection(plan.frames.len(), cap, mode.seed)
            .into_iter()
            .map(|i| &plan.frames[i])
            .collect(),
        None => plan.frames.iter().collect(),
    };
    let frames = selected
        .par_iter()
        .enumerate()
        .map(|(index, planned)| {
            load_frame(&planned.path).map(|f| f.with_timing(index, planned.timestamp_s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledSequence {
        video_id: source.default_id(),
        frames,
        mode: mode.clone(),
    })
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

pub(crate) fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        }
    }
    files.sort_by_key(|a| natural_key(a));
    Ok(files)
}

/// Sort key that orders `img_2` before `img_10`.
fn natural_key(path: &Path) -> (Option<u64>, String) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    (digits.parse().ok(), stem)
}

fn timestamp_from_name(path: &Path) -> Option<f64> {
    let stem = path.file_stem()?.to_str()?;
    let ts: f64 = stem.strip_prefix("frame_")?.parse().ok()?;
    (ts.is_finite() && ts >= 0.0).then_some(ts)
}

fn plan_directory(files: Vec<PathBuf>, interval_s: f64) -> Result<Vec<PlannedFrame>> {
    let stamped: Option<Vec<f64>> = files.iter().map(|p| timestamp_from_name(p)).collect();
    let Some(stamps) = stamped else {
        return Ok(files
            .into_iter()
            .enumerate()
            .map(|(k, path)| PlannedFrame {
                path,
                timestamp_s: k as f64 * interval_s,
            })
            .collect());
    };

    let mut timed: Vec<PlannedFrame> = files
        .into_iter()
        .zip(stamps)
        .map(|(path, timestamp_s)| PlannedFrame { path, timestamp_s })
        .collect();
    timed.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
    timed.dedup_by(|later, earlier| later.timestamp_s == earlier.timestamp_s);

    let duration = timed.last().map_or(0.0, |f| f.timestamp_s);
    let schedule = sample_schedule(duration, interval_s)?;
    let mut picked = Vec::with_capacity(schedule.len());
    let mut cursor = 0;
    for &t in &schedule {
        // First frame at or after the sampling instant, inside its interval.
        while cursor < timed.len() && timed[cursor].timestamp_s < t - 1e-9 {
            cursor += 1;
        }
        if cursor < timed.len() && timed[cursor].timestamp_s < t + interval_s - 1e-9 {
            picked.push(timed[cursor].clone());
            cursor += 1;
        }
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Rgb, RgbImage};

    #[test]
    fn schedule_examples() {
        assert_eq!(sample_schedule(95.0, 30.0).unwrap(), vec![0.0, 30.0, 60.0, 90.0]);
        assert_eq!(sample_schedule(0.0, 30.0).unwrap(), vec![0.0]);
        assert_eq!(sample_schedule(29.0, 30.0).unwrap(), vec![0.0]);
        assert_eq!(sample_schedule(90.0, 30.0).unwrap().len(), 4);
    }

    #[test]
    fn schedule_rejects_bad_interval() {
        assert!(matches!(sample_schedule(10.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(sample_schedule(10.0, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn frame_invariants_enforced() {
        assert!(GrayFrame::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayFrame::new(1, 1, vec![1.5]).is_err());
        assert!(GrayFrame::new(1, 1, vec![0.5]).is_ok());
    }

    #[test]
    fn solid_images_normalize_to_constant_frames() {
        let dir = tempfile::tempdir().unwrap();
        let white = dir.path().join("white.png");
        RgbImage::from_pixel(640, 480, Rgb([255, 255, 255])).save(&white).unwrap();
        let black = dir.path().join("black.jpg");
        RgbImage::from_pixel(640, 480, Rgb([0, 0, 0])).save(&black).unwrap();

        let f = load_frame(&white).unwrap();
        assert_eq!((f.width(), f.height()), (FRAME_SIZE, FRAME_SIZE));
        assert!(f.pixels().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        let f = load_frame(&black).unwrap();
        assert!(f.pixels().iter().all(|&v| v.abs() < 1e-6));
    }

    #[test]
    fn half_split_image_keeps_mean() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.png");
        GrayImage::from_fn(640, 480, |x, _| image::Luma([if x < 320 { 0 } else { 255 }]))
            .save(&path)
            .unwrap();
        let f = load_frame(&path).unwrap();
        assert!((f.mean() - 0.5).abs() <= 0.01, "mean {}", f.mean());
    }

    #[test]
    fn load_is_idempotent_on_normalized_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("noise.png");
        let src = GrayImage::from_fn(300, 300, |x, y| image::Luma([((x * 7 + y * 13) % 256) as u8]));
        src.save(&path).unwrap();
        let f = load_frame(&path).unwrap();
        for (got, want) in f.pixels().iter().zip(src.pixels()) {
            assert!((got - want.0[0] as f32 / 255.0).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn corrupt_image_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.png");
        std::fs::write(&path, b"not really a png").unwrap();
        match load_frame(&path) {
            Err(Error::Decode { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected decode error, got {other:?}"),
        }
    }

    fn write_frames(dir: &Path, names: &[&str]) {
        for (k, name) in names.iter().enumerate() {
            GrayImage::from_pixel(16, 16, image::Luma([(k * 10) as u8]))
                .save(dir.join(name))
                .unwrap();
        }
    }

    #[test]
    fn directory_with_timestamped_frames() {
        let dir = tempfile::tempdir().unwrap();
        write_frames(dir.path(), &["frame_0.png", "frame_30.png", "frame_60.png"]);
        let seq = acquire_frames(&VideoSource::FrameDir(dir.path().into()), &SamplingMode::classification())
            .unwrap();
        assert_eq!(seq.len(), 3);
        let ts: Vec<f64> = seq.frames.iter().map(|f| f.timestamp_s).collect();
        assert_eq!(ts, vec![0.0, 30.0, 60.0]);
        let idx: Vec<usize> = seq.frames.iter().map(|f| f.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn dense_directory_is_subsampled() {
        let dir = tempfile::tempdir().unwrap();
        let names: Vec<String> = (0..95).map(|t| format!("frame_{t}.png")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        write_frames(dir.path(), &refs);
        let seq = acquire_frames(&VideoSource::FrameDir(dir.path().into()), &SamplingMode::classification())
            .unwrap();
        let ts: Vec<f64> = seq.frames.iter().map(|f| f.timestamp_s).collect();
        assert_eq!(ts, vec![0.0, 30.0, 60.0, 90.0]);
    }

    #[test]
    fn ordinal_names_use_interval() {
        let dir = tempfile::tempdir().unwrap();
        write_frames(dir.path(), &["img_10.png", "img_2.png", "img_1.png"]);
        let seq = acquire_frames(&VideoSource::FrameDir(dir.path().into()), &SamplingMode::classification())
            .unwrap();
        let names: Vec<String> = seq
            .frames
            .iter()
            .map(|f| f.source_path.as_ref().unwrap().file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["img_1.png", "img_2.png", "img_10.png"]);
        assert_eq!(seq.frames[2].timestamp_s, 60.0);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = acquire_frames(&VideoSource::FrameDir(dir.path().into()), &SamplingMode::classification());
        assert!(matches!(err, Err(Error::EmptySequence(_))));
    }

    #[test]
    fn cap_selection_is_seeded_and_sorted() {
        let a = cap_selection(700, 600, 42);
        let b = cap_selection(700, 600, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 600);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_ne!(a, cap_selection(700, 600, 43));
        assert_eq!(cap_selection(5, 600, 1), vec![0, 1, 2, 3, 4]);
    }
}
