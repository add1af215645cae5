//! Synthetic frame-directory videos with known verdicts.
//!
//! Frames are 300×300 noise textures, so any two independently drawn frames
//! are far apart under NRMSE. The top-left 8×8 block carries the marker the
//! [`MarkerOracle`](crate::classifier::MarkerOracle) reads: bright for IDE
//! frames, dim otherwise.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{Label, MARKER_BLOCK};
use crate::error::Result;
use crate::frame::{GrayFrame, FRAME_SIZE};
use crate::manifest::{Manifest, ManifestEntry};

const IDE_MARKER: f32 = 0.95;
const PLAIN_MARKER: f32 = 0.3;
const CURSOR: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shot {
    /// Fresh IDE frame.
    Ide,
    /// Fresh non-IDE frame.
    Plain,
    /// Exact copy of the last fresh frame.
    Still,
    /// Last fresh frame with a small cursor-sized change.
    Cursor,
}

impl Shot {
    /// `I` fresh IDE, `N` fresh non-IDE, `=` exact repeat, `~` cursor-only change.
    pub fn parse_pattern(pattern: &str) -> Vec<Shot> {
        pattern
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'I' => Shot::Ide,
                'N' => Shot::Plain,
                '=' => Shot::Still,
                '~' => Shot::Cursor,
                other => panic!("unknown shot {other:?}"),
            })
            .collect()
    }
}

/// A fresh noise frame carrying the marker for `label`.
pub fn marker_frame(label: Label, rng: &mut impl Rng) -> GrayFrame {
    let marker = match label {
        Label::Ide => IDE_MARKER,
        Label::NonIde => PLAIN_MARKER,
    };
    GrayFrame::from_fn(FRAME_SIZE, FRAME_SIZE, |r, c| {
        if r < MARKER_BLOCK && c < MARKER_BLOCK {
            marker
        } else {
            rng.gen_range(0.1..0.8)
        }
    })
    .expect("values are in range")
}

fn with_cursor(base: &GrayFrame, rng: &mut impl Rng) -> GrayFrame {
    let row = rng.gen_range(MARKER_BLOCK + 1..FRAME_SIZE - CURSOR);
    let col = rng.gen_range(MARKER_BLOCK + 1..FRAME_SIZE - CURSOR);
    GrayFrame::from_fn(base.width(), base.height(), |r, c| {
        if (row..row + CURSOR).contains(&r) && (col..col + CURSOR).contains(&c) {
            1.0
        } else {
            base.get(r, c)
        }
    })
    .expect("values are in range")
}

/// Renders the shots into frames. Repeats before any fresh frame are
/// rendered as a fresh non-IDE frame.
pub fn render(shots: &[Shot], seed: u64) -> Vec<GrayFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_fresh: Option<GrayFrame> = None;
    let mut frames = Vec::with_capacity(shots.len());
    for shot in shots {
        let frame = match (shot, &last_fresh) {
            (Shot::Ide, _) => marker_frame(Label::Ide, &mut rng),
            (Shot::Plain, _) | (_, None) => marker_frame(Label::NonIde, &mut rng),
            (Shot::Still, Some(base)) => base.clone(),
            (Shot::Cursor, Some(base)) => with_cursor(base, &mut rng),
        };
        if matches!(shot, Shot::Ide | Shot::Plain) || last_fresh.is_none() {
            last_fresh = Some(frame.clone());
        }
        frames.push(frame);
    }
    frames
}

/// Writes the shots as `frame_<seconds>.png` files spaced `interval_s` apart.
pub fn write_frame_dir(dir: &Path, shots: &[Shot], interval_s: f64, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for (k, frame) in render(shots, seed).iter().enumerate() {
        frame.save_png(&dir.join(format!("frame_{}.png", k as f64 * interval_s)))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub video_id: String,
    pub pattern: &'static str,
    pub is_screencast: bool,
    /// Why the expected verdict holds.
    pub rationale: &'static str,
}

/// Twenty videos covering genuine live coding, IDE screenshots held on
/// screen, non-IDE content, and near misses on either threshold.
pub fn benchmark_corpus() -> Vec<SyntheticVideo> {
    const SPECS: [(&str, bool, &str, &str); 20] = [
        ("live-01", true, "IIIIII", "six changing IDE frames"),
        ("live-02", true, "IIII", "run of exactly four"),
        ("live-03", true, "NNIIIIIN", "run five, ratio 5/8"),
        ("live-04", true, "NIIIIINNII", "run five, ratio 7/10"),
        ("live-05", true, "N==IIIII", "static intro collapses, run five"),
        ("live-06", true, "IIII~IIII", "cursor blip breaks one run, both halves reach four"),
        ("live-07", true, "IIIINNNN", "run four, ratio exactly 1/2"),
        ("still-01", false, "I=======", "one IDE screenshot held on screen"),
        ("still-02", false, "I=I=I=I=I=", "screenshots alternate with stills; no two changing IDE frames adjacent"),
        ("still-03", false, "II~II~II~II", "cursor-only changes split every run to two"),
        ("still-04", false, "III=III=III", "stills split runs to three"),
        ("plain-01", false, "NNNNNNNN", "no IDE at all"),
        ("plain-02", false, "NN=NN~NNN", "no IDE, some stills"),
        ("plain-03", false, "N=======", "single slide held"),
        ("ratio-01", false, "IIIINNNNNN", "run four but ratio 0.4"),
        ("ratio-02", false, "NNNIIIINNNN", "run four but ratio 4/11"),
        ("run-01", false, "IIINIIINIII", "ratio high but longest run three"),
        ("run-02", false, "INININININ", "alternating, run one"),
        ("short-01", false, "III", "fewer frames than the minimum run"),
        ("short-02", false, "I", "single frame"),
    ];
    SPECS
        .iter()
        .map(|(id, truth, pattern, why)| SyntheticVideo {
            video_id: id.to_string(),
            pattern,
            is_screencast: *truth,
            rationale: why,
        })
        .collect()
}

/// Writes each video under `root/<video_id>` at the given interval and
/// returns a manifest with truth labels.
pub fn write_corpus(root: &Path, videos: &[SyntheticVideo], interval_s: f64, seed: u64) -> Result<Manifest> {
    let mut entries = Vec::with_capacity(videos.len());
    for (k, v) in videos.iter().enumerate() {
        let dir: PathBuf = root.join(&v.video_id);
        write_frame_dir(&dir, &Shot::parse_pattern(v.pattern), interval_s, seed.wrapping_add(k as u64))?;
        let mut entry = ManifestEntry::new(v.video_id.clone(), dir).with_truth(v.is_screencast);
        entry.notes = v.rationale.to_string();
        entries.push(entry);
    }
    Manifest::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::MarkerOracle;
    use crate::similarity::{mark_frames, nrmse, DEFAULT_DUP_THRESHOLD};

    #[test]
    fn shots_behave_as_described() {
        let frames = render(&Shot::parse_pattern("IN=~I"), 1);
        assert_eq!(MarkerOracle::label_of(&frames[0]), Label::Ide);
        assert_eq!(MarkerOracle::label_of(&frames[1]), Label::NonIde);
        assert_eq!(frames[2], frames[1]);
        let cursor = nrmse(&frames[1], &frames[3]).unwrap().value();
        assert!(cursor > 0.0 && cursor < DEFAULT_DUP_THRESHOLD, "{cursor}");
        assert!(nrmse(&frames[3], &frames[4]).unwrap().value() > 0.3);
        let m = mark_frames(&frames, DEFAULT_DUP_THRESHOLD).unwrap();
        assert_eq!(m.duplicate_flags, vec![false, false, true, true, false]);
    }

    #[test]
    fn markers_survive_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_frame_dir(dir.path(), &Shot::parse_pattern("IN"), 30.0, 5).unwrap();
        let ide = crate::frame::load_frame(&dir.path().join("frame_0.png")).unwrap();
        let plain = crate::frame::load_frame(&dir.path().join("frame_30.png")).unwrap();
        assert_eq!(MarkerOracle::label_of(&ide), Label::Ide);
        assert_eq!(MarkerOracle::label_of(&plain), Label::NonIde);
    }
}
