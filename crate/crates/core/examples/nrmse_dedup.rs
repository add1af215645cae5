//! Scores a short frame sequence and shows which frames dedup keeps.
//!
//!     cargo run --example nrmse_dedup

use livecode_scan::similarity::{mark_frames, DEFAULT_DUP_THRESHOLD};
use livecode_scan::synthetic::{render, Shot};
use livecode_scan::nrmse;

fn main() -> livecode_scan::Result<()> {
    // fresh IDE, held still, cursor blink, fresh IDE, fresh slide
    let shots = Shot::parse_pattern("I=~IN");
    let frames = render(&shots, 3);
    let marking = mark_frames(&frames, DEFAULT_DUP_THRESHOLD)?;

    println!("frame  vs prev   duplicate  reference");
    for (k, frame) in frames.iter().enumerate() {
        let vs_prev = match k {
            0 => "-".to_string(),
            _ => format!("{:.4}", nrmse(&frames[k - 1], frame)?.value()),
        };
        println!(
            "{k:>5}  {vs_prev:>7}   {:>9}  {}",
            marking.duplicate_flags[k],
            marking.reference_indices[k].map_or("-".into(), |r| r.to_string())
        );
    }
    println!("{} of {} frames go on to classification", marking.non_duplicate_count(), frames.len());
    Ok(())
}
