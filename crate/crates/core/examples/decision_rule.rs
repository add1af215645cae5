//! Applies the screencast rule to a hand-written annotation string.
//!
//!     cargo run --example decision_rule -- "NIIdIIIIN" 4 0.5
//!
//! `I` = changing IDE frame, `N` = changing other frame, `d` = duplicate.

use livecode_scan::{decide, DecisionParams, FrameAnnotation, FrameLabel, Label};

fn main() {
    let mut args = std::env::args().skip(1);
    let pattern = args.next().unwrap_or_else(|| "NIIdIIIIN".into());
    let min_run = args.next().map_or(4, |s| s.parse().expect("min_run"));
    let min_ratio = args.next().map_or(0.5, |s| s.parse().expect("min_ratio"));

    let annotations: Vec<FrameAnnotation> = pattern
        .chars()
        .enumerate()
        .map(|(k, c)| match c {
            'I' => FrameAnnotation::labeled(k, FrameLabel::certain(Label::Ide)),
            'N' => FrameAnnotation::labeled(k, FrameLabel::certain(Label::NonIde)),
            'd' => FrameAnnotation::duplicate(k),
            other => panic!("unexpected {other:?}; use I, N or d"),
        })
        .collect();
    let params = DecisionParams {
        min_run,
        min_ratio,
        ..DecisionParams::default()
    };
    params.validate().expect("parameters");
    let v = decide("example", &annotations, &params);
    println!("pattern       {pattern}");
    println!("longest run   {} (need {min_run})", v.longest_run);
    println!("ide ratio     {}/{} = {:.3} (need {min_ratio})", v.n_ide, v.n_info, v.ratio);
    println!("screencast    {}", v.is_screencast);
}
