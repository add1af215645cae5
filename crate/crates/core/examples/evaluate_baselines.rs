//! Scores a detector's confusion counts against the random and
//! all-positive baselines on a 16 positive / 7 negative split.
//!
//!     cargo run --example evaluate_baselines -- [tp fp fn tn]

use livecode_scan::eval::{metrics, EvalSummary, TOOL_METHOD};
use livecode_scan::ConfusionCounts;

fn main() -> livecode_scan::Result<()> {
    let n: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("count")).collect();
    let [tp, fp, fn_, tn] = match n.as_slice() {
        [a, b, c, d] => [*a, *b, *c, *d],
        [] => [16, 1, 0, 6],
        _ => panic!("give four counts: tp fp fn tn"),
    };
    let counts = ConfusionCounts { tp, fp, fn_, tn };
    let truth: Vec<bool> = (0..tp + fn_).map(|_| true).chain((0..fp + tn).map(|_| false)).collect();
    let summary = EvalSummary::build(metrics(counts, TOOL_METHOD), &truth, 20, 0)?;
    print!("{}", summary.render_table());
    println!();
    print!("{}", summary.to_json_lines()?);
    Ok(())
}
