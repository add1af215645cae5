//! Drives a classifier worker process over the line-delimited JSON
//! protocol. The example re-runs itself with `serve` to act as the worker,
//! then classifies a batch through the gateway and runs the conformance
//! checks against it.
//!
//!     cargo run --example worker_gateway

use std::io::BufReader;

use livecode_scan::classifier::conformance::run_conformance;
use livecode_scan::classifier::serve::serve;
use livecode_scan::classifier::{MarkerOracle, WorkerClassifier};
use livecode_scan::synthetic::marker_frame;
use livecode_scan::{ClassifierSpec, FrameClassifier, FrameInput, Label};
use rand::SeedableRng;

fn main() -> livecode_scan::Result<()> {
    if std::env::args().nth(1).as_deref() == Some("serve") {
        let stdin = BufReader::new(std::io::stdin().lock());
        return serve(stdin, std::io::stdout().lock(), &MarkerOracle);
    }

    let exe = std::env::current_exe().expect("own path");
    let command = format!("'{}' serve", exe.display());
    let spec = ClassifierSpec::Worker {
        command: command.clone(),
        timeout_s: 10.0,
        batch_size: 2,
    };
    let worker = WorkerClassifier::start(&spec)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let wanted = [Label::Ide, Label::NonIde, Label::Ide, Label::Ide, Label::NonIde];
    let frames: Vec<_> = wanted
        .iter()
        .enumerate()
        .map(|(k, &l)| marker_frame(l, &mut rng).with_timing(k, k as f64 * 30.0))
        .collect();
    let inputs: Vec<_> = frames.iter().map(|f| FrameInput::new("demo", f)).collect();
    for (k, label) in worker.classify_batch(&inputs)?.iter().enumerate() {
        println!("frame {k}: {} (expected {})", label.label, wanted[k]);
    }
    println!("{} requests over {} session(s)", worker.wire_requests(), worker.sessions_spawned());

    let dir = tempfile::tempdir().expect("temp dir");
    let (ide, plain) = (dir.path().join("ide.png"), dir.path().join("plain.png"));
    frames[0].save_png(&ide)?;
    frames[1].save_png(&plain)?;
    print!("{}", run_conformance(&command, &ide, &plain, 10.0));
    Ok(())
}
