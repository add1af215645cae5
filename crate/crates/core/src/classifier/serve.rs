//! Worker side of the protocol, for serving any in-process classifier.

use std::io::{BufRead, Write};
use std::path::Path;

use super::protocol::{WorkerMessage, PROTOCOL_VERSION};
use super::{FrameClassifier, FrameInput};
use crate::error::{Error, Result};
use crate::frame::load_frame;

/// Answers classify requests until shutdown or end of input.
pub fn serve<R: BufRead, W: Write>(input: R, output: W, classifier: &dyn FrameClassifier) -> Result<()> {
    serve_recording(input, output, classifier, std::io::sink())
}

/// Like [`serve`], also copying every received line to `transcript`.
pub fn serve_recording<R: BufRead, W: Write, T: Write>(
    input: R,
    mut output: W,
    classifier: &dyn FrameClassifier,
    mut transcript: T,
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Environment(format!("worker stream: {e}"));
    send(&mut output, &WorkerMessage::Hello { protocol_version: PROTOCOL_VERSION }).map_err(io_err)?;
    for line in input.lines() {
        let line = line.map_err(io_err)?;
        writeln!(transcript, "{line}").and_then(|_| transcript.flush()).map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match WorkerMessage::parse(&line) {
            Ok(WorkerMessage::Classify { id, frame_path }) => match classify_path(classifier, &frame_path) {
                Ok(label) => WorkerMessage::Result {
                    id,
                    label: label.label,
                    confidence: label.confidence,
                },
                Err(e) => WorkerMessage::Error { id, message: e.to_string() },
            },
            Ok(WorkerMessage::Shutdown) => return Ok(()),
            Ok(other) => {
                log::warn!("ignoring unexpected message {}", other.to_line());
                continue;
            }
            Err(e) => {
                log::warn!("{e}");
                continue;
            }
        };
        send(&mut output, &reply).map_err(io_err)?;
    }
    Ok(())
}

fn classify_path(classifier: &dyn FrameClassifier, frame_path: &str) -> Result<super::FrameLabel> {
    let frame = load_frame(Path::new(frame_path))?;
    classifier.classify(&FrameInput::new("", &frame))
}

fn send<W: Write>(output: &mut W, message: &WorkerMessage) -> std::io::Result<()> {
    writeln!(output, "{}", message.to_line())?;
    output.flush()
}
