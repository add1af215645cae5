//! Protocol conformance checks for external classifier workers.
//!
//! Run against any worker command together with one frame it should call IDE
//! and one it should not.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use super::protocol::WorkerMessage;
use super::worker::WorkerSession;
use super::Label;

#[derive(Debug, Clone)]
pub struct ConformanceCheck {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

#[derive(Debug, Clone, Default)]
pub struct ConformanceReport {
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.outcome.is_ok())
    }

    fn record(&mut self, name: &'static str, outcome: Result<(), String>) {
        self.checks.push(ConformanceCheck { name, outcome });
    }
}

impl fmt::Display for ConformanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.outcome {
                Ok(()) => writeln!(f, "PASS  {}", c.name)?,
                Err(why) => writeln!(f, "FAIL  {}: {why}", c.name)?,
            }
        }
        Ok(())
    }
}

const CHECKS: [&str; 4] = ["handshake", "correlation", "error isolation", "clean shutdown"];

pub fn run_conformance(command: &str, ide_frame: &Path, non_ide_frame: &Path, timeout_s: f64) -> ConformanceReport {
    let mut report = ConformanceReport::default();
    let mut session = match WorkerSession::spawn(command, timeout_s) {
        Ok(s) => {
            report.record(CHECKS[0], Ok(()));
            s
        }
        Err(e) => {
            report.record(CHECKS[0], Err(e.to_string()));
            for name in &CHECKS[1..] {
                report.record(name, Err("skipped: no session".into()));
            }
            return report;
        }
    };

    let path = |p: &Path| p.to_string_lossy().into_owned();
    let correlation = exchange(
        &mut session,
        &[(101, path(non_ide_frame)), (102, path(ide_frame))],
    )
    .and_then(|replies| {
        expect_label(&replies, 101, Label::NonIde)?;
        expect_label(&replies, 102, Label::Ide)
    });
    report.record(CHECKS[1], correlation);

    let isolation = exchange(&mut session, &[(103, "/nonexistent/livecode-conformance.png".into())])
        .and_then(|replies| match replies.get(&103) {
            Some(WorkerMessage::Error { .. }) => Ok(()),
            Some(other) => Err(format!("expected error record, got {}", other.to_line())),
            None => Err("no reply for id 103".into()),
        })
        .and_then(|_| exchange(&mut session, &[(104, path(ide_frame))]))
        .and_then(|replies| expect_label(&replies, 104, Label::Ide));
    report.record(CHECKS[2], isolation);

    let shutdown = match session.shutdown() {
        Ok(status) if status.success() => Ok(()),
        Ok(status) => Err(format!("worker exited with {status}")),
        Err(e) => Err(e.to_string()),
    };
    report.record(CHECKS[3], shutdown);
    report
}

fn exchange(session: &mut WorkerSession, requests: &[(u64, String)]) -> Result<HashMap<u64, WorkerMessage>, String> {
    let messages: Vec<WorkerMessage> = requests
        .iter()
        .map(|(id, p)| WorkerMessage::Classify { id: *id, frame_path: p.clone() })
        .collect();
    session.send_all(&messages).map_err(|e| e.to_string())?;
    let deadline = Instant::now() + session.timeout();
    let mut replies = HashMap::new();
    while replies.len() < requests.len() {
        let message = session
            .recv_until(deadline)
            .map_err(|e| e.to_string())?
            .ok_or("timed out waiting for replies")?;
        let id = match &message {
            WorkerMessage::Result { id, confidence, .. } => {
                if !(0.0..=1.0).contains(confidence) {
                    return Err(format!("confidence {confidence} outside [0, 1]"));
                }
                *id
            }
            WorkerMessage::Error { id, .. } => *id,
            other => return Err(format!("unexpected message {}", other.to_line())),
        };
        if !requests.iter().any(|(r, _)| *r == id) {
            return Err(format!("reply carries unknown id {id}"));
        }
        if replies.insert(id, message).is_some() {
            return Err(format!("duplicate reply for id {id}"));
        }
    }
    Ok(replies)
}

fn expect_label(replies: &HashMap<u64, WorkerMessage>, id: u64, want: Label) -> Result<(), String> {
    match replies.get(&id) {
        Some(WorkerMessage::Result { label, .. }) if *label == want => Ok(()),
        Some(other) => Err(format!("id {id}: expected {want}, got {}", other.to_line())),
        None => Err(format!("no reply for id {id}")),
    }
}
