//! External classifier processes speaking the line-delimited protocol.
//!
//! A session owns one child process. Requests go out as a burst of up to
//! `batch_size` classify records; the session then waits for every reply
//! before sending more. Sessions are pooled so that concurrent callers each
//! get their own process.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use tempfile::TempDir;

use super::protocol::{WorkerMessage, PROTOCOL_VERSION};
use super::{ClassifierSpec, FrameClassifier, FrameInput, FrameLabel};
use crate::error::{Error, Result};

const STDERR_TAIL_LINES: usize = 20;
const SHUTDOWN_GRACE: Duration = Duration::from_millis(500);

pub struct WorkerSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    stderr_tail: Arc<Mutex<VecDeque<String>>>,
    timeout: Duration,
}

/// Starts the worker process and waits for its hello.
pub fn spawn_worker(spec: &ClassifierSpec) -> Result<WorkerSession> {
    match spec {
        ClassifierSpec::Worker { command, timeout_s, .. } => WorkerSession::spawn(command, *timeout_s),
        other => Err(Error::Parameter(format!(
            "spawn_worker needs a worker spec, got {}",
            other.kind_name()
        ))),
    }
}

enum ExchangeError {
    Crashed(String),
    TimedOut(u64),
    Protocol(String),
}

type Reply = std::result::Result<FrameLabel, String>;

impl WorkerSession {
    pub fn spawn(command: &str, timeout_s: f64) -> Result<Self> {
        let argv = shell_words::split(command)
            .map_err(|e| Error::Config(format!("worker command {command:?}: {e}")))?;
        let Some((program, args)) = argv.split_first() else {
            return Err(Error::Config("worker command is empty".into()));
        };
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Environment(format!("cannot start worker {program:?}: {e}")))?;

        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let stderr = child.stderr.take().expect("stderr is piped");
        let stderr_tail = Arc::new(Mutex::new(VecDeque::new()));
        let tail = Arc::clone(&stderr_tail);
        thread::spawn(move || {
            for line in BufReader::new(stderr).lines() {
                let Ok(line) = line else { break };
                log::debug!("worker stderr: {line}");
                let mut tail = tail.lock().unwrap();
                if tail.len() == STDERR_TAIL_LINES {
                    tail.pop_front();
                }
                tail.push_back(line);
            }
        });

        let mut session = WorkerSession {
            stdin: child.stdin.take(),
            child,
            lines,
            stderr_tail,
            timeout: Duration::from_secs_f64(timeout_s),
        };
        session.handshake()?;
        Ok(session)
    }

    fn handshake(&mut self) -> Result<()> {
        let deadline = Instant::now() + self.timeout;
        match self.recv_until(deadline) {
            Ok(Some(WorkerMessage::Hello { protocol_version })) if protocol_version == PROTOCOL_VERSION => Ok(()),
            Ok(Some(WorkerMessage::Hello { protocol_version })) => Err(Error::Protocol(format!(
                "worker speaks protocol version {protocol_version}, expected {PROTOCOL_VERSION}"
            ))),
            Ok(Some(other)) => Err(Error::Protocol(format!("expected hello, got {}", other.to_line()))),
            Ok(None) => Err(Error::Timeout {
                frame: "worker handshake".into(),
                seconds: self.timeout.as_secs_f64(),
            }),
            Err(Error::WorkerCrashed(msg)) => Err(Error::Protocol(format!("worker exited before hello: {msg}"))),
            Err(e) => Err(e),
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Writes the messages as one burst.
    pub fn send_all(&mut self, messages: &[WorkerMessage]) -> Result<()> {
        let mut buf = String::new();
        for m in messages {
            buf.push_str(&m.to_line());
            buf.push('\n');
        }
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::WorkerCrashed("worker input already closed".into()))?;
        let written = stdin.write_all(buf.as_bytes()).and_then(|_| stdin.flush());
        written.map_err(|e| Error::WorkerCrashed(self.diagnostics(&format!("write failed: {e}"))))
    }

    pub fn send(&mut self, message: &WorkerMessage) -> Result<()> {
        self.send_all(std::slice::from_ref(message))
    }

    /// Next message before `deadline`; `None` on timeout.
    pub fn recv_until(&mut self, deadline: Instant) -> Result<Option<WorkerMessage>> {
        loop {
            let wait = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(wait) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => return WorkerMessage::parse(&line).map(Some),
                Err(RecvTimeoutError::Timeout) => return Ok(None),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::WorkerCrashed(self.diagnostics("worker closed its output")))
                }
            }
        }
    }

    fn exchange(&mut self, requests: &[(u64, String)]) -> std::result::Result<HashMap<u64, Reply>, ExchangeError> {
        let messages: Vec<WorkerMessage> = requests
            .iter()
            .map(|(id, path)| WorkerMessage::Classify {
                id: *id,
                frame_path: path.clone(),
            })
            .collect();
        self.send_all(&messages).map_err(|e| ExchangeError::Crashed(e.to_string()))?;

        let deadline = Instant::now() + self.timeout;
        let mut replies = HashMap::with_capacity(requests.len());
        while replies.len() < requests.len() {
            let message = match self.recv_until(deadline) {
                Ok(Some(m)) => m,
                Ok(None) => {
                    let pending = requests.iter().find(|(id, _)| !replies.contains_key(id)).unwrap();
                    return Err(ExchangeError::TimedOut(pending.0));
                }
                Err(Error::WorkerCrashed(msg)) => return Err(ExchangeError::Crashed(msg)),
                Err(e) => return Err(ExchangeError::Protocol(e.to_string())),
            };
            let (id, reply) = match message {
                WorkerMessage::Result { id, label, confidence } => (id, Ok(FrameLabel { label, confidence })),
                WorkerMessage::Error { id, message } => (id, Err(message)),
                other => {
                    return Err(ExchangeError::Protocol(format!(
                        "unexpected message {}",
                        other.to_line()
                    )))
                }
            };
            if !requests.iter().any(|(r, _)| *r == id) || replies.contains_key(&id) {
                return Err(ExchangeError::Protocol(format!("reply for unknown request id {id}")));
            }
            replies.insert(id, reply);
        }
        Ok(replies)
    }

    /// Asks the worker to exit and waits for it.
    pub fn shutdown(mut self) -> Result<ExitStatus> {
        let _ = self.send(&WorkerMessage::Shutdown);
        self.stdin.take();
        let deadline = Instant::now() + self.timeout;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return Ok(status),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                Ok(None) => {
                    return Err(Error::Timeout {
                        frame: "worker shutdown".into(),
                        seconds: self.timeout.as_secs_f64(),
                    })
                }
                Err(e) => return Err(Error::Environment(format!("cannot wait for worker: {e}"))),
            }
        }
    }

    fn diagnostics(&mut self, what: &str) -> String {
        let status = match self.child.try_wait() {
            Ok(Some(s)) => format!(" ({s})"),
            _ => String::new(),
        };
        let tail = self.stderr_tail.lock().unwrap();
        if tail.is_empty() {
            format!("{what}{status}")
        } else {
            let joined: Vec<&str> = tail.iter().map(String::as_str).collect();
            format!("{what}{status}; stderr: {}", joined.join(" | "))
        }
    }
}

impl Drop for WorkerSession {
    fn drop(&mut self) {
        if let Ok(Some(_)) = self.child.try_wait() {
            return;
        }
        if let Some(mut stdin) = self.stdin.take() {
            let _ = writeln!(stdin, "{}", WorkerMessage::Shutdown.to_line());
            let _ = stdin.flush();
        }
        let deadline = Instant::now() + SHUTDOWN_GRACE;
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Pool of worker sessions behind the classifier interface.
pub struct WorkerClassifier {
    command: String,
    timeout_s: f64,
    batch_size: usize,
    idle: Mutex<Vec<WorkerSession>>,
    next_id: AtomicU64,
    wire_requests: AtomicUsize,
    spawned: AtomicUsize,
    scratch: TempDir,
    scratch_seq: AtomicU64,
}

impl WorkerClassifier {
    /// Validates the spec and brings up the first session.
    pub fn start(spec: &ClassifierSpec) -> Result<Self> {
        spec.validate()?;
        let ClassifierSpec::Worker {
            command,
            timeout_s,
            batch_size,
        } = spec
        else {
            return Err(Error::Parameter(format!(
                "worker classifier needs a worker spec, got {}",
                spec.kind_name()
            )));
        };
        let scratch = tempfile::Builder::new()
            .prefix("livecode-worker-")
            .tempdir()
            .map_err(|e| Error::Environment(format!("cannot create scratch dir: {e}")))?;
        let classifier = Self {
            command: command.clone(),
            timeout_s: *timeout_s,
            batch_size: *batch_size,
            idle: Mutex::new(Vec::new()),
            next_id: AtomicU64::new(1),
            wire_requests: AtomicUsize::new(0),
            spawned: AtomicUsize::new(0),
            scratch,
            scratch_seq: AtomicU64::new(0),
        };
        let first = classifier.spawn()?;
        classifier.idle.lock().unwrap().push(first);
        Ok(classifier)
    }

    /// Classify bursts written so far.
    pub fn wire_requests(&self) -> usize {
        self.wire_requests.load(Ordering::SeqCst)
    }

    /// Worker processes started so far, including restarts.
    pub fn sessions_spawned(&self) -> usize {
        self.spawned.load(Ordering::SeqCst)
    }

    fn spawn(&self) -> Result<WorkerSession> {
        let session = WorkerSession::spawn(&self.command, self.timeout_s)?;
        self.spawned.fetch_add(1, Ordering::SeqCst);
        Ok(session)
    }

    fn checkout(&self) -> Result<WorkerSession> {
        let reused = self.idle.lock().unwrap().pop();
        match reused {
            Some(s) => Ok(s),
            None => self.spawn(),
        }
    }

    fn checkin(&self, session: WorkerSession) {
        self.idle.lock().unwrap().push(session);
    }

    fn frame_path(&self, input: &FrameInput<'_>) -> Result<String> {
        if let Some(p) = &input.frame.source_path {
            return Ok(p.to_string_lossy().into_owned());
        }
        let n = self.scratch_seq.fetch_add(1, Ordering::SeqCst);
        let path = self.scratch.path().join(format!("frame_{n}.png"));
        input.frame.save_png(&path)?;
        Ok(path.to_string_lossy().into_owned())
    }

    fn run_chunk(
        &self,
        session: &mut Option<WorkerSession>,
        inputs: &[FrameInput<'_>],
        paths: &[String],
    ) -> Result<Vec<FrameLabel>> {
        let requests: Vec<(u64, String)> = paths
            .iter()
            .map(|p| (self.next_id.fetch_add(1, Ordering::SeqCst), p.clone()))
            .collect();
        let mut restarted = false;
        let mut replies = loop {
            if session.is_none() {
                *session = Some(self.spawn()?);
            }
            let active = session.as_mut().unwrap();
            self.wire_requests.fetch_add(1, Ordering::SeqCst);
            match active.exchange(&requests) {
                Ok(r) => break r,
                Err(ExchangeError::Crashed(msg)) if !restarted => {
                    log::warn!("classifier worker crashed, restarting once: {msg}");
                    restarted = true;
                    *session = None;
                }
                Err(ExchangeError::Crashed(msg)) => {
                    *session = None;
                    return Err(Error::WorkerCrashed(msg));
                }
                Err(ExchangeError::TimedOut(id)) => {
                    *session = None;
                    let k = requests.iter().position(|(r, _)| *r == id).unwrap();
                    return Err(Error::Timeout {
                        frame: inputs[k].describe(),
                        seconds: self.timeout_s,
                    });
                }
                Err(ExchangeError::Protocol(msg)) => {
                    *session = None;
                    return Err(Error::Protocol(msg));
                }
            }
        };
        requests
            .iter()
            .zip(inputs)
            .map(|((id, _), input)| match replies.remove(id).expect("every request answered") {
                Ok(label) => Ok(label),
                Err(message) => Err(Error::Classification {
                    frame: input.describe(),
                    message,
                }),
            })
            .collect()
    }
}

impl FrameClassifier for WorkerClassifier {
    fn kind(&self) -> &str {
        "worker"
    }

    fn classify(&self, input: &FrameInput<'_>) -> Result<FrameLabel> {
        Ok(self.classify_batch(std::slice::from_ref(input))?.remove(0))
    }

    fn classify_batch(&self, inputs: &[FrameInput<'_>]) -> Result<Vec<FrameLabel>> {
        let paths = inputs
            .iter()
            .map(|i| self.frame_path(i))
            .collect::<Result<Vec<_>>>()?;
        let mut session = Some(self.checkout()?);
        let mut labels = Vec::with_capacity(inputs.len());
        let mut outcome = Ok(());
        for (chunk, chunk_paths) in inputs.chunks(self.batch_size).zip(paths.chunks(self.batch_size)) {
            match self.run_chunk(&mut session, chunk, chunk_paths) {
                Ok(l) => labels.extend(l),
                Err(e) => {
                    outcome = Err(e);
                    break;
                }
            }
        }
        if let Some(s) = session {
            self.checkin(s);
        }
        outcome.map(|_| labels)
    }
}
