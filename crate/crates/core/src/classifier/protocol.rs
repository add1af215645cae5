//! Line-delimited JSON messages exchanged with a classifier worker.
//!
//! ```text
//! worker  -> gateway  {"type":"hello","protocol_version":1}
//! gateway -> worker   {"type":"classify","id":3,"frame_path":"/tmp/f.png"}
//! worker  -> gateway  {"type":"result","id":3,"label":"ide","confidence":0.98}
//! worker  -> gateway  {"type":"error","id":3,"message":"cannot read frame"}
//! gateway -> worker   {"type":"shutdown"}
//! ```

use serde::{Deserialize, Serialize};

use super::Label;
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WorkerMessage {
    Hello { protocol_version: u32 },
    Classify { id: u64, frame_path: String },
    Result { id: u64, label: Label, confidence: f64 },
    Error { id: u64, message: String },
    Shutdown,
}

impl WorkerMessage {
    /// One line of wire text, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("worker messages always serialize")
    }

    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim_end())
            .map_err(|e| Error::Protocol(format!("malformed message {:?}: {e}", line.trim_end())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format_is_exact() {
        assert_eq!(
            WorkerMessage::Classify { id: 7, frame_path: "/a/b.png".into() }.to_line(),
            r#"{"type":"classify","id":7,"frame_path":"/a/b.png"}"#
        );
        assert_eq!(WorkerMessage::Shutdown.to_line(), r#"{"type":"shutdown"}"#);
        assert_eq!(
            WorkerMessage::Hello { protocol_version: 1 }.to_line(),
            r#"{"type":"hello","protocol_version":1}"#
        );
        assert_eq!(
            WorkerMessage::Result { id: 2, label: Label::NonIde, confidence: 0.5 }.to_line(),
            r#"{"type":"result","id":2,"label":"non_ide","confidence":0.5}"#
        );
        assert_eq!(
            WorkerMessage::Error { id: 4, message: "nope".into() }.to_line(),
            r#"{"type":"error","id":4,"message":"nope"}"#
        );
    }

    #[test]
    fn parses_worker_output() {
        let m = WorkerMessage::parse("{\"type\":\"result\",\"id\":1,\"label\":\"ide\",\"confidence\":1}\n").unwrap();
        assert_eq!(m, WorkerMessage::Result { id: 1, label: Label::Ide, confidence: 1.0 });
        assert!(matches!(WorkerMessage::parse("hello"), Err(Error::Protocol(_))));
        assert!(WorkerMessage::parse(r#"{"type":"result","id":1,"label":"maybe","confidence":1}"#).is_err());
    }
}
