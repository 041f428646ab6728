//! JSON messages exchanged over the session websocket.
//!
//! Client to server: `create_session`, `resume`, `event`, `finish`.
//! Server to client: `session_created`, `state`, `check_result`, `ack`,
//! `error`. Nothing the server sends before `finish` names the hidden
//! structure; the `ack` for `finish` carries it in `reveal`.

use blicket_core::{ActorView, Answers, CausalStructure, Condition, ObjectId, Observation};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::demos::MachineView;

/// A fixed structure or `"sample"` for a seeded draw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TruthSpec {
    #[default]
    Sample,
    Fixed(CausalStructure),
}

impl Serialize for TruthSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TruthSpec::Sample => s.serialize_str("sample"),
            TruthSpec::Fixed(h) => h.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for TruthSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "sample" {
            return Ok(TruthSpec::Sample);
        }
        s.parse().map(TruthSpec::Fixed).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientEventKind {
    Place,
    Remove,
    Check,
    Demo,
    Question,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    CreateSession {
        condition: Condition,
        #[serde(default)]
        ground_truth: TruthSpec,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        demo_script_id: Option<String>,
    },
    Resume {
        session_id: String,
    },
    Event {
        session_id: String,
        kind: ClientEventKind,
        #[serde(default)]
        object: Option<ObjectId>,
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        payload: Option<Value>,
    },
    Finish {
        session_id: String,
        #[serde(default)]
        answers: Answers,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnknownSession,
    SessionFinished,
    InvalidEvent,
    UnknownDemoScript,
    Storage,
}

/// Sent once the session is over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub ground_truth: CausalStructure,
    pub reason: FinishReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Client,
    TimeCap,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SessionCreated {
        session_id: String,
        condition: Condition,
        n_objects: usize,
        demo_script_id: String,
        demos: Vec<MachineView>,
        session_cap_s: u64,
        state: ActorView,
    },
    State {
        session_id: String,
        state: ActorView,
        finished: bool,
    },
    CheckResult {
        session_id: String,
        seq: usize,
        outcome: Observation,
        state: ActorView,
    },
    Ack {
        session_id: String,
        seq: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<ActorView>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reveal: Option<Reveal>,
    },
    Error {
        code: ErrorCode,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>, session_id: Option<&str>) -> Self {
        ServerMessage::Error {
            code,
            message: message.into(),
            session_id: session_id.map(str::to_string),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }
}
