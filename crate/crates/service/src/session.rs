//! Live sessions. The trace is the record of truth: the detector state is
//! rebuilt by replaying it, and a finished trace is appended to
//! `traces.jsonl` in the data directory as one line.
//!
//! The manager is synchronous and takes the clock as an argument so that
//! callers (the websocket server, tests) control time.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use blicket_core::{
    reset, Answers, CausalStructure, Combination, Condition, EnvAction, EnvState, EventKind,
    ObjectId, OverhypothesisKind, SessionTrace, TraceEvent,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::demos::DemoLibrary;
use crate::wire::{ClientEventKind, ClientMessage, ErrorCode, FinishReason, Reveal, ServerMessage, TruthSpec};

pub const TRACE_FILE: &str = "traces.jsonl";
pub const DATA_DIR_ENV: &str = "BLICKET_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    pub condition: Condition,
    pub ground_truth: TruthSpec,
    pub demo_script_id: Option<String>,
    pub seed: u64,
}

impl SessionConfig {
    pub fn resolve_truth(&self, n_objects: usize) -> CausalStructure {
        match self.ground_truth {
            TruthSpec::Fixed(h) => h,
            TruthSpec::Sample => sample_truth(self.condition.structure_kind, n_objects, self.seed),
        }
    }
}

/// A two-blicket structure of the given kind, chosen uniformly by `seed`.
pub fn sample_truth(kind: OverhypothesisKind, n_objects: usize, seed: u64) -> CausalStructure {
    let pairs: Vec<Combination> = Combination::all(n_objects).filter(|c| c.len() == 2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = pairs[rng.random_range(0..pairs.len())];
    CausalStructure::new(kind, pick).expect("pair structures are valid")
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Sessions end on their own after this long.
    pub session_cap_ms: u64,
    /// How long a disconnected session waits to be resumed.
    pub resume_timeout_ms: u64,
    /// Seeds session ids and per-session seeds when the client gives none.
    pub seed: u64,
    pub n_objects: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("data"),
            session_cap_ms: 600_000,
            resume_timeout_ms: 120_000,
            seed: 0,
            n_objects: 3,
        }
    }
}

struct Session {
    trace: SessionTrace,
    n_objects: usize,
    start_ms: u64,
    detached_since: Option<u64>,
}

impl Session {
    fn state(&self) -> EnvState {
        let mut state = reset(self.trace.ground_truth, self.n_objects, 0);
        for a in self.trace.events.iter().filter_map(TraceEvent::env_action) {
            state = state.step(a).expect("recorded actions are valid").0;
        }
        state
    }

    fn clock(&self, now_ms: u64) -> u64 {
        let last = self.trace.events.last().map_or(0, |e| e.t_ms);
        now_ms.saturating_sub(self.start_ms).max(last)
    }
}

pub struct SessionManager {
    config: ServiceConfig,
    demos: DemoLibrary,
    sessions: HashMap<String, Session>,
    finished: HashMap<String, Reveal>,
    rng: ChaCha8Rng,
}

impl SessionManager {
    pub fn new(config: ServiceConfig) -> io::Result<Self> {
        fs::create_dir_all(&config.data_dir)?;
        Ok(SessionManager {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            demos: DemoLibrary::defaults(),
            sessions: HashMap::new(),
            finished: HashMap::new(),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn trace_path(&self) -> PathBuf {
        self.config.data_dir.join(TRACE_FILE)
    }

    pub fn live_sessions(&self) -> usize {
        self.sessions.len()
    }

    pub fn trace(&self, session_id: &str) -> Option<&SessionTrace> {
        self.sessions.get(session_id).map(|s| &s.trace)
    }

    /// Parse and handle one text frame. Malformed input gets an error reply
    /// and leaves every session untouched.
    pub fn handle_text(&mut self, text: &str, now_ms: u64) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg, now_ms),
            Err(e) => vec![ServerMessage::error(ErrorCode::Malformed, e.to_string(), None)],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage, now_ms: u64) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::CreateSession {
                condition,
                ground_truth,
                seed,
                demo_script_id,
            } => {
                let seed = seed.unwrap_or_else(|| self.rng.random());
                let config = SessionConfig {
                    condition,
                    ground_truth,
                    demo_script_id,
                    seed,
                };
                vec![self.create(config, now_ms)]
            }
            ClientMessage::Resume { session_id } => match self.sessions.get_mut(&session_id) {
                Some(s) => {
                    s.detached_since = None;
                    vec![ServerMessage::State {
                        state: s.state().view(),
                        session_id,
                        finished: false,
                    }]
                }
                None => vec![self.missing(&session_id)],
            },
            ClientMessage::Event {
                session_id,
                kind,
                object,
                id,
                payload,
            } => self.event(&session_id, kind, object, id, payload, now_ms),
            ClientMessage::Finish { session_id, answers } => {
                if !self.sessions.contains_key(&session_id) {
                    return vec![self.missing(&session_id)];
                }
                match self.finish(&session_id, FinishReason::Client, Some(answers)) {
                    Ok((seq, reveal)) => vec![ServerMessage::Ack {
                        session_id,
                        seq,
                        state: None,
                        reveal: Some(reveal),
                    }],
                    Err(e) => vec![ServerMessage::error(
                        ErrorCode::Storage,
                        format!("could not persist trace: {e}"),
                        Some(&session_id),
                    )],
                }
            }
        }
    }

    pub fn create(&mut self, config: SessionConfig, now_ms: u64) -> ServerMessage {
        let script = match &config.demo_script_id {
            Some(id) => match self.demos.get(id) {
                Ok(s) => s,
                Err(e) => return ServerMessage::error(ErrorCode::UnknownDemoScript, e.to_string(), None),
            },
            None => self.demos.for_condition(config.condition),
        };
        let session_id = format!("{:016x}", self.rng.random::<u64>());
        let n_objects = self.config.n_objects;
        let truth = config.resolve_truth(n_objects);
        let mut trace = SessionTrace::new(&session_id, config.condition, truth);
        trace.events.push(TraceEvent::new(0, EventKind::DemoShown(script.id.clone())));
        let reply = ServerMessage::SessionCreated {
            session_id: session_id.clone(),
            condition: config.condition,
            n_objects,
            demo_script_id: script.id.clone(),
            demos: script.views(),
            session_cap_s: self.config.session_cap_ms / 1000,
            state: reset(truth, n_objects, config.seed).view(),
        };
        tracing::info!(session_id, "session created");
        self.sessions.insert(
            session_id,
            Session {
                trace,
                n_objects,
                start_ms: now_ms,
                detached_since: None,
            },
        );
        reply
    }

    fn missing(&self, session_id: &str) -> ServerMessage {
        if self.finished.contains_key(session_id) {
            ServerMessage::error(ErrorCode::SessionFinished, "session already finished", Some(session_id))
        } else {
            ServerMessage::error(ErrorCode::UnknownSession, "no such session", Some(session_id))
        }
    }

    fn event(
        &mut self,
        session_id: &str,
        kind: ClientEventKind,
        object: Option<ObjectId>,
        id: Option<String>,
        payload: Option<Value>,
        now_ms: u64,
    ) -> Vec<ServerMessage> {
        let Some(session) = self.sessions.get(session_id) else {
            return vec![self.missing(session_id)];
        };
        if now_ms.saturating_sub(session.start_ms) >= self.config.session_cap_ms {
            let mut out = vec![ServerMessage::error(
                ErrorCode::SessionFinished,
                "session time cap reached",
                Some(session_id),
            )];
            if let Ok((seq, reveal)) = self.finish(session_id, FinishReason::TimeCap, None) {
                out.push(ServerMessage::Ack {
                    session_id: session_id.to_string(),
                    seq,
                    state: None,
                    reveal: Some(reveal),
                });
            }
            return out;
        }
        let invalid = |msg: &str| vec![ServerMessage::error(ErrorCode::InvalidEvent, msg, Some(session_id))];
        let object = match (kind, object) {
            (ClientEventKind::Place | ClientEventKind::Remove, None) => return invalid("object required"),
            (_, Some(o)) if o.index() >= session.n_objects => return invalid("object out of range"),
            (_, o) => o,
        };
        let state = session.state();
        let event_kind = match kind {
            ClientEventKind::Place => EventKind::Place(object.unwrap()),
            ClientEventKind::Remove => EventKind::Remove(object.unwrap()),
            ClientEventKind::Check => {
                EventKind::Check(state.step(EnvAction::Check).expect("check is valid").1.unwrap())
            }
            ClientEventKind::Demo | ClientEventKind::Question | ClientEventKind::Answer => {
                let Some(id) = id else { return invalid("id required") };
                match kind {
                    ClientEventKind::Demo => EventKind::DemoShown(id),
                    ClientEventKind::Question => EventKind::QuestionAsked(id),
                    _ => EventKind::AnswerGiven(id, payload.unwrap_or(Value::Null)),
                }
            }
        };
        let session = self.sessions.get_mut(session_id).unwrap();
        session.detached_since = None;
        let t_ms = session.clock(now_ms);
        session.trace.events.push(TraceEvent::new(t_ms, event_kind.clone()));
        let seq = session.trace.events.len() - 1;
        let session_id = session_id.to_string();
        match event_kind {
            EventKind::Check(outcome) => vec![ServerMessage::CheckResult {
                session_id,
                seq,
                outcome,
                state: session.state().view(),
            }],
            EventKind::Place(_) | EventKind::Remove(_) => vec![ServerMessage::Ack {
                session_id,
                seq,
                state: Some(session.state().view()),
                reveal: None,
            }],
            _ => vec![ServerMessage::Ack {
                session_id,
                seq,
                state: None,
                reveal: None,
            }],
        }
    }

    /// Close a session and append its trace to the trace file.
    fn finish(
        &mut self,
        session_id: &str,
        reason: FinishReason,
        answers: Option<Answers>,
    ) -> io::Result<(usize, Reveal)> {
        let session = self.sessions.get_mut(session_id).expect("caller checked the session exists");
        if let Some(a) = answers {
            session.trace.answers = a;
        }
        append_line(&self.config.data_dir.join(TRACE_FILE), &session.trace.to_json_line())?;
        let session = self.sessions.remove(session_id).unwrap();
        let reveal = Reveal {
            ground_truth: session.trace.ground_truth,
            reason,
        };
        tracing::info!(session_id, ?reason, "session finished");
        self.finished.insert(session_id.to_string(), reveal.clone());
        Ok((session.trace.events.len(), reveal))
    }

    /// Mark a session as disconnected; it can be resumed until the timeout.
    pub fn detach(&mut self, session_id: &str, now_ms: u64) {
        if let Some(s) = self.sessions.get_mut(session_id) {
            s.detached_since.get_or_insert(now_ms);
        }
    }

    /// Finish sessions past the time cap or abandoned past the resume
    /// timeout. Returns the ids finished.
    pub fn tick(&mut self, now_ms: u64) -> Vec<(String, FinishReason)> {
        let due: Vec<(String, FinishReason)> = self
            .sessions
            .iter()
            .filter_map(|(id, s)| {
                if now_ms.saturating_sub(s.start_ms) >= self.config.session_cap_ms {
                    Some((id.clone(), FinishReason::TimeCap))
                } else if s
                    .detached_since
                    .is_some_and(|d| now_ms.saturating_sub(d) >= self.config.resume_timeout_ms)
                {
                    Some((id.clone(), FinishReason::Abandoned))
                } else {
                    None
                }
            })
            .collect();
        let mut done = Vec::new();
        for (id, reason) in due {
            match self.finish(&id, reason, None) {
                Ok(_) => done.push((id, reason)),
                Err(e) => tracing::error!(session_id = id, "could not persist trace: {e}"),
            }
        }
        done
    }
}

/// Append one line with a single write, then flush it to disk.
fn append_line(path: &Path, line: &str) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = String::with_capacity(line.len() + 1);
    buf.push_str(line);
    buf.push('\n');
    f.write_all(buf.as_bytes())?;
    f.sync_data()
}
