use blicket_core::{parse_jsonl, validate, Condition, EventKind, Observation, OverhypothesisKind};
use blicket_service::{
    ErrorCode, FinishReason, ServerMessage, ServiceConfig, SessionManager, TRACE_FILE,
};
use serde_json::{json, Value};

fn manager(dir: &std::path::Path) -> SessionManager {
    SessionManager::new(ServiceConfig {
        data_dir: dir.to_path_buf(),
        seed: 7,
        ..ServiceConfig::default()
    })
    .unwrap()
}

fn send(m: &mut SessionManager, msg: Value, now: u64) -> Vec<ServerMessage> {
    m.handle_text(&msg.to_string(), now)
}

fn create(m: &mut SessionManager, extra: Value, now: u64) -> String {
    let mut msg = json!({"type": "create_session", "condition": {"kind": "disjunctive", "given": true}});
    msg.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    match send(m, msg, now).remove(0) {
        ServerMessage::SessionCreated { session_id, .. } => session_id,
        other => panic!("{other:?}"),
    }
}

fn event(id: &str, kind: &str, object: Option<&str>) -> Value {
    let mut v = json!({"type": "event", "session_id": id, "kind": kind});
    if let Some(o) = object {
        v["object"] = json!(o);
    }
    v
}

#[test]
fn place_then_check_lights_disjunctive_pair() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manager(dir.path());
    let id = create(&mut m, json!({"ground_truth": "AB-dis"}), 1000);
    assert!(matches!(send(&mut m, event(&id, "place", Some("A")), 1500)[0], ServerMessage::Ack { .. }));
    match &send(&mut m, event(&id, "check", None), 2000)[0] {
        ServerMessage::CheckResult { outcome, seq, .. } => {
            assert_eq!(*outcome, Observation::DetectorOn);
            assert_eq!(*seq, 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn sampled_truth_is_seeded_conjunctive_pair() {
    let dir = tempfile::tempdir().unwrap();
    let mut truths = Vec::new();
    for _ in 0..2 {
        let mut m = manager(dir.path());
        let id = m.handle_text(
            &json!({"type": "create_session", "condition": {"kind": "conjunctive", "given": true}, "seed": 1})
                .to_string(),
            0,
        );
        let ServerMessage::SessionCreated { session_id, .. } = &id[0] else { panic!() };
        truths.push(m.trace(session_id).unwrap().ground_truth);
    }
    assert_eq!(truths[0], truths[1]);
    assert_eq!(truths[0].kind(), OverhypothesisKind::Conjunctive);
    assert_eq!(truths[0].blickets().len(), 2);
}

#[test]
fn demos_follow_condition() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manager(dir.path());
    for (given, machines, script) in [(true, 2, "given"), (false, 1, "not_given")] {
        let msg = json!({"type": "create_session", "condition": {"kind": "conjunctive", "given": given}});
        match &send(&mut m, msg, 0)[0] {
            ServerMessage::SessionCreated { demos, demo_script_id, .. } => {
                assert_eq!(demos.len(), machines);
                assert_eq!(demo_script_id, script);
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn malformed_and_invalid_messages_keep_session() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manager(dir.path());
    let id = create(&mut m, json!({"ground_truth": "BC-con"}), 0);
    let bad = m.handle_text("{not json", 10);
    assert!(matches!(&bad[0], ServerMessage::Error { code: ErrorCode::Malformed, .. }));
    let bad = send(&mut m, event(&id, "place", None), 20);
    assert!(matches!(&bad[0], ServerMessage::Error { code: ErrorCode::InvalidEvent, .. }));
    let bad = send(&mut m, event(&id, "place", Some("F")), 30);
    assert!(matches!(&bad[0], ServerMessage::Error { code: ErrorCode::InvalidEvent, .. }));
    let bad = send(&mut m, event("nope", "check", None), 40);
    assert!(matches!(&bad[0], ServerMessage::Error { code: ErrorCode::UnknownSession, .. }));
    assert_eq!(m.trace(&id).unwrap().events.len(), 1);
    assert!(matches!(send(&mut m, event(&id, "check", None), 50)[0], ServerMessage::CheckResult { .. }));
}

#[test]
fn finish_persists_replayable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manager(dir.path());
    let id = create(&mut m, json!({"ground_truth": "AC-con"}), 10_000);
    let script = [
        event(&id, "place", Some("A")),
        event(&id, "check", None),
        event(&id, "check", None),
        event(&id, "place", Some("C")),
        event(&id, "check", None),
        event(&id, "remove", Some("A")),
        event(&id, "place", Some("B")),
        event(&id, "check", None),
        json!({"type": "event", "session_id": id, "kind": "question", "id": "blicket_A"}),
        json!({"type": "event", "session_id": id, "kind": "answer", "id": "blicket_A", "payload": true}),
    ];
    for (i, msg) in script.into_iter().enumerate() {
        send(&mut m, msg, 11_000 + 700 * i as u64);
    }
    let in_memory = m.trace(&id).unwrap().clone();
    let done = send(
        &mut m,
        json!({"type": "finish", "session_id": id, "answers": {"blickets": {"A": true, "B": false, "C": true}, "final_combo": ["A", "C"]}}),
        30_000,
    );
    match &done[0] {
        ServerMessage::Ack { reveal: Some(r), .. } => {
            assert_eq!(r.ground_truth.to_string(), "AC-con");
            assert_eq!(r.reason, FinishReason::Client);
        }
        other => panic!("{other:?}"),
    }
    let text = std::fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
    let traces = parse_jsonl(&text).unwrap();
    assert_eq!(traces.len(), 1);
    let t = &traces[0];
    validate(t).unwrap();
    assert_eq!(t.events, in_memory.events);
    assert_eq!(t.events[0].kind, EventKind::DemoShown("given".into()));
    assert_eq!(t.events[1].t_ms, 1000);
    let outcomes: Vec<_> = t
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Check(o) => Some(o),
            _ => None,
        })
        .collect();
    use Observation::{DetectorOff as Off, DetectorOn as On};
    assert_eq!(outcomes, [Off, Off, On, Off]);
    assert_eq!(t.answers.final_combo.as_ref().unwrap().len(), 2);
    let again = send(&mut m, event(&id, "check", None), 31_000);
    assert!(matches!(&again[0], ServerMessage::Error { code: ErrorCode::SessionFinished, .. }));
}

#[test]
fn time_cap_finishes_session() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = SessionManager::new(ServiceConfig {
        data_dir: dir.path().to_path_buf(),
        session_cap_ms: 5_000,
        ..ServiceConfig::default()
    })
    .unwrap();
    let a = create(&mut m, json!({}), 0);
    let b = create(&mut m, json!({}), 0);
    let late = send(&mut m, event(&a, "check", None), 6_000);
    assert!(matches!(&late[0], ServerMessage::Error { code: ErrorCode::SessionFinished, .. }));
    assert!(matches!(&late[1], ServerMessage::Ack { reveal: Some(r), .. } if r.reason == FinishReason::TimeCap));
    assert_eq!(m.tick(6_000), vec![(b, FinishReason::TimeCap)]);
    let text = std::fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
    assert_eq!(parse_jsonl(&text).unwrap().len(), 2);
}

#[test]
fn detached_session_resumes_until_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = SessionManager::new(ServiceConfig {
        data_dir: dir.path().to_path_buf(),
        resume_timeout_ms: 10_000,
        ..ServiceConfig::default()
    })
    .unwrap();
    let id = create(&mut m, json!({"ground_truth": "A-dis"}), 0);
    send(&mut m, event(&id, "place", Some("A")), 100);
    m.detach(&id, 1_000);
    assert!(m.tick(5_000).is_empty());
    match &send(&mut m, json!({"type": "resume", "session_id": id}), 6_000)[0] {
        ServerMessage::State { state, finished, .. } => {
            assert!(!finished);
            assert_eq!(state.on_detector.len(), 1);
        }
        other => panic!("{other:?}"),
    }
    m.detach(&id, 7_000);
    assert_eq!(m.tick(17_000), vec![(id.clone(), FinishReason::Abandoned)]);
    let resumed = send(&mut m, json!({"type": "resume", "session_id": id}), 18_000);
    assert!(matches!(&resumed[0], ServerMessage::Error { code: ErrorCode::SessionFinished, .. }));
}

/// Every structure name, in any spelling a message could carry it.
fn leaks(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    match v {
        Value::String(s) => {
            if let Some((objs, kind)) = s.split_once('-') {
                if (kind == "dis" || kind == "con") && !objs.is_empty() && objs.chars().all(|c| c.is_ascii_uppercase()) {
                    out.push(s.clone());
                }
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| out.extend(leaks(x))),
        Value::Object(map) => {
            for (k, x) in map {
                if ["ground_truth", "structure", "truth", "blickets", "reveal", "hidden_truth"].contains(&k.as_str()) {
                    out.push(k.clone());
                }
                out.extend(leaks(x));
            }
        }
        _ => {}
    }
    out
}

#[test]
fn nothing_before_finish_reveals_truth() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manager(dir.path());
    for (kind, given) in [("conjunctive", true), ("conjunctive", false), ("disjunctive", true), ("disjunctive", false)] {
        for truth in [None, Some("AB-con"), Some("BC-dis")] {
            let mut create = json!({"type": "create_session", "condition": {"kind": kind, "given": given}});
            if let Some(t) = truth {
                create["ground_truth"] = json!(t);
            }
            let mut seen = send(&mut m, create, 0);
            let ServerMessage::SessionCreated { session_id: id, .. } = &seen[0] else { panic!() };
            let id = id.clone();
            for obj in ["A", "B", "C"] {
                seen.extend(send(&mut m, event(&id, "place", Some(obj)), 10));
                seen.extend(send(&mut m, event(&id, "check", None), 20));
                seen.extend(send(&mut m, event(&id, "remove", Some(obj)), 30));
            }
            seen.extend(send(&mut m, json!({"type": "resume", "session_id": id}), 40));
            seen.extend(send(&mut m, event(&id, "bogus", None), 50));
            for msg in &seen {
                let v: Value = serde_json::from_str(&msg.to_json()).unwrap();
                assert!(leaks(&v).is_empty(), "{v}");
            }
            let done = send(&mut m, json!({"type": "finish", "session_id": id}), 60);
            let v: Value = serde_json::from_str(&done[0].to_json()).unwrap();
            assert!(!leaks(&v).is_empty(), "finish reveals the structure");
        }
    }
}

#[test]
fn condition_in_trace_matches_request() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manager(dir.path());
    let msg = json!({"type": "create_session", "condition": {"kind": "conjunctive", "given": false}});
    let ServerMessage::SessionCreated { session_id, .. } = &send(&mut m, msg, 0)[0] else { panic!() };
    assert_eq!(
        m.trace(session_id).unwrap().condition,
        Condition::new(OverhypothesisKind::Conjunctive, false)
    );
}
