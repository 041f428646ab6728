//! Exploration traces and the behavioral metrics computed from them.
//!
//! A trace is stored as one JSON object per line:
//!
//! ```json
//! {"v":1,"session_id":"s1","condition":{"kind":"conjunctive","given":false},
//!  "ground_truth":"AB-con",
//!  "events":[{"t_ms":0,"kind":"place","object":"A"},{"t_ms":900,"kind":"check","outcome":"off"}],
//!  "answers":{"blickets":{"A":true,"B":true,"C":false},"final_combo":["A","B"]}}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use libm::erfc;
use thiserror::Error;

use crate::causal::{CausalStructure, Combination, ObjectId, ObjectPermutation, OverhypothesisKind, Prior};
use crate::env::{reset, EnvAction, EnvError, EnvState, MacroAction, Observation};
use crate::inference::{posterior_update, BeliefState, TestOutcome};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported trace version {0}")]
    Version(u32),
    #[error("event {index}: time goes backwards")]
    TimeOrder { index: usize },
    #[error("event {index}: {source}")]
    Env { index: usize, source: EnvError },
    #[error("event {index}: recorded {recorded:?} but {truth} gives {replayed:?}")]
    ReplayMismatch {
        index: usize,
        truth: CausalStructure,
        recorded: Observation,
        replayed: Observation,
    },
    #[error("event {index}: observation impossible under every hypothesis in the prior's support")]
    ImpossibleObservation { index: usize },
    #[error("event {index}: combination {combination} outside the prior's space")]
    OutsideSpace { index: usize, combination: Combination },
    #[error("undefined rate: {0}")]
    UndefinedRate(&'static str),
}

/// One cell of the 2×2 design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    #[serde(rename = "kind")]
    pub structure_kind: OverhypothesisKind,
    #[serde(rename = "given")]
    pub hypothesis_given: bool,
}

impl Condition {
    /// Table row order.
    pub const ALL: [Condition; 4] = [
        Condition::new(OverhypothesisKind::Conjunctive, false),
        Condition::new(OverhypothesisKind::Conjunctive, true),
        Condition::new(OverhypothesisKind::Disjunctive, false),
        Condition::new(OverhypothesisKind::Disjunctive, true),
    ];

    pub const fn new(structure_kind: OverhypothesisKind, hypothesis_given: bool) -> Self {
        Condition {
            structure_kind,
            hypothesis_given,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let given = if self.hypothesis_given { "given" } else { "not given" };
        let kind = match self.structure_kind {
            OverhypothesisKind::Conjunctive => "conjunctive",
            OverhypothesisKind::Disjunctive => "disjunctive",
        };
        write!(f, "{given} hypothesis ({kind})")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Place(ObjectId),
    Remove(ObjectId),
    Check(Observation),
    DemoShown(String),
    QuestionAsked(String),
    AnswerGiven(String, Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EventRecord", into = "EventRecord")]
pub struct TraceEvent {
    pub t_ms: u64,
    pub kind: EventKind,
}

impl TraceEvent {
    pub fn new(t_ms: u64, kind: EventKind) -> Self {
        TraceEvent { t_ms, kind }
    }

    pub fn env_action(&self) -> Option<EnvAction> {
        match self.kind {
            EventKind::Place(o) => Some(EnvAction::Place(o)),
            EventKind::Remove(o) => Some(EnvAction::Remove(o)),
            EventKind::Check(_) => Some(EnvAction::Check),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EventRecord {
    t_ms: u64,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    object: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcome: Option<Observation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payload: Option<Value>,
}

impl From<TraceEvent> for EventRecord {
    fn from(e: TraceEvent) -> Self {
        let mut r = EventRecord {
            t_ms: e.t_ms,
            kind: String::new(),
            object: None,
            outcome: None,
            id: None,
            payload: None,
        };
        r.kind = match e.kind {
            EventKind::Place(o) => {
                r.object = Some(o);
                "place"
            }
            EventKind::Remove(o) => {
                r.object = Some(o);
                "remove"
            }
            EventKind::Check(obs) => {
                r.outcome = Some(obs);
                "check"
            }
            EventKind::DemoShown(id) => {
                r.id = Some(id);
                "demo"
            }
            EventKind::QuestionAsked(id) => {
                r.id = Some(id);
                "question"
            }
            EventKind::AnswerGiven(id, payload) => {
                r.id = Some(id);
                r.payload = Some(payload);
                "answer"
            }
        }
        .to_string();
        r
    }
}

impl TryFrom<EventRecord> for TraceEvent {
    type Error = String;

    fn try_from(r: EventRecord) -> Result<Self, String> {
        let need_object = || r.object.ok_or_else(|| format!("{} event without object", r.kind));
        let need_id = || r.id.clone().ok_or_else(|| format!("{} event without id", r.kind));
        let kind = match r.kind.as_str() {
            "place" => EventKind::Place(need_object()?),
            "remove" => EventKind::Remove(need_object()?),
            "check" => EventKind::Check(r.outcome.ok_or("check event without outcome")?),
            "demo" => EventKind::DemoShown(need_id()?),
            "question" => EventKind::QuestionAsked(need_id()?),
            "answer" => EventKind::AnswerGiven(need_id()?, r.payload.clone().unwrap_or(Value::Null)),
            other => return Err(format!("unknown event kind {other:?}")),
        };
        Ok(TraceEvent { t_ms: r.t_ms, kind })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answers {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blickets: Option<BTreeMap<ObjectId, bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_combo: Option<Vec<ObjectId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub v: u32,
    pub session_id: String,
    pub condition: Condition,
    pub ground_truth: CausalStructure,
    pub events: Vec<TraceEvent>,
    #[serde(default)]
    pub answers: Answers,
}

impl SessionTrace {
    pub fn new(session_id: impl Into<String>, condition: Condition, ground_truth: CausalStructure) -> Self {
        SessionTrace {
            v: TRACE_VERSION,
            session_id: session_id.into(),
            condition,
            ground_truth,
            events: Vec::new(),
            answers: Answers::default(),
        }
    }

    /// Smallest object count covering the truth and every object mentioned.
    pub fn n_objects(&self) -> usize {
        let mentioned = self.events.iter().filter_map(|e| match e.kind {
            EventKind::Place(o) | EventKind::Remove(o) => Some(o.index() + 1),
            _ => None,
        });
        mentioned.fold(self.ground_truth.min_objects(), usize::max)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self, TraceError> {
        let t: SessionTrace = serde_json::from_str(line).map_err(|e| TraceError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if t.v != TRACE_VERSION {
            return Err(TraceError::Version(t.v));
        }
        Ok(t)
    }

    /// The same session with every object renamed.
    pub fn relabel(&self, perm: &ObjectPermutation) -> SessionTrace {
        let mut out = self.clone();
        out.ground_truth = self.ground_truth.permute(perm);
        for e in &mut out.events {
            match &mut e.kind {
                EventKind::Place(o) | EventKind::Remove(o) => *o = perm.map_object(*o),
                _ => {}
            }
        }
        if let Some(b) = &self.answers.blickets {
            out.answers.blickets = Some(b.iter().map(|(o, v)| (perm.map_object(*o), *v)).collect());
        }
        if let Some(f) = &self.answers.final_combo {
            out.answers.final_combo = Some(f.iter().map(|o| perm.map_object(*o)).collect());
        }
        out
    }
}

/// Parse a JSON Lines document; blank lines are skipped.
pub fn parse_jsonl(text: &str) -> Result<Vec<SessionTrace>, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            SessionTrace::from_json_line(l).map_err(|e| match e {
                TraceError::Parse { message, .. } => TraceError::Parse { line: i + 1, message },
                e => e,
            })
        })
        .collect()
}

pub fn to_jsonl(traces: &[SessionTrace]) -> String {
    traces.iter().map(|t| t.to_json_line() + "\n").collect()
}

/// Build a trace by running each combination as a macro action against the
/// environment, one event every `step_ms`.
pub fn synthesize(
    session_id: &str,
    condition: Condition,
    truth: CausalStructure,
    n_objects: usize,
    tests: &[Combination],
    step_ms: u64,
) -> Result<SessionTrace, EnvError> {
    let mut trace = SessionTrace::new(session_id, condition, truth);
    let mut state = reset(truth, n_objects, 0);
    for &c in tests {
        if !c.fits(state.n_objects()) {
            return Err(EnvError::CombinationOutOfRange(c));
        }
        for a in MacroAction::new(c).expand(&state) {
            let (next, obs) = state.step(a)?;
            state = next;
            let kind = match a {
                EnvAction::Place(o) => EventKind::Place(o),
                EnvAction::Remove(o) => EventKind::Remove(o),
                EnvAction::Check => EventKind::Check(obs.expect("check observes")),
            };
            trace.events.push(TraceEvent::new(state.step_count() * step_ms, kind));
        }
    }
    Ok(trace)
}

/// A press of the check mark, with the detector contents at that moment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckRecord {
    pub event_index: usize,
    pub t_ms: u64,
    /// Objects on the detector in placement order.
    pub order: Vec<ObjectId>,
    pub observation: Observation,
    /// False for a repeat press with nothing placed or removed since the
    /// previous check.
    pub counted: bool,
}

impl CheckRecord {
    pub fn combination(&self) -> Combination {
        Combination::from_objects(self.order.iter().copied())
    }
}

/// Every check in the trace, tracking the detector without consulting the
/// ground truth.
pub fn check_records(t: &SessionTrace) -> Vec<CheckRecord> {
    let mut on: Vec<ObjectId> = Vec::new();
    let mut armed = true;
    let mut out = Vec::new();
    for (i, e) in t.events.iter().enumerate() {
        match e.kind {
            EventKind::Place(o) => {
                if !on.contains(&o) {
                    on.push(o);
                }
                armed = true;
            }
            EventKind::Remove(o) => {
                on.retain(|&x| x != o);
                armed = true;
            }
            EventKind::Check(obs) => {
                out.push(CheckRecord {
                    event_index: i,
                    t_ms: e.t_ms,
                    order: on.clone(),
                    observation: obs,
                    counted: armed,
                });
                armed = false;
            }
            _ => {}
        }
    }
    out
}

/// Checks that count: a run of presses with nothing placed or removed in
/// between counts once.
pub fn effective_checks(t: &SessionTrace) -> Vec<CheckRecord> {
    check_records(t).into_iter().filter(|c| c.counted).collect()
}

pub fn count_checks(t: &SessionTrace) -> usize {
    effective_checks(t).len()
}

/// Distinct object sets checked, ignoring placement order.
pub fn unique_combinations(t: &SessionTrace) -> usize {
    effective_checks(t)
        .iter()
        .map(CheckRecord::combination)
        .collect::<BTreeSet<_>>()
        .len()
}

/// Raw place/remove/check event counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MicroCounts {
    pub place: usize,
    pub remove: usize,
    pub check: usize,
}

impl MicroCounts {
    pub fn total(&self) -> usize {
        self.place + self.remove + self.check
    }
}

pub fn micro_counts(t: &SessionTrace) -> MicroCounts {
    let mut m = MicroCounts::default();
    for e in &t.events {
        match e.kind {
            EventKind::Place(_) => m.place += 1,
            EventKind::Remove(_) => m.remove += 1,
            EventKind::Check(_) => m.check += 1,
            _ => {}
        }
    }
    m
}

/// Seconds until the detector first lit, if it ever did.
pub fn time_to_first_success(t: &SessionTrace) -> Option<f64> {
    t.events.iter().find_map(|e| match e.kind {
        EventKind::Check(Observation::DetectorOn) => Some(e.t_ms as f64 / 1000.0),
        _ => None,
    })
}

/// Seconds from session start to the last event.
pub fn total_time(t: &SessionTrace) -> f64 {
    t.events.last().map_or(0.0, |e| e.t_ms as f64 / 1000.0)
}

/// Some set of objects was checked in two or more placement orders.
pub fn order_variation(t: &SessionTrace) -> bool {
    let mut orders: HashMap<Combination, BTreeSet<Vec<ObjectId>>> = HashMap::new();
    for c in check_records(t) {
        orders.entry(c.combination()).or_default().insert(c.order);
    }
    orders.values().any(|o| o.len() >= 2)
}

/// The empty detector was checked.
pub fn empty_check(t: &SessionTrace) -> bool {
    check_records(t).iter().any(|c| c.order.is_empty())
}

/// Replay the trace through the environment under its recorded truth and
/// confirm every check outcome. Also rejects decreasing timestamps.
pub fn validate(t: &SessionTrace) -> Result<(), TraceError> {
    if t.v != TRACE_VERSION {
        return Err(TraceError::Version(t.v));
    }
    let mut state: EnvState = reset(t.ground_truth, t.n_objects(), 0);
    let mut last_t = 0;
    for (index, e) in t.events.iter().enumerate() {
        if e.t_ms < last_t {
            return Err(TraceError::TimeOrder { index });
        }
        last_t = e.t_ms;
        let Some(a) = e.env_action() else { continue };
        let (next, obs) = state.step(a).map_err(|source| TraceError::Env { index, source })?;
        state = next;
        if let (EventKind::Check(recorded), Some(replayed)) = (&e.kind, obs) {
            if *recorded != replayed {
                return Err(TraceError::ReplayMismatch {
                    index,
                    truth: t.ground_truth,
                    recorded: *recorded,
                    replayed,
                });
            }
        }
    }
    Ok(())
}

/// Fold the trace's counted checks into the prior. The evidence suffices
/// when exactly one hypothesis with positive weight survives.
pub fn disambiguation_sufficient(t: &SessionTrace, prior: &Prior) -> Result<bool, TraceError> {
    let space = prior.space();
    let mut belief = BeliefState::from_prior(prior);
    for c in effective_checks(t) {
        let combination = c.combination();
        if !combination.fits(space.n_objects()) {
            return Err(TraceError::OutsideSpace {
                index: c.event_index,
                combination,
            });
        }
        let outcome = TestOutcome::new(combination, c.observation);
        belief = posterior_update(&belief, &outcome)
            .map_err(|_| TraceError::ImpossibleObservation { index: c.event_index })?;
    }
    Ok(belief.support().len() == 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlicketRates {
    pub tpr: f64,
    pub fpr: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Rates at which objects were judged blickets, pooled over every judged
/// object in every trace.
pub fn blicket_rates(traces: &[SessionTrace]) -> Result<BlicketRates, TraceError> {
    let (mut tp, mut pos, mut fp, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for t in traces {
        let Some(judged) = &t.answers.blickets else { continue };
        for (&o, &said) in judged {
            if t.ground_truth.is_blicket(o) {
                pos += 1;
                tp += said as usize;
            } else {
                neg += 1;
                fp += said as usize;
            }
        }
    }
    if pos == 0 {
        return Err(TraceError::UndefinedRate("no judgments of true blickets"));
    }
    if neg == 0 {
        return Err(TraceError::UndefinedRate("no judgments of non-blickets"));
    }
    Ok(BlicketRates {
        tpr: tp as f64 / pos as f64,
        fpr: fp as f64 / neg as f64,
        positives: pos,
        negatives: neg,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Summary> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Summary {
            mean,
            sd: var.max(0.0).sqrt(),
            n: xs.len(),
        })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", fmt2(self.mean), fmt2(self.sd))
    }
}

/// Two decimals with trailing zeros dropped: 12.20 → "12.2", 4.00 → "4".
pub fn fmt2(x: f64) -> String {
    let s = format!("{:.2}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionStats {
    pub condition: Condition,
    pub n_participants: usize,
    pub checks: Summary,
    pub unique_combinations: Summary,
    pub total_time_s: Summary,
    /// Over the traces in which the detector lit at least once.
    pub time_to_success_s: Option<Summary>,
    pub micro_actions: Summary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsTable {
    pub rows: Vec<ConditionStats>,
    pub warnings: Vec<String>,
}

fn stats_for(condition: Condition, traces: &[&SessionTrace]) -> ConditionStats {
    let col = |f: &dyn Fn(&SessionTrace) -> f64| -> Summary {
        Summary::of(&traces.iter().map(|t| f(t)).collect::<Vec<_>>()).expect("nonempty condition")
    };
    let successes: Vec<f64> = traces.iter().filter_map(|t| time_to_first_success(t)).collect();
    ConditionStats {
        condition,
        n_participants: traces.len(),
        checks: col(&|t| count_checks(t) as f64),
        unique_combinations: col(&|t| unique_combinations(t) as f64),
        total_time_s: col(&total_time),
        time_to_success_s: Summary::of(&successes),
        micro_actions: col(&|t| micro_counts(t).total() as f64),
    }
}

/// Per-condition statistics in table order. Conditions without traces are
/// left out with a warning.
pub fn condition_stats(traces: &[SessionTrace]) -> StatsTable {
    let mut table = StatsTable::default();
    for condition in Condition::ALL {
        let group: Vec<&SessionTrace> = traces.iter().filter(|t| t.condition == condition).collect();
        if group.is_empty() {
            let w = format!("no traces for condition {condition}; row omitted");
            tracing::warn!("{w}");
            table.warnings.push(w);
            continue;
        }
        table.rows.push(stats_for(condition, &group));
    }
    table
}

impl StatsTable {
    pub fn row(&self, condition: Condition) -> Option<&ConditionStats> {
        self.rows.iter().find(|r| r.condition == condition)
    }

    /// Table with columns Condition, # Participants, # Actions (counted
    /// checks), # Combinations, Time (s), Time to Success (s).
    pub fn render(&self) -> String {
        let mut out = String::from(
            "| Condition | # Participants | # Actions | # Combinations | Time (s) | Time to Success (s) |\n\
             |---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            let tts = r.time_to_success_s.map_or("n/a".to_string(), |s| s.to_string());
            out += &format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                r.condition, r.n_participants, r.checks, r.unique_combinations, r.total_time_s, tts
            );
        }
        out
    }

    /// Raw place/remove/check counts, reported apart from the table.
    pub fn render_micro(&self) -> String {
        let mut out = String::from("| Condition | Micro actions (place+remove+check) |\n|---|---|\n");
        for r in &self.rows {
            out += &format!("| {} | {} |\n", r.condition, r.micro_actions);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZTest {
    pub z: f64,
    pub p_two_sided: f64,
    /// The pooled proportion was 0 or 1, so there is no variance to test.
    pub degenerate: bool,
}

/// Pooled two-proportion z test of x1/n1 against x2/n2.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<ZTest, crate::causal::CausalError> {
    use crate::causal::CausalError::InvalidArgument;
    if n1 == 0 || n2 == 0 {
        return Err(InvalidArgument("sample sizes must be positive".into()));
    }
    if x1 > n1 || x2 > n2 {
        return Err(InvalidArgument("successes exceed sample size".into()));
    }
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    if pooled == 0.0 || pooled == 1.0 {
        return Ok(ZTest {
            z: 0.0,
            p_two_sided: 1.0,
            degenerate: true,
        });
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (p1 - p2) / se;
    Ok(ZTest {
        z,
        p_two_sided: erfc(z.abs() / std::f64::consts::SQRT_2),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ObjectId = ObjectId(0);
    const B: ObjectId = ObjectId(1);

    fn trace(events: Vec<EventKind>) -> SessionTrace {
        let mut t = SessionTrace::new(
            "t",
            Condition::new(OverhypothesisKind::Disjunctive, true),
            "AB-dis".parse().unwrap(),
        );
        t.events = events
            .into_iter()
            .enumerate()
            .map(|(i, k)| TraceEvent::new(i as u64 * 1000, k))
            .collect();
        t
    }

    use EventKind::{Check, Place, Remove};
    const ON: Observation = Observation::DetectorOn;

    #[test]
    fn repeat_presses_count_once() {
        assert_eq!(count_checks(&trace(vec![Place(A), Check(ON), Check(ON), Check(ON)])), 1);
        assert_eq!(
            count_checks(&trace(vec![Place(A), Check(ON), Remove(A), Place(A), Check(ON)])),
            2
        );
        assert_eq!(count_checks(&trace(vec![])), 0);
    }

    #[test]
    fn unique_ignores_order() {
        let t = trace(vec![Place(A), Place(B), Check(ON), Remove(A), Remove(B), Place(B), Place(A), Check(ON)]);
        assert_eq!(count_checks(&t), 2);
        assert_eq!(unique_combinations(&t), 1);
        assert!(order_variation(&t));
        assert!(!empty_check(&t));
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt2(12.2), "12.2");
        assert_eq!(fmt2(8.19), "8.19");
        assert_eq!(fmt2(4.0), "4");
        assert_eq!(fmt2(3.849), "3.85");
        assert_eq!(Summary::of(&[12.2]).unwrap().to_string(), "12.2 (0)");
    }

    #[test]
    fn z_test_degenerate_and_equal() {
        let z = two_proportion_z(50, 100, 50, 100).unwrap();
        assert_eq!((z.z, z.p_two_sided, z.degenerate), (0.0, 1.0, false));
        assert!(two_proportion_z(0, 10, 0, 10).unwrap().degenerate);
        assert!(two_proportion_z(1, 0, 0, 10).is_err());
    }

    #[test]
    fn event_json_shape() {
        let e = TraceEvent::new(5, Check(ON));
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"t_ms":5,"kind":"check","outcome":"on"}"#);
        let e: TraceEvent = serde_json::from_str(r#"{"t_ms":0,"kind":"place","object":"C"}"#).unwrap();
        assert_eq!(e.kind, Place(ObjectId(2)));
        assert!(serde_json::from_str::<TraceEvent>(r#"{"t_ms":0,"kind":"place"}"#).is_err());
    }
}
