use std::collections::HashMap;
use std::sync::Arc;

use blicket_core::causal::{enumerate_structures, experimental_prior, uniform_prior, HypothesisSpace};
use blicket_core::traces::synthesize;
use blicket_core::{
    disambiguation_sufficient, min_step_policy, CausalStructure, Combination, Condition, EventKind,
    Observation, PolicyTree, SessionTrace, Skeleton, TraceError, TraceEvent,
};
use proptest::prelude::*;

fn space3() -> Arc<HypothesisSpace> {
    Arc::new(enumerate_structures(3).unwrap())
}

fn golden(name: &str, space: &HypothesisSpace) -> PolicyTree {
    let all: HashMap<String, Skeleton> =
        serde_json::from_str(include_str!("fixtures/golden_trees.json")).unwrap();
    PolicyTree::from_skeleton(space, space.all(), Some(&all[name])).unwrap()
}

fn walk(truth: CausalStructure, tests: &[Combination]) -> SessionTrace {
    let cond = Condition::new(truth.kind(), true);
    synthesize("walk", cond, truth, 3, tests, 1500).unwrap()
}

#[test]
fn figure_paths_are_sufficient_and_truncations_are_not() {
    let s = space3();
    let prior = uniform_prior(s.clone());
    for name in ["min_step_uniform", "min_step_experimental"] {
        for path in golden(name, &s).paths() {
            let tests: Vec<Combination> = path.steps.iter().map(|(c, _)| *c).collect();
            let full = walk(path.identified, &tests);
            assert!(disambiguation_sufficient(&full, &prior).unwrap(), "{name} {}", path.identified);
            let cut = walk(path.identified, &tests[..tests.len() - 1]);
            assert!(!disambiguation_sufficient(&cut, &prior).unwrap(), "{name} {}", path.identified);
        }
    }
}

#[test]
fn conjunctive_pair_under_experimental_prior() {
    let s = space3();
    let prior = experimental_prior(s.clone()).unwrap();
    let tree = min_step_policy(&prior).unwrap().tree;
    let truth: CausalStructure = "AB-con".parse().unwrap();
    let path = tree.paths().into_iter().find(|p| p.identified == truth).unwrap();
    let tests: Vec<Combination> = path.steps.iter().map(|(c, _)| *c).collect();
    assert!(disambiguation_sufficient(&walk(truth, &tests), &prior).unwrap());
    assert!(!disambiguation_sufficient(&walk(truth, &tests[..tests.len() - 1]), &prior).unwrap());
}

#[test]
fn planner_paths_are_sufficient_under_both_priors() {
    let s = space3();
    for prior in [uniform_prior(s.clone()), experimental_prior(s.clone()).unwrap()] {
        for path in min_step_policy(&prior).unwrap().tree.paths() {
            let tests: Vec<Combination> = path.steps.iter().map(|(c, _)| *c).collect();
            let verdict = disambiguation_sufficient(&walk(path.identified, &tests), &prior);
            if prior.weight(s.index_of(&path.identified).unwrap()) > 0.into() {
                assert_eq!(verdict, Ok(true));
            } else {
                assert!(matches!(verdict, Err(TraceError::ImpossibleObservation { .. })));
            }
        }
    }
}

#[test]
fn empty_trace_is_not_sufficient() {
    let prior = uniform_prior(space3());
    let t = walk("A-dis".parse().unwrap(), &[]);
    assert!(!disambiguation_sufficient(&t, &prior).unwrap());
}

#[test]
fn impossible_evidence_names_event() {
    // No structure lights the empty detector.
    let prior = uniform_prior(space3());
    let mut t = walk("A-dis".parse().unwrap(), &[]);
    t.events = vec![TraceEvent::new(0, EventKind::Check(Observation::DetectorOn))];
    assert_eq!(
        disambiguation_sufficient(&t, &prior),
        Err(TraceError::ImpossibleObservation { index: 0 })
    );
}

proptest! {
    #[test]
    fn more_evidence_never_hurts(truth_i in 0usize..11, bits in prop::collection::vec(0u32..8, 0..8)) {
        let s = space3();
        let truth = s.get(truth_i);
        let tests: Vec<Combination> = bits.into_iter().map(Combination).collect();
        for prior in [uniform_prior(s.clone()), experimental_prior(s.clone()).unwrap()] {
            if prior.weight(truth_i) == 0.into() {
                continue;
            }
            let mut was = false;
            for k in 0..=tests.len() {
                let now = disambiguation_sufficient(&walk(truth, &tests[..k]), &prior).unwrap();
                prop_assert!(!was || now);
                was = now;
            }
        }
    }
}
