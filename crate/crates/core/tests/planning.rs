use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use blicket_core::causal::{enumerate_structures, experimental_prior, uniform_prior, HypothesisSpace, Prior};
use blicket_core::planner::oracle::brute_force_min;
use blicket_core::policy::symmetries;
use blicket_core::{
    equivalent_up_to_relabeling, expected_steps, min_step_policy, per_step_policy, BeliefState,
    CausalStructure, Combination, PolicyTree, Skeleton,
};
use num_rational::Rational64;

fn space(n: usize) -> Arc<HypothesisSpace> {
    Arc::new(enumerate_structures(n).unwrap())
}

fn priors(n: usize) -> Vec<Prior> {
    let s = space(n);
    vec![uniform_prior(s.clone()), experimental_prior(s).unwrap()]
}

fn per_step_tree(prior: &Prior) -> PolicyTree {
    per_step_policy(&BeliefState::from_prior(prior)).unwrap()
}

fn golden(name: &str, space: &HypothesisSpace) -> PolicyTree {
    let text = include_str!("fixtures/golden_trees.json");
    let all: HashMap<String, Skeleton> = serde_json::from_str(text).unwrap();
    PolicyTree::from_skeleton(space, space.all(), Some(&all[name])).unwrap()
}

fn r(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

#[test]
fn min_step_values() {
    let [u, e] = <[Prior; 2]>::try_from(priors(3)).unwrap();
    assert_eq!(min_step_policy(&u).unwrap().expected_steps, r(39, 11));
    assert_eq!(min_step_policy(&e).unwrap().expected_steps, r(21, 6));
}

#[test]
fn per_step_values() {
    let [u, e] = <[Prior; 2]>::try_from(priors(3)).unwrap();
    assert_eq!(expected_steps(&per_step_tree(&u), &u).unwrap(), r(41, 11));
    assert_eq!(expected_steps(&per_step_tree(&e), &e).unwrap(), r(24, 6));
}

#[test]
fn both_models_are_fast() {
    let start = Instant::now();
    for p in priors(3) {
        min_step_policy(&p).unwrap();
        per_step_tree(&p);
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn min_step_trees_match_figures() {
    let s = space(3);
    for (name, prior) in ["min_step_uniform", "min_step_experimental"].into_iter().zip(priors(3)) {
        let tree = min_step_policy(&prior).unwrap().tree;
        assert!(equivalent_up_to_relabeling(&tree, &golden(name, &s), &prior), "{name}");
    }
}

#[test]
fn figure_trees_resolve_every_structure() {
    let s = space(3);
    for name in ["per_step_uniform", "per_step_experimental", "min_step_uniform", "min_step_experimental"] {
        golden(name, &s).validate(&s, s.all()).unwrap();
    }
}

#[test]
fn figure_tree_costs() {
    // The min-step figures cost exactly the reported values; the per-step
    // figures cost one step more in total than the reported 3.72 and 4.0.
    let s = space(3);
    let [u, e] = <[Prior; 2]>::try_from(priors(3)).unwrap();
    assert_eq!(expected_steps(&golden("min_step_uniform", &s), &u).unwrap(), r(39, 11));
    assert_eq!(expected_steps(&golden("min_step_experimental", &s), &e).unwrap(), r(21, 6));
    assert_eq!(expected_steps(&golden("per_step_uniform", &s), &u).unwrap(), r(40, 11));
    assert_eq!(expected_steps(&golden("per_step_experimental", &s), &e).unwrap(), r(23, 6));
}

#[test]
fn per_step_tree_shape() {
    let u = uniform_prior(space(3));
    let tree = per_step_tree(&u);
    assert_eq!(tree.root_action(), Some(Combination::parse("C").unwrap()));
    assert_eq!(tree.leaf_count(), 11);
    tree.validate(u.space(), u.space().all()).unwrap();
}

#[test]
fn oracle_agrees_on_full_spaces() {
    for n in [2, 3] {
        for prior in priors(n) {
            let plan = min_step_policy(&prior).unwrap();
            for cap in [4, 5, 6] {
                assert_eq!(brute_force_min(&prior, cap).unwrap(), plan.expected_steps, "n={n} cap={cap}");
            }
            let greedy = expected_steps(&per_step_tree(&prior), &prior).unwrap();
            assert!(greedy >= plan.expected_steps);
        }
    }
}

#[test]
fn oracle_agrees_on_every_three_structure_subspace() {
    let full = space(3);
    let hs = full.hypotheses().to_vec();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            for k in j + 1..hs.len() {
                let sub = Arc::new(HypothesisSpace::new(3, vec![hs[i], hs[j], hs[k]]).unwrap());
                let prior = uniform_prior(sub);
                let plan = min_step_policy(&prior).unwrap();
                assert_eq!(brute_force_min(&prior, 3).unwrap(), plan.expected_steps);
            }
        }
    }
}

#[test]
fn root_symmetry_group_is_full() {
    let s = space(3);
    let u = uniform_prior(s.clone());
    assert_eq!(symmetries(&s, s.all(), u.weights()).len(), 6);
}

#[test]
fn relabeled_tree_is_equivalent_to_original() {
    let u = uniform_prior(space(3));
    let tree = min_step_policy(&u).unwrap().tree;
    for perm in blicket_core::ObjectPermutation::all(3) {
        assert!(equivalent_up_to_relabeling(&tree, &tree.relabel(&perm), &u));
    }
}

#[test]
fn duplicate_structures_rejected() {
    let a: CausalStructure = "AB-con".parse().unwrap();
    let err = HypothesisSpace::new(2, vec![a, a]).unwrap_err();
    assert!(err.to_string().contains("AB-con"));
}
