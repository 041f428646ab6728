use std::collections::HashMap;
use std::sync::Arc;

use blicket_core::causal::{enumerate_structures, experimental_prior, uniform_prior, HypothesisSpace, Prior};
use blicket_core::{
    expected_info_gain, info_gain, posterior_update, BeliefState, Combination, InferenceError,
    MacroAction, Observation, PolicyTree, Skeleton, TestOutcome,
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

#[test]
fn extreme_tests_carry_no_information() {
    let b = BeliefState::from_prior(&uniform_prior(space3()));
    for c in [Combination::parse("ABC").unwrap(), Combination::EMPTY] {
        assert_eq!(expected_info_gain(&b, MacroAction::new(c)), 0.0);
    }
}

/// Summed information gain along a path, or the impossible-observation
/// error if the path leaves the prior's support.
fn path_gain(prior: &Prior, steps: &[(Combination, Observation)]) -> Result<f64, InferenceError> {
    let mut b = BeliefState::from_prior(prior);
    let mut total = 0.0;
    for &(c, o) in steps {
        let t = TestOutcome::new(c, o);
        total += info_gain(&b, &t)?;
        b = posterior_update(&b, &t)?;
    }
    Ok(total)
}

#[test]
fn chain_identity_on_figure_trees() {
    let s = space3();
    let priors = [
        ("per_step_uniform", uniform_prior(s.clone())),
        ("min_step_uniform", uniform_prior(s.clone())),
        ("per_step_experimental", experimental_prior(s.clone()).unwrap()),
        ("min_step_experimental", experimental_prior(s.clone()).unwrap()),
    ];
    for (name, prior) in priors {
        for path in golden(name, &s).paths() {
            let w = prior.weight(s.index_of(&path.identified).unwrap());
            let gain = path_gain(&prior, &path.steps);
            if w > num_rational::Rational64::from_integer(0) {
                let expected = -blicket_core::causal::ratio_to_f64(w).log2();
                assert!((gain.unwrap() - expected).abs() < 1e-12, "{name} {}", path.identified);
            } else {
                // -log2(0) is infinite: the path must leave the support.
                assert!(matches!(gain, Err(InferenceError::ImpossibleObservation { .. })), "{name}");
            }
        }
    }
}

fn belief_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.001f64..1.0], 11)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 0.0)
        .prop_map(|w| {
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    // 2000 cases of 5 updates each.
    #[test]
    fn updates_normalize_and_zero_force(
        weights in belief_strategy(),
        truth_pick in 0usize..11,
        tests in prop::collection::vec(0u32..8, 5),
    ) {
        let s = space3();
        let mut b = BeliefState::from_weights(s.clone(), weights.clone()).unwrap();
        let truth = b.support().iter().nth(truth_pick % b.support().len()).unwrap();
        for bits in tests {
            let c = Combination(bits);
            let o = Observation::from_lit(s.get(truth).activates(c));
            b = posterior_update(&b, &TestOutcome::new(c, o)).unwrap();
            let total: f64 = b.weights().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            for i in 0..s.len() {
                if s.get(i).activates(c) != o.is_on() {
                    prop_assert_eq!(b.weight(i), 0.0);
                    prop_assert!(!b.live().contains(i));
                }
            }
            prop_assert!(b.weight(truth) > 0.0);
        }
    }

    #[test]
    fn info_gain_is_log_inverse_predictive(weights in belief_strategy(), bits in 0u32..8) {
        let s = space3();
        let b = BeliefState::from_weights(s, weights).unwrap();
        let c = Combination(bits);
        for o in [Observation::DetectorOn, Observation::DetectorOff] {
            let p = b.predictive(c, o);
            match info_gain(&b, &TestOutcome::new(c, o)) {
                Ok(g) => prop_assert!((g - (1.0 / p).log2()).abs() < 1e-9),
                Err(_) => prop_assert!(p <= 0.0),
            }
        }
        let eig = expected_info_gain(&b, MacroAction::new(c));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&eig));
    }
}
