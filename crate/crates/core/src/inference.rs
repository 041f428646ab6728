//! Bayesian ideal observer: beliefs, updates, KL information gain and the
//! greedy per-step exploration policy.
//!
//! Likelihoods are 0/1 because the detector is deterministic, so a posterior
//! is the prior restricted to the structures consistent with the evidence.
//! A belief therefore tracks two sets: the *live* structures (not yet
//! contradicted by any observation) and the *support* (live with positive
//! weight). A prior can give zero weight to structures that are still live.

use std::sync::Arc;

use thiserror::Error;

use crate::causal::{CausalStructure, Combination, HypSet, HypothesisSpace, Prior};
use crate::env::{MacroAction, Observation};
use crate::policy::PolicyTree;

/// Slack used when comparing scores that are equal in exact arithmetic.
const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("observation {observation:?} for {combination} has probability zero under the belief")]
    ImpossibleObservation {
        combination: Combination,
        observation: Observation,
    },
    #[error("hypotheses {0} and {1} cannot be told apart")]
    Indistinguishable(CausalStructure, CausalStructure),
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    space: Arc<HypothesisSpace>,
    weights: Vec<f64>,
    live: HypSet,
}

impl BeliefState {
    /// Belief before any evidence: every structure in the space is live.
    pub fn from_prior(prior: &Prior) -> Self {
        BeliefState {
            space: prior.space().clone(),
            weights: prior.weights_f64(),
            live: prior.space().all(),
        }
    }

    pub fn from_weights(space: Arc<HypothesisSpace>, weights: Vec<f64>) -> Result<Self, InferenceError> {
        if weights.len() != space.len() {
            return Err(InferenceError::InvalidBelief(format!(
                "{} weights for {} hypotheses",
                weights.len(),
                space.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(InferenceError::InvalidBelief("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(InferenceError::InvalidBelief(format!("weights sum to {total}")));
        }
        let live = space.all();
        Ok(BeliefState { space, weights, live })
    }

    /// All mass on hypothesis `i`, which is also the only live one.
    pub fn point(space: Arc<HypothesisSpace>, i: usize) -> Self {
        let mut weights = vec![0.0; space.len()];
        weights[i] = 1.0;
        BeliefState {
            space,
            weights,
            live: HypSet::singleton(i),
        }
    }

    /// Uniform over `live`, zero elsewhere.
    pub fn uniform_over(space: Arc<HypothesisSpace>, live: HypSet) -> Self {
        let n = live.len() as f64;
        let weights = (0..space.len())
            .map(|i| if live.contains(i) { 1.0 / n } else { 0.0 })
            .collect();
        BeliefState { space, weights, live }
    }

    pub fn space(&self) -> &Arc<HypothesisSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn live(&self) -> HypSet {
        self.live
    }

    pub fn support(&self) -> HypSet {
        self.live
            .iter()
            .filter(|&i| self.weights[i] > 0.0)
            .collect()
    }

    /// Probability that the detector lights for `c`.
    pub fn predictive_on(&self, c: Combination) -> f64 {
        self.space
            .lit_by(c)
            .iter()
            .map(|i| self.weights[i])
            .sum()
    }

    pub fn predictive(&self, c: Combination, obs: Observation) -> f64 {
        let on = self.predictive_on(c);
        if obs.is_on() {
            on
        } else {
            self.weights.iter().sum::<f64>() - on
        }
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.weights
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| -w * w.log2())
            .sum()
    }
}

/// One test and what the detector did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TestOutcome {
    pub action: MacroAction,
    pub observation: Observation,
}

impl TestOutcome {
    pub fn new(combination: Combination, observation: Observation) -> Self {
        TestOutcome {
            action: MacroAction::new(combination),
            observation,
        }
    }
}

pub fn likelihood(h: &CausalStructure, t: &TestOutcome) -> f64 {
    if h.activates(t.action.combination) == t.observation.is_on() {
        1.0
    } else {
        0.0
    }
}

/// Bayes' rule. Structures inconsistent with the outcome get exactly zero
/// weight and leave the live set.
pub fn posterior_update(b: &BeliefState, t: &TestOutcome) -> Result<BeliefState, InferenceError> {
    let space = &b.space;
    let lik: Vec<f64> = space.hypotheses().iter().map(|h| likelihood(h, t)).collect();
    let evidence: f64 = lik.iter().zip(&b.weights).map(|(l, w)| l * w).sum();
    if evidence <= 0.0 {
        return Err(InferenceError::ImpossibleObservation {
            combination: t.action.combination,
            observation: t.observation,
        });
    }
    let weights = lik
        .iter()
        .zip(&b.weights)
        .map(|(l, w)| l * w / evidence)
        .collect();
    let live = b
        .live
        .iter()
        .filter(|&i| lik[i] > 0.0)
        .collect();
    Ok(BeliefState {
        space: space.clone(),
        weights,
        live,
    })
}

/// D_KL(posterior || prior) in bits.
pub fn kl_divergence(posterior: &[f64], prior: &[f64]) -> f64 {
    let kl: f64 = posterior
        .iter()
        .zip(prior)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).log2())
        .sum();
    kl.max(0.0)
}

/// Information gained by observing `t`: the KL divergence of the updated
/// belief from `b`.
pub fn info_gain(b: &BeliefState, t: &TestOutcome) -> Result<f64, InferenceError> {
    let post = posterior_update(b, t)?;
    Ok(kl_divergence(&post.weights, &b.weights))
}

/// Outcome-averaged information gain of testing `m`. Outcomes with zero
/// probability contribute nothing.
pub fn expected_info_gain(b: &BeliefState, m: MacroAction) -> f64 {
    [Observation::DetectorOn, Observation::DetectorOff]
        .into_iter()
        .map(|obs| {
            let p = b.predictive(m.combination, obs);
            if p <= 0.0 {
                return 0.0;
            }
            let t = TestOutcome {
                action: m,
                observation: obs,
            };
            p * info_gain(b, &t).unwrap_or(0.0)
        })
        .sum()
}

/// Candidate tests in preference order for ties: fewest objects first, then
/// the larger bitmask.
pub fn tie_break_order(n_objects: usize) -> Vec<Combination> {
    let mut combos: Vec<Combination> = Combination::all(n_objects).collect();
    combos.sort_by_key(|c| (c.len(), std::cmp::Reverse(c.0)));
    combos
}

/// Greedy per-step policy.
///
/// At each node the chosen test maximizes the information the detector
/// lighting up would provide, measured against the live structures with
/// equal weight: `D_KL(p(h|on) || p(h)) = log2(|live| / |lit|)`. Ties go to
/// the higher expected information gain under `b`'s own weights, then to
/// [`tie_break_order`]. Tests whose outcome is already certain are skipped.
/// A node is a leaf once one structure remains live.
pub fn per_step_policy(b: &BeliefState) -> Result<PolicyTree, InferenceError> {
    let order = tie_break_order(b.space.n_objects());
    build_per_step(b, b.live, &order)
}

fn restricted(b: &BeliefState, live: HypSet) -> Option<BeliefState> {
    let mass: f64 = live.iter().map(|i| b.weights[i]).sum();
    if mass <= 0.0 {
        return None;
    }
    let weights = (0..b.space.len())
        .map(|i| if live.contains(i) { b.weights[i] / mass } else { 0.0 })
        .collect();
    Some(BeliefState {
        space: b.space.clone(),
        weights,
        live,
    })
}

fn build_per_step(b: &BeliefState, live: HypSet, order: &[Combination]) -> Result<PolicyTree, InferenceError> {
    let space = &b.space;
    if live.len() == 1 {
        return Ok(PolicyTree::leaf(space.get(live.first().unwrap())));
    }
    let even = BeliefState::uniform_over(space.clone(), live);
    let weighted = restricted(b, live);
    let mut best: Option<(f64, f64, Combination)> = None;
    for &c in order {
        let (on, off) = space.split(live, c);
        if on.is_empty() || off.is_empty() {
            continue;
        }
        let lit_gain = info_gain(&even, &TestOutcome::new(c, Observation::DetectorOn))?;
        let eig = weighted
            .as_ref()
            .map_or(0.0, |w| expected_info_gain(w, MacroAction::new(c)));
        let better = match best {
            None => true,
            Some((g, e, _)) => lit_gain > g + SCORE_EPS || (lit_gain > g - SCORE_EPS && eig > e + SCORE_EPS),
        };
        if better {
            best = Some((lit_gain, eig, c));
        }
    }
    let Some((_, _, c)) = best else {
        let (i, j) = space
            .indistinguishable_pair(live)
            .expect("live set with no separating test has an indistinguishable pair");
        return Err(InferenceError::Indistinguishable(space.get(i), space.get(j)));
    };
    let (on, off) = space.split(live, c);
    Ok(PolicyTree::node(
        c,
        build_per_step(b, on, order)?,
        build_per_step(b, off, order)?,
    ))
}
