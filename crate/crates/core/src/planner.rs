//! Minimum-expected-steps exploration via exhaustive AND-OR search.
//!
//! The search runs over sets of live structures. A test splits a set into
//! the structures that light the detector and those that do not; the cost
//! of a set is one step for every live structure plus the cost of both
//! halves. Because likelihoods are 0/1, the belief at any node is the prior
//! restricted to the node's live set, so costs are memoized on the set alone.
//!
//! Costs are compared lexicographically:
//! 1. total depth with every live structure counted once,
//! 2. total prior-weighted depth (exact rationals),
//! 3. the test that lights for more live structures,
//! 4. [`tie_break_order`](crate::inference::tie_break_order).
//!
//! Structures with zero prior weight are still live: the policy resolves
//! them too, and the prior decides among equally short plans and weights the
//! reported expectation.

use std::cmp::Reverse;
use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::causal::{ratio_to_f64, CausalStructure, Combination, HypSet, HypothesisSpace, Prior};
use crate::inference::tie_break_order;
use crate::policy::{PolicyError, PolicyTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("hypotheses {0} and {1} cannot be told apart")]
    Indistinguishable(CausalStructure, CausalStructure),
    #[error("malformed tree: {0}")]
    MalformedTree(#[from] PolicyError),
    #[error("depth cap {0} reached before every structure was identified")]
    CapTooSmall(usize),
    #[error("oracle limits exceeded: {0}")]
    TooLarge(String),
}

/// Summed leaf depths of a subtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cost {
    count: u64,
    weighted: Rational64,
}

impl Cost {
    const ZERO: Cost = Cost {
        count: 0,
        weighted: Rational64::ZERO,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub tree: PolicyTree,
    pub expected_steps: Rational64,
}

impl PlanResult {
    pub fn expected_steps_f64(&self) -> f64 {
        ratio_to_f64(self.expected_steps)
    }

    pub fn summary(&self, prior: &Prior, model: &str) -> PlanSummary {
        PlanSummary {
            prior: prior.name().to_string(),
            model: model.to_string(),
            expected_steps: (self.expected_steps_f64() * 100.0).round() / 100.0,
            expected_steps_exact: self.expected_steps.to_string(),
            node_count: self.tree.node_count(),
            max_depth: self.tree.max_depth(),
        }
    }
}

/// Serialized form of a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSummary {
    pub prior: String,
    pub model: String,
    pub expected_steps: f64,
    pub expected_steps_exact: String,
    pub node_count: usize,
    pub max_depth: usize,
}

struct Search<'a> {
    space: &'a HypothesisSpace,
    weights: &'a [Rational64],
    order: Vec<Combination>,
    memo: HashMap<HypSet, (Cost, Option<Combination>)>,
}

impl Search<'_> {
    fn mass(&self, set: HypSet) -> Rational64 {
        set.iter().map(|i| self.weights[i]).sum()
    }

    fn solve(&mut self, live: HypSet) -> Result<Cost, PlanError> {
        if live.len() <= 1 {
            return Ok(Cost::ZERO);
        }
        if let Some((cost, _)) = self.memo.get(&live) {
            return Ok(*cost);
        }
        let here = Cost {
            count: live.len() as u64,
            weighted: self.mass(live),
        };
        let mut best: Option<((Cost, Reverse<usize>), Combination)> = None;
        for k in 0..self.order.len() {
            let c = self.order[k];
            let (on, off) = self.space.split(live, c);
            if on.is_empty() || off.is_empty() {
                continue;
            }
            let a = self.solve(on)?;
            let b = self.solve(off)?;
            let total = Cost {
                count: here.count + a.count + b.count,
                weighted: here.weighted + a.weighted + b.weighted,
            };
            let key = (total, Reverse(on.len()));
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, c));
            }
        }
        let Some(((cost, _), c)) = best else {
            let (i, j) = self
                .space
                .indistinguishable_pair(live)
                .expect("unsplittable live set has an indistinguishable pair");
            return Err(PlanError::Indistinguishable(self.space.get(i), self.space.get(j)));
        };
        self.memo.insert(live, (cost, Some(c)));
        Ok(cost)
    }

    fn tree(&self, live: HypSet) -> PolicyTree {
        if live.len() == 1 {
            return PolicyTree::leaf(self.space.get(live.first().unwrap()));
        }
        let c = self.memo[&live].1.expect("solved node has an action");
        let (on, off) = self.space.split(live, c);
        PolicyTree::node(c, self.tree(on), self.tree(off))
    }
}

/// Exact minimum-expected-steps policy for `prior`.
pub fn min_step_policy(prior: &Prior) -> Result<PlanResult, PlanError> {
    let space = prior.space();
    let mut search = Search {
        space,
        weights: prior.weights(),
        order: tie_break_order(space.n_objects()),
        memo: HashMap::new(),
    };
    let root = space.all();
    let cost = search.solve(root)?;
    Ok(PlanResult {
        tree: search.tree(root),
        expected_steps: cost.weighted,
    })
}

/// Prior-weighted mean number of tests until identification.
///
/// Every structure with positive weight must reach its own leaf.
pub fn expected_steps(tree: &PolicyTree, prior: &Prior) -> Result<Rational64, PlanError> {
    let space = prior.space();
    let mut total = Rational64::zero();
    for i in prior.support().iter() {
        let depth = tree.depth_of(&space.get(i))?;
        total += prior.weight(i) * Rational64::from_integer(depth as i64);
    }
    Ok(total)
}

pub mod oracle {
    //! Exhaustive search over every policy tree up to a depth cap, for
    //! checking [`min_step_policy`](super::min_step_policy) in tests. No
    //! memoization, no pruning of tests whose outcome is certain, no tie
    //! breaking: the minimum is taken over all trees.

    use super::*;

    fn best(
        space: &HypothesisSpace,
        weights: &[Rational64],
        live: HypSet,
        cap: usize,
    ) -> Option<(u64, Rational64)> {
        if live.len() <= 1 {
            return Some((0, Rational64::zero()));
        }
        if cap == 0 {
            return None;
        }
        let here_w: Rational64 = live.iter().map(|i| weights[i]).sum();
        let mut out: Option<(u64, Rational64)> = None;
        for c in space.combinations() {
            let lit: HypSet = live.iter().filter(|&i| space.get(i).activates(c)).collect();
            let dark = live.difference(lit);
            let (Some(a), Some(b)) = (
                best(space, weights, lit, cap - 1),
                best(space, weights, dark, cap - 1),
            ) else {
                continue;
            };
            let cand = (live.len() as u64 + a.0 + b.0, here_w + a.1 + b.1);
            if out.is_none_or(|o| cand < o) {
                out = Some(cand);
            }
        }
        out
    }

    /// Minimal expected steps over all trees of depth at most `depth_cap`,
    /// under the same lexicographic objective as the planner.
    pub fn brute_force_min(prior: &Prior, depth_cap: usize) -> Result<Rational64, PlanError> {
        let space = prior.space();
        if space.len() > 12 || depth_cap > 6 {
            return Err(PlanError::TooLarge(format!(
                "{} hypotheses, cap {depth_cap}",
                space.len()
            )));
        }
        best(space, prior.weights(), space.all(), depth_cap)
            .map(|(_, w)| w)
            .ok_or(PlanError::CapTooSmall(depth_cap))
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::brute_force_min;
    use super::*;
    use crate::causal::{enumerate_structures, experimental_prior, uniform_prior};
    use std::sync::Arc;

    fn s(x: &str) -> CausalStructure {
        x.parse().unwrap()
    }

    fn c(x: &str) -> Combination {
        Combination::parse(x).unwrap()
    }

    #[test]
    fn single_hypothesis_prior_is_free() {
        let space = Arc::new(HypothesisSpace::new(3, vec![s("AB-con")]).unwrap());
        let plan = min_step_policy(&uniform_prior(space.clone())).unwrap();
        assert!(plan.tree.is_leaf());
        assert_eq!(plan.expected_steps, Rational64::zero());
        assert_eq!(brute_force_min(&uniform_prior(space), 3).unwrap(), Rational64::zero());
    }

    #[test]
    fn one_test_splits_two_hypotheses() {
        let space = Arc::new(HypothesisSpace::new(3, vec![s("A-dis"), s("B-dis")]).unwrap());
        let prior = uniform_prior(space);
        let tree = PolicyTree::node(c("A"), PolicyTree::leaf(s("A-dis")), PolicyTree::leaf(s("B-dis")));
        assert_eq!(expected_steps(&tree, &prior).unwrap(), Rational64::from_integer(1));
        let plan = min_step_policy(&prior).unwrap();
        assert_eq!(plan.expected_steps, Rational64::from_integer(1));
    }

    #[test]
    fn two_object_space_matches_oracle() {
        let space = Arc::new(enumerate_structures(2).unwrap());
        let prior = uniform_prior(space);
        let plan = min_step_policy(&prior).unwrap();
        assert_eq!(plan.expected_steps, Rational64::from_integer(2));
        assert_eq!(brute_force_min(&prior, 4).unwrap(), plan.expected_steps);
    }

    #[test]
    fn reported_values() {
        let space = Arc::new(enumerate_structures(3).unwrap());
        let u = min_step_policy(&uniform_prior(space.clone())).unwrap();
        assert_eq!(u.expected_steps, Rational64::new(39, 11));
        let e = min_step_policy(&experimental_prior(space).unwrap()).unwrap();
        assert_eq!(e.expected_steps, Rational64::new(21, 6));
    }

    #[test]
    fn malformed_tree_rejected() {
        let space = Arc::new(enumerate_structures(2).unwrap());
        let prior = uniform_prior(space);
        let tree = PolicyTree::node(c("A"), PolicyTree::leaf(s("A-dis")), PolicyTree::leaf(s("B-dis")));
        assert!(matches!(
            expected_steps(&tree, &prior),
            Err(PlanError::MalformedTree(_))
        ));
    }

    #[test]
    fn cap_too_small() {
        let space = Arc::new(enumerate_structures(3).unwrap());
        assert_eq!(
            brute_force_min(&uniform_prior(space), 3),
            Err(PlanError::CapTooSmall(3))
        );
    }

    #[test]
    fn plan_is_valid_tree() {
        let space = Arc::new(enumerate_structures(3).unwrap());
        let plan = min_step_policy(&uniform_prior(space.clone())).unwrap();
        plan.tree.validate(&space, space.all()).unwrap();
        assert_eq!(plan.tree.leaf_count(), 11);
        let summary = plan.summary(&uniform_prior(space), "min-step");
        assert_eq!(summary.expected_steps, 3.55);
        assert_eq!(summary.expected_steps_exact, "39/11");
    }
}
