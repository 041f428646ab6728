//! Blicket-detector toolkit: causal structures, the detector environment,
//! Bayesian belief updates, exploration policies and exploration-trace
//! metrics.

pub mod causal;
pub mod env;
pub mod inference;
pub mod planner;
pub mod policy;
pub mod traces;

pub use causal::{
    enumerate_structures, experimental_prior, uniform_prior, CausalError, CausalStructure,
    Combination, HypSet, HypothesisSpace, ObjectId, ObjectPermutation, OverhypothesisKind, Prior,
};
pub use env::{reset, ActorView, EnvAction, EnvError, EnvState, Light, MacroAction, Observation};
pub use inference::{
    expected_info_gain, info_gain, kl_divergence, likelihood, per_step_policy, posterior_update,
    BeliefState, InferenceError, TestOutcome,
};
pub use planner::{expected_steps, min_step_policy, PlanError, PlanResult, PlanSummary};
pub use policy::{equivalent_up_to_relabeling, PolicyError, PolicyPath, PolicyTree, Skeleton};
pub use traces::{
    blicket_rates, condition_stats, count_checks, disambiguation_sufficient, effective_checks,
    empty_check, order_variation, parse_jsonl, time_to_first_success, two_proportion_z,
    unique_combinations, validate, Answers, Condition, EventKind, SessionTrace, TraceError,
    TraceEvent,
};
