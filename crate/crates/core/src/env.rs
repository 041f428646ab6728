//! The blicket machine as a step/reset environment.
//!
//! Actions are encoded as integers: `place(i) = 2i`, `remove(i) = 2i + 1`,
//! `check = 2n`. With three objects that is the seven-action space 0..=6.
//! Transitions are pure: `step` takes a state and returns the next one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal::{CausalStructure, Combination, ObjectId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("action id {id} out of range for {n_objects} objects")]
    InvalidAction { id: usize, n_objects: usize },
    #[error("object {0} out of range")]
    ObjectOutOfRange(ObjectId),
    #[error("combination {0} out of range")]
    CombinationOutOfRange(Combination),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvAction {
    Place(ObjectId),
    Remove(ObjectId),
    Check,
}

impl EnvAction {
    pub fn id(self, n_objects: usize) -> usize {
        match self {
            EnvAction::Place(o) => 2 * o.index(),
            EnvAction::Remove(o) => 2 * o.index() + 1,
            EnvAction::Check => 2 * n_objects,
        }
    }

    pub fn from_id(id: usize, n_objects: usize) -> Result<EnvAction, EnvError> {
        match id {
            _ if id == 2 * n_objects => Ok(EnvAction::Check),
            _ if id < 2 * n_objects => {
                let o = ObjectId((id / 2) as u8);
                Ok(if id.is_multiple_of(2) {
                    EnvAction::Place(o)
                } else {
                    EnvAction::Remove(o)
                })
            }
            _ => Err(EnvError::InvalidAction { id, n_objects }),
        }
    }

    pub fn count(n_objects: usize) -> usize {
        2 * n_objects + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Observation {
    #[serde(rename = "on")]
    DetectorOn,
    #[serde(rename = "off")]
    DetectorOff,
}

impl Observation {
    pub fn from_lit(lit: bool) -> Self {
        if lit {
            Observation::DetectorOn
        } else {
            Observation::DetectorOff
        }
    }

    pub fn is_on(self) -> bool {
        self == Observation::DetectorOn
    }

    pub fn label(self) -> &'static str {
        match self {
            Observation::DetectorOn => "on",
            Observation::DetectorOff => "off",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Light {
    Off,
    On,
    Unknown,
}

/// What the actor sees. The hidden structure is deliberately absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorView {
    pub on_detector: Vec<ObjectId>,
    pub light: Light,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvState {
    n_objects: usize,
    on_detector: Vec<ObjectId>,
    light: Light,
    hidden_truth: CausalStructure,
    step_count: u64,
}

/// Fresh episode. The seed is accepted for interface stability; the detector
/// is deterministic so it does not affect anything.
pub fn reset(truth: CausalStructure, n_objects: usize, _seed: u64) -> EnvState {
    EnvState {
        n_objects: n_objects.max(truth.min_objects()),
        on_detector: Vec::new(),
        light: Light::Unknown,
        hidden_truth: truth,
        step_count: 0,
    }
}

impl EnvState {
    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    /// Objects on the detector in placement order.
    pub fn on_detector(&self) -> &[ObjectId] {
        &self.on_detector
    }

    pub fn combination(&self) -> Combination {
        Combination::from_objects(self.on_detector.iter().copied())
    }

    pub fn light(&self) -> Light {
        self.light
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn hidden_truth(&self) -> CausalStructure {
        self.hidden_truth
    }

    pub fn view(&self) -> ActorView {
        ActorView {
            on_detector: self.on_detector.clone(),
            light: self.light,
            steps: self.step_count,
        }
    }

    fn check_object(&self, o: ObjectId) -> Result<(), EnvError> {
        if o.index() < self.n_objects {
            Ok(())
        } else {
            Err(EnvError::ObjectOutOfRange(o))
        }
    }

    /// Apply one action. Redundant placements and removals are no-ops that
    /// still count as steps and still clear the light.
    pub fn step(&self, action: EnvAction) -> Result<(EnvState, Option<Observation>), EnvError> {
        let mut next = self.clone();
        next.step_count += 1;
        let obs = match action {
            EnvAction::Place(o) => {
                self.check_object(o)?;
                if !next.on_detector.contains(&o) {
                    next.on_detector.push(o);
                }
                next.light = Light::Unknown;
                None
            }
            EnvAction::Remove(o) => {
                self.check_object(o)?;
                next.on_detector.retain(|&x| x != o);
                next.light = Light::Unknown;
                None
            }
            EnvAction::Check => {
                let obs = Observation::from_lit(self.hidden_truth.activates(self.combination()));
                next.light = if obs.is_on() { Light::On } else { Light::Off };
                Some(obs)
            }
        };
        Ok((next, obs))
    }

    pub fn step_id(&self, id: usize) -> Result<(EnvState, Option<Observation>), EnvError> {
        self.step(EnvAction::from_id(id, self.n_objects)?)
    }

    pub fn run_macro(&self, m: MacroAction) -> Result<(EnvState, Observation), EnvError> {
        if !m.combination.fits(self.n_objects) {
            return Err(EnvError::CombinationOutOfRange(m.combination));
        }
        let mut state = self.clone();
        let mut last = None;
        for a in m.expand(self) {
            let (s, obs) = state.step(a)?;
            state = s;
            last = obs;
        }
        Ok((state, last.expect("macro expansion ends with a check")))
    }
}

/// Put exactly `combination` on the detector and press check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacroAction {
    pub combination: Combination,
}

impl MacroAction {
    pub fn new(combination: Combination) -> Self {
        MacroAction { combination }
    }

    /// Removals of stray objects (in placement order), then placements of the
    /// missing members (ascending), then the check.
    pub fn expand(&self, state: &EnvState) -> Vec<EnvAction> {
        let mut actions: Vec<EnvAction> = state
            .on_detector
            .iter()
            .filter(|o| !self.combination.contains(**o))
            .map(|&o| EnvAction::Remove(o))
            .collect();
        let present = state.combination();
        actions.extend(
            self.combination
                .objects()
                .filter(|o| !present.contains(*o))
                .map(EnvAction::Place),
        );
        actions.push(EnvAction::Check);
        actions
    }
}
