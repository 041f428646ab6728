//! Demonstration scripts shown before exploration.
//!
//! Scripts are data: each machine declares its structure and every
//! demonstration must agree with it. Clients receive the demonstrations
//! without the declared structures.

use std::collections::BTreeMap;

use blicket_core::{CausalStructure, Combination, Condition, ObjectId, Observation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DemoError {
    #[error("script {0}: {1}")]
    Parse(String, String),
    #[error("script {script}, machine {machine}, demonstration {index}: {structure} gives {expected:?}, script says {declared:?}")]
    Inconsistent {
        script: String,
        machine: String,
        index: usize,
        structure: CausalStructure,
        expected: Observation,
        declared: Observation,
    },
    #[error("script {script}, machine {machine}, demonstration {index}: object placed twice")]
    RepeatedObject {
        script: String,
        machine: String,
        index: usize,
    },
    #[error("unknown demo script {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    /// Placement order.
    pub order: Vec<ObjectId>,
    pub outcome: Observation,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct DemoMachine {
    pub name: String,
    pub structure: CausalStructure,
    pub demonstrations: Vec<Demonstration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct DemoScript {
    pub id: String,
    #[serde(default)]
    pub reconstructed: bool,
    #[serde(default)]
    pub note: String,
    pub machines: Vec<DemoMachine>,
}

/// What the client is shown for one machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineView {
    pub name: String,
    pub demonstrations: Vec<Demonstration>,
}

impl DemoScript {
    pub fn parse(text: &str) -> Result<Self, DemoError> {
        let script: DemoScript =
            serde_json::from_str(text).map_err(|e| DemoError::Parse("?".into(), e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), DemoError> {
        for m in &self.machines {
            for (index, d) in m.demonstrations.iter().enumerate() {
                let c = Combination::from_objects(d.order.iter().copied());
                if c.len() != d.order.len() {
                    return Err(DemoError::RepeatedObject {
                        script: self.id.clone(),
                        machine: m.name.clone(),
                        index,
                    });
                }
                let expected = Observation::from_lit(m.structure.activates(c));
                if expected != d.outcome {
                    return Err(DemoError::Inconsistent {
                        script: self.id.clone(),
                        machine: m.name.clone(),
                        index,
                        structure: m.structure,
                        expected,
                        declared: d.outcome,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn views(&self) -> Vec<MachineView> {
        self.machines
            .iter()
            .map(|m| MachineView {
                name: m.name.clone(),
                demonstrations: m.demonstrations.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DemoLibrary {
    scripts: BTreeMap<String, DemoScript>,
}

impl DemoLibrary {
    /// The shipped scripts: `given` demonstrates one disjunctive and one
    /// conjunctive machine, `not_given` shows evidence both kinds explain.
    pub fn defaults() -> Self {
        let mut lib = DemoLibrary {
            scripts: BTreeMap::new(),
        };
        for text in [include_str!("../demos/given.json"), include_str!("../demos/not_given.json")] {
            lib.insert(DemoScript::parse(text).expect("shipped demo script is valid"));
        }
        lib
    }

    pub fn insert(&mut self, script: DemoScript) {
        self.scripts.insert(script.id.clone(), script);
    }

    pub fn get(&self, id: &str) -> Result<&DemoScript, DemoError> {
        self.scripts.get(id).ok_or_else(|| DemoError::Unknown(id.to_string()))
    }

    pub fn for_condition(&self, condition: Condition) -> &DemoScript {
        let id = if condition.hypothesis_given { "given" } else { "not_given" };
        &self.scripts[id]
    }
}
