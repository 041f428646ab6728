//! Observation-branching policy trees.
//!
//! Every internal node tests one combination and branches on the detector
//! outcome; every leaf names the single structure left standing. Both
//! exploration policies produce this type.

use std::fmt::Write as _;

use num_rational::Rational64;
use serde::Deserialize;
use thiserror::Error;

use crate::causal::{
    CausalStructure, Combination, HypSet, HypothesisSpace, ObjectPermutation, Prior,
};
use crate::env::Observation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("no consistent path for {0}")]
    NoPath(CausalStructure),
    #[error("{reached} reaches the leaf for {identified}")]
    WrongLeaf {
        reached: CausalStructure,
        identified: CausalStructure,
    },
    #[error("branch {observation} of test {action} is unreachable")]
    EmptyBranch {
        action: Combination,
        observation: &'static str,
    },
    #[error("leaf {0} is reached by {1} structures")]
    AmbiguousLeaf(CausalStructure, usize),
    #[error("a leaf is reached by {0} structures")]
    UnresolvedLeaf(usize),
    #[error("bad test {0:?}")]
    BadAction(String),
}

/// A policy written as tests only, e.g. `{"test":"C","on":null,"off":{...}}`.
/// Leaves are filled in from whatever structure is left at each one.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Skeleton {
    pub test: String,
    #[serde(default)]
    pub on: Option<Box<Skeleton>>,
    #[serde(default)]
    pub off: Option<Box<Skeleton>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyTree {
    Leaf {
        identified: CausalStructure,
    },
    Node {
        action: Combination,
        on: Box<PolicyTree>,
        off: Box<PolicyTree>,
    },
}

/// One root-to-leaf walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyPath {
    pub steps: Vec<(Combination, Observation)>,
    pub identified: CausalStructure,
}

impl PolicyTree {
    pub fn leaf(identified: CausalStructure) -> Self {
        PolicyTree::Leaf { identified }
    }

    pub fn node(action: Combination, on: PolicyTree, off: PolicyTree) -> Self {
        PolicyTree::Node {
            action,
            on: Box::new(on),
            off: Box::new(off),
        }
    }

    /// Complete a skeleton over `live`. Fails if a leaf is left with more
    /// than one structure or a branch with none.
    pub fn from_skeleton(
        space: &HypothesisSpace,
        live: HypSet,
        skeleton: Option<&Skeleton>,
    ) -> Result<PolicyTree, PolicyError> {
        let Some(sk) = skeleton else {
            return match live.len() {
                1 => Ok(PolicyTree::leaf(space.get(live.first().unwrap()))),
                n => Err(PolicyError::UnresolvedLeaf(n)),
            };
        };
        let action = Combination::parse(&sk.test).map_err(|_| PolicyError::BadAction(sk.test.clone()))?;
        if !action.fits(space.n_objects()) {
            return Err(PolicyError::BadAction(sk.test.clone()));
        }
        let (lit, dark) = space.split(live, action);
        for (set, observation) in [(lit, "on"), (dark, "off")] {
            if set.is_empty() {
                return Err(PolicyError::EmptyBranch { action, observation });
            }
        }
        Ok(PolicyTree::node(
            action,
            PolicyTree::from_skeleton(space, lit, sk.on.as_deref())?,
            PolicyTree::from_skeleton(space, dark, sk.off.as_deref())?,
        ))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, PolicyTree::Leaf { .. })
    }

    pub fn root_action(&self) -> Option<Combination> {
        match self {
            PolicyTree::Leaf { .. } => None,
            PolicyTree::Node { action, .. } => Some(*action),
        }
    }

    pub fn branch(&self, obs: Observation) -> Option<&PolicyTree> {
        match self {
            PolicyTree::Leaf { .. } => None,
            PolicyTree::Node { on, off, .. } => Some(if obs.is_on() { on } else { off }),
        }
    }

    /// Number of test nodes.
    pub fn node_count(&self) -> usize {
        match self {
            PolicyTree::Leaf { .. } => 0,
            PolicyTree::Node { on, off, .. } => 1 + on.node_count() + off.node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PolicyTree::Leaf { .. } => 1,
            PolicyTree::Node { on, off, .. } => on.leaf_count() + off.leaf_count(),
        }
    }

    pub fn max_depth(&self) -> usize {
        match self {
            PolicyTree::Leaf { .. } => 0,
            PolicyTree::Node { on, off, .. } => 1 + on.max_depth().max(off.max_depth()),
        }
    }

    /// Follow the outcomes `truth` would produce. Returns the number of tests
    /// run and the structure named at the leaf.
    pub fn route(&self, truth: &CausalStructure) -> (usize, CausalStructure) {
        let mut node = self;
        let mut depth = 0;
        loop {
            match node {
                PolicyTree::Leaf { identified } => return (depth, *identified),
                PolicyTree::Node { action, on, off } => {
                    node = if truth.activates(*action) { on } else { off };
                    depth += 1;
                }
            }
        }
    }

    /// Tests run before `truth` is identified; errors if the walk ends at
    /// another structure's leaf.
    pub fn depth_of(&self, truth: &CausalStructure) -> Result<usize, PolicyError> {
        let (depth, identified) = self.route(truth);
        if identified == *truth {
            Ok(depth)
        } else {
            Err(PolicyError::WrongLeaf {
                reached: *truth,
                identified,
            })
        }
    }

    /// Check that the tree fully resolves `live`: every branch is reachable
    /// and each leaf is reached by exactly the structure it names.
    pub fn validate(&self, space: &HypothesisSpace, live: HypSet) -> Result<(), PolicyError> {
        match self {
            PolicyTree::Leaf { identified } => {
                if live.len() != 1 {
                    return Err(PolicyError::AmbiguousLeaf(*identified, live.len()));
                }
                let only = space.get(live.first().unwrap());
                if only != *identified {
                    return Err(PolicyError::WrongLeaf {
                        reached: only,
                        identified: *identified,
                    });
                }
                Ok(())
            }
            PolicyTree::Node { action, on, off } => {
                let (lit, dark) = space.split(live, *action);
                for (set, obs) in [(lit, "on"), (dark, "off")] {
                    if set.is_empty() {
                        return Err(PolicyError::EmptyBranch {
                            action: *action,
                            observation: obs,
                        });
                    }
                }
                on.validate(space, lit)?;
                off.validate(space, dark)
            }
        }
    }

    pub fn paths(&self) -> Vec<PolicyPath> {
        fn rec(t: &PolicyTree, prefix: &mut Vec<(Combination, Observation)>, out: &mut Vec<PolicyPath>) {
            match t {
                PolicyTree::Leaf { identified } => out.push(PolicyPath {
                    steps: prefix.clone(),
                    identified: *identified,
                }),
                PolicyTree::Node { action, on, off } => {
                    for (obs, child) in [(Observation::DetectorOn, on), (Observation::DetectorOff, off)] {
                        prefix.push((*action, obs));
                        rec(child, prefix, out);
                        prefix.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        rec(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn relabel(&self, perm: &ObjectPermutation) -> PolicyTree {
        match self {
            PolicyTree::Leaf { identified } => PolicyTree::leaf(identified.permute(perm)),
            PolicyTree::Node { action, on, off } => {
                PolicyTree::node(perm.apply(*action), on.relabel(perm), off.relabel(perm))
            }
        }
    }

    /// Tabular layout: one row per leaf, reading left to right as test,
    /// outcome, next test. Cells shared with the previous row are blank.
    pub fn to_text(&self) -> String {
        fn test_label(c: Combination) -> String {
            let objs: Vec<String> = c.objects().map(|o| o.label().to_string()).collect();
            match objs.len() {
                0 => "Test empty detector".to_string(),
                1 => format!("Test Object {}", objs[0]),
                _ => format!("Test Objects {}", objs.join(",")),
            }
        }
        let paths = self.paths();
        if paths.len() == 1 && paths[0].steps.is_empty() {
            return format!("Done: {}\n", paths[0].identified);
        }
        let rows: Vec<Vec<String>> = paths
            .iter()
            .map(|p| {
                let mut cells = vec![test_label(p.steps[0].0)];
                for (k, (_, obs)) in p.steps.iter().enumerate() {
                    let outcome = format!("(Detector {})", obs.label());
                    cells.push(match p.steps.get(k + 1) {
                        Some((next, _)) => format!("{outcome} - {}", test_label(*next)),
                        None => format!("{outcome} Done: {}", p.identified),
                    });
                }
                cells
            })
            .collect();
        let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut widths = vec![0; ncols];
        for row in &rows {
            for (i, c) in row.iter().enumerate() {
                widths[i] = widths[i].max(c.len());
            }
        }
        let mut out = String::new();
        let mut prev: Option<&PolicyPath> = None;
        for (row, path) in rows.iter().zip(&paths) {
            // columns 0..=shared are the same tests and outcomes as the row above
            let shared = prev.map_or(0, |p| {
                p.steps
                    .iter()
                    .zip(&path.steps)
                    .take_while(|(a, b)| a == b)
                    .count()
            });
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let text = if prev.is_some() && i <= shared { "" } else { c.as_str() };
                    format!("{:width$}", text, width = widths[i])
                })
                .collect();
            out.push_str(cells.join(" | ").trim_end());
            out.push('\n');
            prev = Some(path);
        }
        out
    }

    pub fn to_dot(&self, name: &str) -> String {
        fn rec(t: &PolicyTree, id: &mut usize, out: &mut String) -> usize {
            let me = *id;
            *id += 1;
            match t {
                PolicyTree::Leaf { identified } => {
                    let _ = writeln!(out, "  n{me} [shape=box, label=\"{identified}\"];");
                }
                PolicyTree::Node { action, on, off } => {
                    let _ = writeln!(out, "  n{me} [label=\"test {action}\"];");
                    let a = rec(on, id, out);
                    let _ = writeln!(out, "  n{me} -> n{a} [label=\"on\"];");
                    let b = rec(off, id, out);
                    let _ = writeln!(out, "  n{me} -> n{b} [label=\"off\", style=dashed];");
                }
            }
            me
        }
        let mut out = format!("digraph \"{name}\" {{\n");
        rec(self, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }
}

/// Relabelings that map `live` onto itself and keep every weight.
pub fn symmetries(space: &HypothesisSpace, live: HypSet, weights: &[Rational64]) -> Vec<ObjectPermutation> {
    ObjectPermutation::all(space.n_objects())
        .into_iter()
        .filter(|p| {
            live.iter().all(|i| match space.permuted_index(i, p) {
                Some(j) => live.contains(j) && weights[j] == weights[i],
                None => false,
            })
        })
        .collect()
}

/// Whether two trees describe the same policy up to object relabeling.
///
/// Tests are compared by the partition they induce on the live structures,
/// so `A` and `AC` are interchangeable when they split the same set. At each
/// node the right-hand tree may be matched under any relabeling that is a
/// symmetry of that node's live set and weights; the root's symmetries
/// include every relabeling when the prior is symmetric.
pub fn equivalent_up_to_relabeling(a: &PolicyTree, b: &PolicyTree, prior: &Prior) -> bool {
    fn rec(a: &PolicyTree, b: &PolicyTree, space: &HypothesisSpace, live: HypSet, w: &[Rational64]) -> bool {
        match (a, b) {
            (PolicyTree::Leaf { .. }, PolicyTree::Leaf { .. }) => true,
            (
                PolicyTree::Node { .. },
                PolicyTree::Node {
                    action: b_action,
                    on: b_on,
                    off: b_off,
                },
            ) => {
                let target = space.split(live, *b_action);
                symmetries(space, live, w).iter().any(|p| {
                    let pa = a.relabel(p);
                    let PolicyTree::Node { action, on, off } = &pa else {
                        unreachable!()
                    };
                    space.split(live, *action) == target
                        && rec(on, b_on, space, target.0, w)
                        && rec(off, b_off, space, target.1, w)
                })
            }
            _ => false,
        }
    }
    let space = prior.space();
    rec(a, b, space, space.all(), prior.weights())
}
