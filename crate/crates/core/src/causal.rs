//! Objects, combinations, causal structures and hypothesis spaces.
//!
//! A [`CausalStructure`] is one ground-truth rule for the detector: which
//! objects are blickets and whether one (disjunctive) or two (conjunctive)
//! of them are needed to light it. Placement order never matters here; the
//! order children used is kept only in traces.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest object count a [`HypothesisSpace`] can be enumerated for. Seven
/// objects would produce 247 structures, which no longer fits a [`HypSet`].
pub const MAX_OBJECTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CausalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("object {object} out of range for {n_objects} objects")]
    ObjectOutOfRange { object: usize, n_objects: usize },
    #[error("conjunctive structure needs at least two blickets, got {0}")]
    DegenerateConjunctive(String),
    #[error("structure has no blickets")]
    EmptyBlickets,
    #[error("cannot parse structure {0:?}")]
    Parse(String),
    #[error("hypotheses {0} and {1} are indistinguishable")]
    Indistinguishable(CausalStructure, CausalStructure),
    #[error("duplicate hypothesis {0}")]
    Duplicate(CausalStructure),
    #[error("prior weights invalid: {0}")]
    InvalidPrior(String),
}

/// Index of an object. Objects print as capital letters, `A` for index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u8);

impl ObjectId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn from_label(c: char) -> Option<ObjectId> {
        let c = c.to_ascii_uppercase();
        if c.is_ascii_uppercase() && (c as u8 - b'A') < 26 {
            Some(ObjectId(c as u8 - b'A'))
        } else {
            None
        }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl Serialize for ObjectId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label().to_string())
    }
}

impl<'de> Deserialize<'de> for ObjectId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => ObjectId::from_label(c)
                .ok_or_else(|| serde::de::Error::custom(format!("bad object label {s:?}"))),
            _ => Err(serde::de::Error::custom(format!("bad object label {s:?}"))),
        }
    }
}

/// An unordered set of objects, stored as a bitmask (bit `i` = object `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Combination(pub u32);

impl Combination {
    pub const EMPTY: Combination = Combination(0);

    pub fn full(n_objects: usize) -> Combination {
        Combination(((1u64 << n_objects) - 1) as u32)
    }

    pub fn from_objects<I: IntoIterator<Item = ObjectId>>(objects: I) -> Combination {
        Combination(objects.into_iter().fold(0, |m, o| m | (1 << o.0)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, o: ObjectId) -> bool {
        self.0 >> o.0 & 1 == 1
    }

    pub fn intersection(self, other: Combination) -> Combination {
        Combination(self.0 & other.0)
    }

    pub fn is_subset(self, other: Combination) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending index order.
    pub fn objects(self) -> impl Iterator<Item = ObjectId> {
        let bits = self.0;
        (0..32u8).filter(move |i| bits >> i & 1 == 1).map(ObjectId)
    }

    /// Every combination over `n_objects`, bitmask ascending.
    pub fn all(n_objects: usize) -> impl Iterator<Item = Combination> {
        (0..(1u32 << n_objects)).map(Combination)
    }

    pub fn fits(self, n_objects: usize) -> bool {
        self.0 >> n_objects == 0
    }

    /// Concatenated labels, e.g. `"AB"`; `"{}"` for the empty set.
    pub fn label(self) -> String {
        if self.is_empty() {
            "{}".to_string()
        } else {
            self.objects().map(ObjectId::label).collect()
        }
    }

    pub fn parse(s: &str) -> Result<Combination, CausalError> {
        let s = s.trim();
        if s == "{}" || s.is_empty() {
            return Ok(Combination::EMPTY);
        }
        let mut mask = 0u32;
        for c in s.chars().filter(|c| !matches!(c, ',' | ' ')) {
            let o = ObjectId::from_label(c).ok_or_else(|| CausalError::Parse(s.to_string()))?;
            if mask >> o.0 & 1 == 1 {
                return Err(CausalError::Parse(s.to_string()));
            }
            mask |= 1 << o.0;
        }
        Ok(Combination(mask))
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverhypothesisKind {
    Disjunctive,
    Conjunctive,
}

impl OverhypothesisKind {
    /// Number of blickets that must be on the detector together.
    pub fn threshold(self) -> usize {
        match self {
            OverhypothesisKind::Disjunctive => 1,
            OverhypothesisKind::Conjunctive => 2,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            OverhypothesisKind::Disjunctive => "dis",
            OverhypothesisKind::Conjunctive => "con",
        }
    }
}

/// One hypothesis about how the detector works.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CausalStructure {
    kind: OverhypothesisKind,
    blickets: Combination,
}

impl CausalStructure {
    pub fn new(kind: OverhypothesisKind, blickets: Combination) -> Result<Self, CausalError> {
        if blickets.is_empty() {
            return Err(CausalError::EmptyBlickets);
        }
        if blickets.len() < kind.threshold() {
            return Err(CausalError::DegenerateConjunctive(format!(
                "{}-{}",
                blickets.label(),
                kind.suffix()
            )));
        }
        Ok(CausalStructure { kind, blickets })
    }

    pub fn kind(&self) -> OverhypothesisKind {
        self.kind
    }

    pub fn blickets(&self) -> Combination {
        self.blickets
    }

    pub fn is_blicket(&self, o: ObjectId) -> bool {
        self.blickets.contains(o)
    }

    /// Whether the detector lights when exactly the objects in `c` are on it.
    pub fn activates(&self, c: Combination) -> bool {
        self.blickets.intersection(c).len() >= self.kind.threshold()
    }

    /// Smallest object count that can hold this structure.
    pub fn min_objects(&self) -> usize {
        32 - self.blickets.0.leading_zeros() as usize
    }

    pub fn permute(&self, perm: &ObjectPermutation) -> CausalStructure {
        CausalStructure {
            kind: self.kind,
            blickets: perm.apply(self.blickets),
        }
    }
}

impl fmt::Display for CausalStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.blickets.label(), self.kind.suffix())
    }
}

impl FromStr for CausalStructure {
    type Err = CausalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (objs, kind) = s
            .trim()
            .rsplit_once('-')
            .ok_or_else(|| CausalError::Parse(s.to_string()))?;
        let kind = match kind.to_ascii_lowercase().as_str() {
            "dis" => OverhypothesisKind::Disjunctive,
            "con" => OverhypothesisKind::Conjunctive,
            _ => return Err(CausalError::Parse(s.to_string())),
        };
        if objs.is_empty() || objs == "{}" {
            return Err(CausalError::Parse(s.to_string()));
        }
        CausalStructure::new(kind, Combination::parse(objs)?)
    }
}

impl Serialize for CausalStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CausalStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A relabeling of objects: object `i` becomes `mapping[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObjectPermutation(Vec<u8>);

impl ObjectPermutation {
    pub fn new(mapping: Vec<u8>) -> Result<Self, CausalError> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            match seen.get_mut(m as usize) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(CausalError::InvalidArgument(format!(
                        "{mapping:?} is not a permutation"
                    )))
                }
            }
        }
        Ok(ObjectPermutation(mapping))
    }

    pub fn identity(n: usize) -> Self {
        ObjectPermutation((0..n as u8).collect())
    }

    /// All `n!` permutations, lexicographic.
    pub fn all(n: usize) -> Vec<ObjectPermutation> {
        fn rec(prefix: &mut Vec<u8>, n: usize, out: &mut Vec<ObjectPermutation>) {
            if prefix.len() == n {
                out.push(ObjectPermutation(prefix.clone()));
                return;
            }
            for i in 0..n as u8 {
                if !prefix.contains(&i) {
                    prefix.push(i);
                    rec(prefix, n, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::with_capacity(n), n, &mut out);
        out
    }

    pub fn map_object(&self, o: ObjectId) -> ObjectId {
        ObjectId(self.0[o.index()])
    }

    pub fn apply(&self, c: Combination) -> Combination {
        Combination::from_objects(c.objects().map(|o| self.map_object(o)))
    }
}

/// A set of hypothesis indices within one [`HypothesisSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HypSet(pub u128);

impl HypSet {
    pub const EMPTY: HypSet = HypSet(0);

    pub fn full(len: usize) -> HypSet {
        if len == 128 {
            HypSet(u128::MAX)
        } else {
            HypSet((1u128 << len) - 1)
        }
    }

    pub fn singleton(i: usize) -> HypSet {
        HypSet(1 << i)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 128 && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn intersection(self, o: HypSet) -> HypSet {
        HypSet(self.0 & o.0)
    }

    pub fn difference(self, o: HypSet) -> HypSet {
        HypSet(self.0 & !o.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn first(self) -> Option<usize> {
        self.iter().next()
    }
}

impl FromIterator<usize> for HypSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = HypSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

/// An ordered, validated list of structures over a fixed number of objects.
///
/// Construction checks that hypotheses are distinct, fit the object range and
/// are pairwise distinguishable by at least one combination. The space also
/// caches, per combination, the set of hypotheses that light the detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisSpace {
    n_objects: usize,
    hypotheses: Vec<CausalStructure>,
    lit_by: Vec<HypSet>,
}

impl HypothesisSpace {
    pub fn new(n_objects: usize, hypotheses: Vec<CausalStructure>) -> Result<Self, CausalError> {
        if n_objects == 0 || n_objects > MAX_OBJECTS {
            return Err(CausalError::InvalidArgument(format!(
                "n_objects must be in 1..={MAX_OBJECTS}, got {n_objects}"
            )));
        }
        if hypotheses.is_empty() {
            return Err(CausalError::InvalidArgument("empty hypothesis space".into()));
        }
        if hypotheses.len() > 128 {
            return Err(CausalError::InvalidArgument(format!(
                "at most 128 hypotheses supported, got {}",
                hypotheses.len()
            )));
        }
        for h in &hypotheses {
            if !h.blickets.fits(n_objects) {
                return Err(CausalError::ObjectOutOfRange {
                    object: h.min_objects() - 1,
                    n_objects,
                });
            }
        }
        let rows: Vec<u64> = hypotheses
            .iter()
            .map(|h| {
                Combination::all(n_objects)
                    .filter(|&c| h.activates(c))
                    .fold(0u64, |row, c| row | 1 << c.0)
            })
            .collect();
        for i in 0..hypotheses.len() {
            for j in i + 1..hypotheses.len() {
                if hypotheses[i] == hypotheses[j] {
                    return Err(CausalError::Duplicate(hypotheses[i]));
                }
                if rows[i] == rows[j] {
                    return Err(CausalError::Indistinguishable(hypotheses[i], hypotheses[j]));
                }
            }
        }
        let lit_by = Combination::all(n_objects)
            .map(|c| {
                hypotheses
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| h.activates(c))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Ok(HypothesisSpace {
            n_objects,
            hypotheses,
            lit_by,
        })
    }

    /// All non-degenerate structures over `n_objects`: the disjunctive block
    /// first, then the conjunctive block, each ordered by blicket bitmask.
    pub fn enumerate(n_objects: usize) -> Result<Self, CausalError> {
        if n_objects == 0 {
            return Err(CausalError::InvalidArgument("n_objects must be at least 1".into()));
        }
        if n_objects > MAX_OBJECTS {
            return Err(CausalError::InvalidArgument(format!(
                "n_objects must be at most {MAX_OBJECTS}, got {n_objects}"
            )));
        }
        let mut hypotheses = Vec::new();
        for kind in [OverhypothesisKind::Disjunctive, OverhypothesisKind::Conjunctive] {
            for c in Combination::all(n_objects) {
                if let Ok(h) = CausalStructure::new(kind, c) {
                    hypotheses.push(h);
                }
            }
        }
        HypothesisSpace::new(n_objects, hypotheses)
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[CausalStructure] {
        &self.hypotheses
    }

    pub fn get(&self, i: usize) -> CausalStructure {
        self.hypotheses[i]
    }

    pub fn index_of(&self, h: &CausalStructure) -> Option<usize> {
        self.hypotheses.iter().position(|x| x == h)
    }

    pub fn all(&self) -> HypSet {
        HypSet::full(self.len())
    }

    /// Hypotheses that light the detector for `c`.
    pub fn lit_by(&self, c: Combination) -> HypSet {
        self.lit_by[c.0 as usize]
    }

    /// Split `set` into the hypotheses that light for `c` and those that do not.
    pub fn split(&self, set: HypSet, c: Combination) -> (HypSet, HypSet) {
        let on = set.intersection(self.lit_by(c));
        (on, set.difference(on))
    }

    pub fn combinations(&self) -> impl Iterator<Item = Combination> {
        Combination::all(self.n_objects)
    }

    /// First pair in `set` that no combination separates, if any.
    pub fn indistinguishable_pair(&self, set: HypSet) -> Option<(usize, usize)> {
        let members: Vec<usize> = set.iter().collect();
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                if self.combinations().all(|c| {
                    self.hypotheses[i].activates(c) == self.hypotheses[j].activates(c)
                }) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Index of the image of hypothesis `i` under `perm`, if it is in the space.
    pub fn permuted_index(&self, i: usize, perm: &ObjectPermutation) -> Option<usize> {
        self.index_of(&self.hypotheses[i].permute(perm))
    }
}

/// Convenience: `HypothesisSpace::enumerate`.
pub fn enumerate_structures(n_objects: usize) -> Result<HypothesisSpace, CausalError> {
    HypothesisSpace::enumerate(n_objects)
}

/// Exact probability weights over a hypothesis space.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    name: String,
    space: Arc<HypothesisSpace>,
    weights: Vec<Rational64>,
}

impl Prior {
    pub fn new(
        name: impl Into<String>,
        space: Arc<HypothesisSpace>,
        weights: Vec<Rational64>,
    ) -> Result<Self, CausalError> {
        if weights.len() != space.len() {
            return Err(CausalError::InvalidPrior(format!(
                "{} weights for {} hypotheses",
                weights.len(),
                space.len()
            )));
        }
        if weights.iter().any(|w| *w < Rational64::zero()) {
            return Err(CausalError::InvalidPrior("negative weight".into()));
        }
        let total: Rational64 = weights.iter().copied().sum();
        if total != Rational64::one() {
            return Err(CausalError::InvalidPrior(format!("weights sum to {total}")));
        }
        Ok(Prior {
            name: name.into(),
            space,
            weights,
        })
    }

    /// Normalizes nonnegative integer weights.
    pub fn from_counts(
        name: impl Into<String>,
        space: Arc<HypothesisSpace>,
        counts: &[i64],
    ) -> Result<Self, CausalError> {
        let total: i64 = counts.iter().sum();
        if total <= 0 {
            return Err(CausalError::InvalidPrior("no positive weight".into()));
        }
        let weights = counts.iter().map(|&c| Rational64::new(c, total)).collect();
        Prior::new(name, space, weights)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<HypothesisSpace> {
        &self.space
    }

    pub fn weight(&self, i: usize) -> Rational64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[Rational64] {
        &self.weights
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| ratio_to_f64(*w)).collect()
    }

    /// Hypotheses with positive weight.
    pub fn support(&self) -> HypSet {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > Rational64::zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn mass(&self, set: HypSet) -> Rational64 {
        set.iter().map(|i| self.weights[i]).sum()
    }
}

pub fn uniform_prior(space: Arc<HypothesisSpace>) -> Prior {
    let n = space.len() as i64;
    let weights = vec![Rational64::new(1, n); space.len()];
    Prior {
        name: "uniform".into(),
        space,
        weights,
    }
}

/// Equal mass on the conjunctive and disjunctive two-blicket structures,
/// spread evenly within each kind; every other structure gets zero.
pub fn experimental_prior(space: Arc<HypothesisSpace>) -> Result<Prior, CausalError> {
    let n = space.n_objects();
    if n < 2 {
        return Err(CausalError::InvalidArgument(
            "experimental prior needs at least two objects".into(),
        ));
    }
    let pairs: Vec<Combination> = Combination::all(n).filter(|c| c.len() == 2).collect();
    let per_kind = pairs.len() as i64;
    let mut weights = vec![Rational64::zero(); space.len()];
    for kind in [OverhypothesisKind::Disjunctive, OverhypothesisKind::Conjunctive] {
        for &pair in &pairs {
            let h = CausalStructure::new(kind, pair)?;
            let i = space.index_of(&h).ok_or_else(|| {
                CausalError::InvalidArgument(format!("space lacks two-blicket structure {h}"))
            })?;
            weights[i] = Rational64::new(1, 2 * per_kind);
        }
    }
    Prior::new("experimental", space, weights)
}

pub fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
