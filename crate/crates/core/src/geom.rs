//! Shared domain vocabulary: points, point sets, rank intervals,
//! configurations and deduction steps.
//!
//! Everything here is an immutable value type; the saturation engine,
//! the emitter and the checker all speak in these terms.

use std::fmt;

use thiserror::Error;

use crate::engine::RuleId;

/// Hard cap on the number of points in one configuration. Point sets are
/// bitmasks and interval storage is a dense array indexed by mask, so the
/// cap keeps both the mask width and the 2^n lattice size in check.
pub const MAX_POINTS: usize = 24;

/// A named point of a configuration. `index` is the 0-based introduction
/// order, which also fixes the point's bit position in a [`PointSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointId {
    pub index: usize,
    pub name: String,
}

/// Which end of a rank interval a statement talks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    Lo,
    Hi,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundKind::Lo => write!(f, "lo"),
            BoundKind::Hi => write!(f, "hi"),
        }
    }
}

/// A subset of the configuration's points, encoded as a bitmask over
/// point indices. Bit `i` set means point `i` is a member.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet(u32);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn from_bits(bits: u32) -> PointSet {
        PointSet(bits)
    }

    pub fn singleton(index: usize) -> PointSet {
        debug_assert!(index < MAX_POINTS);
        PointSet(1 << index)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> PointSet {
        let mut bits = 0u32;
        for i in indices {
            debug_assert!(i < MAX_POINTS);
            bits |= 1 << i;
        }
        PointSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Number of member points.
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 & (1 << index) != 0
    }

    pub fn union(self, other: PointSet) -> PointSet {
        PointSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PointSet) -> PointSet {
        PointSet(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: PointSet) -> bool {
        self.0 & other.0 == self.0
    }

    /// Member indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_POINTS).filter(move |i| bits & (1 << i) != 0)
    }

    /// True if every set bit is a valid point index for a configuration
    /// with `point_count` points.
    pub fn fits(self, point_count: usize) -> bool {
        point_count >= MAX_POINTS || self.0 < (1u32 << point_count)
    }
}

impl fmt::Debug for PointSet {
    // Names require a configuration; Debug shows the raw mask.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointSet({:#b})", self.0)
    }
}

/// Iterator over all non-empty subsets of an `n`-point configuration,
/// in ascending bitmask order.
pub fn subset_iter(n: usize) -> impl Iterator<Item = PointSet> {
    assert!((1..=MAX_POINTS).contains(&n), "point count out of range");
    (1u32..(1u32 << n)).map(PointSet)
}

/// Proved lower and upper bounds on the rank of one subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankInterval {
    pub lo: u8,
    pub hi: u8,
}

impl RankInterval {
    pub fn new(lo: u8, hi: u8) -> RankInterval {
        RankInterval { lo, hi }
    }

    /// The worst-case interval for a non-empty subset: rank is at least 1,
    /// at most the subset size, and at most dim+1.
    pub fn default_for(set: PointSet, dimension: u8) -> RankInterval {
        debug_assert!(!set.is_empty());
        let hi = (set.len() as u8).min(dimension + 1);
        RankInterval { lo: 1, hi }
    }

    pub fn is_exact(self) -> bool {
        self.lo == self.hi
    }

    pub fn is_consistent(self) -> bool {
        self.lo <= self.hi
    }
}

impl fmt::Display for RankInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Dense worst-case interval map over the full lattice, indexed by subset
/// bitmask. Entry 0 (the empty set) is unused and stays `[0, 0]`.
pub fn default_interval_map(point_count: usize, dimension: u8) -> Vec<RankInterval> {
    let mut intervals = vec![RankInterval::new(0, 0); 1 << point_count];
    for (mask, slot) in intervals.iter_mut().enumerate().skip(1) {
        *slot = RankInterval::default_for(PointSet::from_bits(mask as u32), dimension);
    }
    intervals
}

/// One `rk(set) = rank` statement, used for both hypotheses and
/// conclusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankStatement {
    pub set: PointSet,
    pub rank: u8,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(u8),
    #[error("a configuration needs at least one point")]
    NoPoints,
    #[error("too many points: {0} exceeds the cap of {MAX_POINTS}")]
    TooManyPoints(usize),
    #[error("invalid point name {0:?}: names start with a letter and contain only letters and digits")]
    BadPointName(String),
    #[error("duplicate point name {0:?}")]
    DuplicatePointName(String),
    #[error("empty point set in {0}")]
    EmptySet(&'static str),
    #[error("point set refers to a point outside the configuration")]
    SetOutOfRange,
    #[error("rank {rank} out of range for a {size}-point set in dimension {dimension}")]
    RankOutOfRange { rank: u8, size: usize, dimension: u8 },
    #[error("contradictory hypotheses: the same set is given ranks {0} and {1}")]
    ContradictoryHypotheses(u8, u8),
    #[error("a configuration needs at least one conclusion")]
    NoConclusion,
}

/// A fixed point configuration together with its rank hypotheses and the
/// rank conclusions to prove.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    dimension: u8,
    points: Vec<PointId>,
    hypotheses: Vec<RankStatement>,
    conclusions: Vec<RankStatement>,
    layer_count: u32,
}

pub fn valid_point_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric()),
        _ => false,
    }
}

impl Configuration {
    /// Validates and builds a configuration. Identical duplicate
    /// hypotheses collapse silently; contradictory ones are an error.
    pub fn new(
        dimension: u8,
        point_names: Vec<String>,
        hypotheses: Vec<RankStatement>,
        conclusions: Vec<RankStatement>,
    ) -> Result<Configuration, ConfigError> {
        if dimension != 2 && dimension != 3 {
            return Err(ConfigError::BadDimension(dimension));
        }
        if point_names.is_empty() {
            return Err(ConfigError::NoPoints);
        }
        if point_names.len() > MAX_POINTS {
            return Err(ConfigError::TooManyPoints(point_names.len()));
        }
        let mut points = Vec::with_capacity(point_names.len());
        for (index, name) in point_names.into_iter().enumerate() {
            if !valid_point_name(&name) {
                return Err(ConfigError::BadPointName(name));
            }
            if points.iter().any(|p: &PointId| p.name == name) {
                return Err(ConfigError::DuplicatePointName(name));
            }
            points.push(PointId { index, name });
        }
        let n = points.len();

        let check = |st: &RankStatement, what: &'static str| -> Result<(), ConfigError> {
            if st.set.is_empty() {
                return Err(ConfigError::EmptySet(what));
            }
            if !st.set.fits(n) {
                return Err(ConfigError::SetOutOfRange);
            }
            let size = st.set.len();
            if st.rank < 1 || st.rank > dimension + 1 || st.rank as usize > size {
                return Err(ConfigError::RankOutOfRange { rank: st.rank, size, dimension });
            }
            Ok(())
        };

        let mut deduped: Vec<RankStatement> = Vec::with_capacity(hypotheses.len());
        for hyp in &hypotheses {
            check(hyp, "hypothesis")?;
            match deduped.iter().find(|h| h.set == hyp.set) {
                Some(prev) if prev.rank != hyp.rank => {
                    return Err(ConfigError::ContradictoryHypotheses(prev.rank, hyp.rank));
                }
                Some(_) => {}
                None => deduped.push(*hyp),
            }
        }

        if conclusions.is_empty() {
            return Err(ConfigError::NoConclusion);
        }
        let mut goals: Vec<RankStatement> = Vec::with_capacity(conclusions.len());
        for goal in &conclusions {
            check(goal, "conclusion")?;
            if !goals.contains(goal) {
                goals.push(*goal);
            }
        }

        Ok(Configuration {
            dimension,
            points,
            hypotheses: deduped,
            conclusions: goals,
            layer_count: 1,
        })
    }

    /// Test-only bypass of the invariant checks, for exercising the
    /// defensive paths of consumers that must not trust their input.
    #[cfg(test)]
    pub(crate) fn raw_for_tests(
        dimension: u8,
        point_names: Vec<String>,
        hypotheses: Vec<RankStatement>,
        conclusions: Vec<RankStatement>,
    ) -> Configuration {
        let points = point_names
            .into_iter()
            .enumerate()
            .map(|(index, name)| PointId { index, name })
            .collect();
        Configuration { dimension, points, hypotheses, conclusions, layer_count: 1 }
    }

    pub fn dimension(&self) -> u8 {
        self.dimension
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn point_name(&self, index: usize) -> &str {
        &self.points[index].name
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p.name == name)
    }

    pub fn hypotheses(&self) -> &[RankStatement] {
        &self.hypotheses
    }

    /// Hypothesis rank for `set`, if one was given.
    pub fn hypothesis_rank(&self, set: PointSet) -> Option<u8> {
        self.hypotheses.iter().find(|h| h.set == set).map(|h| h.rank)
    }

    pub fn conclusions(&self) -> &[RankStatement] {
        &self.conclusions
    }

    /// Number of `layer` blocks seen in the source text. Layers are merged
    /// on parse and never exploited; the count is kept for information only.
    pub fn layer_count(&self) -> u32 {
        self.layer_count
    }

    pub fn set_layer_count(&mut self, count: u32) {
        self.layer_count = count.max(1);
    }

    /// Point names of `set` in increasing index order.
    pub fn member_names(&self, set: PointSet) -> Result<Vec<&str>, GeomError> {
        if !set.fits(self.points.len()) {
            return Err(GeomError::SetOutOfRange { bits: set.bits(), points: self.points.len() });
        }
        Ok(set.iter().map(|i| self.points[i].name.as_str()).collect())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeomError {
    #[error("point set {bits:#b} has a bit outside the {points}-point configuration")]
    SetOutOfRange { bits: u32, points: usize },
    #[error("cannot render the empty set")]
    EmptyRender,
}

/// Renders a subset the way the generated scripts spell it: member names
/// in increasing introduction order, Coq-list style.
///
/// `{C, A}` over points `A B C D` renders as `"A :: C :: nil"`.
pub fn canonical_render(set: PointSet, cfg: &Configuration) -> Result<String, GeomError> {
    if set.is_empty() {
        return Err(GeomError::EmptyRender);
    }
    let names = cfg.member_names(set)?;
    let mut out = String::new();
    for name in names {
        out.push_str(name);
        out.push_str(" :: ");
    }
    out.push_str("nil");
    Ok(out)
}

/// Where a premise bound was established: still at its initial default,
/// or tightened by an earlier deduction step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PremiseSource {
    Default,
    Step(u32),
}

/// One premise of a deduction step: which bound of which subset the rule
/// read, and which earlier step (if any) last tightened it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Premise {
    pub set: PointSet,
    pub bound: BoundKind,
    pub source: PremiseSource,
}

/// One interval tightening: the certificate atom. Replaying the recorded
/// steps from the default intervals reproduces the saturated state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeductionStep {
    pub id: u32,
    pub rule: RuleId,
    pub target: PointSet,
    pub bound: BoundKind,
    pub value: u8,
    pub premises: Vec<Premise>,
    /// Rule-specific operand sets (the X, Y of a submodularity instance;
    /// the smaller set of a monotonicity instance).
    pub params: Vec<PointSet>,
}

/// Outcome of re-verifying a proof trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    RejectedStep { id: u32, reason: String },
    GoalMismatch { residual: RankInterval },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted => write!(f, "Accepted"),
            Verdict::RejectedStep { id, reason } => {
                write!(f, "RejectedStep(step {id}: {reason})")
            }
            Verdict::GoalMismatch { residual } => {
                write!(f, "GoalMismatch(residual {residual})")
            }
        }
    }
}
