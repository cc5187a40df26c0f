//! The saturation engine.
//!
//! Every non-empty subset of the configuration starts with the worst-case
//! rank interval, hypotheses pin their subsets, and the matroid-derived
//! propagation rules run to a fixpoint over the inclusion lattice. Each
//! strict tightening is recorded as a [`DeductionStep`] with full premise
//! provenance, so the final state can be replayed and certified.

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::geom::{
    default_interval_map, BoundKind, Configuration, DeductionStep, PointSet, Premise,
    PremiseSource, RankInterval, RankStatement,
};

/// Identifiers of the deduction rules. The certificate checker recognizes
/// every variant; `InitDefault` marks bounds still at their initial value
/// and never appears as a recorded step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    InitDefault,
    Hyp,
    MonoLo,
    MonoHi,
    SubmodHiUnion,
    SubmodHiInter,
    SubmodLo,
}

impl RuleId {
    pub const ALL: [RuleId; 7] = [
        RuleId::InitDefault,
        RuleId::Hyp,
        RuleId::MonoLo,
        RuleId::MonoHi,
        RuleId::SubmodHiUnion,
        RuleId::SubmodHiInter,
        RuleId::SubmodLo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::InitDefault => "INIT_DEFAULT",
            RuleId::Hyp => "HYP",
            RuleId::MonoLo => "MONO_LO",
            RuleId::MonoHi => "MONO_HI",
            RuleId::SubmodHiUnion => "SUBMOD_HI_UNION",
            RuleId::SubmodHiInter => "SUBMOD_HI_INTER",
            RuleId::SubmodLo => "SUBMOD_LO",
        }
    }

    pub fn from_name(name: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.name() == name)
    }

    fn index(self) -> usize {
        match self {
            RuleId::InitDefault => 0,
            RuleId::Hyp => 1,
            RuleId::MonoLo => 2,
            RuleId::MonoHi => 3,
            RuleId::SubmodHiUnion => 4,
            RuleId::SubmodHiInter => 5,
            RuleId::SubmodLo => 6,
        }
    }
}

/// Which subset pairs the submodularity rules range over.
///
/// `Full` visits every incomparable pair and is the reference scope for
/// small configurations. `Adjacent` keeps only pairs whose union adds at
/// most two points beyond the larger operand, trading completeness for a
/// large cut in instance count on big lattices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStrategy {
    Full,
    Adjacent,
}

impl PairStrategy {
    /// Full for small lattices, adjacent beyond 10 points.
    pub fn auto(point_count: usize) -> PairStrategy {
        if point_count <= 10 {
            PairStrategy::Full
        } else {
            PairStrategy::Adjacent
        }
    }

    fn allows(self, x: u32, y: u32) -> bool {
        match self {
            PairStrategy::Full => true,
            PairStrategy::Adjacent => {
                let union = (x | y).count_ones();
                let larger = x.count_ones().max(y.count_ones());
                union - larger <= 2
            }
        }
    }
}

pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;

/// Resource limits and scheduling knobs for one saturation run.
#[derive(Debug, Clone)]
pub struct SaturateOptions {
    pub strategy: PairStrategy,
    pub step_limit: u64,
    pub time_limit: Option<Duration>,
    /// When set, worklist entries pop in a seeded pseudo-random order
    /// instead of FIFO. The fixpoint is schedule-independent; this exists
    /// to demonstrate exactly that.
    pub schedule_seed: Option<u64>,
}

impl Default for SaturateOptions {
    fn default() -> Self {
        SaturateOptions {
            strategy: PairStrategy::Full,
            step_limit: DEFAULT_STEP_LIMIT,
            time_limit: None,
            schedule_seed: None,
        }
    }
}

impl SaturateOptions {
    /// Defaults with the pair strategy picked from the configuration size.
    pub fn for_config(cfg: &Configuration) -> SaturateOptions {
        SaturateOptions {
            strategy: PairStrategy::auto(cfg.point_count()),
            ..SaturateOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    StepLimit(u64),
    TimeLimit,
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::StepLimit(limit) => write!(f, "step limit of {limit} exceeded"),
            AbortReason::TimeLimit => write!(f, "time limit exceeded"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    /// A hypothesis falls outside the worst-case interval of its own set.
    #[error("inconsistent hypothesis: rk = {rank} but the set is forced into {interval}")]
    InconsistentHypothesis {
        set: PointSet,
        rank: u8,
        interval: RankInterval,
    },
    /// A rule conclusion would empty an interval: the hypotheses contradict
    /// each other. Carries the offending (unapplied) step as the witness.
    #[error("contradictory hypotheses: {rule} forces {bound} bound {value} against interval {interval}")]
    Inconsistent {
        rule: &'static str,
        bound: BoundKind,
        value: u8,
        interval: RankInterval,
        step: Box<DeductionStep>,
    },
    /// Resource cap hit. Distinct from "not derivable": nothing is known
    /// about the goal when saturation aborts.
    #[error("saturation aborted: {reason} (after {steps} steps)")]
    Aborted { reason: AbortReason, steps: usize },
    #[error("invalid operands for {rule}: {reason}")]
    BadOperands { rule: &'static str, reason: &'static str },
}

/// Counters reported after a run.
#[derive(Debug, Clone, Default)]
pub struct SaturationStats {
    /// Non-empty subsets in the lattice (2^n - 1).
    pub subsets: u64,
    /// Rule instances evaluated, whether or not they tightened anything.
    pub instances_tried: u64,
    /// Steps applied per rule, indexed per `RuleId::index`.
    applied: [u64; 7],
    pub wall: Duration,
}

impl SaturationStats {
    pub fn applied(&self, rule: RuleId) -> u64 {
        self.applied[rule.index()]
    }

    pub fn steps_applied(&self) -> u64 {
        self.applied.iter().sum()
    }
}

/// A rule instance: the operands one [`RuleId`] application works on.
///
/// Semantics, with `rk(∅) = 0` and X, Y non-empty:
///
/// * `MonoLo`:        sub ⊆ sup  ⇒  lo(sup) ≥ lo(sub)
/// * `MonoHi`:        sub ⊆ sup  ⇒  hi(sub) ≤ hi(sup)
/// * `SubmodHiUnion`: hi(X∪Y) ≤ hi(X) + hi(Y) − lo(X∩Y)
/// * `SubmodHiInter`: hi(X∩Y) ≤ hi(X) + hi(Y) − lo(X∪Y)
/// * `SubmodLo`:      lo(X) ≥ lo(X∪Y) + lo(X∩Y) − hi(Y)
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleInstance {
    MonoLo { sub: PointSet, sup: PointSet },
    MonoHi { sub: PointSet, sup: PointSet },
    SubmodHiUnion { x: PointSet, y: PointSet },
    SubmodHiInter { x: PointSet, y: PointSet },
    SubmodLo { x: PointSet, y: PointSet },
}

impl RuleInstance {
    pub fn rule(self) -> RuleId {
        match self {
            RuleInstance::MonoLo { .. } => RuleId::MonoLo,
            RuleInstance::MonoHi { .. } => RuleId::MonoHi,
            RuleInstance::SubmodHiUnion { .. } => RuleId::SubmodHiUnion,
            RuleInstance::SubmodHiInter { .. } => RuleId::SubmodHiInter,
            RuleInstance::SubmodLo { .. } => RuleId::SubmodLo,
        }
    }
}

/// Mutable prover state: the interval map over the full lattice plus the
/// provenance of every non-default bound and the append-only step list.
#[derive(Debug, Clone)]
pub struct SaturationState {
    dimension: u8,
    point_count: usize,
    /// Indexed by bitmask; entry 0 is unused.
    intervals: Vec<RankInterval>,
    /// (set, bound) -> id of the step that last tightened it.
    provenance: HashMap<(PointSet, BoundKind), u32>,
    steps: Vec<DeductionStep>,
    stats: SaturationStats,
}

impl SaturationState {
    pub fn dimension(&self) -> u8 {
        self.dimension
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn interval(&self, set: PointSet) -> RankInterval {
        self.intervals[set.bits() as usize]
    }

    /// The full interval map, indexed by subset bitmask.
    pub fn intervals(&self) -> &[RankInterval] {
        &self.intervals
    }

    pub fn steps(&self) -> &[DeductionStep] {
        &self.steps
    }

    pub fn provenance(&self, set: PointSet, bound: BoundKind) -> Option<u32> {
        self.provenance.get(&(set, bound)).copied()
    }

    pub fn stats(&self) -> &SaturationStats {
        &self.stats
    }

    /// True iff the goal's interval is pinned exactly to its rank.
    pub fn entails(&self, goal: RankStatement) -> bool {
        self.interval(goal.set) == RankInterval::new(goal.rank, goal.rank)
    }

    fn premise(&self, set: PointSet, bound: BoundKind) -> Premise {
        let source = match self.provenance(set, bound) {
            Some(id) => PremiseSource::Step(id),
            None => PremiseSource::Default,
        };
        Premise { set, bound, source }
    }

    /// Records one strict tightening, or returns `Ok(None)` when the
    /// candidate value does not improve the current bound.
    fn tighten(
        &mut self,
        rule: RuleId,
        target: PointSet,
        bound: BoundKind,
        candidate: i32,
        premises: Vec<Premise>,
        params: Vec<PointSet>,
    ) -> Result<Option<u32>, EngineError> {
        let interval = self.interval(target);
        let improves = match bound {
            BoundKind::Lo => candidate > interval.lo as i32,
            BoundKind::Hi => candidate < interval.hi as i32,
        };
        if !improves {
            return Ok(None);
        }
        let id = self.steps.len() as u32;
        let step = DeductionStep {
            id,
            rule,
            target,
            bound,
            value: candidate.clamp(0, u8::MAX as i32) as u8,
            premises,
            params,
        };
        let broken = match bound {
            BoundKind::Lo => candidate > interval.hi as i32,
            BoundKind::Hi => candidate < interval.lo as i32,
        };
        if broken {
            return Err(EngineError::Inconsistent {
                rule: rule.name(),
                bound,
                value: step.value,
                interval,
                step: Box::new(step),
            });
        }
        let slot = &mut self.intervals[target.bits() as usize];
        match bound {
            BoundKind::Lo => slot.lo = step.value,
            BoundKind::Hi => slot.hi = step.value,
        }
        self.provenance.insert((target, bound), id);
        self.stats.applied[rule.index()] += 1;
        self.steps.push(step);
        Ok(Some(id))
    }

    fn apply_instance(&mut self, instance: RuleInstance) -> Result<Option<u32>, EngineError> {
        match instance {
            RuleInstance::MonoLo { sub, sup } => {
                let value = self.interval(sub).lo as i32;
                if value <= self.interval(sup).lo as i32 {
                    return Ok(None); // cheap pre-check before building premises
                }
                let premises = vec![self.premise(sub, BoundKind::Lo)];
                self.tighten(RuleId::MonoLo, sup, BoundKind::Lo, value, premises, vec![sub])
            }
            RuleInstance::MonoHi { sub, sup } => {
                let value = self.interval(sup).hi as i32;
                if value >= self.interval(sub).hi as i32 {
                    return Ok(None);
                }
                let premises = vec![self.premise(sup, BoundKind::Hi)];
                self.tighten(RuleId::MonoHi, sub, BoundKind::Hi, value, premises, vec![sup])
            }
            RuleInstance::SubmodHiUnion { x, y } => {
                let union = x.union(y);
                let inter = x.intersection(y);
                let inter_lo = if inter.is_empty() { 0 } else { self.interval(inter).lo as i32 };
                let value = self.interval(x).hi as i32 + self.interval(y).hi as i32 - inter_lo;
                if value >= self.interval(union).hi as i32 {
                    return Ok(None);
                }
                let mut premises = vec![
                    self.premise(x, BoundKind::Hi),
                    self.premise(y, BoundKind::Hi),
                ];
                if !inter.is_empty() {
                    premises.push(self.premise(inter, BoundKind::Lo));
                }
                self.tighten(RuleId::SubmodHiUnion, union, BoundKind::Hi, value, premises, vec![x, y])
            }
            RuleInstance::SubmodHiInter { x, y } => {
                let union = x.union(y);
                let inter = x.intersection(y);
                let value = self.interval(x).hi as i32 + self.interval(y).hi as i32
                    - self.interval(union).lo as i32;
                if value >= self.interval(inter).hi as i32 {
                    return Ok(None);
                }
                let premises = vec![
                    self.premise(x, BoundKind::Hi),
                    self.premise(y, BoundKind::Hi),
                    self.premise(union, BoundKind::Lo),
                ];
                self.tighten(RuleId::SubmodHiInter, inter, BoundKind::Hi, value, premises, vec![x, y])
            }
            RuleInstance::SubmodLo { x, y } => {
                let union = x.union(y);
                let inter = x.intersection(y);
                let inter_lo = if inter.is_empty() { 0 } else { self.interval(inter).lo as i32 };
                let value = self.interval(union).lo as i32 + inter_lo - self.interval(y).hi as i32;
                if value <= self.interval(x).lo as i32 {
                    return Ok(None);
                }
                let mut premises = vec![self.premise(union, BoundKind::Lo)];
                if !inter.is_empty() {
                    premises.push(self.premise(inter, BoundKind::Lo));
                }
                premises.push(self.premise(y, BoundKind::Hi));
                self.tighten(RuleId::SubmodLo, x, BoundKind::Lo, value, premises, vec![x, y])
            }
        }
    }
}

/// Builds the initial state: worst-case intervals everywhere, then one
/// `HYP` step per bound actually moved by a hypothesis.
pub fn init_state(cfg: &Configuration) -> Result<SaturationState, EngineError> {
    let n = cfg.point_count();
    let dimension = cfg.dimension();
    let mut state = SaturationState {
        dimension,
        point_count: n,
        intervals: default_interval_map(n, dimension),
        provenance: HashMap::new(),
        steps: Vec::new(),
        stats: SaturationStats {
            subsets: (1u64 << n) - 1,
            ..SaturationStats::default()
        },
    };
    for hyp in cfg.hypotheses() {
        let interval = state.interval(hyp.set);
        if hyp.rank < interval.lo || hyp.rank > interval.hi {
            return Err(EngineError::InconsistentHypothesis {
                set: hyp.set,
                rank: hyp.rank,
                interval,
            });
        }
        if hyp.rank > interval.lo {
            state.tighten(RuleId::Hyp, hyp.set, BoundKind::Lo, hyp.rank as i32, vec![], vec![])?;
        }
        if hyp.rank < interval.hi {
            state.tighten(RuleId::Hyp, hyp.set, BoundKind::Hi, hyp.rank as i32, vec![], vec![])?;
        }
    }
    Ok(state)
}

/// Applies one rule instance against the state, recording a step when the
/// conclusion strictly tightens the target bound.
///
/// Returns the new step's id, `Ok(None)` when nothing improved, or the
/// inconsistency witness when the conclusion empties an interval.
pub fn apply_rule(
    state: &mut SaturationState,
    instance: RuleInstance,
) -> Result<Option<u32>, EngineError> {
    let n = state.point_count;
    let check = |set: PointSet, rule: &'static str| -> Result<(), EngineError> {
        if set.is_empty() {
            return Err(EngineError::BadOperands { rule, reason: "empty operand set" });
        }
        if !set.fits(n) {
            return Err(EngineError::BadOperands { rule, reason: "operand outside the configuration" });
        }
        Ok(())
    };
    match instance {
        RuleInstance::MonoLo { sub, sup } | RuleInstance::MonoHi { sub, sup } => {
            let rule = instance.rule().name();
            check(sub, rule)?;
            check(sup, rule)?;
            if !sub.is_subset_of(sup) {
                return Err(EngineError::BadOperands { rule, reason: "first operand must be a subset of the second" });
            }
        }
        RuleInstance::SubmodHiUnion { x, y } | RuleInstance::SubmodLo { x, y } => {
            let rule = instance.rule().name();
            check(x, rule)?;
            check(y, rule)?;
        }
        RuleInstance::SubmodHiInter { x, y } => {
            check(x, "SUBMOD_HI_INTER")?;
            check(y, "SUBMOD_HI_INTER")?;
            if x.intersection(y).is_empty() {
                return Err(EngineError::BadOperands {
                    rule: "SUBMOD_HI_INTER",
                    reason: "operands must intersect",
                });
            }
        }
    }
    state.stats.instances_tried += 1;
    state.apply_instance(instance)
}

// Weyl-sequence mixer; enough randomness to shuffle worklist pops.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Dirty queue over (subset, bound) pairs with membership dedup.
struct Worklist {
    queue: VecDeque<(u32, BoundKind)>,
    queued: Vec<[bool; 2]>,
    rng: Option<SplitMix64>,
}

impl Worklist {
    fn new(size: usize, seed: Option<u64>) -> Worklist {
        Worklist {
            queue: VecDeque::new(),
            queued: vec![[false; 2]; size],
            rng: seed.map(SplitMix64),
        }
    }

    fn push(&mut self, mask: u32, bound: BoundKind) {
        let slot = &mut self.queued[mask as usize][(bound == BoundKind::Hi) as usize];
        if !*slot {
            *slot = true;
            self.queue.push_back((mask, bound));
        }
    }

    fn pop(&mut self) -> Option<(u32, BoundKind)> {
        if let Some(rng) = &mut self.rng {
            if self.queue.len() > 1 {
                let pick = (rng.next() % self.queue.len() as u64) as usize;
                let last = self.queue.len() - 1;
                self.queue.swap(pick, last);
            }
            let entry = self.queue.pop_back()?;
            self.queued[entry.0 as usize][(entry.1 == BoundKind::Hi) as usize] = false;
            Some(entry)
        } else {
            let entry = self.queue.pop_front()?;
            self.queued[entry.0 as usize][(entry.1 == BoundKind::Hi) as usize] = false;
            Some(entry)
        }
    }
}

struct Saturator<'a> {
    state: &'a mut SaturationState,
    worklist: Worklist,
    strategy: PairStrategy,
    step_limit: u64,
    time_limit: Option<Duration>,
    started: Instant,
    full_mask: u32,
}

impl Saturator<'_> {
    fn run(&mut self) -> Result<(), EngineError> {
        while let Some((mask, bound)) = self.worklist.pop() {
            match bound {
                BoundKind::Lo => self.process_lo(mask)?,
                BoundKind::Hi => self.process_hi(mask)?,
            }
        }
        Ok(())
    }

    fn try_instance(&mut self, instance: RuleInstance) -> Result<(), EngineError> {
        self.state.stats.instances_tried += 1;
        if self.state.stats.instances_tried.is_multiple_of(4096) {
            if let Some(limit) = self.time_limit {
                if self.started.elapsed() > limit {
                    return Err(EngineError::Aborted {
                        reason: AbortReason::TimeLimit,
                        steps: self.state.steps.len(),
                    });
                }
            }
        }
        if let Some(id) = self.state.apply_instance(instance)? {
            let step = &self.state.steps[id as usize];
            self.worklist.push(step.target.bits(), step.bound);
            if self.state.steps.len() as u64 > self.step_limit {
                return Err(EngineError::Aborted {
                    reason: AbortReason::StepLimit(self.step_limit),
                    steps: self.state.steps.len(),
                });
            }
        }
        Ok(())
    }

    /// Re-runs every in-scope instance that reads lo(s): monotonicity into
    /// covers of s, and submodularity instances where s is the union or
    /// the intersection of the pair.
    fn process_lo(&mut self, s: u32) -> Result<(), EngineError> {
        let n = self.state.point_count;
        let set = PointSet::from_bits(s);
        for i in 0..n {
            let bit = 1u32 << i;
            if s & bit == 0 {
                self.try_instance(RuleInstance::MonoLo {
                    sub: set,
                    sup: PointSet::from_bits(s | bit),
                })?;
            }
        }
        // Pairs with union s: SUBMOD_HI_INTER and SUBMOD_LO read lo(s).
        if s.count_ones() >= 2 {
            let mut x = (s - 1) & s;
            while x != 0 {
                let rest = s & !x;
                let mut z = x; // z ranges over proper submasks of x
                loop {
                    z = (z - 1) & x;
                    let y = rest | z;
                    if self.strategy.allows(x, y) {
                        self.try_instance(RuleInstance::SubmodLo {
                            x: PointSet::from_bits(x),
                            y: PointSet::from_bits(y),
                        })?;
                        if z != 0 && x < y {
                            self.try_instance(RuleInstance::SubmodHiInter {
                                x: PointSet::from_bits(x),
                                y: PointSet::from_bits(y),
                            })?;
                        }
                    }
                    if z == 0 {
                        break;
                    }
                }
                x = (x - 1) & s;
            }
        }
        // Pairs with intersection s: SUBMOD_HI_UNION and SUBMOD_LO read lo(s).
        let complement = self.full_mask & !s;
        if complement != 0 {
            let mut p = complement;
            while p != 0 {
                let rest = complement & !p;
                let mut q = rest;
                while q != 0 {
                    let x = s | p;
                    let y = s | q;
                    if self.strategy.allows(x, y) {
                        self.try_instance(RuleInstance::SubmodLo {
                            x: PointSet::from_bits(x),
                            y: PointSet::from_bits(y),
                        })?;
                        if p < q {
                            self.try_instance(RuleInstance::SubmodHiUnion {
                                x: PointSet::from_bits(x),
                                y: PointSet::from_bits(y),
                            })?;
                        }
                    }
                    q = (q - 1) & rest;
                }
                p = (p - 1) & complement;
            }
        }
        Ok(())
    }

    /// Re-runs every in-scope instance that reads hi(s): monotonicity into
    /// subsets of s, and submodularity instances with s as an operand.
    fn process_hi(&mut self, s: u32) -> Result<(), EngineError> {
        let n = self.state.point_count;
        let set = PointSet::from_bits(s);
        if s.count_ones() >= 2 {
            for i in 0..n {
                let bit = 1u32 << i;
                if s & bit != 0 {
                    self.try_instance(RuleInstance::MonoHi {
                        sub: PointSet::from_bits(s & !bit),
                        sup: set,
                    })?;
                }
            }
        }
        for t in 1..=self.full_mask {
            let meet = s & t;
            if meet == s || meet == t {
                continue; // comparable pairs never tighten
            }
            if !self.strategy.allows(s, t) {
                continue;
            }
            let other = PointSet::from_bits(t);
            self.try_instance(RuleInstance::SubmodHiUnion { x: set, y: other })?;
            if meet != 0 {
                self.try_instance(RuleInstance::SubmodHiInter { x: set, y: other })?;
            }
            self.try_instance(RuleInstance::SubmodLo { x: other, y: set })?;
        }
        Ok(())
    }
}

/// Runs the worklist-driven fixpoint: every bound starts dirty, and each
/// tightening re-enqueues the rule instances that read the changed bound.
/// At return no in-scope instance can tighten anything further.
pub fn saturate(
    cfg: &Configuration,
    options: &SaturateOptions,
) -> Result<SaturationState, EngineError> {
    let started = Instant::now();
    let mut state = init_state(cfg)?;
    if state.steps.len() as u64 > options.step_limit {
        return Err(EngineError::Aborted {
            reason: AbortReason::StepLimit(options.step_limit),
            steps: state.steps.len(),
        });
    }
    let n = cfg.point_count();
    let full_mask = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut worklist = Worklist::new(1 << n, options.schedule_seed);
    for mask in 1..=full_mask {
        worklist.push(mask, BoundKind::Lo);
        worklist.push(mask, BoundKind::Hi);
    }
    let mut saturator = Saturator {
        state: &mut state,
        worklist,
        strategy: options.strategy,
        step_limit: options.step_limit,
        time_limit: options.time_limit,
        started,
        full_mask,
    };
    saturator.run()?;
    state.stats.wall = started.elapsed();
    Ok(state)
}

/// Replays a recorded step list against fresh default intervals, applying
/// each step's bound blindly. Reproduces the interval map the steps came
/// from; used to audit determinism, not to validate (that is the
/// certificate checker's job).
pub fn replay_steps(cfg: &Configuration, steps: &[DeductionStep]) -> Vec<RankInterval> {
    let mut intervals = default_interval_map(cfg.point_count(), cfg.dimension());
    for step in steps {
        let slot = &mut intervals[step.target.bits() as usize];
        match step.bound {
            BoundKind::Lo => slot.lo = step.value,
            BoundKind::Hi => slot.hi = step.value,
        }
    }
    intervals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::subset_iter;
    use crate::testutil::{ex2_config, mask, stmt};

    #[test]
    fn init_pins_hypotheses_and_defaults() {
        let cfg = ex2_config();
        let state = init_state(&cfg).unwrap();
        // hypothesis {A,C} = 2
        assert_eq!(state.interval(mask(0b0101)), RankInterval::new(2, 2));
        // untouched pair {A,B}
        assert_eq!(state.interval(mask(0b0011)), RankInterval::new(1, 2));
        // the whole configuration
        assert_eq!(state.interval(mask(0b1111)), RankInterval::new(1, 4));
        // singletons are forced
        assert_eq!(state.interval(mask(0b0001)), RankInterval::new(1, 1));
        // one HYP step per bound moved: CD lo, AC lo, ACD lo+hi, ABD lo
        assert_eq!(state.steps().len(), 5);
        assert!(state.steps().iter().all(|s| s.rule == RuleId::Hyp));
    }

    #[test]
    fn init_dimension_two_caps_at_three() {
        let cfg = Configuration::new(
            2,
            (0..5).map(|i| format!("P{i}")).collect(),
            vec![],
            vec![stmt(0b00001, 1)],
        )
        .unwrap();
        let state = init_state(&cfg).unwrap();
        assert_eq!(state.interval(mask(0b11111)), RankInterval::new(1, 3));
    }

    #[test]
    fn init_rejects_out_of_range_hypothesis() {
        // Bypasses Configuration validation to exercise the engine's own check.
        let cfg = crate::geom::Configuration::raw_for_tests(
            3,
            vec!["A".into(), "B".into()],
            vec![stmt(0b11, 3)],
            vec![stmt(0b01, 1)],
        );
        match init_state(&cfg) {
            Err(EngineError::InconsistentHypothesis { rank: 3, .. }) => {}
            other => panic!("expected InconsistentHypothesis, got {other:?}"),
        }
    }

    #[test]
    fn mono_lo_tightens_superset() {
        let cfg = ex2_config();
        let mut state = init_state(&cfg).unwrap();
        let id = apply_rule(
            &mut state,
            RuleInstance::MonoLo { sub: mask(0b0101), sup: mask(0b0111) },
        )
        .unwrap()
        .expect("should tighten");
        let step = &state.steps()[id as usize];
        assert_eq!(step.rule, RuleId::MonoLo);
        assert_eq!(step.target, mask(0b0111));
        assert_eq!(step.bound, BoundKind::Lo);
        assert_eq!(step.value, 2);
        assert_eq!(step.premises.len(), 1);
        assert_eq!(step.premises[0].set, mask(0b0101));
        assert_eq!(step.premises[0].bound, BoundKind::Lo);
        assert_eq!(state.interval(mask(0b0111)).lo, 2);
    }

    #[test]
    fn submod_lo_derives_distinctness() {
        // lo(ABD)=3 with hi(BD)=2 forces A off the BD line: lo(AD) >= 2.
        let cfg = ex2_config();
        let mut state = init_state(&cfg).unwrap();
        let id = apply_rule(
            &mut state,
            RuleInstance::SubmodLo { x: mask(0b1001), y: mask(0b1010) },
        )
        .unwrap()
        .expect("should tighten");
        let step = &state.steps()[id as usize];
        assert_eq!(step.target, mask(0b1001));
        assert_eq!(step.bound, BoundKind::Lo);
        assert_eq!(step.value, 2);
        assert_eq!(state.interval(mask(0b1001)), RankInterval::new(2, 2));
    }

    #[test]
    fn identity_instance_never_tightens() {
        let cfg = ex2_config();
        let mut state = init_state(&cfg).unwrap();
        let s = mask(0b0111);
        assert_eq!(
            apply_rule(&mut state, RuleInstance::MonoHi { sub: s, sup: s }).unwrap(),
            None
        );
    }

    #[test]
    fn apply_rule_validates_operands() {
        let cfg = ex2_config();
        let mut state = init_state(&cfg).unwrap();
        assert!(matches!(
            apply_rule(
                &mut state,
                RuleInstance::MonoLo { sub: mask(0b0110), sup: mask(0b0011) }
            ),
            Err(EngineError::BadOperands { .. })
        ));
        assert!(matches!(
            apply_rule(
                &mut state,
                RuleInstance::SubmodHiInter { x: mask(0b0011), y: mask(0b1100) }
            ),
            Err(EngineError::BadOperands { .. })
        ));
        assert!(matches!(
            apply_rule(
                &mut state,
                RuleInstance::MonoLo { sub: PointSet::EMPTY, sup: mask(0b0011) }
            ),
            Err(EngineError::BadOperands { .. })
        ));
    }

    #[test]
    fn saturate_proves_ex2() {
        let cfg = ex2_config();
        let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
        assert_eq!(state.interval(mask(0b0111)), RankInterval::new(3, 3));
        assert_eq!(state.interval(mask(0b0010)), RankInterval::new(1, 1));
        assert_eq!(state.interval(mask(0b0101)), RankInterval::new(2, 2));
        // rk{A,D} = 2 holds in every model of the hypotheses (oracle-checked
        // in the oracle tests); the engine must find it.
        assert_eq!(state.interval(mask(0b1001)), RankInterval::new(2, 2));
        assert!(state.entails(stmt(0b0111, 3)));
        assert!(!state.entails(stmt(0b0011, 1)));
        assert!(state.entails(stmt(0b0001, 1)));
    }

    #[test]
    fn adjacent_strategy_also_proves_ex2() {
        let cfg = ex2_config();
        let options = SaturateOptions {
            strategy: PairStrategy::Adjacent,
            ..SaturateOptions::default()
        };
        let state = saturate(&cfg, &options).unwrap();
        assert_eq!(state.interval(mask(0b0111)), RankInterval::new(3, 3));
    }

    #[test]
    fn fixpoint_respects_interval_invariants() {
        let cfg = ex2_config();
        let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
        let dim = cfg.dimension();
        for set in subset_iter(cfg.point_count()) {
            let iv = state.interval(set);
            let cap = (set.len() as u8).min(dim + 1);
            assert!(iv.lo >= 1 && iv.lo <= iv.hi && iv.hi <= cap, "{set:?} has {iv}");
        }
        // termination budget: total tightenings bounded by the initial slack
        let budget = ((1u64 << cfg.point_count()) - 1) * dim as u64;
        assert!((state.steps().len() as u64) <= budget);
    }

    #[test]
    fn bounds_only_tighten_over_time() {
        let cfg = ex2_config();
        let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
        let mut last: HashMap<(PointSet, BoundKind), u8> = HashMap::new();
        for step in state.steps() {
            if let Some(prev) = last.get(&(step.target, step.bound)) {
                match step.bound {
                    BoundKind::Lo => assert!(step.value > *prev),
                    BoundKind::Hi => assert!(step.value < *prev),
                }
            }
            last.insert((step.target, step.bound), step.value);
        }
    }

    #[test]
    fn contradictory_hypotheses_are_detected() {
        let cfg = Configuration::new(
            3,
            vec!["A".into(), "B".into(), "C".into()],
            vec![stmt(0b011, 2), stmt(0b111, 1)],
            vec![stmt(0b111, 1)],
        )
        .unwrap();
        match saturate(&cfg, &SaturateOptions::default()) {
            Err(EngineError::Inconsistent { .. }) => {}
            other => panic!("expected Inconsistent, got {other:?}"),
        }
    }

    #[test]
    fn step_limit_aborts_cleanly() {
        let cfg = ex2_config();
        let options = SaturateOptions { step_limit: 3, ..SaturateOptions::default() };
        match saturate(&cfg, &options) {
            Err(EngineError::Aborted { reason: AbortReason::StepLimit(3), .. }) => {}
            other => panic!("expected Aborted, got {other:?}"),
        }
    }

    #[test]
    fn randomized_schedules_reach_the_same_fixpoint() {
        let cfg = ex2_config();
        let reference = saturate(&cfg, &SaturateOptions::default()).unwrap();
        for seed in [1u64, 7, 42, 1234, 988_771] {
            let options = SaturateOptions {
                schedule_seed: Some(seed),
                ..SaturateOptions::default()
            };
            let state = saturate(&cfg, &options).unwrap();
            assert_eq!(state.intervals(), reference.intervals(), "seed {seed}");
        }
    }

    #[test]
    fn replay_reproduces_the_interval_map() {
        let cfg = ex2_config();
        let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
        let replayed = replay_steps(&cfg, state.steps());
        assert_eq!(replayed.as_slice(), state.intervals());
    }

    #[test]
    fn provenance_covers_every_non_default_bound() {
        let cfg = ex2_config();
        let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
        for set in subset_iter(cfg.point_count()) {
            let iv = state.interval(set);
            let def = RankInterval::default_for(set, cfg.dimension());
            if iv.lo != def.lo {
                assert!(state.provenance(set, BoundKind::Lo).is_some());
            }
            if iv.hi != def.hi {
                assert!(state.provenance(set, BoundKind::Hi).is_some());
            }
        }
    }
}
