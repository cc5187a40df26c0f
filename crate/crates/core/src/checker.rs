//! Independent re-verification of proof traces.
//!
//! The checker replays a trace against a fresh bound store built only
//! from the worst-case intervals and the configuration's hypotheses. Rule
//! conclusions are recomputed here from the rank axioms — monotonicity
//! and submodularity — on purpose sharing none of the engine's rule
//! application code. A step passes only if its claimed value is entailed
//! by the recomputed bound, strictly tightens the store, and its premise
//! references faithfully describe the store at that point.

use std::collections::HashMap;

use crate::emitter::ProofTrace;
use crate::engine::RuleId;
use crate::geom::{BoundKind, Configuration, DeductionStep, PointSet, PremiseSource, RankInterval, Verdict};

struct Store {
    point_count: usize,
    dimension: u8,
    bounds: Vec<(u8, u8)>,
}

impl Store {
    fn new(cfg: &Configuration) -> Store {
        let n = cfg.point_count();
        let dimension = cfg.dimension();
        let mut bounds = vec![(0u8, 0u8); 1 << n];
        for (mask, slot) in bounds.iter_mut().enumerate().skip(1) {
            // rk >= 1 for non-empty sets; rk <= |X| and rk <= dim+1
            let card = (mask as u32).count_ones() as u8;
            *slot = (1, card.min(dimension + 1));
        }
        Store { point_count: n, dimension, bounds }
    }

    fn lo(&self, set: PointSet) -> i32 {
        if set.is_empty() {
            0 // rk(∅) = 0
        } else {
            self.bounds[set.bits() as usize].0 as i32
        }
    }

    fn hi(&self, set: PointSet) -> i32 {
        if set.is_empty() {
            0
        } else {
            self.bounds[set.bits() as usize].1 as i32
        }
    }

    fn interval(&self, set: PointSet) -> RankInterval {
        let (lo, hi) = self.bounds[set.bits() as usize];
        RankInterval::new(lo, hi)
    }
}

fn reject(id: u32, reason: impl Into<String>) -> Verdict {
    Verdict::RejectedStep { id, reason: reason.into() }
}

/// The premise list a rule application must carry: (set, bound) pairs in
/// canonical order, derived from the step's operands.
fn expected_premises(step: &DeductionStep) -> Result<Vec<(PointSet, BoundKind)>, String> {
    match step.rule {
        RuleId::Hyp => Ok(vec![]),
        RuleId::MonoLo => {
            let [sub] = step.params[..] else {
                return Err("MONO_LO takes one operand set".into());
            };
            if sub.is_empty() || !sub.is_subset_of(step.target) {
                return Err("MONO_LO operand must be a non-empty subset of the target".into());
            }
            Ok(vec![(sub, BoundKind::Lo)])
        }
        RuleId::MonoHi => {
            let [sup] = step.params[..] else {
                return Err("MONO_HI takes one operand set".into());
            };
            if step.target.is_empty() || !step.target.is_subset_of(sup) {
                return Err("MONO_HI target must be a non-empty subset of the operand".into());
            }
            Ok(vec![(sup, BoundKind::Hi)])
        }
        RuleId::SubmodHiUnion | RuleId::SubmodHiInter | RuleId::SubmodLo => {
            let [x, y] = step.params[..] else {
                return Err(format!("{} takes two operand sets", step.rule.name()));
            };
            if x.is_empty() || y.is_empty() {
                return Err("submodularity operands must be non-empty".into());
            }
            let union = x.union(y);
            let inter = x.intersection(y);
            match step.rule {
                RuleId::SubmodHiUnion => {
                    if step.target != union {
                        return Err("SUBMOD_HI_UNION must target the union of its operands".into());
                    }
                    let mut premises = vec![(x, BoundKind::Hi), (y, BoundKind::Hi)];
                    if !inter.is_empty() {
                        premises.push((inter, BoundKind::Lo));
                    }
                    Ok(premises)
                }
                RuleId::SubmodHiInter => {
                    if inter.is_empty() {
                        return Err("SUBMOD_HI_INTER needs intersecting operands".into());
                    }
                    if step.target != inter {
                        return Err(
                            "SUBMOD_HI_INTER must target the intersection of its operands".into()
                        );
                    }
                    Ok(vec![(x, BoundKind::Hi), (y, BoundKind::Hi), (union, BoundKind::Lo)])
                }
                _ => {
                    if step.target != x {
                        return Err("SUBMOD_LO must target its first operand".into());
                    }
                    let mut premises = vec![(union, BoundKind::Lo)];
                    if !inter.is_empty() {
                        premises.push((inter, BoundKind::Lo));
                    }
                    premises.push((y, BoundKind::Hi));
                    Ok(premises)
                }
            }
        }
        RuleId::InitDefault => Err("INIT_DEFAULT is implicit and never a recorded step".into()),
    }
}

/// The bound the axioms yield for the step's target from the current
/// store: a lower bound for `Lo` steps, an upper bound for `Hi` steps.
fn recompute(step: &DeductionStep, store: &Store) -> i32 {
    match step.rule {
        RuleId::MonoLo => store.lo(step.params[0]),
        RuleId::MonoHi => store.hi(step.params[0]),
        RuleId::SubmodHiUnion => {
            let (x, y) = (step.params[0], step.params[1]);
            store.hi(x) + store.hi(y) - store.lo(x.intersection(y))
        }
        RuleId::SubmodHiInter => {
            let (x, y) = (step.params[0], step.params[1]);
            store.hi(x) + store.hi(y) - store.lo(x.union(y))
        }
        RuleId::SubmodLo => {
            let (x, y) = (step.params[0], step.params[1]);
            store.lo(x.union(y)) + store.lo(x.intersection(y)) - store.hi(y)
        }
        RuleId::Hyp | RuleId::InitDefault => unreachable!("handled before recompute"),
    }
}

/// Replays a trace against the configuration and accepts iff every step
/// re-validates and the final bounds pin the goal to its rank.
pub fn check_trace(cfg: &Configuration, trace: &ProofTrace) -> Verdict {
    let mut store = Store::new(cfg);
    let goal = trace.goal;
    if goal.set.is_empty()
        || !goal.set.fits(store.point_count)
        || goal.rank < 1
        || goal.rank > store.dimension + 1
    {
        return Verdict::GoalMismatch { residual: RankInterval::new(0, 0) };
    }

    // Last trace step that wrote each bound, for premise faithfulness.
    let mut last_writer: HashMap<(u32, BoundKind), u32> = HashMap::new();
    let mut previous_id: Option<u32> = None;

    for step in &trace.steps {
        if previous_id.is_some_and(|prev| step.id <= prev) {
            return reject(step.id, "step ids must be strictly ascending");
        }
        previous_id = Some(step.id);
        if step.target.is_empty() || !step.target.fits(store.point_count) {
            return reject(step.id, "target set is not valid for the configuration");
        }
        if step.params.iter().any(|p| !p.fits(store.point_count)) {
            return reject(step.id, "operand set is not valid for the configuration");
        }

        let shape = match expected_premises(step) {
            Ok(shape) => shape,
            Err(reason) => return reject(step.id, reason),
        };
        if step.premises.len() != shape.len()
            || step
                .premises
                .iter()
                .zip(&shape)
                .any(|(have, want)| (have.set, have.bound) != *want)
        {
            return reject(step.id, "premise list does not match the rule's shape");
        }
        for premise in &step.premises {
            let key = (premise.set.bits(), premise.bound);
            match premise.source {
                PremiseSource::Default => {
                    if last_writer.contains_key(&key) {
                        return reject(
                            step.id,
                            "premise claims a default bound that an earlier step moved",
                        );
                    }
                }
                PremiseSource::Step(src) => {
                    if src >= step.id {
                        return reject(step.id, "premise references a step not strictly earlier");
                    }
                    if last_writer.get(&key) != Some(&src) {
                        return reject(
                            step.id,
                            "premise does not reference the step that last set this bound",
                        );
                    }
                }
            }
        }

        let current = store.interval(step.target);
        let claimed = step.value as i32;
        if step.rule == RuleId::Hyp {
            match cfg.hypothesis_rank(step.target) {
                Some(rank) if rank as i32 == claimed => {}
                _ => return reject(step.id, "HYP step does not match any hypothesis"),
            }
        } else {
            let computed = recompute(step, &store);
            let entailed = match step.bound {
                BoundKind::Lo => claimed <= computed,
                BoundKind::Hi => claimed >= computed,
            };
            if !entailed {
                return reject(step.id, "claimed value is not entailed by the rule");
            }
        }
        let tightens = match step.bound {
            BoundKind::Lo => claimed > current.lo as i32,
            BoundKind::Hi => claimed < current.hi as i32,
        };
        if !tightens {
            return reject(step.id, "claimed value does not strictly tighten the bound");
        }
        let slot = &mut store.bounds[step.target.bits() as usize];
        match step.bound {
            BoundKind::Lo => slot.0 = step.value,
            BoundKind::Hi => slot.1 = step.value,
        }
        if slot.0 > slot.1 {
            return reject(step.id, "step empties the target interval");
        }
        last_writer.insert((step.target.bits(), step.bound), step.id);
    }

    let residual = store.interval(goal.set);
    if residual == RankInterval::new(goal.rank, goal.rank) {
        Verdict::Accepted
    } else {
        Verdict::GoalMismatch { residual }
    }
}

/// Minimality audit: true iff the trace is accepted and removing any
/// single step breaks acceptance. Advisory; acceptance never requires it.
pub fn check_independence(cfg: &Configuration, trace: &ProofTrace) -> bool {
    if !check_trace(cfg, trace).is_accepted() {
        return false;
    }
    for index in 0..trace.steps.len() {
        let mut thinned = trace.clone();
        thinned.steps.remove(index);
        if check_trace(cfg, &thinned).is_accepted() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::extract_trace;
    use crate::engine::{saturate, SaturateOptions};
    use crate::geom::Configuration;
    use crate::testutil::{ex2_config, stmt};

    fn ex2_trace() -> (Configuration, ProofTrace) {
        let cfg = ex2_config();
        let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
        let trace = extract_trace(&state, stmt(0b0111, 3)).unwrap();
        (cfg, trace)
    }

    #[test]
    fn accepts_the_reference_trace() {
        let (cfg, trace) = ex2_trace();
        assert_eq!(check_trace(&cfg, &trace), Verdict::Accepted);
    }

    #[test]
    fn accepts_an_empty_trace_for_a_default_pinned_goal() {
        let cfg = Configuration::new(
            3,
            vec!["A".into(), "B".into()],
            vec![stmt(0b11, 2)],
            vec![stmt(0b01, 1)],
        )
        .unwrap();
        let trace = ProofTrace { goal: stmt(0b01, 1), steps: vec![] };
        assert_eq!(check_trace(&cfg, &trace), Verdict::Accepted);
    }

    #[test]
    fn empty_trace_with_unpinned_goal_mismatches() {
        let (cfg, mut trace) = ex2_trace();
        trace.steps.clear();
        assert_eq!(
            check_trace(&cfg, &trace),
            Verdict::GoalMismatch { residual: RankInterval::new(1, 3) }
        );
    }

    #[test]
    fn inflated_value_is_rejected_at_its_step() {
        let (cfg, mut trace) = ex2_trace();
        let last = trace.steps.len() - 1;
        let id = trace.steps[last].id;
        trace.steps[last].value += 1;
        match check_trace(&cfg, &trace) {
            Verdict::RejectedStep { id: bad, .. } => assert_eq!(bad, id),
            other => panic!("expected rejection, got {other}"),
        }
    }

    #[test]
    fn deflated_value_breaks_the_chain() {
        let (cfg, mut trace) = ex2_trace();
        // weaken the first non-HYP step; its consumer must notice
        let index = trace.steps.iter().position(|s| s.rule != RuleId::Hyp).unwrap();
        trace.steps[index].value -= 1;
        assert!(!check_trace(&cfg, &trace).is_accepted());
    }

    #[test]
    fn swapped_bound_kind_is_rejected() {
        let (cfg, mut trace) = ex2_trace();
        let index = trace.steps.iter().position(|s| s.rule != RuleId::Hyp).unwrap();
        let step = &mut trace.steps[index];
        step.bound = match step.bound {
            BoundKind::Lo => BoundKind::Hi,
            BoundKind::Hi => BoundKind::Lo,
        };
        assert!(!check_trace(&cfg, &trace).is_accepted());
    }

    #[test]
    fn dropped_premise_is_rejected() {
        let (cfg, mut trace) = ex2_trace();
        let index = trace.steps.iter().position(|s| s.premises.len() > 1).unwrap();
        trace.steps[index].premises.pop();
        match check_trace(&cfg, &trace) {
            Verdict::RejectedStep { reason, .. } => {
                assert!(reason.contains("shape"), "{reason}")
            }
            other => panic!("expected rejection, got {other}"),
        }
    }

    #[test]
    fn forged_premise_source_is_rejected() {
        let (cfg, mut trace) = ex2_trace();
        let index = trace.steps.iter().position(|s| !s.premises.is_empty()).unwrap();
        trace.steps[index].premises[0].source = PremiseSource::Step(9999);
        assert!(!check_trace(&cfg, &trace).is_accepted());
    }

    #[test]
    fn reordered_steps_violate_topology() {
        let (cfg, mut trace) = ex2_trace();
        assert!(trace.steps.len() >= 2);
        trace.steps.swap(0, 1);
        match check_trace(&cfg, &trace) {
            Verdict::RejectedStep { reason, .. } => {
                assert!(reason.contains("ascending"), "{reason}")
            }
            other => panic!("expected rejection, got {other}"),
        }
    }

    #[test]
    fn hyp_steps_must_match_a_hypothesis() {
        let (cfg, mut trace) = ex2_trace();
        let index = trace.steps.iter().position(|s| s.rule == RuleId::Hyp).unwrap();
        trace.steps[index].value = 1;
        match check_trace(&cfg, &trace) {
            Verdict::RejectedStep { reason, .. } => {
                assert!(reason.contains("hypothesis"), "{reason}")
            }
            other => panic!("expected rejection, got {other}"),
        }
    }

    #[test]
    fn independence_holds_for_extracted_traces() {
        let (cfg, trace) = ex2_trace();
        assert!(check_independence(&cfg, &trace));
    }

    #[test]
    fn padding_defeats_independence() {
        let (cfg, mut trace) = ex2_trace();
        let mut extra = trace.steps.last().unwrap().clone();
        extra.id += 1;
        trace.steps.push(extra);
        // the duplicate cannot strictly tighten, so the padded trace is
        // not even accepted, and the audit reports false
        assert!(!check_independence(&cfg, &trace));
    }

    #[test]
    fn single_step_traces_are_independent() {
        let cfg = Configuration::new(
            3,
            vec!["A".into(), "B".into()],
            vec![stmt(0b11, 2)],
            vec![stmt(0b11, 2)],
        )
        .unwrap();
        let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
        let trace = extract_trace(&state, stmt(0b11, 2)).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert!(check_independence(&cfg, &trace));
    }
}
