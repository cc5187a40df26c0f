//! Proof extraction and script emission.
//!
//! Once saturation pins a goal, the provenance graph is walked backwards
//! from the goal's two bounds to collect exactly the deduction steps the
//! proof needs, in ascending step order. The trace then renders as a
//! Coq-style script: one lemma per subset the trace pins to an exact
//! rank, ending with the goal lemma, every lemma carrying the full
//! hypothesis list.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::engine::{RuleId, SaturationState};
use crate::geom::{
    canonical_render, default_interval_map, BoundKind, Configuration, DeductionStep, PointSet,
    PremiseSource, RankInterval, RankStatement,
};

/// The deduction steps proving one goal: ancestors of the goal's final
/// bounds, in ascending original id, nothing else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTrace {
    pub goal: RankStatement,
    pub steps: Vec<DeductionStep>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("goal is not derivable: residual interval {residual}")]
    NotDerivable { residual: RankInterval },
}

/// Walks backwards from the goal's bound provenance through premise
/// references and returns the ancestor steps in ascending id order.
pub fn extract_trace(
    state: &SaturationState,
    goal: RankStatement,
) -> Result<ProofTrace, EmitError> {
    if !state.entails(goal) {
        return Err(EmitError::NotDerivable { residual: state.interval(goal.set) });
    }
    let steps = state.steps();
    let mut pending: Vec<u32> = Vec::new();
    for bound in [BoundKind::Lo, BoundKind::Hi] {
        if let Some(id) = state.provenance(goal.set, bound) {
            pending.push(id);
        }
    }
    let mut reached: BTreeSet<u32> = BTreeSet::new();
    while let Some(id) = pending.pop() {
        if !reached.insert(id) {
            continue;
        }
        for premise in &steps[id as usize].premises {
            if let PremiseSource::Step(src) = premise.source {
                pending.push(src);
            }
        }
    }
    let trace_steps: Vec<DeductionStep> =
        reached.iter().map(|&id| steps[id as usize].clone()).collect();
    Ok(ProofTrace { goal, steps: trace_steps })
}

/// Lemma naming convention: `L` followed by the names of the concluded
/// points in introduction order. `{B}` is `LB`, `{A,B,C}` is `LABC`.
pub fn lemma_name(set: PointSet, cfg: &Configuration) -> String {
    let mut out = String::from("L");
    for index in set.iter() {
        out.push_str(cfg.point_name(index));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub name: String,
    /// `forall ... ,` line plus one clause per line, ending with `.`
    pub statement: String,
    /// Everything between `Proof.` and `Qed.`
    pub body: String,
}

/// A rendered proof script: a prelude and an ordered list of lemmas, the
/// last of which states the goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptDoc {
    pub prelude: String,
    pub lemmas: Vec<Lemma>,
}

impl ScriptDoc {
    pub fn final_lemma(&self) -> &Lemma {
        self.lemmas.last().expect("a script always holds the goal lemma")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.prelude);
        out.push_str("\n\n");
        for lemma in &self.lemmas {
            out.push_str(&format!("Lemma {} : {}\n", lemma.name, lemma.statement));
            out.push_str("Proof.\n");
            out.push_str(&lemma.body);
            out.push_str("Qed.\n\n");
        }
        out
    }
}

/// A subset pinned to an exact rank during trace replay; each becomes a
/// lemma, in pin order.
struct Pin {
    set: PointSet,
    rank: u8,
    /// Index into the trace steps of the pinning step; `usize::MAX` when
    /// the goal is pinned by the default intervals alone.
    step_index: usize,
}

fn render(set: PointSet, cfg: &Configuration) -> String {
    canonical_render(set, cfg).expect("trace sets are valid for the configuration")
}

fn point_tag(set: PointSet, cfg: &Configuration) -> String {
    set.iter().map(|i| cfg.point_name(i)).collect()
}

fn assert_name(step: &DeductionStep, cfg: &Configuration) -> String {
    let kind = match step.bound {
        BoundKind::Lo => "m",
        BoundKind::Hi => "M",
    };
    format!("H{}{}{}", point_tag(step.target, cfg), kind, step.value)
}

struct LemmaRenderer<'a> {
    cfg: &'a Configuration,
    trace: &'a ProofTrace,
    premise_values: &'a [Vec<u8>],
    /// Subsets proved by lemmas earlier in the script, with their ranks.
    earlier: HashMap<u32, u8>,
    id_to_index: &'a HashMap<u32, usize>,
    kept: BTreeSet<usize>,
}

impl LemmaRenderer<'_> {
    /// Collects the non-hypothesis ancestor steps this lemma must derive
    /// itself, stopping at bounds covered by hypotheses or earlier lemmas.
    fn keep(&mut self, index: usize) {
        let step = &self.trace.steps[index];
        if step.rule == RuleId::Hyp || !self.kept.insert(index) {
            return;
        }
        for premise in &step.premises {
            if let PremiseSource::Step(src) = premise.source {
                if self.earlier.contains_key(&premise.set.bits()) {
                    continue;
                }
                let src_index = self.id_to_index[&src];
                self.keep(src_index);
            }
        }
    }

    fn with_clause(&self) -> String {
        self.cfg
            .points()
            .iter()
            .map(|p| format!("({} := {})", p.name, p.name))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Emits the in-block lines establishing one premise and returns the
    /// identifier to pass to the rule application.
    fn premise_arg(
        &self,
        out: &mut String,
        emitted: &mut BTreeSet<(u32, BoundKind)>,
        set: PointSet,
        bound: BoundKind,
        value: u8,
        source: PremiseSource,
    ) -> String {
        if let PremiseSource::Step(src) = source {
            let index = self.id_to_index[&src];
            if self.kept.contains(&index) {
                return assert_name(&self.trace.steps[index], self.cfg);
            }
        }
        let tag = point_tag(set, self.cfg);
        let rendered = render(set, self.cfg);
        let first = emitted.insert((set.bits(), bound));
        if first {
            if let Some(&rank) = self.earlier.get(&set.bits()) {
                // an earlier lemma re-establishes the equality by name
                out.push_str(&format!(
                    "\ttry assert(H{tag}eq : rk({rendered}) = {rank}) by (apply L{tag} with {} ; try assumption).\n",
                    self.with_clause()
                ));
            }
            match bound {
                BoundKind::Lo => out.push_str(&format!(
                    "\tassert(H{tag}mtmp : rk({rendered}) >= {value}) by (solve_hyps_min H{tag}eq H{tag}m{value}).\n"
                )),
                BoundKind::Hi => out.push_str(&format!(
                    "\tassert(H{tag}Mtmp : rk({rendered}) <= {value}) by (solve_hyps_max H{tag}eq H{tag}M{value}).\n"
                )),
            }
        }
        match bound {
            BoundKind::Lo => format!("H{tag}mtmp"),
            BoundKind::Hi => format!("H{tag}Mtmp"),
        }
    }

    fn step_block(&self, out: &mut String, index: usize) {
        let step = &self.trace.steps[index];
        let values = &self.premise_values[index];
        let cfg = self.cfg;
        let relation = match step.bound {
            BoundKind::Lo => ">=",
            BoundKind::Hi => "<=",
        };
        out.push_str(&format!(
            "assert({} : rk({}) {} {}).\n{{\n",
            assert_name(step, cfg),
            render(step.target, cfg),
            relation,
            step.value
        ));
        let mut emitted = BTreeSet::new();
        let mut args = Vec::with_capacity(step.premises.len());
        for (premise, &value) in step.premises.iter().zip(values) {
            args.push(self.premise_arg(
                out,
                &mut emitted,
                premise.set,
                premise.bound,
                value,
                premise.source,
            ));
        }
        match step.rule {
            RuleId::MonoLo | RuleId::MonoHi => {
                let operand = render(step.params[0], cfg);
                let target = render(step.target, cfg);
                out.push_str(&format!(
                    "\tassert(Hcomp : {0} <= {0}) by (repeat constructor).\n",
                    step.value
                ));
                // MONO_LO goes from the subset up, MONO_HI from the superset down.
                let (small, large) = match step.rule {
                    RuleId::MonoLo => (operand.as_str(), target.as_str()),
                    _ => (target.as_str(), operand.as_str()),
                };
                out.push_str(&format!(
                    "\tassert(Hincl : incl ({small}) ({large})) by (repeat clear_all_rk;my_inO).\n"
                ));
                let rule_fn = match step.rule {
                    RuleId::MonoLo => "rule_5",
                    _ => "MONO_HI",
                };
                out.push_str(&format!(
                    "\tassert(HT := {rule_fn} ({small}) ({large}) {} {} {} Hcomp Hincl);apply HT.\n",
                    values[0], step.value, args[0]
                ));
            }
            RuleId::SubmodHiUnion | RuleId::SubmodHiInter | RuleId::SubmodLo => {
                let x = render(step.params[0], cfg);
                let y = render(step.params[1], cfg);
                let numbers: Vec<String> = match step.rule {
                    // hi(X), hi(Y), then the lo premise (0 when the pair
                    // is disjoint and no such premise exists)
                    RuleId::SubmodHiUnion | RuleId::SubmodHiInter => {
                        let third = values.get(2).copied().unwrap_or(0);
                        vec![values[0].to_string(), values[1].to_string(), third.to_string()]
                    }
                    // lo(U), lo(I), hi(Y)
                    _ => {
                        let inter = step.params[0].intersection(step.params[1]);
                        if inter.is_empty() {
                            vec![values[0].to_string(), "0".to_string(), values[1].to_string()]
                        } else {
                            vec![
                                values[0].to_string(),
                                values[1].to_string(),
                                values[2].to_string(),
                            ]
                        }
                    }
                };
                out.push_str(&format!(
                    "\tassert(HT := {} ({x}) ({y}) {} {});apply HT.\n",
                    step.rule.name(),
                    numbers.join(" "),
                    args.join(" ")
                ));
            }
            RuleId::Hyp | RuleId::InitDefault => {
                unreachable!("never rendered as step blocks")
            }
        }
        out.push_str("}\n");
    }
}

/// Renders the trace as a script document. Deterministic: the same trace
/// always yields byte-identical text.
pub fn emit_script(cfg: &Configuration, trace: &ProofTrace) -> ScriptDoc {
    // Replay the trace to find which subsets get pinned (those become
    // lemmas) and to record every premise's numeric value at use time.
    let mut intervals = default_interval_map(cfg.point_count(), cfg.dimension());
    let mut premise_values: Vec<Vec<u8>> = Vec::with_capacity(trace.steps.len());
    let mut pins: Vec<Pin> = Vec::new();
    let mut pinned: BTreeSet<u32> = BTreeSet::new();
    for (index, step) in trace.steps.iter().enumerate() {
        let values: Vec<u8> = step
            .premises
            .iter()
            .map(|p| {
                let iv = intervals[p.set.bits() as usize];
                match p.bound {
                    BoundKind::Lo => iv.lo,
                    BoundKind::Hi => iv.hi,
                }
            })
            .collect();
        premise_values.push(values);
        let slot = &mut intervals[step.target.bits() as usize];
        match step.bound {
            BoundKind::Lo => slot.lo = step.value,
            BoundKind::Hi => slot.hi = step.value,
        }
        if slot.is_exact() && pinned.insert(step.target.bits()) {
            pins.push(Pin { set: step.target, rank: slot.lo, step_index: index });
        }
    }
    if pinned.insert(trace.goal.set.bits()) {
        // goal pinned by the defaults alone (e.g. a singleton)
        pins.push(Pin { set: trace.goal.set, rank: trace.goal.rank, step_index: usize::MAX });
    }

    let id_to_index: HashMap<u32, usize> =
        trace.steps.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut hyps = cfg.hypotheses().to_vec();
    hyps.sort_by_key(|h| h.set.bits());

    let mut statement_clauses = String::new();
    statement_clauses.push_str("forall ");
    for p in cfg.points() {
        statement_clauses.push_str(&p.name);
        statement_clauses.push(' ');
    }
    statement_clauses.push_str(",\n");
    for hyp in &hyps {
        statement_clauses.push_str(&format!("rk({}) = {} ->\n", render(hyp.set, cfg), hyp.rank));
    }

    let mut lemmas = Vec::with_capacity(pins.len());
    for (lemma_index, pin) in pins.iter().enumerate() {
        let statement =
            format!("{}rk({}) = {}.", statement_clauses, render(pin.set, cfg), pin.rank);
        let earlier: HashMap<u32, u8> =
            pins[..lemma_index].iter().map(|p| (p.set.bits(), p.rank)).collect();
        let mut renderer = LemmaRenderer {
            cfg,
            trace,
            premise_values: &premise_values,
            earlier,
            id_to_index: &id_to_index,
            kept: BTreeSet::new(),
        };
        if pin.step_index != usize::MAX {
            for bound in [BoundKind::Lo, BoundKind::Hi] {
                let seed = trace.steps[..=pin.step_index]
                    .iter()
                    .rposition(|s| s.target == pin.set && s.bound == bound);
                if let Some(index) = seed {
                    renderer.keep(index);
                }
            }
        }

        let mut body = String::new();
        body.push_str("intros ");
        for p in cfg.points() {
            body.push_str(&p.name);
            body.push(' ');
        }
        if hyps.is_empty() {
            body.push_str(".\n");
        } else {
            body.push('\n');
            for hyp in &hyps {
                body.push_str(&format!("H{}eq ", point_tag(hyp.set, cfg)));
            }
            body.push_str(".\n");
        }
        let kept = renderer.kept.clone();
        for index in kept {
            renderer.step_block(&mut body, index);
        }
        let tag = point_tag(pin.set, cfg);
        let rendered = render(pin.set, cfg);
        body.push_str(&format!(
            "assert(H{tag}M : rk({rendered}) <= {0}) by (solve_hyps_max H{tag}eq H{tag}M{0}).\n",
            pin.rank
        ));
        body.push_str(&format!(
            "assert(H{tag}m : rk({rendered}) >= {0}) by (solve_hyps_min H{tag}eq H{tag}m{0}).\n",
            pin.rank
        ));
        body.push_str("intuition.\n");

        lemmas.push(Lemma { name: lemma_name(pin.set, cfg), statement, body });
    }

    ScriptDoc { prelude: "Require Import lemmas_automation_g.".to_string(), lemmas }
}
