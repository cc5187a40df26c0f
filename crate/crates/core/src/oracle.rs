//! Brute-force semantic ground truth.
//!
//! Enumerates every total rank assignment over the powerset that satisfies
//! the rank axioms and the configuration's hypotheses. The engine is sound
//! iff every interval it proves contains the rank assigned by every model
//! found here. Deliberately slow and obvious: this is the trusted side.

use thiserror::Error;

use crate::geom::{Configuration, PointSet, RankStatement};

/// Largest point count the oracle accepts. 31 subsets keeps exhaustive
/// pair checking per model sub-second.
pub const ORACLE_MAX_POINTS: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("the model oracle handles at most {ORACLE_MAX_POINTS} points, got {0}")]
    TooManyPoints(usize),
}

/// A total rank assignment satisfying all axioms and hypotheses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankModel {
    point_count: usize,
    /// Indexed by subset bitmask; entry 0 is the empty set with rank 0.
    rank: Vec<u8>,
}

impl RankModel {
    pub fn rank(&self, set: PointSet) -> u8 {
        self.rank[set.bits() as usize]
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn ranks(&self) -> &[u8] {
        &self.rank
    }
}

/// Direct transcription of the rank axioms, checked over every subset
/// pair with no shortcuts: monotonicity on all inclusions, submodularity
/// on all pairs, cardinality and dimension caps, singletons at least 1.
pub fn is_matroid(ranks: &[u8], point_count: usize, dimension: u8) -> bool {
    let size = 1usize << point_count;
    if ranks.len() != size || ranks[0] != 0 {
        return false;
    }
    for (x, &rank) in ranks.iter().enumerate().skip(1) {
        let card = (x as u32).count_ones() as u8;
        if rank > card || rank > dimension + 1 {
            return false;
        }
        if card == 1 && rank < 1 {
            return false;
        }
    }
    for x in 0..size {
        for y in 0..size {
            if x & y == x && ranks[x] > ranks[y] {
                return false; // monotonicity
            }
            let union = ranks[x | y] as i32;
            let inter = ranks[x & y] as i32;
            if union + inter > ranks[x] as i32 + ranks[y] as i32 {
                return false; // submodularity
            }
        }
    }
    true
}

fn satisfies_hypotheses(ranks: &[u8], cfg: &Configuration) -> bool {
    cfg.hypotheses().iter().all(|h| ranks[h.set.bits() as usize] == h.rank)
}

struct Search<'a> {
    cfg: &'a Configuration,
    /// Masks in assignment order: ascending cardinality, then mask.
    order: Vec<u32>,
    hyp_rank: Vec<Option<u8>>,
    ranks: Vec<u8>,
    models: Vec<RankModel>,
}

impl Search<'_> {
    fn assign(&mut self, position: usize) {
        if position == self.order.len() {
            // Pruning is not trusted: re-check the axioms in full before
            // accepting the assignment as a model.
            if is_matroid(&self.ranks, self.cfg.point_count(), self.cfg.dimension())
                && satisfies_hypotheses(&self.ranks, self.cfg)
            {
                self.models.push(RankModel {
                    point_count: self.cfg.point_count(),
                    rank: self.ranks.clone(),
                });
            }
            return;
        }
        let mask = self.order[position];
        let card = mask.count_ones() as u8;
        let mut lower = 1u8;
        let mut upper = card.min(self.cfg.dimension() + 1);
        // Covers are already assigned: monotonicity from below, unit
        // increase (a submodularity consequence) from above.
        for i in 0..self.cfg.point_count() {
            let bit = 1u32 << i;
            if mask & bit != 0 && card > 1 {
                let cover = (mask & !bit) as usize;
                lower = lower.max(self.ranks[cover]);
                upper = upper.min(self.ranks[cover] + 1);
            }
        }
        if let Some(rank) = self.hyp_rank[mask as usize] {
            if rank < lower || rank > upper {
                return;
            }
            lower = rank;
            upper = rank;
        }
        'candidates: for value in lower..=upper {
            // Submodularity forward check over every split of this mask:
            // both halves and their intersection are already assigned.
            if card >= 2 {
                let mut x = (mask - 1) & mask;
                while x != 0 {
                    let rest = mask & !x;
                    let mut z = x;
                    loop {
                        z = (z - 1) & x;
                        let y = rest | z;
                        if value as i32 + self.ranks[(x & y) as usize] as i32
                            > self.ranks[x as usize] as i32 + self.ranks[y as usize] as i32
                        {
                            continue 'candidates;
                        }
                        if z == 0 {
                            break;
                        }
                    }
                    x = (x - 1) & mask;
                }
            }
            self.ranks[mask as usize] = value;
            self.assign(position + 1);
        }
        self.ranks[mask as usize] = 0;
    }
}

/// Enumerates every rank model of the configuration, exactly once, in a
/// deterministic order.
pub fn enumerate_models(cfg: &Configuration) -> Result<Vec<RankModel>, OracleError> {
    let n = cfg.point_count();
    if n > ORACLE_MAX_POINTS {
        return Err(OracleError::TooManyPoints(n));
    }
    let size = 1usize << n;
    let mut order: Vec<u32> = (1..size as u32).collect();
    order.sort_by_key(|m| (m.count_ones(), *m));
    let mut hyp_rank = vec![None; size];
    for hyp in cfg.hypotheses() {
        hyp_rank[hyp.set.bits() as usize] = Some(hyp.rank);
    }
    let mut search = Search {
        cfg,
        order,
        hyp_rank,
        ranks: vec![0; size],
        models: Vec::new(),
    };
    search.assign(0);
    Ok(search.models)
}

/// Semantic status of a rank equality goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemanticVerdict {
    /// Every model assigns the goal rank, and at least one model exists.
    Yes,
    /// Some model disagrees; carries the witness.
    No(Box<RankModel>),
    /// The hypotheses are unsatisfiable.
    NoModels,
}

/// Decides a goal by full model enumeration.
pub fn semantic_entails(
    cfg: &Configuration,
    goal: RankStatement,
) -> Result<SemanticVerdict, OracleError> {
    let models = enumerate_models(cfg)?;
    if models.is_empty() {
        return Ok(SemanticVerdict::NoModels);
    }
    for model in models {
        if model.rank(goal.set) != goal.rank {
            return Ok(SemanticVerdict::No(Box::new(model)));
        }
    }
    Ok(SemanticVerdict::Yes)
}
