//! Shared helpers for the integration suites: a deterministic RNG and a
//! generator of consistent random configurations.
#![allow(dead_code)] // each integration test binary uses its own subset
//!
//! Consistency comes from construction: hypotheses are sampled from the
//! rank function of a random GF(2) vector configuration in a rank-4
//! space, which satisfies every rank axiom, so at least that model
//! always exists.

use rankprover_core::geom::{Configuration, PointSet, RankStatement};

/// xorshift64*; small, deterministic, portable.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Inclusive range.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }
}

/// Rank of a set of 4-bit vectors over GF(2).
pub fn gf2_rank(vectors: &[u8]) -> u8 {
    let mut basis: [u8; 4] = [0; 4]; // indexed by leading-bit position
    let mut rank = 0u8;
    for &v in vectors {
        let mut v = v;
        for (slot, entry) in basis.iter_mut().enumerate() {
            let bit = 8u8 >> slot;
            if v & bit != 0 {
                if *entry != 0 {
                    v ^= *entry;
                } else {
                    *entry = v;
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

/// A configuration of points as nonzero vectors in GF(2)^4; its rank
/// function is a matroid of rank at most 4.
pub struct Gf2Model {
    vectors: Vec<u8>,
}

impl Gf2Model {
    pub fn random(rng: &mut Rng, points: usize) -> Gf2Model {
        let vectors = (0..points).map(|_| rng.range(1, 15) as u8).collect();
        Gf2Model { vectors }
    }

    pub fn rank(&self, set: PointSet) -> u8 {
        let selected: Vec<u8> = set.iter().map(|i| self.vectors[i]).collect();
        gf2_rank(&selected)
    }
}

pub fn point_names(count: usize) -> Vec<String> {
    (0..count)
        .map(|i| {
            let letter = (b'A' + (i % 26) as u8) as char;
            if i < 26 {
                letter.to_string()
            } else {
                format!("{letter}{}", i / 26)
            }
        })
        .collect()
}

fn random_nonempty_subset(rng: &mut Rng, points: usize) -> PointSet {
    loop {
        let bits = (rng.next_u64() & ((1 << points) - 1)) as u32;
        if bits != 0 {
            return PointSet::from_bits(bits);
        }
    }
}

/// A random configuration whose hypotheses all hold in a random GF(2)
/// vector model, so they are consistent by construction. The conclusion
/// is sampled from the same model.
pub fn random_consistent_config(rng: &mut Rng, points: usize, max_hypotheses: usize) -> Configuration {
    let model = Gf2Model::random(rng, points);
    let hypothesis_count = rng.below(max_hypotheses as u64 + 1) as usize;
    let mut hypotheses: Vec<RankStatement> = Vec::new();
    for _ in 0..hypothesis_count {
        let set = random_nonempty_subset(rng, points);
        let rank = model.rank(set);
        if !hypotheses.iter().any(|h| h.set == set) {
            hypotheses.push(RankStatement { set, rank });
        }
    }
    let goal_set = random_nonempty_subset(rng, points);
    let conclusions = vec![RankStatement { set: goal_set, rank: model.rank(goal_set) }];
    Configuration::new(3, point_names(points), hypotheses, conclusions)
        .expect("model-sampled statements satisfy the configuration invariants")
}

/// A random syntactically valid configuration with no consistency
/// guarantee, for parser roundtrips.
pub fn random_parser_config(rng: &mut Rng) -> Configuration {
    let points = rng.range(1, 6) as usize;
    let dimension = if rng.below(2) == 0 { 2 } else { 3 };
    let mut hypotheses: Vec<RankStatement> = Vec::new();
    for _ in 0..rng.below(5) {
        let set = random_nonempty_subset(rng, points);
        let max = (set.len() as u64).min(dimension as u64 + 1);
        let rank = rng.range(1, max) as u8;
        if !hypotheses.iter().any(|h| h.set == set) {
            hypotheses.push(RankStatement { set, rank });
        }
    }
    let mut conclusions = Vec::new();
    for _ in 0..rng.range(1, 3) {
        let set = random_nonempty_subset(rng, points);
        let max = (set.len() as u64).min(dimension as u64 + 1);
        conclusions.push(RankStatement { set, rank: rng.range(1, max) as u8 });
    }
    Configuration::new(dimension, point_names(points), hypotheses, conclusions)
        .expect("statements are valid by construction")
}
