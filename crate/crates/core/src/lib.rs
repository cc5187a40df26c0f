//! Rank-interval saturation prover for projective incidence geometry.
//!
//! A configuration is a finite set of points with rank hypotheses
//! (`rk{C,D} = 2` says C and D are distinct, `rk{A,C,D} = 2` says they are
//! collinear, and so on). The engine assigns every non-empty subset a rank
//! interval, propagates the matroid axioms to a fixpoint, and answers rank
//! equality goals. Every tightening is recorded, so a proof extracts into
//! a replayable certificate and renders as a Coq-style script.

pub mod checker;
pub mod emitter;
pub mod engine;
pub mod geom;
pub mod goal;
pub mod oracle;
pub mod parser;
pub mod tracefile;

#[cfg(test)]
pub(crate) mod testutil {
    use crate::geom::{Configuration, PointSet, RankStatement};

    pub fn mask(bits: u32) -> PointSet {
        PointSet::from_bits(bits)
    }

    pub fn stmt(bits: u32, rank: u8) -> RankStatement {
        RankStatement { set: mask(bits), rank }
    }

    /// The four-point example used throughout: points A B C D with
    /// hypotheses rk{C,D}=2, rk{C,A}=2, rk{A,C,D}=2, rk{A,D,B}=3 and
    /// conclusion rk{A,C,B}=3. Bit order: A=0, B=1, C=2, D=3.
    pub fn ex2_config() -> Configuration {
        Configuration::new(
            3,
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            vec![stmt(0b1100, 2), stmt(0b0101, 2), stmt(0b1101, 2), stmt(0b1011, 3)],
            vec![stmt(0b0111, 3)],
        )
        .unwrap()
    }
}
