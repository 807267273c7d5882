//! Depth reduction for division-free and rational formulas.

mod polynomial;
mod rational;

pub use polynomial::{depth_reduce_polynomial, C_POLY};
pub use rational::{
    depth_reduce_rational, normal_form, DirectOracle, RationalReducer, RitOracle, ZNormalForm, B_RAT, C_RAT,
    NF_BASE,
};

use crate::field::PrimeField;
use crate::formula::{smart, Formula, Node, PathStep, Side};

/// Rebuilds `path` around a new bottom subformula with constant folding, so
/// a zero spliced in collapses products and vanishes from sums.
pub(crate) fn rebuild_folding(field: PrimeField, path: &[PathStep], mut new: Formula) -> Formula {
    for step in path.iter().rev() {
        new = match (step.node.node(), step.side) {
            (Node::Add(_, b), Side::Left) => smart::add(field, new, b.clone()),
            (Node::Add(a, _), Side::Right) => smart::add(field, a.clone(), new),
            (Node::Mul(_, b), Side::Left) => smart::mul(field, new, b.clone()),
            (Node::Mul(a, _), Side::Right) => smart::mul(field, a.clone(), new),
            (Node::Inv(_), _) => smart::inv(field, new),
            _ => unreachable!("path steps are gates"),
        };
    }
    new
}

/// Depth bound `c * log2(s) + b` as a float, compared against integer depths.
pub fn depth_bound(c: f64, b: f64, size: u64) -> f64 {
    c * (size.max(1) as f64).log2() + b
}
