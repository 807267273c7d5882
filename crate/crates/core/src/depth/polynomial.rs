//! Brent-style balancing of division-free formulas.
//!
//! For a splitter gate `v` the formula decomposes as
//! `f = Psi1 * f_v * Psi2 + Psi3`, where `Psi1` collects the left siblings of
//! product gates on the root-to-`v` path (root first), `Psi2` the right
//! siblings (deepest first) and `Psi3 = f[v <- 0]`. All four pieces are
//! smaller than `2s/3 + O(1)` and are balanced recursively.

use super::rebuild_folding;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::formula::{Formula, Node, Side};

/// Depth constant: outputs satisfy `depth <= C_POLY * log2(size)`.
pub const C_POLY: f64 = 6.0;

const BASE: u64 = 9;

pub fn depth_reduce_polynomial(phi: &Formula, field: PrimeField) -> Result<Formula> {
    if !phi.is_division_free() {
        return Err(Error::InverseGate);
    }
    Ok(reduce(phi, field))
}

fn reduce(phi: &Formula, field: PrimeField) -> Formula {
    if phi.size() < BASE {
        return phi.clone();
    }
    let v = phi.split_gate();
    let mut path = phi.path_to(v).expect("splitter index is in range");
    let phi_v = path.pop().expect("nonempty path").node;

    let mut left = Vec::new();
    let mut right = Vec::new();
    for step in &path {
        if let Node::Mul(a, b) = step.node.node() {
            match step.side {
                Side::Right => left.push(a.clone()),
                Side::Left => right.push(b.clone()),
                Side::Only => unreachable!(),
            }
        }
    }
    right.reverse();

    let mut core = reduce(&phi_v, field);
    if !left.is_empty() {
        core = Formula::mul(reduce(&Formula::product(&left), field), core);
    }
    if !right.is_empty() {
        core = Formula::mul(core, reduce(&Formula::product(&right), field));
    }
    let rest = rebuild_folding(field, &path, Formula::constant(0));
    if rest.is_zero() {
        core
    } else {
        Formula::add(core, reduce(&rest, field))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_formula, FormulaShape};
    use crate::depth::depth_bound;
    use crate::field::rng_from_seed;
    use crate::formula::parse_formula;
    use crate::oracle::{equivalent, TrialPolicy, Verdict};
    use proptest::prelude::*;

    fn right_comb(n: u32) -> Formula {
        (1..n)
            .rev()
            .fold(Formula::var(n), |acc, i| Formula::mul(Formula::var(i), acc))
    }

    fn check(phi: &Formula, out: &Formula) {
        let s = phi.size();
        assert!(
            out.depth() as f64 <= depth_bound(C_POLY, 0.0, s),
            "depth {} for size {s}",
            out.depth()
        );
        let p = TrialPolicy::with_seed(3).at_dim(3).with_trials(30);
        assert_eq!(equivalent(phi, out, &p).unwrap().verdict, Verdict::Zero);
    }

    #[test]
    fn right_comb_of_64() {
        let f = PrimeField::default();
        let phi = right_comb(64);
        assert_eq!((phi.size(), phi.depth()), (127, 63));
        let out = depth_reduce_polynomial(&phi, f).unwrap();
        check(&phi, &out);
    }

    #[test]
    fn small_inputs_are_returned_unchanged() {
        let f = PrimeField::default();
        let x = Formula::var(1);
        assert_eq!(depth_reduce_polynomial(&x, f).unwrap(), x);
        assert_eq!(depth_reduce_polynomial(&x, f).unwrap().depth(), 0);
        let inv = parse_formula("x1 + (x2)^-1", 2, f).unwrap();
        assert_eq!(depth_reduce_polynomial(&inv, f), Err(Error::InverseGate));
    }

    #[test]
    fn balanced_tree_keeps_the_bound() {
        let f = PrimeField::default();
        let leaves: Vec<Formula> = (1..=32).map(Formula::var).collect();
        let phi = Formula::product(&leaves);
        let out = depth_reduce_polynomial(&phi, f).unwrap();
        check(&phi, &out);
    }

    #[test]
    fn sums_below_products() {
        let f = PrimeField::default();
        let phi = parse_formula(
            "x1*(x2 + x3*(x4 + x1*(x2 + x3*(x4 + x1*(x2 + x3)))))*x4 + 5",
            4,
            f,
        )
        .unwrap();
        let out = depth_reduce_polynomial(&phi, f).unwrap();
        check(&phi, &out);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_formulas_balance(seed in any::<u64>(), size in 1u64..600) {
            let f = PrimeField::default();
            let phi = random_formula(f, size, &FormulaShape::division_free(4), &mut rng_from_seed(seed));
            let out = depth_reduce_polynomial(&phi, f).unwrap();
            let s = phi.size();
            prop_assert!(out.depth() as f64 <= depth_bound(C_POLY, 0.0, s));
            prop_assert!(out.size() <= s.pow(3).max(1));
            let p = TrialPolicy::with_seed(seed).at_dim(3).with_trials(5);
            prop_assert_eq!(equivalent(&phi, &out, &p).unwrap().verdict, Verdict::Zero);
        }
    }
}
