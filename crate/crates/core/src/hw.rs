//! Linear pencils whose inverse carries a rational formula in its top-right
//! corner.
//!
//! Gate rules, with `u = (1, 0, .., 0)` and `v = (0, .., 0, 1)`:
//!
//! ```text
//! leaf x         ((1, x), (0, -1))
//! inverse of u   ((v^T, M_u), (0, -u))
//! product        ((M_l, -v^T u), (0, M_r))
//! sum            ((M_l, c_1 u, -v^T), (0, M_r, v^T), (0, 0, 1))
//! ```
//!
//! where `c_1` is the first column of `M_l`. The dimension is
//! `2 leaves + inverse gates + sum gates`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{evaluate_in, MatrixTuple};
use crate::field::{FieldMatrix, PrimeField};
use crate::formula::{Formula, Node};
use crate::oracle::TrialPolicy;
use crate::pencil::LinearPencil;

/// Dimension of the pencil built for `phi`.
pub fn hw_dimension(phi: &Formula) -> usize {
    let m = phi.metrics();
    (2 * m.leaves + m.inverses + m.sums) as usize
}

struct Placer<'a> {
    field: PrimeField,
    out: &'a mut LinearPencil,
}

impl Placer<'_> {
    /// Writes `M_phi` with its top-left corner at `(r0, c0)`.
    fn place(&mut self, phi: &Formula, r0: usize, c0: usize) -> usize {
        let f = self.field;
        match phi.node() {
            Node::Var(x) => {
                self.out.add_term(r0, c0, None, 1);
                self.out.add_term(r0, c0 + 1, Some(*x), 1);
                self.out.add_term(r0 + 1, c0 + 1, None, f.minus_one());
                2
            }
            Node::Const(c) => {
                self.out.add_term(r0, c0, None, 1);
                self.out.add_term(r0, c0 + 1, None, *c);
                self.out.add_term(r0 + 1, c0 + 1, None, f.minus_one());
                2
            }
            Node::Inv(u) => self.place_inverse(u, r0, c0),
            Node::Mul(l, r) => {
                let p = self.place(l, r0, c0);
                self.out.add_term(r0 + p - 1, c0 + p, None, f.minus_one());
                let q = self.place(r, r0 + p, c0 + p);
                p + q
            }
            Node::Add(l, r) => {
                let p = self.place(l, r0, c0);
                for i in 0..p {
                    let e = self.out.entry(r0 + i, c0);
                    self.out.add_affine(r0 + i, c0 + p, &e);
                }
                let q = self.place(r, r0 + p, c0 + p);
                let last = c0 + p + q;
                self.out.add_term(r0 + p - 1, last, None, f.minus_one());
                self.out.add_term(r0 + p + q - 1, last, None, 1);
                self.out.add_term(r0 + p + q, last, None, 1);
                p + q + 1
            }
        }
    }

    fn place_inverse(&mut self, u: &Formula, r0: usize, c0: usize) -> usize {
        let p = self.place(u, r0, c0 + 1);
        self.out.add_term(r0 + p - 1, c0, None, 1);
        self.out.add_term(r0 + p, c0 + 1, None, self.field.minus_one());
        p + 1
    }
}

/// The pencil `M_phi`; the top-right entry of its inverse is `phi`.
pub fn hw_linear_matrix(phi: &Formula, field: PrimeField) -> LinearPencil {
    let d = hw_dimension(phi);
    let mut out = LinearPencil::zero(field, d, d);
    let mut placer = Placer { field, out: &mut out };
    let used = placer.place(phi, 0, 0);
    debug_assert_eq!(used, d);
    out
}

/// `M' = ((v^T, M_phi), (0, -u))`, which is full exactly when `phi` is
/// nonzero.
pub fn rit_to_pencil(phi: &Formula, field: PrimeField) -> LinearPencil {
    let d = hw_dimension(phi) + 1;
    let mut out = LinearPencil::zero(field, d, d);
    let mut placer = Placer { field, out: &mut out };
    let used = placer.place_inverse(phi, 0, 0);
    debug_assert_eq!(used, d);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum HwContract {
    /// Every sampled point of both domains agreed.
    Holds { checked: usize },
    /// A sampled point disagreed.
    Violated { dimension: usize, trial: usize },
    /// No sampled tuple lay in both domains.
    Inconclusive { tried: usize },
}

impl HwContract {
    pub fn holds(&self) -> bool {
        matches!(self, HwContract::Holds { .. })
    }
}

/// Top-right `k x k` block of `M(tau)^-1`, or `None` when `M(tau)` is
/// singular.
pub fn top_right_of_inverse(m: &LinearPencil, tuple: &MatrixTuple) -> Result<Option<FieldMatrix>> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let k = tuple.dim();
    let f = m.field();
    let n = m.rows() * k;
    let a = m.evaluate_sparse(tuple)?;
    let mut rhs = FieldMatrix::zeros(f, n, k);
    for t in 0..k {
        rhs.set(n - k + t, t, 1);
    }
    Ok(a.solve(&rhs).map(|x| x.block(0, 0, k, k)))
}

/// Compares `phi(tau)` with the top-right block of `M(tau)^-1` wherever both
/// are defined.
pub fn verify_hw_contract(phi: &Formula, m: &LinearPencil, policy: &TrialPolicy) -> Result<HwContract> {
    let field = policy.field;
    let top = [phi.max_var(), m.variables().last().copied()]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0);
    let mut checked = 0;
    let mut tried = 0;
    for k in policy.schedule(phi.size()) {
        for t in 0..policy.trials {
            let tuple = MatrixTuple::random(field, k, top, policy.trial_seed(k, t));
            tried += 1;
            let Some(want) = evaluate_in(phi, &tuple, field)?.defined() else {
                continue;
            };
            let Some(got) = top_right_of_inverse(m, &tuple)? else {
                continue;
            };
            if got != want {
                return Ok(HwContract::Violated {
                    dimension: k,
                    trial: t,
                });
            }
            checked += 1;
        }
    }
    Ok(if checked > 0 {
        HwContract::Holds { checked }
    } else {
        HwContract::Inconclusive { tried }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_correct_formula, FormulaShape};
    use crate::depth::{depth_reduce_rational, DirectOracle};
    use crate::field::rng_from_seed;
    use crate::formula::parse_formula;
    use proptest::prelude::*;

    fn parse(s: &str, f: PrimeField) -> Formula {
        parse_formula(s, 4, f).unwrap()
    }

    fn policy() -> TrialPolicy {
        TrialPolicy::with_seed(9).at_dim(3).with_trials(20)
    }

    #[test]
    fn leaf_is_an_involution() {
        let f = PrimeField::default();
        let m = hw_linear_matrix(&parse("x1", f), f);
        let want = LinearPencil::from_parts(
            FieldMatrix::from_rows(f, &[vec![1, 0], vec![0, -1]]),
            [(1, FieldMatrix::from_rows(f, &[vec![0, 1], vec![0, 0]]))].into(),
        )
        .unwrap();
        assert_eq!(m, want);
        let t = MatrixTuple::random(f, 2, 1, 3);
        let e = m.evaluate(&t).unwrap();
        assert_eq!(e.mul(&e), FieldMatrix::identity(f, 4));
    }

    #[test]
    fn inverse_at_a_scalar_point() {
        let f = PrimeField::new(7).unwrap();
        let m = hw_linear_matrix(&parse("(x1)^-1", f), f);
        assert_eq!((m.rows(), m.cols()), (3, 3));
        let mut t = MatrixTuple::new(1);
        t.assign(1, FieldMatrix::scalar(f, 1, 5)).unwrap();
        let corner = top_right_of_inverse(&m, &t).unwrap().unwrap();
        assert_eq!(corner.get(0, 0), 3);
    }

    #[test]
    fn wrapper_pencils() {
        let f = PrimeField::default();
        let zero = rit_to_pencil(&Formula::constant(0), f);
        assert_eq!(zero.rows(), hw_dimension(&Formula::constant(0)) + 1);
        for k in [1, 2, 3] {
            let t = MatrixTuple::random(f, k, 1, k as u64);
            assert!(zero.evaluate(&t).unwrap().rank() < 3 * k);
        }
        let x = rit_to_pencil(&parse("x1", f), f);
        let mut t = MatrixTuple::new(1);
        t.assign(1, FieldMatrix::scalar(f, 1, 1)).unwrap();
        assert_eq!(x.evaluate(&t).unwrap().rank(), 3);
    }

    #[test]
    fn contract_examples() {
        let f = PrimeField::default();
        let x = parse("x1", f);
        let m = hw_linear_matrix(&x, f);
        assert!(verify_hw_contract(&x, &m, &policy()).unwrap().holds());

        let mut broken = LinearPencil::zero(f, 2, 2);
        broken.add_term(0, 0, None, 1);
        broken.add_term(1, 1, None, f.minus_one());
        assert!(matches!(
            verify_hw_contract(&x, &broken, &policy()).unwrap(),
            HwContract::Violated { .. }
        ));

        let empty = parse("(x1 - x1)^-1", f);
        let m = hw_linear_matrix(&empty, f);
        assert!(matches!(
            verify_hw_contract(&empty, &m, &policy()).unwrap(),
            HwContract::Inconclusive { .. }
        ));
    }

    #[test]
    fn every_gate_type_at_dimension_one() {
        let f = PrimeField::default();
        for s in ["x1*x2", "x1 + x2", "(x1 + 3)^-1*x2", "x1*(x2*x3 + 1)^-1 + x3*x1"] {
            let phi = parse(s, f);
            let m = hw_linear_matrix(&phi, f);
            assert_eq!(m.rows(), hw_dimension(&phi));
            let p = TrialPolicy::with_seed(1).at_dim(1).with_trials(10);
            assert!(verify_hw_contract(&phi, &m, &p).unwrap().holds(), "{s}");
        }
    }

    #[test]
    fn pencils_are_usually_invertible() {
        let f = PrimeField::default();
        let mut invertible = 0;
        let mut total = 0;
        for seed in 0..10u64 {
            let p = TrialPolicy::with_seed(seed);
            let phi = random_correct_formula(
                9 + 3 * seed,
                &FormulaShape::rational(3),
                &p,
                &mut rng_from_seed(seed),
            )
            .unwrap();
            let phi = depth_reduce_rational(&phi, f, &DirectOracle { policy: p }).unwrap();
            let m = hw_linear_matrix(&phi, f);
            for t in 0..20 {
                let tuple = MatrixTuple::random(f, 4, phi.max_var().unwrap_or(0), 100 * seed + t);
                let full = m.evaluate(&tuple).unwrap().rank() == 4 * m.rows();
                invertible += full as usize;
                total += 1;
            }
        }
        assert!(invertible * 100 >= 95 * total, "{invertible}/{total}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn contract_on_random_formulas(seed in any::<u64>(), size in 1u64..40) {
            let f = PrimeField::default();
            let p = TrialPolicy::with_seed(seed);
            let phi = random_correct_formula(size, &FormulaShape::rational(3), &p, &mut rng_from_seed(seed)).unwrap();
            let phi = depth_reduce_rational(&phi, f, &DirectOracle { policy: p }).unwrap();
            let m = hw_linear_matrix(&phi, f);
            let met = phi.metrics();
            prop_assert_eq!(m.rows() as u64, 2 * met.leaves + met.inverses + met.sums);
            let v = verify_hw_contract(&phi, &m, &TrialPolicy::with_seed(seed).at_dim(3).with_trials(5)).unwrap();
            prop_assert!(v.holds(), "{:?}", v);
        }
    }
}
