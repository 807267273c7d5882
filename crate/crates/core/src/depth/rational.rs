//! Depth reduction for formulas with inverse gates.
//!
//! `Depth-Reduce` splits at a gate `v`, balances `Phi_v` into `Psi` and puts
//! `Phi[v <- z]` into z-normal form `(A z + B)(C z + D)^-1`; splicing
//! `z <- Psi` gives a shallow equivalent formula. `Normal-Form` either
//! composes two recursive normal forms through a balanced gate on the path
//! to `z`, or, when a single sibling `u` of the path is heavy, balances `u`
//! on its own and asks an identity oracle whether it vanishes, since a zero
//! factor cannot be inverted.
//!
//! Normal forms compose like 2x2 matrices:
//! `(A1, B1; C1, D1) o (A2, B2; C2, D2)` is the matrix product.

use super::rebuild_folding;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::formula::{format_formula, smart, Formula, Node, Side};
use crate::oracle::{rit_eval, TrialPolicy, Verdict};

/// Depth constants: outputs satisfy `depth <= C_RAT * log2(size) + B_RAT`.
pub const C_RAT: f64 = 12.0;
pub const B_RAT: f64 = 8.0;

/// Formulas below this size are handled without splitting.
pub const NF_BASE: u64 = 9;

/// Decides whether a correct formula is identically zero.
pub trait RitOracle {
    fn is_zero(&self, phi: &Formula) -> Result<bool>;
}

/// Random matrix evaluation of the formula itself.
#[derive(Clone, Debug)]
pub struct DirectOracle {
    pub policy: TrialPolicy,
}

impl RitOracle for DirectOracle {
    fn is_zero(&self, phi: &Formula) -> Result<bool> {
        match rit_eval(phi, &self.policy)?.verdict {
            Verdict::Zero => Ok(true),
            Verdict::Nonzero => Ok(false),
            Verdict::DomainEmpty => Err(Error::OracleInconsistency(format_formula(phi, self.policy.field))),
        }
    }
}

/// `(A z + B)(C z + D)^-1` with `A..D` free of `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZNormalForm {
    pub a: Formula,
    pub b: Formula,
    pub c: Formula,
    pub d: Formula,
}

impl ZNormalForm {
    pub fn identity() -> Self {
        ZNormalForm {
            a: Formula::constant(1),
            b: Formula::constant(0),
            c: Formula::constant(0),
            d: Formula::constant(1),
        }
    }

    /// The form of a formula that does not depend on `z`.
    pub fn constant(b: Formula) -> Self {
        ZNormalForm {
            a: Formula::constant(0),
            b,
            c: Formula::constant(0),
            d: Formula::constant(1),
        }
    }

    /// `self o inner`: substitutes the inner form for the outer variable.
    pub fn compose(&self, inner: &ZNormalForm, f: PrimeField) -> ZNormalForm {
        let dot = |x: &Formula, y: &Formula, u: &Formula, w: &Formula| {
            smart::add(
                f,
                smart::mul(f, x.clone(), y.clone()),
                smart::mul(f, u.clone(), w.clone()),
            )
        };
        ZNormalForm {
            a: dot(&self.a, &inner.a, &self.b, &inner.c),
            b: dot(&self.a, &inner.b, &self.b, &inner.d),
            c: dot(&self.c, &inner.a, &self.d, &inner.c),
            d: dot(&self.c, &inner.b, &self.d, &inner.d),
        }
    }

    /// `(A psi + B)(C psi + D)^-1`, folding the trivial denominators.
    pub fn apply(&self, psi: &Formula, f: PrimeField) -> Formula {
        let num = smart::add(f, smart::mul(f, self.a.clone(), psi.clone()), self.b.clone());
        let den = smart::add(f, smart::mul(f, self.c.clone(), psi.clone()), self.d.clone());
        if den.is_one() {
            num
        } else {
            smart::mul(f, num, smart::inv(f, den))
        }
    }

    /// The represented formula in the variable `z`.
    pub fn to_formula(&self, z: u32, f: PrimeField) -> Formula {
        self.apply(&Formula::var(z), f)
    }

    pub fn max_depth(&self) -> u32 {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|g| g.depth())
            .max()
            .unwrap()
    }
}

/// Balances rational formulas with the help of an identity oracle.
pub struct RationalReducer<'a> {
    field: PrimeField,
    oracle: &'a dyn RitOracle,
    /// Subformulas the oracle declared nonzero and that now sit under an
    /// inverse gate.
    inverted: Vec<Formula>,
}

impl<'a> RationalReducer<'a> {
    pub fn new(field: PrimeField, oracle: &'a dyn RitOracle) -> Self {
        RationalReducer {
            field,
            oracle,
            inverted: Vec::new(),
        }
    }

    /// Subformulas whose nonvanishing was taken from the oracle.
    pub fn oracle_inverted(&self) -> &[Formula] {
        &self.inverted
    }

    pub fn depth_reduce(&mut self, phi: &Formula) -> Result<Formula> {
        if phi.size() < NF_BASE {
            return Ok(phi.clone());
        }
        let z = fresh_var(phi);
        let v = phi.split_gate();
        let phi_v = phi.subformula_at(v)?;
        let psi = self.depth_reduce(&phi_v)?;
        let outer = phi.replace_at(v, Formula::var(z))?;
        let nf = self.normal_form(&outer, z)?;
        Ok(nf.apply(&psi, self.field))
    }

    /// z-normal form of `phi`, where `z` occurs at most once.
    pub fn normal_form(&mut self, phi: &Formula, z: u32) -> Result<ZNormalForm> {
        let f = self.field;
        let Some(zi) = self.locate(phi, z)? else {
            return Ok(ZNormalForm::constant(self.depth_reduce(phi)?));
        };
        if zi == 0 {
            return Ok(ZNormalForm::identity());
        }
        let s = phi.size();
        let path = phi.path_to(zi)?;
        if s < NF_BASE {
            return self.compose_along(phi, zi);
        }

        // Case 1: a gate v with wt(v) <= 5s/6 and wt(phi[v <- z']) <= 5s/6.
        let balanced = path[1..path.len() - 1]
            .iter()
            .map(|step| (step.index, step.node.size()))
            .filter(|&(_, w)| 6 * w <= 5 * s && 6 * (s - w + 1) <= 5 * s)
            .min_by_key(|&(i, w)| (w.max(s - w + 1), i));
        if let Some((v, _)) = balanced {
            let outer = phi.replace_at(v, Formula::var(z))?;
            let inner = phi.subformula_at(v)?;
            let nf1 = self.normal_form(&outer, z)?;
            let nf2 = self.normal_form(&inner, z)?;
            return Ok(nf1.compose(&nf2, f));
        }

        // Case 2: exactly one heavy sibling u of the path.
        let mut heavy = Vec::new();
        for (depth, step) in path[..path.len() - 1].iter().enumerate() {
            if let Node::Add(a, b) | Node::Mul(a, b) = step.node.node() {
                let (u, u_index) = match step.side {
                    Side::Left => (b, step.index + 1 + a.size() as usize),
                    _ => (a, step.index + 1),
                };
                if 6 * u.size() > s {
                    heavy.push((depth, u.clone(), u_index));
                }
            }
        }
        let [(pd, u, u_index)] = heavy.as_slice() else {
            return self.compose_along(phi, zi);
        };
        let parent = &path[*pd];
        let v_i = &path[pd + 1];

        let psi3 = self.depth_reduce(u)?;
        if self.oracle.is_zero(&psi3)? {
            let mut upper = phi.path_to(*u_index)?;
            upper.pop();
            let pruned = rebuild_folding(f, &upper, Formula::constant(0));
            return self.normal_form(&pruned, z);
        }
        let outer = phi.replace_at(parent.index, Formula::var(z))?;
        let nf1 = self.normal_form(&outer, z)?;
        let nf2 = self.normal_form(&v_i.node, z)?;
        let inner = match (parent.node.node(), parent.side) {
            (Node::Add(..), _) => ZNormalForm {
                a: smart::add(f, nf2.a.clone(), smart::mul(f, psi3.clone(), nf2.c.clone())),
                b: smart::add(f, nf2.b.clone(), smart::mul(f, psi3.clone(), nf2.d.clone())),
                c: nf2.c,
                d: nf2.d,
            },
            // phi_v = phi_{v_i} * u
            (Node::Mul(..), Side::Left) => {
                let r = smart::inv(f, psi3.clone());
                self.inverted.push(psi3);
                ZNormalForm {
                    a: nf2.a,
                    b: nf2.b,
                    c: smart::mul(f, r.clone(), nf2.c),
                    d: smart::mul(f, r, nf2.d),
                }
            }
            // phi_v = u * phi_{v_i}
            (Node::Mul(..), _) => ZNormalForm {
                a: smart::mul(f, psi3.clone(), nf2.a),
                b: smart::mul(f, psi3, nf2.b),
                c: nf2.c,
                d: nf2.d,
            },
            _ => unreachable!("heavy siblings hang off binary gates"),
        };
        Ok(nf1.compose(&inner, f))
    }

    fn locate(&self, phi: &Formula, z: u32) -> Result<Option<usize>> {
        match phi.occurrences(z) {
            0 => Ok(None),
            1 => Ok(Some(first_var_index(phi, z))),
            count => Err(Error::MultipleOccurrence { var: z, count }),
        }
    }

    /// Composes gate by gate from `z` up to the root.
    fn compose_along(&mut self, phi: &Formula, zi: usize) -> Result<ZNormalForm> {
        let f = self.field;
        let mut path = phi.path_to(zi)?;
        path.pop();
        let mut nf = ZNormalForm::identity();
        for step in path.iter().rev() {
            nf = match (step.node.node(), step.side) {
                (Node::Inv(_), _) => ZNormalForm {
                    a: nf.c,
                    b: nf.d,
                    c: nf.a,
                    d: nf.b,
                },
                (Node::Add(a, b), side) => {
                    let u = self.depth_reduce(if side == Side::Left { b } else { a })?;
                    ZNormalForm {
                        a: smart::add(f, nf.a, smart::mul(f, u.clone(), nf.c.clone())),
                        b: smart::add(f, nf.b, smart::mul(f, u, nf.d.clone())),
                        c: nf.c,
                        d: nf.d,
                    }
                }
                (Node::Mul(a, _), Side::Right) => {
                    let u = self.depth_reduce(a)?;
                    ZNormalForm {
                        a: smart::mul(f, u.clone(), nf.a),
                        b: smart::mul(f, u, nf.b),
                        c: nf.c,
                        d: nf.d,
                    }
                }
                (Node::Mul(_, b), _) => {
                    let u = self.depth_reduce(b)?;
                    if u.is_zero() || (u.as_const().is_none() && self.oracle.is_zero(&u)?) {
                        ZNormalForm::constant(Formula::constant(0))
                    } else {
                        let r = smart::inv(f, u.clone());
                        if u.as_const().is_none() {
                            self.inverted.push(u);
                        }
                        ZNormalForm {
                            a: nf.a,
                            b: nf.b,
                            c: smart::mul(f, r.clone(), nf.c),
                            d: smart::mul(f, r, nf.d),
                        }
                    }
                }
                _ => unreachable!("path steps are gates"),
            };
        }
        Ok(nf)
    }
}

fn fresh_var(phi: &Formula) -> u32 {
    phi.max_var().map_or(0, |m| m + 1)
}

fn first_var_index(phi: &Formula, z: u32) -> usize {
    let mut at = 0usize;
    let mut cur = phi;
    'walk: loop {
        if matches!(cur.node(), Node::Var(v) if *v == z) {
            return at;
        }
        at += 1;
        for child in cur.children() {
            if child.contains_var(z) {
                cur = child;
                continue 'walk;
            }
            at += child.size() as usize;
        }
        unreachable!("variable occurs in the formula");
    }
}

/// Balances a correct rational formula; identity queries go to `oracle`.
pub fn depth_reduce_rational(phi: &Formula, field: PrimeField, oracle: &dyn RitOracle) -> Result<Formula> {
    let mut r = RationalReducer::new(field, oracle);
    r.depth_reduce(phi)
}

/// z-normal form of `phi` with respect to `z`.
pub fn normal_form(phi: &Formula, z: u32, field: PrimeField, oracle: &dyn RitOracle) -> Result<ZNormalForm> {
    let mut r = RationalReducer::new(field, oracle);
    r.normal_form(phi, z)
}
