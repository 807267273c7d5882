//! Cohn's embedding of many variables into two.
//!
//! `beta(z_n) = sum_i (-1)^i C(n, i) x^i y x^(n-i)` is the n-fold commutator
//! `[..[[y, x], x].., x]`. Sending `x_i` to `beta(z_{i-1})` embeds the free
//! skew field on `x_1, x_2, ...` into the one on `x, y` and keeps full
//! matrices full. The monomial map `x_i -> x^(i-1) y` is also a ring
//! embedding but drops ranks; it is kept as a negative control.
//!
//! In the output `y` is variable 0 and `x` is variable 1.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::formula::{smart, Formula};
use crate::pencil::{LinearPencil, PolyMatrix};

pub const X: u32 = 1;
pub const Y: u32 = 0;

/// Largest n accepted by [`beta_commutator_oracle`].
pub const MAX_COMMUTATOR_DEPTH: usize = 16;

fn power(base: &Formula, e: usize) -> Option<Formula> {
    (e > 0).then(|| Formula::product(&vec![base.clone(); e]))
}

/// Closed-form `beta(z_n)` with balanced powers and a balanced outer sum.
pub fn beta_formula(n: usize, field: PrimeField) -> Formula {
    let x = Formula::var(X);
    let y = Formula::var(Y);
    let binom = field.binomial_row(n);
    let mut terms = Vec::with_capacity(n + 1);
    for (i, &c) in binom.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let factors: Vec<Formula> = [power(&x, i), Some(y.clone()), power(&x, n - i)]
            .into_iter()
            .flatten()
            .collect();
        let mut term = Formula::product(&factors);
        if c != 1 {
            term = Formula::mul(Formula::constant(c), term);
        }
        if i % 2 == 1 {
            term = Formula::neg(field, term);
        }
        terms.push(term);
    }
    if terms.is_empty() {
        return Formula::constant(0);
    }
    Formula::sum(&terms)
}

/// `beta(z_n)` by the commutator recursion `b -> b x - x b`, sharing `b`.
/// Tree size doubles per step, so only `n <= 16` is built.
pub fn beta_commutator_oracle(n: usize, field: PrimeField) -> Result<Formula> {
    if n > MAX_COMMUTATOR_DEPTH {
        return Err(Error::CommutatorTooLarge(n));
    }
    let x = Formula::var(X);
    let mut b = Formula::var(Y);
    for _ in 0..n {
        b = Formula::sub(
            field,
            Formula::mul(b.clone(), x.clone()),
            Formula::mul(x.clone(), b),
        );
    }
    Ok(b)
}

fn embed_with(phi: &Formula, image: &dyn Fn(u32) -> Formula) -> Result<Formula> {
    if phi.contains_var(0) {
        return Err(Error::OutOfRange(
            "variable 0 has no preimage; inputs use x1, x2, ...".into(),
        ));
    }
    let mut cache: HashMap<u32, Formula> = HashMap::new();
    for v in phi.variables() {
        cache.insert(v, image(v));
    }
    Ok(phi.substitute(&|v| cache.get(&v).cloned()))
}

/// Replaces each leaf `x_i` by `beta(z_{i-1})`.
pub fn embed_formula(phi: &Formula, field: PrimeField) -> Result<Formula> {
    embed_with(phi, &|v| beta_formula(v as usize - 1, field))
}

/// Replaces each leaf `x_i` by `x^(i-1) y`.
pub fn naive_embed_formula(phi: &Formula) -> Result<Formula> {
    embed_with(phi, &naive_image)
}

fn naive_image(v: u32) -> Formula {
    let y = Formula::var(Y);
    match power(&Formula::var(X), v as usize - 1) {
        Some(p) => Formula::mul(p, y),
        None => y,
    }
}

fn embed_pencil_with(l: &LinearPencil, image: &dyn Fn(u32) -> Formula) -> Result<PolyMatrix> {
    if l.coeffs().contains_key(&0) {
        return Err(Error::OutOfRange(
            "variable 0 has no preimage; pencils use x1, x2, ...".into(),
        ));
    }
    let f = l.field();
    let images: HashMap<u32, Formula> = l.variables().into_iter().map(|v| (v, image(v))).collect();
    let mut out = PolyMatrix::zero(f, l.rows(), l.cols());
    for i in 0..l.rows() {
        for j in 0..l.cols() {
            let e = l.entry(i, j);
            let mut terms: Vec<Formula> = e
                .terms
                .iter()
                .map(|(v, &a)| smart::mul(f, Formula::constant(a), images[v].clone()))
                .collect();
            if e.constant != 0 {
                terms.push(Formula::constant(e.constant));
            }
            if !terms.is_empty() {
                out.set(i, j, Formula::sum(&terms));
            }
        }
    }
    Ok(out)
}

/// Applies `beta` entrywise to a pencil.
pub fn embed_pencil(l: &LinearPencil) -> Result<PolyMatrix> {
    let f = l.field();
    embed_pencil_with(l, &|v| beta_formula(v as usize - 1, f))
}

/// Applies the monomial map entrywise to a pencil.
pub fn naive_embed_pencil(l: &LinearPencil) -> Result<PolyMatrix> {
    embed_pencil_with(l, &naive_image)
}

/// True when only `x` and `y` occur.
pub fn is_bivariate(phi: &Formula) -> bool {
    phi.variables().iter().all(|&v| v == X || v == Y)
}
