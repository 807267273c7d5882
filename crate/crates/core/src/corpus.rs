//! Random test inputs: formulas, correct rational formulas and pencils.

use rand::Rng;

use crate::error::Result;
use crate::field::{rng_from_seed, FieldMatrix, PrimeField};
use crate::formula::Formula;
use crate::oracle::{check_correct, TrialPolicy};
use crate::pencil::LinearPencil;

#[derive(Clone, Debug)]
pub struct FormulaShape {
    /// Variables are drawn from `first_var..first_var + vars`.
    pub vars: u32,
    pub first_var: u32,
    pub inverse_rate: f64,
    pub const_rate: f64,
    pub mul_rate: f64,
}

impl Default for FormulaShape {
    fn default() -> Self {
        FormulaShape {
            vars: 4,
            first_var: 1,
            inverse_rate: 0.0,
            const_rate: 0.1,
            mul_rate: 0.5,
        }
    }
}

impl FormulaShape {
    pub fn division_free(vars: u32) -> Self {
        FormulaShape {
            vars,
            ..Self::default()
        }
    }

    pub fn rational(vars: u32) -> Self {
        FormulaShape {
            vars,
            inverse_rate: 0.15,
            ..Self::default()
        }
    }
}

/// A random formula with at most `size` nodes (exactly `size` when inverse
/// gates are allowed).
pub fn random_formula<R: Rng + ?Sized>(
    field: PrimeField,
    size: u64,
    shape: &FormulaShape,
    rng: &mut R,
) -> Formula {
    let size = size.max(1);
    let inverses = shape.inverse_rate > 0.0;
    if size == 1 || (size == 2 && !inverses) {
        return if rng.gen_bool(shape.const_rate) {
            Formula::constant(field.reduce(rng.gen_range(1..10)))
        } else {
            Formula::var(shape.first_var + rng.gen_range(0..shape.vars))
        };
    }
    if size == 2 || (inverses && rng.gen_bool(shape.inverse_rate)) {
        return Formula::inv(random_formula(field, size - 1, shape, rng));
    }
    let left = rng.gen_range(1..=size - 2);
    let a = random_formula(field, left, shape, rng);
    let b = random_formula(field, size - 1 - left, shape, rng);
    if rng.gen_bool(shape.mul_rate) {
        Formula::mul(a, b)
    } else {
        Formula::add(a, b)
    }
}

/// Redraws until the formula has a witness of correctness under `policy`.
pub fn random_correct_formula<R: Rng + ?Sized>(
    size: u64,
    shape: &FormulaShape,
    policy: &TrialPolicy,
    rng: &mut R,
) -> Result<Formula> {
    loop {
        let phi = random_formula(policy.field, size, shape, rng);
        if check_correct(&phi, policy)?.correct {
            return Ok(phi);
        }
    }
}

/// A `count`-element corpus of correct rational formulas with sizes spread
/// over `min_size..=max_size`.
pub fn correct_corpus(
    count: usize,
    min_size: u64,
    max_size: u64,
    shape: &FormulaShape,
    policy: &TrialPolicy,
    seed: u64,
) -> Result<Vec<Formula>> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let s = rng.gen_range(min_size..=max_size);
            random_correct_formula(s, shape, policy, &mut rng)
        })
        .collect()
}

/// A random pencil with sparse coefficients. With `deficient` set, the
/// pencil is `S * L'` for a scalar `rows x r` factor `S`, `r < min(rows,
/// cols)`, which caps its rank at `r`.
pub fn random_pencil<R: Rng + ?Sized>(
    field: PrimeField,
    rows: usize,
    cols: usize,
    vars: u32,
    density: f64,
    deficient: bool,
    rng: &mut R,
) -> LinearPencil {
    let inner = if deficient && rows.min(cols) > 0 {
        rng.gen_range(0..rows.min(cols))
    } else {
        rows
    };
    let mut p = LinearPencil::zero(field, inner, cols);
    for i in 0..inner {
        for j in 0..cols {
            if rng.gen_bool(density) {
                p.add_term(i, j, None, field.random(rng));
            }
            for v in 1..=vars {
                if rng.gen_bool(density) {
                    p.add_term(i, j, Some(v), field.random(rng));
                }
            }
        }
    }
    if !deficient {
        return p;
    }
    let s = FieldMatrix::random(field, rows, inner, rng);
    p.left_mul(&s).expect("shapes agree")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_are_respected() {
        let f = PrimeField::default();
        let mut rng = rng_from_seed(5);
        for s in 1..60 {
            let g = random_formula(f, s, &FormulaShape::rational(3), &mut rng);
            assert_eq!(g.size(), s);
            let h = random_formula(f, s, &FormulaShape::division_free(3), &mut rng);
            assert!(h.size() <= s && h.is_division_free());
        }
    }

    #[test]
    fn deficient_pencils_have_the_planted_shape() {
        let f = PrimeField::default();
        let mut rng = rng_from_seed(9);
        let p = random_pencil(f, 3, 4, 2, 0.5, true, &mut rng);
        assert_eq!((p.rows(), p.cols()), (3, 4));
    }
}
