//! Evaluation of formulas at tuples of k x k matrices.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{rng_from_seed, FieldMatrix, PrimeField};
use crate::formula::{Formula, Node};

/// An assignment of a k x k matrix to each variable index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixTuple {
    k: usize,
    mats: Vec<Option<FieldMatrix>>,
}

impl MatrixTuple {
    pub fn new(k: usize) -> Self {
        MatrixTuple { k, mats: Vec::new() }
    }

    /// Variables `0..mats.len()` in order.
    pub fn from_matrices(mats: Vec<FieldMatrix>) -> Result<Self> {
        let k = mats.first().map_or(1, |m| m.rows());
        let mut t = Self::new(k);
        for (i, m) in mats.into_iter().enumerate() {
            t.assign(i as u32, m)?;
        }
        Ok(t)
    }

    /// Uniform matrices for variables `0..=max_var`, deterministic in `seed`.
    pub fn random(field: PrimeField, k: usize, max_var: u32, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        Self::random_with(field, k, max_var, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(field: PrimeField, k: usize, max_var: u32, rng: &mut R) -> Self {
        let mats = (0..=max_var)
            .map(|_| Some(FieldMatrix::random(field, k, k, rng)))
            .collect();
        MatrixTuple { k, mats }
    }

    pub fn assign(&mut self, var: u32, m: FieldMatrix) -> Result<()> {
        if m.rows() != self.k || m.cols() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix in a tuple of dimension {}",
                m.rows(),
                m.cols(),
                self.k
            )));
        }
        let i = var as usize;
        if self.mats.len() <= i {
            self.mats.resize(i + 1, None);
        }
        self.mats[i] = Some(m);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, var: u32) -> Option<&FieldMatrix> {
        self.mats.get(var as usize).and_then(|m| m.as_ref())
    }

    pub fn field(&self) -> Option<PrimeField> {
        self.mats.iter().flatten().next().map(|m| m.field())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalOutcome {
    Defined(FieldMatrix),
    /// Preorder index of the first inverse gate whose input was singular.
    UndefinedAt(usize),
}

impl EvalOutcome {
    pub fn defined(self) -> Option<FieldMatrix> {
        match self {
            EvalOutcome::Defined(m) => Some(m),
            EvalOutcome::UndefinedAt(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, EvalOutcome::Defined(_))
    }
}

enum Step {
    Ok(FieldMatrix),
    Singular(usize),
}

/// Evaluates `f` at `tuple`, depth first and left child first, with
/// `Const c` read as `c * I_k`. Shared subtrees are evaluated once.
pub fn evaluate(f: &Formula, tuple: &MatrixTuple) -> Result<EvalOutcome> {
    let field = match tuple.field() {
        Some(field) => field,
        None => match f.variables().into_iter().next() {
            Some(v) => return Err(Error::UnassignedVariable(v)),
            None => PrimeField::default(),
        },
    };
    evaluate_in(f, tuple, field)
}

/// As [`evaluate`], with the field given explicitly (needed for tuples that
/// assign no variables).
pub fn evaluate_in(f: &Formula, tuple: &MatrixTuple, field: PrimeField) -> Result<EvalOutcome> {
    let mut memo = HashMap::new();
    match eval_rec(f, tuple, field, &mut memo)? {
        Step::Ok(m) => Ok(EvalOutcome::Defined(m)),
        Step::Singular(id) => Ok(EvalOutcome::UndefinedAt(first_preorder_index(f, id))),
    }
}

fn eval_rec(
    f: &Formula,
    tuple: &MatrixTuple,
    field: PrimeField,
    memo: &mut HashMap<usize, FieldMatrix>,
) -> Result<Step> {
    if let Some(m) = memo.get(&f.id()) {
        return Ok(Step::Ok(m.clone()));
    }
    let k = tuple.dim();
    let m = match f.node() {
        Node::Var(i) => tuple.get(*i).ok_or(Error::UnassignedVariable(*i))?.clone(),
        Node::Const(c) => FieldMatrix::scalar(field, k, *c),
        Node::Add(a, b) | Node::Mul(a, b) => {
            let x = match eval_rec(a, tuple, field, memo)? {
                Step::Ok(x) => x,
                s => return Ok(s),
            };
            let y = match eval_rec(b, tuple, field, memo)? {
                Step::Ok(y) => y,
                s => return Ok(s),
            };
            if matches!(f.node(), Node::Add(..)) {
                x.add(&y)
            } else {
                x.mul(&y)
            }
        }
        Node::Inv(a) => match eval_rec(a, tuple, field, memo)? {
            Step::Ok(x) => match x.inverse()? {
                Some(inv) => inv,
                None => return Ok(Step::Singular(f.id())),
            },
            s => return Ok(s),
        },
    };
    memo.insert(f.id(), m.clone());
    Ok(Step::Ok(m))
}

// Walks only into subtrees that contain the target, skipping the rest by
// their cached sizes, so shared DAGs with large tree size stay cheap.
fn first_preorder_index(root: &Formula, id: usize) -> usize {
    fn contains(f: &Formula, id: usize, memo: &mut HashMap<usize, bool>) -> bool {
        if f.id() == id {
            return true;
        }
        if let Some(&c) = memo.get(&f.id()) {
            return c;
        }
        let c = f.children().into_iter().any(|g| contains(g, id, memo));
        memo.insert(f.id(), c);
        c
    }
    let mut memo = HashMap::new();
    let mut at = 0usize;
    let mut cur = root;
    'walk: while cur.id() != id {
        at += 1;
        for child in cur.children() {
            if contains(child, id, &mut memo) {
                cur = child;
                continue 'walk;
            }
            at += child.size() as usize;
        }
        unreachable!("failing gate belongs to the formula");
    }
    at
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn f7() -> PrimeField {
        PrimeField::new(7).unwrap()
    }

    fn e(field: PrimeField, i: usize, j: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(field, 2, 2);
        m.set(i, j, 1);
        m
    }

    #[test]
    fn commutator_of_matrix_units() {
        let f = f7();
        let phi = parse_formula("x1*x2 - x2*x1", 2, f).unwrap();
        let mut t = MatrixTuple::new(2);
        t.assign(1, e(f, 0, 1)).unwrap();
        t.assign(2, e(f, 1, 0)).unwrap();
        let out = evaluate(&phi, &t).unwrap();
        let want = FieldMatrix::from_rows(f, &[vec![1, 0], vec![0, 6]]);
        assert_eq!(out, EvalOutcome::Defined(want));
    }

    #[test]
    fn nilpotent_inverse_is_undefined_at_root() {
        let f = f7();
        let phi = parse_formula("(x1)^-1", 1, f).unwrap();
        let mut t = MatrixTuple::new(2);
        t.assign(1, e(f, 0, 1)).unwrap();
        assert_eq!(evaluate(&phi, &t).unwrap(), EvalOutcome::UndefinedAt(0));
    }

    #[test]
    fn first_failing_inverse_in_dfs_order() {
        let f = f7();
        let phi = parse_formula("x2 + (x1)^-1 * (x1 - x1)^-1", 2, f).unwrap();
        let mut t = MatrixTuple::new(2);
        t.assign(1, e(f, 0, 1)).unwrap();
        t.assign(2, FieldMatrix::identity(f, 2)).unwrap();
        // preorder: 0 Add, 1 x2, 2 Mul, 3 Inv(x1), ...
        assert_eq!(evaluate(&phi, &t).unwrap(), EvalOutcome::UndefinedAt(3));
    }

    #[test]
    fn constants_are_scalar_matrices() {
        let f = PrimeField::default();
        let t = MatrixTuple::new(3);
        let out = evaluate_in(&Formula::constant(5), &t, f).unwrap();
        assert_eq!(out, EvalOutcome::Defined(FieldMatrix::scalar(f, 3, 5)));
    }

    #[test]
    fn unassigned_variable_is_an_error() {
        let f = f7();
        let phi = parse_formula("x1 + x3", 3, f).unwrap();
        let mut t = MatrixTuple::new(1);
        t.assign(1, FieldMatrix::identity(f, 1)).unwrap();
        assert_eq!(evaluate(&phi, &t), Err(Error::UnassignedVariable(3)));
    }

    #[test]
    fn shared_subtrees_evaluate_consistently() {
        let f = PrimeField::default();
        let g = parse_formula("x1*x2 + x3", 3, f).unwrap();
        let shared = Formula::mul(g.clone(), g.clone());
        let t = MatrixTuple::random(f, 3, 3, 11);
        let a = evaluate(&g, &t).unwrap().defined().unwrap();
        let b = evaluate(&shared, &t).unwrap().defined().unwrap();
        assert_eq!(b, a.mul(&a));
    }
}
