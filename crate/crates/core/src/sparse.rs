//! Row-by-row Gaussian elimination on sparse rows.
//!
//! Blown-up pencils from formulas are mostly block-triangular with a few
//! entries per row, so inserting rows into an echelon basis keyed by leading
//! column stays close to linear in the number of nonzeros.

use std::collections::HashMap;

use crate::field::{FieldMatrix, PrimeField};

/// Sorted `(column, value)` pairs without zeros.
pub type SparseRow = Vec<(usize, u64)>;

#[derive(Clone, Debug)]
pub struct SparseMatrix {
    field: PrimeField,
    cols: usize,
    rows: Vec<SparseRow>,
}

/// `a - c * b` on sorted rows.
fn axpy(field: PrimeField, a: &SparseRow, c: u64, b: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                i += 1;
                j += 1;
                (ca, field.sub(va, field.mul(c, vb)))
            }
            (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                i += 1;
                (ca, va)
            }
            (Some(&(ca, va)), None) => {
                i += 1;
                (ca, va)
            }
            (_, Some(&(cb, vb))) => {
                j += 1;
                (cb, field.neg(field.mul(c, vb)))
            }
            (None, None) => unreachable!(),
        };
        if next.1 != 0 {
            out.push(next);
        }
    }
    out
}

struct Echelon {
    field: PrimeField,
    /// Normalized pivot rows keyed by leading column.
    pivots: HashMap<usize, SparseRow>,
}

impl Echelon {
    fn new(field: PrimeField) -> Self {
        Echelon {
            field,
            pivots: HashMap::new(),
        }
    }

    /// Reduces `row` against the basis; returns the new leading column when
    /// it was independent.
    fn insert(&mut self, mut row: SparseRow) -> Option<usize> {
        let f = self.field;
        while let Some(&(lead, c)) = row.first() {
            match self.pivots.get(&lead) {
                Some(p) => row = axpy(f, &row, c, p),
                None => {
                    let inv = f.inv(c).expect("nonzero leading entry");
                    for e in row.iter_mut() {
                        e.1 = f.mul(e.1, inv);
                    }
                    self.pivots.insert(lead, row);
                    return Some(lead);
                }
            }
        }
        None
    }
}

impl SparseMatrix {
    pub fn new(field: PrimeField, cols: usize) -> Self {
        SparseMatrix {
            field,
            cols,
            rows: Vec::new(),
        }
    }

    pub fn from_dense(m: &FieldMatrix) -> Self {
        let mut out = Self::new(m.field(), m.cols());
        for r in 0..m.rows() {
            out.push_row(
                m.row(r)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(c, &v)| (c, v))
                    .collect(),
            );
        }
        out
    }

    /// Appends a row; entries must be sorted by column and nonzero.
    pub fn push_row(&mut self, row: SparseRow) {
        debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(row.iter().all(|&(c, v)| c < self.cols && v != 0));
        self.rows.push(row);
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.field);
        let cap = self.rows.len().min(self.cols);
        let mut rank = 0;
        for row in &self.rows {
            if e.insert(row.clone()).is_some() {
                rank += 1;
                if rank == cap {
                    break;
                }
            }
        }
        rank
    }

    /// Solves `self * X = rhs` for square `self`; `None` when singular.
    pub fn solve(&self, rhs: &FieldMatrix) -> Option<FieldMatrix> {
        let f = self.field;
        let n = self.cols;
        if self.rows.len() != n || rhs.rows() != n {
            return None;
        }
        let mut e = Echelon::new(f);
        for (r, row) in self.rows.iter().enumerate() {
            let mut aug = row.clone();
            aug.extend(
                rhs.row(r)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(c, &v)| (n + c, v)),
            );
            match e.insert(aug) {
                Some(lead) if lead < n => {}
                _ => return None,
            }
        }
        let mut out = FieldMatrix::zeros(f, n, rhs.cols());
        let mut solved: HashMap<usize, Vec<u64>> = HashMap::with_capacity(n);
        for lead in (0..n).rev() {
            let row = &e.pivots[&lead];
            let mut x = vec![0u64; rhs.cols()];
            for &(c, v) in row.iter().skip(1) {
                if c >= n {
                    x[c - n] = f.add(x[c - n], v);
                } else {
                    for (xi, s) in x.iter_mut().zip(&solved[&c]) {
                        *xi = f.sub(*xi, f.mul(v, *s));
                    }
                }
            }
            for (c, &v) in x.iter().enumerate() {
                out.set(lead, c, v);
            }
            solved.insert(lead, x);
        }
        Some(out)
    }
}
