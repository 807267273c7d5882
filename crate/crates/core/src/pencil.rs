//! Linear pencils `A0 + sum_t A_t x_t` and matrices of formulas.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::eval::{evaluate_in, MatrixTuple};
use crate::field::{FieldMatrix, PrimeField};
use crate::formula::{smart, Formula, Node};
use crate::sparse::{SparseMatrix, SparseRow};

/// An affine-linear form `c + sum_t a_t x_t`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AffineForm {
    pub constant: u64,
    pub terms: BTreeMap<u32, u64>,
}

impl AffineForm {
    pub fn constant(c: u64) -> Self {
        AffineForm {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(v: u32) -> Self {
        AffineForm {
            constant: 0,
            terms: BTreeMap::from([(v, 1)]),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0 && self.terms.is_empty()
    }

    pub fn add(&self, other: &Self, f: PrimeField) -> Self {
        let mut out = self.clone();
        out.constant = f.add(out.constant, other.constant);
        for (&v, &a) in &other.terms {
            let e = out.terms.entry(v).or_insert(0);
            *e = f.add(*e, a);
            if *e == 0 {
                out.terms.remove(&v);
            }
        }
        out
    }

    pub fn scale(&self, c: u64, f: PrimeField) -> Self {
        if c == 0 {
            return AffineForm::default();
        }
        AffineForm {
            constant: f.mul(self.constant, c),
            terms: self.terms.iter().map(|(&v, &a)| (v, f.mul(a, c))).collect(),
        }
    }

    /// The form as a formula, folding trivial coefficients.
    pub fn to_formula(&self, f: PrimeField) -> Formula {
        let mut terms: Vec<Formula> = self
            .terms
            .iter()
            .map(|(&v, &a)| smart::mul(f, Formula::constant(a), Formula::var(v)))
            .collect();
        if self.constant != 0 || terms.is_empty() {
            terms.push(Formula::constant(self.constant));
        }
        Formula::sum(&terms)
    }
}

/// Value of a variable-free formula, `None` if it has variables or divides
/// by zero.
pub fn scalar_value(phi: &Formula, f: PrimeField) -> Option<u64> {
    match phi.node() {
        Node::Var(_) => None,
        Node::Const(c) => Some(*c),
        Node::Add(a, b) => Some(f.add(scalar_value(a, f)?, scalar_value(b, f)?)),
        Node::Mul(a, b) => Some(f.mul(scalar_value(a, f)?, scalar_value(b, f)?)),
        Node::Inv(a) => f.inv(scalar_value(a, f)?),
    }
}

/// Recognizes formulas that are affine as written: sums of affine pieces
/// and products in which one side is a scalar.
pub fn affine_form(phi: &Formula, f: PrimeField) -> Option<AffineForm> {
    match phi.node() {
        Node::Var(v) => Some(AffineForm::var(*v)),
        Node::Const(c) => Some(AffineForm::constant(*c)),
        Node::Add(a, b) => Some(affine_form(a, f)?.add(&affine_form(b, f)?, f)),
        Node::Mul(a, b) => {
            if let Some(c) = scalar_value(a, f) {
                Some(affine_form(b, f)?.scale(c, f))
            } else {
                let c = scalar_value(b, f)?;
                Some(affine_form(a, f)?.scale(c, f))
            }
        }
        Node::Inv(_) => scalar_value(phi, f).map(AffineForm::constant),
    }
}

/// A `rows x cols` matrix whose entries are affine-linear forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearPencil {
    field: PrimeField,
    rows: usize,
    cols: usize,
    constant: FieldMatrix,
    coeffs: BTreeMap<u32, FieldMatrix>,
}

impl LinearPencil {
    pub fn zero(field: PrimeField, rows: usize, cols: usize) -> Self {
        LinearPencil {
            field,
            rows,
            cols,
            constant: FieldMatrix::zeros(field, rows, cols),
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds from a constant matrix and per-variable coefficient matrices.
    pub fn from_parts(constant: FieldMatrix, coeffs: BTreeMap<u32, FieldMatrix>) -> Result<Self> {
        let (rows, cols) = (constant.rows(), constant.cols());
        for (v, m) in &coeffs {
            if (m.rows(), m.cols()) != (rows, cols) {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient of x{v} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let mut p = LinearPencil {
            field: constant.field(),
            rows,
            cols,
            constant,
            coeffs,
        };
        p.prune();
        Ok(p)
    }

    /// Entry `(i, j)` is variable `vars[i * cols + j]`.
    pub fn generic(field: PrimeField, rows: usize, cols: usize, first_var: u32) -> Self {
        let mut p = Self::zero(field, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                p.add_term(i, j, Some(first_var + (i * cols + j) as u32), 1);
            }
        }
        p
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut p = Self::zero(field, n, n);
        p.constant = FieldMatrix::identity(field, n);
        p
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, m| !m.is_zero());
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn constant(&self) -> &FieldMatrix {
        &self.constant
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, FieldMatrix> {
        &self.coeffs
    }

    pub fn variables(&self) -> BTreeSet<u32> {
        self.coeffs.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    /// Adds `c * x_var` (or `c` when `var` is `None`) to entry `(i, j)`.
    pub fn add_term(&mut self, i: usize, j: usize, var: Option<u32>, c: u64) {
        let f = self.field;
        let (rows, cols) = (self.rows, self.cols);
        let m = match var {
            None => &mut self.constant,
            Some(v) => self
                .coeffs
                .entry(v)
                .or_insert_with(|| FieldMatrix::zeros(f, rows, cols)),
        };
        let cur = m.get(i, j);
        m.set(i, j, f.add(cur, f.reduce(c)));
        if var.is_some() {
            self.prune();
        }
    }

    pub fn add_affine(&mut self, i: usize, j: usize, form: &AffineForm) {
        self.add_term(i, j, None, form.constant);
        for (&v, &a) in &form.terms {
            self.add_term(i, j, Some(v), a);
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> AffineForm {
        AffineForm {
            constant: self.constant.get(i, j),
            terms: self
                .coeffs
                .iter()
                .filter(|(_, m)| m.get(i, j) != 0)
                .map(|(&v, m)| (v, m.get(i, j)))
                .collect(),
        }
    }

    /// Copies `other` into the block at `(r0, c0)`, adding to what is there.
    pub fn add_block(&mut self, r0: usize, c0: usize, other: &LinearPencil) {
        self.constant.add_block(r0, c0, &other.constant);
        for (&v, m) in &other.coeffs {
            let (rows, cols, f) = (self.rows, self.cols, self.field);
            self.coeffs
                .entry(v)
                .or_insert_with(|| FieldMatrix::zeros(f, rows, cols))
                .add_block(r0, c0, m);
        }
        self.prune();
    }

    pub fn scale_row(&mut self, i: usize, c: u64) {
        let f = self.field;
        for m in std::iter::once(&mut self.constant).chain(self.coeffs.values_mut()) {
            for j in 0..m.cols() {
                let v = m.get(i, j);
                m.set(i, j, f.mul(v, c));
            }
        }
        self.prune();
    }

    /// `self ⊕ I_k`.
    pub fn pad_identity(&self, k: usize) -> Self {
        let mut out = Self::zero(self.field, self.rows + k, self.cols + k);
        out.add_block(0, 0, self);
        for i in 0..k {
            out.add_term(self.rows + i, self.cols + i, None, 1);
        }
        out
    }

    /// Appends zero rows and columns.
    pub fn pad_zero(&self, extra_rows: usize, extra_cols: usize) -> Self {
        let mut out = Self::zero(self.field, self.rows + extra_rows, self.cols + extra_cols);
        out.add_block(0, 0, self);
        out
    }

    /// Left multiplication by a scalar matrix.
    pub fn left_mul(&self, s: &FieldMatrix) -> Result<Self> {
        if s.cols() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} scalar factor against {} rows",
                s.rows(),
                s.cols(),
                self.rows
            )));
        }
        let coeffs = self.coeffs.iter().map(|(&v, m)| (v, s.mul(m))).collect();
        Self::from_parts(s.mul(&self.constant), coeffs)
    }

    /// The blown-up scalar matrix: entry `(i, j)` becomes the k x k block
    /// `A0[i,j] I + sum_t A_t[i,j] X_t`.
    pub fn evaluate(&self, tuple: &MatrixTuple) -> Result<FieldMatrix> {
        let k = tuple.dim();
        let f = self.field;
        let mut out = FieldMatrix::zeros(f, self.rows * k, self.cols * k);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let c = self.constant.get(i, j);
                if c != 0 {
                    for d in 0..k {
                        out.set(i * k + d, j * k + d, c);
                    }
                }
            }
        }
        for (&v, m) in &self.coeffs {
            let x = tuple.get(v).ok_or(Error::UnassignedVariable(v))?;
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let a = m.get(i, j);
                    if a != 0 {
                        out.add_block(i * k, j * k, &x.scale(a));
                    }
                }
            }
        }
        Ok(out)
    }

    /// [`LinearPencil::evaluate`] as sparse rows.
    pub fn evaluate_sparse(&self, tuple: &MatrixTuple) -> Result<SparseMatrix> {
        let k = tuple.dim();
        let f = self.field;
        let mut vars = Vec::with_capacity(self.coeffs.len());
        for (&v, m) in &self.coeffs {
            vars.push((m, tuple.get(v).ok_or(Error::UnassignedVariable(v))?));
        }
        let mut out = SparseMatrix::new(f, self.cols * k);
        let mut acc = vec![0u64; k];
        for i in 0..self.rows {
            let mut rows: Vec<SparseRow> = vec![Vec::new(); k];
            for j in 0..self.cols {
                let c = self.constant.get(i, j);
                let live: Vec<_> = vars
                    .iter()
                    .filter(|(m, _)| m.get(i, j) != 0)
                    .map(|(m, x)| (m.get(i, j), *x))
                    .collect();
                if c == 0 && live.is_empty() {
                    continue;
                }
                for (d, row) in rows.iter_mut().enumerate() {
                    acc.iter_mut().for_each(|a| *a = 0);
                    acc[d] = c;
                    for (a, x) in &live {
                        for (e, &xv) in acc.iter_mut().zip(x.row(d)) {
                            *e = f.add(*e, f.mul(*a, xv));
                        }
                    }
                    row.extend(
                        acc.iter()
                            .enumerate()
                            .filter(|(_, &v)| v != 0)
                            .map(|(e, &v)| (j * k + e, v)),
                    );
                }
            }
            for row in rows {
                out.push_row(row);
            }
        }
        Ok(out)
    }

    pub fn to_polymatrix(&self) -> PolyMatrix {
        let mut pm = PolyMatrix::zero(self.field, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                pm.set(i, j, self.entry(i, j).to_formula(self.field));
            }
        }
        pm
    }
}

/// A matrix of formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    entries: Vec<Formula>,
}

impl PolyMatrix {
    pub fn zero(field: PrimeField, rows: usize, cols: usize) -> Self {
        let z = Formula::constant(0);
        PolyMatrix {
            field,
            rows,
            cols,
            entries: vec![z; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        let one = Formula::constant(1);
        for i in 0..n {
            m.set(i, i, one.clone());
        }
        m
    }

    pub fn from_rows(field: PrimeField, rows: Vec<Vec<Formula>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(PolyMatrix {
            field,
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Formula {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: Formula) {
        self.entries[i * self.cols + j] = f;
    }

    pub fn entries(&self) -> &[Formula] {
        &self.entries
    }

    pub fn map(&self, g: impl Fn(&Formula) -> Formula) -> Self {
        PolyMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(g).collect(),
        }
    }

    pub fn try_map(&self, g: impl Fn(&Formula) -> Result<Formula>) -> Result<Self> {
        Ok(PolyMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(g).collect::<Result<_>>()?,
        })
    }

    pub fn is_division_free(&self) -> bool {
        self.entries.iter().all(|e| e.is_division_free())
    }

    pub fn max_var(&self) -> Option<u32> {
        self.entries.iter().filter_map(|e| e.max_var()).max()
    }

    /// Reads the matrix as a pencil when every entry is affine as written.
    pub fn to_pencil(&self) -> Option<LinearPencil> {
        let mut p = LinearPencil::zero(self.field, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                p.add_affine(i, j, &affine_form(self.get(i, j), self.field)?);
            }
        }
        Some(p)
    }

    /// Block evaluation; `None` when some entry is undefined at `tuple`.
    pub fn evaluate(&self, tuple: &MatrixTuple) -> Result<Option<FieldMatrix>> {
        let k = tuple.dim();
        let mut out = FieldMatrix::zeros(self.field, self.rows * k, self.cols * k);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = self.get(i, j);
                if e.is_zero() {
                    continue;
                }
                match evaluate_in(e, tuple, self.field)?.defined() {
                    Some(m) => out.set_block(i * k, j * k, &m),
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(out))
    }
}
