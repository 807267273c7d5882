//! Higman linearization: `P (A ⊕ I_k) Q = L` with `L` affine-linear.
//!
//! Each step takes a cell holding `a + c r` (`a` affine, `c` a scalar, `r`
//! a product or a sum of non-affine pieces) and opens one fresh row and
//! column `n`:
//!
//! * `r = g h`: the cell becomes `a`, `(i, n) = c g`, `(n, j) = -h`;
//! * `r = g + h`: the cell keeps `a + c h`, `(i, n) = c g`, `(n, j) = -1`.
//!
//! The step is `(I + c g E_in) M (I - h E_nj)`, so `P` collects the `(i, n)`
//! entries above the diagonal and `Q` the `(n, j)` entries below it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::MatrixTuple;
use crate::field::{FieldMatrix, PrimeField};
use crate::formula::{smart, Formula, Node};
use crate::oracle::TrialPolicy;
use crate::pencil::{affine_form, scalar_value, AffineForm, LinearPencil, PolyMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HigmanCertificate {
    pub p: PolyMatrix,
    pub q: PolyMatrix,
    pub l: LinearPencil,
    /// Size of the identity padding.
    pub k: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Size bookkeeping for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateSummary {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub l_rows: usize,
    pub l_cols: usize,
}

impl HigmanCertificate {
    pub fn summary(&self) -> CertificateSummary {
        CertificateSummary {
            rows: self.rows,
            cols: self.cols,
            k: self.k,
            l_rows: self.l.rows(),
            l_cols: self.l.cols(),
        }
    }
}

struct Cell {
    i: usize,
    j: usize,
    scale: u64,
    rest: Formula,
}

struct Builder {
    field: PrimeField,
    rows: usize,
    cols: usize,
    /// `(row, col, value)` for the affine part of `L`.
    l: Vec<(usize, usize, AffineForm)>,
    /// `(i, t, c g)`: entry of `P` at row `i`, column `rows + t`.
    p: Vec<(usize, usize, Formula)>,
    /// `(t, j, -h)`: entry of `Q` at row `cols + t`, column `j`.
    q: Vec<(usize, usize, Formula)>,
    k: usize,
}

/// Splits off the affine summands of a top-level sum.
fn split_affine(phi: &Formula, f: PrimeField) -> (AffineForm, Option<Formula>) {
    if let Some(a) = affine_form(phi, f) {
        return (a, None);
    }
    if let Node::Add(g, h) = phi.node() {
        let (a1, r1) = split_affine(g, f);
        let (a2, r2) = split_affine(h, f);
        let rest = match (r1, r2) {
            (Some(x), Some(y)) => Some(Formula::add(x, y)),
            (x, y) => x.or(y),
        };
        return (a1.add(&a2, f), rest);
    }
    (AffineForm::default(), Some(phi.clone()))
}

impl Builder {
    /// Row of `L` for step `t` in the row numbering of the padded matrix.
    fn new_row(&self, t: usize) -> usize {
        self.rows + t
    }

    fn new_col(&self, t: usize) -> usize {
        self.cols + t
    }

    fn open(&mut self) -> usize {
        let t = self.k;
        self.k += 1;
        t
    }

    fn run(&mut self, i: usize, j: usize, entry: &Formula) -> Result<()> {
        let mut stack = vec![Cell {
            i,
            j,
            scale: 1,
            rest: entry.clone(),
        }];
        while let Some(cell) = stack.pop() {
            self.cell(cell, &mut stack)?;
        }
        Ok(())
    }

    fn cell(&mut self, cell: Cell, stack: &mut Vec<Cell>) -> Result<()> {
        let f = self.field;
        let Cell {
            i,
            j,
            mut scale,
            rest,
        } = cell;
        let mut r = rest;
        // peel affine summands and scalar factors until a genuine gate is left
        loop {
            if scale == 0 {
                return Ok(());
            }
            let (a, rest) = split_affine(&r, f);
            self.l.push((i, j, a.scale(scale, f)));
            let Some(rest) = rest else {
                return Ok(());
            };
            r = rest;
            let Node::Mul(g, h) = r.node() else {
                break;
            };
            let next = if let Some(c) = scalar_value(g, f) {
                scale = f.mul(scale, c);
                h.clone()
            } else if let Some(c) = scalar_value(h, f) {
                scale = f.mul(scale, c);
                g.clone()
            } else {
                break;
            };
            r = next;
        }
        let t = self.open();
        let (ni, nj) = (self.new_row(t), self.new_col(t));
        let cg = |g: &Formula| smart::mul(f, Formula::constant(scale), g.clone());
        self.l.push((ni, nj, AffineForm::constant(1)));
        match r.node() {
            Node::Mul(g, h) => {
                self.p.push((i, t, cg(g)));
                self.q.push((t, j, smart::neg(f, h.clone())));
                stack.push(Cell {
                    i: ni,
                    j,
                    scale: f.minus_one(),
                    rest: h.clone(),
                });
                stack.push(Cell {
                    i,
                    j: nj,
                    scale,
                    rest: g.clone(),
                });
            }
            Node::Add(g, h) => {
                self.p.push((i, t, cg(g)));
                self.q.push((t, j, Formula::constant(f.minus_one())));
                self.l.push((ni, j, AffineForm::constant(f.minus_one())));
                stack.push(Cell {
                    i,
                    j,
                    scale,
                    rest: h.clone(),
                });
                stack.push(Cell {
                    i,
                    j: nj,
                    scale,
                    rest: g.clone(),
                });
            }
            Node::Inv(_) => return Err(Error::InverseGate),
            Node::Var(_) | Node::Const(_) => unreachable!("affine cells stop earlier"),
        }
        Ok(())
    }

    fn finish(self) -> Result<HigmanCertificate> {
        let f = self.field;
        let (m, n, k) = (self.rows, self.cols, self.k);
        let mut l = LinearPencil::zero(f, m + k, n + k);
        for (i, j, form) in &self.l {
            l.add_affine(*i, *j, form);
        }
        let mut p = PolyMatrix::identity(f, m + k);
        for (i, t, g) in self.p {
            p.set(i, m + t, g);
        }
        let mut q = PolyMatrix::identity(f, n + k);
        for (t, j, h) in self.q {
            q.set(n + t, j, h);
        }
        Ok(HigmanCertificate {
            p,
            q,
            l,
            k,
            rows: m,
            cols: n,
        })
    }
}

/// Linearizes the 1 x 1 matrix `[phi]`.
pub fn linearize_formula(phi: &Formula, field: PrimeField) -> Result<HigmanCertificate> {
    let a = PolyMatrix::from_rows(field, vec![vec![phi.clone()]])?;
    linearize_polymatrix(&a)
}

/// Linearizes every entry in row-major order; the padding rows and columns
/// of entry `(i, j)` form one contiguous block after those of the entries
/// before it.
pub fn linearize_polymatrix(a: &PolyMatrix) -> Result<HigmanCertificate> {
    if !a.is_division_free() {
        return Err(Error::InverseGate);
    }
    let mut b = Builder {
        field: a.field(),
        rows: a.rows(),
        cols: a.cols(),
        l: Vec::new(),
        p: Vec::new(),
        q: Vec::new(),
        k: 0,
    };
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            b.run(i, j, a.get(i, j))?;
        }
    }
    b.finish()
}

fn unit_triangular(m: &PolyMatrix, upper: bool) -> bool {
    if !m.is_division_free() || m.rows() != m.cols() {
        return false;
    }
    (0..m.rows()).all(|i| {
        (0..m.cols()).all(|j| {
            let e = m.get(i, j);
            if i == j {
                e.is_one()
            } else if (i > j) == upper {
                e.is_zero()
            } else {
                true
            }
        })
    })
}

/// `A ⊕ I_k` as a matrix of formulas.
pub fn pad_polymatrix(a: &PolyMatrix, k: usize) -> PolyMatrix {
    let mut out = PolyMatrix::zero(a.field(), a.rows() + k, a.cols() + k);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.set(i, j, a.get(i, j).clone());
        }
    }
    for t in 0..k {
        out.set(a.rows() + t, a.cols() + t, Formula::constant(1));
    }
    out
}

/// Structural checks, then `P (A ⊕ I_k) Q = L` at random tuples.
pub fn verify_certificate(cert: &HigmanCertificate, a: &PolyMatrix, policy: &TrialPolicy) -> Result<bool> {
    let (m, n, k) = (a.rows(), a.cols(), cert.k);
    if (cert.rows, cert.cols) != (m, n) {
        return Err(Error::DimensionMismatch(format!(
            "certificate for {}x{}, matrix is {m}x{n}",
            cert.rows, cert.cols
        )));
    }
    if (cert.l.rows(), cert.l.cols()) != (m + k, n + k) || cert.p.rows() != m + k || cert.q.rows() != n + k {
        return Ok(false);
    }
    if !unit_triangular(&cert.p, true) || !unit_triangular(&cert.q, false) {
        return Ok(false);
    }
    let field = policy.field;
    let padded = pad_polymatrix(a, k);
    let top = [
        cert.p.max_var(),
        cert.q.max_var(),
        a.max_var(),
        cert.l.variables().last().copied(),
    ]
    .into_iter()
    .flatten()
    .max()
    .unwrap_or(0);
    let size = a.entries().iter().map(|e| e.size()).sum::<u64>();
    for d in policy.schedule(size) {
        for t in 0..policy.trials {
            let tuple = MatrixTuple::random(field, d, top, policy.trial_seed(d, t));
            if !identity_holds(cert, &padded, &tuple)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn identity_holds(cert: &HigmanCertificate, padded: &PolyMatrix, tuple: &MatrixTuple) -> Result<bool> {
    let defined = |m: Option<FieldMatrix>| m.ok_or(Error::InverseGate);
    let p = defined(cert.p.evaluate(tuple)?)?;
    let q = defined(cert.q.evaluate(tuple)?)?;
    let a = defined(padded.evaluate(tuple)?)?;
    Ok(p.mul(&a).mul(&q) == cert.l.evaluate(tuple)?)
}
