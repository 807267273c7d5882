//! Prime-field arithmetic and dense matrices over `F_p`.
//!
//! Every oracle in the crate is an exact identity test over a large prime
//! field, so this is the only ground field. Elements are plain `u64`
//! residues in `[0, p)`; the field value carries the modulus and is cheap to
//! copy into every matrix.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The Mersenne prime `2^61 - 1`, used as the default modulus.
pub const DEFAULT_MODULUS: u64 = (1u64 << 61) - 1;

/// The prime field `F_p` for a runtime prime `p < 2^63`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField { p: DEFAULT_MODULUS }
    }
}

impl PrimeField {
    /// Checked constructor; rejects composites and moduli `>= 2^63`.
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 63 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    /// Reduces an arbitrary-size decimal literal digit by digit.
    pub fn from_decimal(&self, digits: &str) -> u64 {
        digits.bytes().fold(0, |acc, d| {
            self.add(self.mul(acc, 10 % self.p), (d - b'0') as u64 % self.p)
        })
    }

    pub fn from_i64(&self, a: i64) -> u64 {
        let r = (a as i128).rem_euclid(self.p as i128);
        r as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// `p - 1`, the field element `-1`.
    #[inline]
    pub fn minus_one(&self) -> u64 {
        self.p - 1
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let prod = a as u128 * b as u128;
        if self.p == DEFAULT_MODULUS {
            // 2^61 = 1 mod p
            let lo = (prod as u64) & DEFAULT_MODULUS;
            let hi = (prod >> 61) as u64;
            let s = lo + hi;
            if s >= DEFAULT_MODULUS {
                s - DEFAULT_MODULUS
            } else {
                s
            }
        } else {
            (prod % self.p as u128) as u64
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }

    /// Binomial coefficient `C(n, i) mod p` via Pascal's rule.
    pub fn binomial_row(&self, n: usize) -> Vec<u64> {
        let mut row = vec![1 % self.p];
        for _ in 0..n {
            let mut next = Vec::with_capacity(row.len() + 1);
            next.push(1 % self.p);
            for w in row.windows(2) {
                next.push(self.add(w[0], w[1]));
            }
            next.push(1 % self.p);
            row = next;
        }
        row
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &WITNESSES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// SplitMix64 finalizer; used to derive independent per-trial seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a seed from a master seed and a path of stream labels.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &p| mix_seed(s, p))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense row-major matrix over a prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        Self::scalar(field, n, 1)
    }

    /// `c * I_n`.
    pub fn scalar(field: PrimeField, n: usize, c: u64) -> Self {
        let mut m = Self::zeros(field, n, n);
        let c = field.reduce(c);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    /// Builds a matrix from row-major data; entries are reduced mod p.
    pub fn from_vec(field: PrimeField, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let data = data.into_iter().map(|a| field.reduce(a)).collect();
        Ok(FieldMatrix {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Convenience constructor from signed rows; panics on ragged input.
    pub fn from_rows(field: PrimeField, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().map(|&a| field.from_i64(a)));
        }
        FieldMatrix {
            field,
            rows: r,
            cols: c,
            data,
        }
    }

    /// Uniform random `rows x cols` matrix.
    pub fn random<R: Rng + ?Sized>(field: PrimeField, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        FieldMatrix {
            field,
            rows,
            cols,
            data,
        }
    }

    /// Uniform random `k x k` matrix, deterministic in `seed`.
    pub fn random_square(field: PrimeField, k: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        Self::random(field, k, k, &mut rng)
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = self.field.reduce(v);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&a| a == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        self.with_data(data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.sub(a, b))
            .collect();
        self.with_data(data)
    }

    pub fn scale(&self, c: u64) -> Self {
        let f = self.field;
        let data = self.data.iter().map(|&a| f.mul(a, c)).collect();
        self.with_data(data)
    }

    /// `self + c * I`; requires a square matrix.
    pub fn add_scalar(&self, c: u64) -> Self {
        assert!(self.is_square());
        let mut m = self.clone();
        for i in 0..self.rows {
            let idx = i * self.cols + i;
            m.data[idx] = self.field.add(m.data[idx], c);
        }
        m
    }

    fn with_data(&self, data: Vec<u64>) -> Self {
        FieldMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == 0 {
                    continue;
                }
                let other_row = &other.data[l * other.cols..(l + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o = f.add(*o, f.mul(a, b));
                }
            }
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for r in 0..block.rows {
            let dst = (r0 + r) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(r));
        }
    }

    /// Adds `block` into `self` at `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        let f = self.field;
        for r in 0..block.rows {
            let dst = (r0 + r) * self.cols + c0;
            for (d, &b) in self.data[dst..dst + block.cols].iter_mut().zip(block.row(r)) {
                *d = f.add(*d, b);
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        let mut out = Self::zeros(self.field, rows, cols);
        for r in 0..rows {
            let src = (r0 + r) * self.cols + c0;
            out.data[r * cols..(r + 1) * cols].copy_from_slice(&self.data[src..src + cols]);
        }
        out
    }

    /// Row rank by Gaussian elimination.
    ///
    /// Rows with a zero entry in the pivot column are skipped, so block-sparse
    /// inputs (blown-up pencils) eliminate far faster than the dense bound.
    pub fn rank(&self) -> usize {
        let f = self.field;
        let (rows, cols) = (self.rows, self.cols);
        let mut a = self.data.clone();
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let Some(piv) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
                continue;
            };
            if piv != rank {
                for c in col..cols {
                    a.swap(piv * cols + c, rank * cols + c);
                }
            }
            let inv = f.inv(a[rank * cols + col]).expect("nonzero pivot");
            let (head, tail) = a.split_at_mut((rank + 1) * cols);
            let pivot_row = &head[rank * cols..];
            for r in 0..rows - rank - 1 {
                let row = &mut tail[r * cols..(r + 1) * cols];
                let lead = row[col];
                if lead == 0 {
                    continue;
                }
                let factor = f.mul(lead, inv);
                row[col] = 0;
                for c in col + 1..cols {
                    let p = pivot_row[c];
                    if p != 0 {
                        row[c] = f.sub(row[c], f.mul(factor, p));
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Inverse of a square matrix, `Ok(None)` when singular.
    pub fn inverse(&self) -> Result<Option<Self>> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.rows, self.cols));
        }
        Ok(self.solve(&Self::identity(self.field, self.rows)))
    }

    /// Solves `self * X = rhs` for square `self`; `None` when singular.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        assert!(self.is_square(), "solve needs a square system");
        assert_eq!(self.rows, rhs.rows);
        let f = self.field;
        let n = self.rows;
        let m = rhs.cols;
        let w = n + m;
        let mut a = vec![0u64; n * w];
        for r in 0..n {
            a[r * w..r * w + n].copy_from_slice(self.row(r));
            a[r * w + n..(r + 1) * w].copy_from_slice(rhs.row(r));
        }
        for col in 0..n {
            let piv = (col..n).find(|&r| a[r * w + col] != 0)?;
            if piv != col {
                for c in 0..w {
                    a.swap(piv * w + c, col * w + c);
                }
            }
            let inv = f.inv(a[col * w + col]).expect("nonzero pivot");
            for c in col..w {
                a[col * w + c] = f.mul(a[col * w + c], inv);
            }
            let pivot_row: Vec<u64> = a[col * w..(col + 1) * w].to_vec();
            for r in 0..n {
                if r == col {
                    continue;
                }
                let lead = a[r * w + col];
                if lead == 0 {
                    continue;
                }
                let row = &mut a[r * w..(r + 1) * w];
                for c in col..w {
                    let p = pivot_row[c];
                    if p != 0 {
                        row[c] = f.sub(row[c], f.mul(lead, p));
                    }
                }
            }
        }
        let mut x = Self::zeros(f, n, m);
        for r in 0..n {
            x.data[r * m..(r + 1) * m].copy_from_slice(&a[r * w + n..(r + 1) * w]);
        }
        Some(x)
    }
}
