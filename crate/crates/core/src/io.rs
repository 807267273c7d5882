//! JSON containers for pencils, polynomial matrices and Higman
//! certificates. Every container carries its modulus.
//!
//! ```text
//! .pencil      {"modulus", "rows", "cols", "nvars", "constant", "coefficients": [{"var", "matrix"}]}
//! .polymatrix  {"modulus", "rows", "cols", "entries": [["x1*x2", ...], ...]}
//! .cert        {"modulus", "rows", "cols", "k", "l": <pencil>, "p": <polymatrix>, "q": <polymatrix>}
//! ```
//!
//! Matrices are nested row-major arrays of residues in `[0, p)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, PrimeField};
use crate::formula::{format_formula, parse_formula};
use crate::higman::HigmanCertificate;
use crate::pencil::{LinearPencil, PolyMatrix};

/// Largest variable index accepted when reading formulas from files.
pub const MAX_VARIABLE: u32 = 1 << 20;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientFile {
    var: u32,
    matrix: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PencilFile {
    modulus: u64,
    rows: usize,
    cols: usize,
    nvars: u32,
    constant: Vec<Vec<u64>>,
    coefficients: Vec<CoefficientFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyMatrixFile {
    modulus: u64,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    modulus: u64,
    rows: usize,
    cols: usize,
    k: usize,
    l: PencilFile,
    p: PolyMatrixFile,
    q: PolyMatrixFile,
}

fn format_err(e: serde_json::Error) -> Error {
    Error::Format {
        line: e.line(),
        msg: e.to_string(),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Format {
        line: 0,
        msg: msg.into(),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("containers serialize");
    s.push('\n');
    s
}

fn rows_of(m: &FieldMatrix) -> Vec<Vec<u64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn matrix_from(
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: &[Vec<u64>],
    what: &str,
) -> Result<FieldMatrix> {
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(invalid(format!("{what} is not {rows}x{cols}")));
    }
    if let Some(v) = data.iter().flatten().find(|&&v| v >= field.modulus()) {
        return Err(invalid(format!("{what} has entry {v} outside [0, p)")));
    }
    FieldMatrix::from_vec(field, rows, cols, data.concat())
}

fn field_of(modulus: u64) -> Result<PrimeField> {
    PrimeField::new(modulus)
}

fn pencil_file(l: &LinearPencil) -> PencilFile {
    PencilFile {
        modulus: l.field().modulus(),
        rows: l.rows(),
        cols: l.cols(),
        nvars: l.variables().last().map_or(0, |v| v + 1),
        constant: rows_of(l.constant()),
        coefficients: l
            .coeffs()
            .iter()
            .map(|(&var, m)| CoefficientFile {
                var,
                matrix: rows_of(m),
            })
            .collect(),
    }
}

fn pencil_from(file: &PencilFile) -> Result<LinearPencil> {
    let f = field_of(file.modulus)?;
    let constant = matrix_from(f, file.rows, file.cols, &file.constant, "constant matrix")?;
    let mut coeffs = BTreeMap::new();
    for c in &file.coefficients {
        if c.var >= file.nvars {
            return Err(invalid(format!(
                "variable {} outside nvars = {}",
                c.var, file.nvars
            )));
        }
        let m = matrix_from(
            f,
            file.rows,
            file.cols,
            &c.matrix,
            &format!("coefficient of x{}", c.var),
        )?;
        if coeffs.insert(c.var, m).is_some() {
            return Err(invalid(format!("variable {} listed twice", c.var)));
        }
    }
    LinearPencil::from_parts(constant, coeffs)
}

fn polymatrix_file(a: &PolyMatrix) -> PolyMatrixFile {
    let f = a.field();
    PolyMatrixFile {
        modulus: f.modulus(),
        rows: a.rows(),
        cols: a.cols(),
        entries: (0..a.rows())
            .map(|i| (0..a.cols()).map(|j| format_formula(a.get(i, j), f)).collect())
            .collect(),
    }
}

fn polymatrix_from(file: &PolyMatrixFile) -> Result<PolyMatrix> {
    let f = field_of(file.modulus)?;
    if file.entries.len() != file.rows || file.entries.iter().any(|r| r.len() != file.cols) {
        return Err(invalid(format!("entries are not {}x{}", file.rows, file.cols)));
    }
    let rows = file
        .entries
        .iter()
        .map(|r| {
            r.iter()
                .map(|s| parse_formula(s, MAX_VARIABLE, f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if file.rows == 0 || file.cols == 0 {
        return Ok(PolyMatrix::zero(f, file.rows, file.cols));
    }
    PolyMatrix::from_rows(f, rows)
}

pub fn write_pencil(l: &LinearPencil) -> String {
    to_json(&pencil_file(l))
}

pub fn read_pencil(text: &str) -> Result<LinearPencil> {
    pencil_from(&serde_json::from_str(text).map_err(format_err)?)
}

pub fn write_polymatrix(a: &PolyMatrix) -> String {
    to_json(&polymatrix_file(a))
}

pub fn read_polymatrix(text: &str) -> Result<PolyMatrix> {
    polymatrix_from(&serde_json::from_str(text).map_err(format_err)?)
}

pub fn write_certificate(c: &HigmanCertificate) -> String {
    to_json(&CertificateFile {
        modulus: c.l.field().modulus(),
        rows: c.rows,
        cols: c.cols,
        k: c.k,
        l: pencil_file(&c.l),
        p: polymatrix_file(&c.p),
        q: polymatrix_file(&c.q),
    })
}

pub fn read_certificate(text: &str) -> Result<HigmanCertificate> {
    let file: CertificateFile = serde_json::from_str(text).map_err(format_err)?;
    let l = pencil_from(&file.l)?;
    let p = polymatrix_from(&file.p)?;
    let q = polymatrix_from(&file.q)?;
    if [file.l.modulus, file.p.modulus, file.q.modulus]
        .iter()
        .any(|&m| m != file.modulus)
    {
        return Err(invalid("components disagree on the modulus"));
    }
    Ok(HigmanCertificate {
        p,
        q,
        l,
        k: file.k,
        rows: file.rows,
        cols: file.cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::random_pencil;
    use crate::field::rng_from_seed;
    use crate::higman::linearize_polymatrix;
    use proptest::prelude::*;

    #[test]
    fn generic_pencil_file() {
        let f = PrimeField::new(7).unwrap();
        let l = LinearPencil::generic(f, 2, 2, 1);
        let text = write_pencil(&l);
        assert!(text.contains("\"modulus\": 7"));
        assert!(text.contains("\"nvars\": 5"));
        assert_eq!(read_pencil(&text).unwrap(), l);
    }

    #[test]
    fn rejects_bad_files() {
        let bad_entry =
            r#"{"modulus": 7, "rows": 1, "cols": 1, "nvars": 0, "constant": [[9]], "coefficients": []}"#;
        assert!(matches!(read_pencil(bad_entry), Err(Error::Format { .. })));
        let composite =
            r#"{"modulus": 8, "rows": 1, "cols": 1, "nvars": 0, "constant": [[1]], "coefficients": []}"#;
        assert!(matches!(read_pencil(composite), Err(Error::NotPrime(8))));
        let ragged = r#"{"modulus": 7, "rows": 1, "cols": 2, "entries": [["x1"]]}"#;
        assert!(read_polymatrix(ragged).is_err());
        let broken = "{\n\"modulus\": 7,\n oops }";
        assert!(matches!(
            read_polymatrix(broken),
            Err(Error::Format { line: 3, .. })
        ));
        let syntax = r#"{"modulus": 7, "rows": 1, "cols": 1, "entries": [["x1 * * x2"]]}"#;
        assert!(matches!(
            read_polymatrix(syntax),
            Err(Error::Syntax { pos: 5, .. })
        ));
    }

    #[test]
    fn certificate_round_trip() {
        let f = PrimeField::default();
        let a = PolyMatrix::from_rows(
            f,
            vec![vec![
                parse_formula("x1*x2 + x3*(x1 - 4)", 3, f).unwrap(),
                parse_formula("x2", 3, f).unwrap(),
            ]],
        )
        .unwrap();
        let c = linearize_polymatrix(&a).unwrap();
        let text = write_certificate(&c);
        let back = read_certificate(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(write_certificate(&back), text);
        assert_eq!(read_polymatrix(&write_polymatrix(&a)).unwrap(), a);
    }

    proptest! {
        #[test]
        fn pencils_round_trip_bit_exactly(seed in any::<u64>(), rows in 0usize..5, cols in 0usize..5) {
            let f = PrimeField::default();
            let l = random_pencil(f, rows, cols, 4, 0.6, false, &mut rng_from_seed(seed));
            let text = write_pencil(&l);
            let back = read_pencil(&text).unwrap();
            prop_assert_eq!(&back, &l);
            prop_assert_eq!(write_pencil(&back), text);
        }
    }
}
