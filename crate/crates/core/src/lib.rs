//! Noncommutative rational identity testing and noncommutative rank.
//!
//! The crate works over a prime field `F_p` and evaluates everything at
//! random matrix points. Its pieces:
//!
//! * [`formula`] and [`eval`]: rational formulas, their parser and printer,
//!   and evaluation at tuples of k x k matrices.
//! * [`oracle`]: randomized identity, correctness and equivalence tests.
//! * [`cohn`]: the honest bivariate embedding and its naive counterpart.
//! * [`depth`]: depth reduction with and without inverse gates.
//! * [`higman`]: linearization of polynomial matrices with checkable
//!   certificates.
//! * [`hw`]: the pencil whose inverse carries a formula in its corner.
//! * [`ncrank`]: the blow-up rank engine and the end-to-end pipelines.

pub mod cohn;
pub mod corpus;
pub mod depth;
pub mod error;
pub mod eval;
pub mod field;
pub mod formula;
pub mod higman;
pub mod hw;
pub mod io;
pub mod ncrank;
pub mod oracle;
pub mod pencil;
pub mod sparse;

pub use error::{Error, Result};
pub use eval::{evaluate, EvalOutcome, MatrixTuple};
pub use field::{FieldMatrix, PrimeField, DEFAULT_MODULUS};
pub use formula::{format_formula, parse_formula, Formula, Node};
pub use oracle::{OracleRoute, TrialPolicy, Verdict, ZeroVerdict};
pub use pencil::{LinearPencil, PolyMatrix};
