//! Randomized identity, correctness and equivalence oracles.
//!
//! Each oracle substitutes uniformly random k x k matrices for the variables
//! over a schedule of dimensions. A `Nonzero` answer is always backed by a
//! witness tuple; `Zero` and `DomainEmpty` are one-sided probabilistic
//! answers.

use serde::Serialize;

use crate::error::Result;
use crate::eval::{evaluate_in, EvalOutcome, MatrixTuple};
use crate::field::{derive_seed, FieldMatrix, PrimeField};
use crate::formula::Formula;

/// Which pipeline answers identity queries made by the rational depth
/// reduction and by the agreement suites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleRoute {
    /// Random matrix evaluation of the formula itself.
    #[default]
    Eval,
    /// Depth reduction, the inverse-completeness pencil and a blow-up
    /// singularity test.
    Pencil,
    /// The pencil route applied to the bivariate image of the formula.
    Bivariate,
}

impl std::str::FromStr for OracleRoute {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "eval" | "a" => Ok(OracleRoute::Eval),
            "pencil" | "b" => Ok(OracleRoute::Pencil),
            "bivariate" | "c" => Ok(OracleRoute::Bivariate),
            _ => Err(format!("unknown oracle route `{s}` (eval, pencil, bivariate)")),
        }
    }
}

/// Knobs shared by every randomized oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialPolicy {
    #[serde(serialize_with = "ser_field")]
    pub field: PrimeField,
    pub seed: u64,
    /// Trials per dimension.
    pub trials: usize,
    /// Explicit dimension schedule; overrides the doubling schedule.
    pub dims: Option<Vec<usize>>,
    /// Largest dimension of the doubling schedule.
    pub dim_cap: usize,
    /// Extends the schedule to `2s + 1`, where the dimension bound for
    /// nonzero rational functions applies.
    pub guarantee: bool,
    pub route: OracleRoute,
    /// Largest blown-up side length (`k * rows`) the rank engine may build.
    pub blowup_budget: usize,
}

fn ser_field<S: serde::Serializer>(f: &PrimeField, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(f.modulus())
}

impl Default for TrialPolicy {
    fn default() -> Self {
        TrialPolicy {
            field: PrimeField::default(),
            seed: 0,
            trials: 10,
            dims: None,
            dim_cap: 64,
            guarantee: false,
            route: OracleRoute::Eval,
            blowup_budget: 4096,
        }
    }
}

impl TrialPolicy {
    pub fn with_seed(seed: u64) -> Self {
        TrialPolicy {
            seed,
            ..Self::default()
        }
    }

    /// Fixed single dimension.
    pub fn at_dim(mut self, k: usize) -> Self {
        self.dims = Some(vec![k]);
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    /// Dimension schedule for a formula of `size` nodes: `1, 2, 4, ...` up to
    /// `min(2 size + 1, dim_cap)`, or up to and including `2 size + 1` in
    /// guarantee mode.
    pub fn schedule(&self, size: u64) -> Vec<usize> {
        if let Some(d) = &self.dims {
            return d.clone();
        }
        let bound = 2 * size as usize + 1;
        let cap = if self.guarantee {
            bound
        } else {
            bound.min(self.dim_cap)
        };
        let mut out = Vec::new();
        let mut k = 1;
        while k <= cap {
            out.push(k);
            k *= 2;
        }
        if self.guarantee && out.last() != Some(&bound) {
            out.push(bound);
        }
        out
    }

    /// True when the schedule reaches a dimension above `2 size`.
    pub fn meets_dimension_bound(&self, size: u64) -> bool {
        self.schedule(size).iter().any(|&k| k as u64 > 2 * size)
    }

    pub fn trial_seed(&self, k: usize, trial: usize) -> u64 {
        derive_seed(self.seed, &[k as u64, trial as u64])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Zero,
    Nonzero,
    DomainEmpty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZeroVerdict {
    pub verdict: Verdict,
    pub witnesses_tried: usize,
    /// Dimension of the witness for `Nonzero`, else the largest tried.
    pub dimension_used: usize,
    /// The schedule stayed below the `2s + 1` dimension bound.
    pub heuristic: bool,
    pub note: String,
    #[serde(skip)]
    pub witness: Option<MatrixTuple>,
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        self.verdict == Verdict::Zero
    }
}

fn probabilistic_note(verdict: Verdict, defined: usize, heuristic: bool, field: PrimeField) -> String {
    match verdict {
        Verdict::Nonzero => "exact: witness tuple evaluates to a nonzero matrix".into(),
        Verdict::Zero => format!(
            "probabilistic: {defined} defined evaluations were all zero over F_{}{}",
            field.modulus(),
            if heuristic {
                "; dimension schedule below 2s+1 (heuristic)"
            } else {
                ""
            }
        ),
        Verdict::DomainEmpty => "probabilistic: no sampled tuple lies in the domain".into(),
    }
}

fn max_var(fs: &[&Formula]) -> u32 {
    fs.iter().filter_map(|f| f.max_var()).max().unwrap_or(0)
}

/// Randomized identity test: `Nonzero` at the first defined nonzero value,
/// `Zero` when every defined value vanished, `DomainEmpty` otherwise.
pub fn rit_eval(phi: &Formula, policy: &TrialPolicy) -> Result<ZeroVerdict> {
    let field = policy.field;
    let top = max_var(&[phi]);
    let mut tried = 0;
    let mut defined = 0;
    let mut last_k = 0;
    for k in policy.schedule(phi.size()) {
        last_k = k;
        for t in 0..policy.trials {
            let tuple = MatrixTuple::random(field, k, top, policy.trial_seed(k, t));
            tried += 1;
            if let EvalOutcome::Defined(m) = evaluate_in(phi, &tuple, field)? {
                defined += 1;
                if !m.is_zero() {
                    return Ok(ZeroVerdict {
                        verdict: Verdict::Nonzero,
                        witnesses_tried: tried,
                        dimension_used: k,
                        heuristic: false,
                        note: probabilistic_note(Verdict::Nonzero, defined, false, field),
                        witness: Some(tuple),
                    });
                }
            }
        }
    }
    let verdict = if defined > 0 {
        Verdict::Zero
    } else {
        Verdict::DomainEmpty
    };
    let heuristic = !policy.meets_dimension_bound(phi.size());
    Ok(ZeroVerdict {
        verdict,
        witnesses_tried: tried,
        dimension_used: last_k,
        heuristic,
        note: probabilistic_note(verdict, defined, heuristic, field),
        witness: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correctness {
    pub correct: bool,
    pub witness: Option<MatrixTuple>,
    pub tried: usize,
}

/// Searches for a tuple at which every inverse gate sees an invertible
/// input.
pub fn check_correct(phi: &Formula, policy: &TrialPolicy) -> Result<Correctness> {
    let field = policy.field;
    let top = max_var(&[phi]);
    let mut tried = 0;
    for k in policy.schedule(phi.size()) {
        for t in 0..policy.trials {
            let tuple = MatrixTuple::random(field, k, top, policy.trial_seed(k, t));
            tried += 1;
            if evaluate_in(phi, &tuple, field)?.is_defined() {
                return Ok(Correctness {
                    correct: true,
                    witness: Some(tuple),
                    tried,
                });
            }
        }
    }
    Ok(Correctness {
        correct: false,
        witness: None,
        tried,
    })
}

/// Compares two formulas wherever both are defined; `Zero` means they agree
/// on every sampled point of the shared domain.
pub fn equivalent(a: &Formula, b: &Formula, policy: &TrialPolicy) -> Result<ZeroVerdict> {
    let field = policy.field;
    let top = max_var(&[a, b]);
    let size = a.size() + b.size();
    let mut tried = 0;
    let mut shared = 0;
    let mut last_k = 0;
    for k in policy.schedule(size) {
        last_k = k;
        for t in 0..policy.trials {
            let tuple = MatrixTuple::random(field, k, top, policy.trial_seed(k, t));
            tried += 1;
            let (Some(x), Some(y)) = (
                evaluate_in(a, &tuple, field)?.defined(),
                evaluate_in(b, &tuple, field)?.defined(),
            ) else {
                continue;
            };
            shared += 1;
            if x != y {
                return Ok(ZeroVerdict {
                    verdict: Verdict::Nonzero,
                    witnesses_tried: tried,
                    dimension_used: k,
                    heuristic: false,
                    note: probabilistic_note(Verdict::Nonzero, shared, false, field),
                    witness: Some(tuple),
                });
            }
        }
    }
    let verdict = if shared > 0 {
        Verdict::Zero
    } else {
        Verdict::DomainEmpty
    };
    let heuristic = !policy.meets_dimension_bound(size);
    Ok(ZeroVerdict {
        verdict,
        witnesses_tried: tried,
        dimension_used: last_k,
        heuristic,
        note: probabilistic_note(verdict, shared, heuristic, field),
        witness: None,
    })
}

/// Outcome of comparing two formulas at a fixed number of shared-domain
/// points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedDomainCheck {
    pub agreed: usize,
    pub disagreed: usize,
    pub attempts: usize,
}

impl SharedDomainCheck {
    pub fn passed(&self, wanted: usize) -> bool {
        self.disagreed == 0 && self.agreed >= wanted
    }
}

/// Draws k x k tuples until `wanted` of them lie in both domains (or
/// `max_attempts` runs out) and compares the values there.
pub fn compare_on_shared_domain(
    a: &Formula,
    b: &Formula,
    field: PrimeField,
    k: usize,
    wanted: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<SharedDomainCheck> {
    let top = max_var(&[a, b]);
    let mut out = SharedDomainCheck {
        agreed: 0,
        disagreed: 0,
        attempts: 0,
    };
    while out.agreed + out.disagreed < wanted && out.attempts < max_attempts {
        let tuple = MatrixTuple::random(field, k, top, derive_seed(seed, &[out.attempts as u64]));
        out.attempts += 1;
        let (Some(x), Some(y)) = (
            evaluate_in(a, &tuple, field)?.defined(),
            evaluate_in(b, &tuple, field)?.defined(),
        ) else {
            continue;
        };
        if x == y {
            out.agreed += 1;
        } else {
            out.disagreed += 1;
        }
    }
    Ok(out)
}

/// Evaluates at a tuple, returning `None` outside the domain.
pub fn value_at(phi: &Formula, tuple: &MatrixTuple, field: PrimeField) -> Result<Option<FieldMatrix>> {
    Ok(evaluate_in(phi, tuple, field)?.defined())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;
    use crate::formula::parse_formula;

    fn parse(s: &str) -> Formula {
        parse_formula(s, 8, PrimeField::default()).unwrap()
    }

    #[test]
    fn schedule_shapes() {
        let p = TrialPolicy::default();
        assert_eq!(p.schedule(3), vec![1, 2, 4]);
        assert_eq!(p.schedule(1000), vec![1, 2, 4, 8, 16, 32, 64]);
        assert!(!p.meets_dimension_bound(1000));
        let g = TrialPolicy {
            guarantee: true,
            ..TrialPolicy::default()
        };
        assert_eq!(g.schedule(5), vec![1, 2, 4, 8, 11]);
        assert!(g.meets_dimension_bound(5));
    }

    #[test]
    fn ring_identity_is_zero() {
        let phi = parse("(x + y)*(x + y) - x*x - x*y - y*x - y*y");
        let v = rit_eval(&phi, &TrialPolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Zero);
    }

    #[test]
    fn commutator_is_nonzero_with_stored_witness() {
        let phi = parse("x*y - y*x");
        let v = rit_eval(&phi, &TrialPolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Nonzero);
        assert_eq!(v.dimension_used, 2);
        let w = v.witness.unwrap();
        assert!(!evaluate(&phi, &w).unwrap().defined().unwrap().is_zero());
    }

    #[test]
    fn hua_identity() {
        let phi = parse("x - (x^-1 + (y^-1 - x)^-1)^-1 - x*y*x");
        let v = rit_eval(&phi, &TrialPolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Zero);
        // twenty independent 3x3 points
        let field = PrimeField::default();
        let mut defined = 0;
        for s in 0..20 {
            let t = MatrixTuple::random(field, 3, 1, 1000 + s);
            if let Some(m) = evaluate(&phi, &t).unwrap().defined() {
                assert!(m.is_zero());
                defined += 1;
            }
        }
        assert_eq!(defined, 20);
    }

    #[test]
    fn correctness_examples() {
        let p = TrialPolicy::default();
        assert!(!check_correct(&parse("(x - x)^-1"), &p).unwrap().correct);
        let c = check_correct(&parse("(x)^-1"), &p).unwrap();
        assert!(c.correct);
        assert_eq!(c.witness.unwrap().dim(), 1);
        let d = check_correct(&parse("(x*y - y*x)^-1"), &p).unwrap();
        assert!(d.correct);
        assert!(d.witness.unwrap().dim() >= 2);
    }

    #[test]
    fn equivalence_examples() {
        let p = TrialPolicy::default();
        let phi1 = parse("z1*z2*z3");
        let phi2 = parse("(z1*z2*z3*(z2*z3 - z3*z2)^-1)*(z2*z3 - z3*z2)");
        assert_eq!(equivalent(&phi1, &phi2, &p).unwrap().verdict, Verdict::Zero);
        assert_eq!(equivalent(&phi2, &phi2, &p).unwrap().verdict, Verdict::Zero);
        let v = equivalent(&parse("x*y"), &parse("y*x"), &p).unwrap();
        assert_eq!((v.verdict, v.dimension_used), (Verdict::Nonzero, 2));
        let e = equivalent(&parse("(x-x)^-1"), &parse("x"), &p).unwrap();
        assert_eq!(e.verdict, Verdict::DomainEmpty);
    }
}
