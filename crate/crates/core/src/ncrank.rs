//! Noncommutative rank by blow-up substitution, and the pipelines built on
//! it.
//!
//! Substituting random k x k matrices into a pencil of noncommutative rank
//! r gives a scalar matrix of rank at most `k r`, so `floor(rank / k)` never
//! overshoots. The rank engine escalates k until the estimate is full or the
//! blown-up side length would exceed the policy budget.

use serde::Serialize;

use crate::cohn::{embed_formula, embed_pencil};
use crate::depth::{depth_reduce_polynomial, depth_reduce_rational, DirectOracle, RitOracle};
use crate::error::{Error, Result};
use crate::eval::MatrixTuple;
use crate::field::{derive_seed, PrimeField};
use crate::formula::{format_formula, smart, Formula};
use crate::higman::{linearize_polymatrix, CertificateSummary, HigmanCertificate};
use crate::hw::rit_to_pencil;
use crate::oracle::{check_correct, rit_eval, OracleRoute, TrialPolicy, Verdict, ZeroVerdict};
use crate::pencil::{LinearPencil, PolyMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub estimate: usize,
    pub rows: usize,
    pub cols: usize,
    /// Blow-up dimension of the reported trials.
    pub k: usize,
    pub trials: usize,
    pub ranks: Vec<usize>,
    /// Best rank is a multiple of `k`.
    pub divisible: bool,
    /// Blow-up dimensions tried, in order.
    pub escalation: Vec<usize>,
    /// Identity padding subtracted from the pencil estimate.
    pub padding: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub higman: Option<CertificateSummary>,
    pub note: String,
}

impl RankReport {
    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    pub fn is_full(&self) -> bool {
        self.estimate == self.rows.min(self.cols)
    }
}

fn tuple_for(l: &LinearPencil, k: usize, seed: u64) -> MatrixTuple {
    let top = l.variables().last().copied().unwrap_or(0);
    MatrixTuple::random(l.field(), k, top, seed)
}

/// Ranks of `trials` random k x k blow-ups; stops early once the rank
/// reaches `k * min(rows, cols)`.
pub fn blowup_rank(l: &LinearPencil, k: usize, trials: usize, seed: u64) -> Result<RankReport> {
    if k == 0 {
        return Err(Error::OutOfRange("blow-up dimension must be at least 1".into()));
    }
    let cap = k * l.rows().min(l.cols());
    let mut ranks = Vec::with_capacity(trials);
    for t in 0..trials {
        let tuple = tuple_for(l, k, derive_seed(seed, &[k as u64, t as u64]));
        let r = l.evaluate_sparse(&tuple)?.rank();
        ranks.push(r);
        if r == cap {
            break;
        }
    }
    let best = ranks.iter().copied().max().unwrap_or(0);
    Ok(RankReport {
        estimate: best / k,
        rows: l.rows(),
        cols: l.cols(),
        k,
        trials: ranks.len(),
        divisible: best % k == 0,
        ranks,
        escalation: vec![k],
        padding: 0,
        higman: None,
        note: String::new(),
    })
}

/// Blow-up dimensions for a pencil: the policy's explicit list, else
/// `max(dims) + 1` when it fits the budget, else `1, 2, 4, ...` within it.
pub fn blowup_schedule(rows: usize, cols: usize, policy: &TrialPolicy) -> Vec<usize> {
    if let Some(d) = &policy.dims {
        return d.clone();
    }
    let d = rows.max(cols).max(1);
    if (d + 1) * d <= policy.blowup_budget {
        return vec![d + 1];
    }
    let mut out = vec![1];
    let mut k = 2;
    while k * d <= policy.blowup_budget {
        out.push(k);
        k *= 2;
    }
    out
}

/// Randomized noncommutative rank, escalating per the policy.
pub fn ncrank_pencil(l: &LinearPencil, policy: &TrialPolicy) -> Result<RankReport> {
    let schedule = blowup_schedule(l.rows(), l.cols(), policy);
    let full = l.rows().min(l.cols());
    let mut best: Option<RankReport> = None;
    let mut tried = Vec::new();
    for &k in &schedule {
        let r = blowup_rank(l, k, policy.trials, policy.seed)?;
        tried.push(k);
        let better = best.as_ref().is_none_or(|b| r.estimate > b.estimate);
        let done = r.estimate == full;
        if better {
            best = Some(r);
        }
        if done {
            break;
        }
    }
    let mut report = best.expect("nonempty schedule");
    let capped = policy.dims.is_none() && !tried.contains(&(l.rows().max(l.cols()) + 1));
    report.note = match (report.estimate == full, capped) {
        (true, _) => "exact lower bound reached the full rank".into(),
        (false, false) => "lower bound; blow-up at max(dims)+1".into(),
        (false, true) => format!(
            "lower bound; blow-up capped at side {} below max(dims)+1",
            policy.blowup_budget
        ),
    };
    report.escalation = tried;
    Ok(report)
}

/// True when the estimate stays below the dimension.
pub fn pencil_singular(l: &LinearPencil, policy: &TrialPolicy) -> Result<bool> {
    if !l.is_square() {
        return Err(Error::NotSquare(l.rows(), l.cols()));
    }
    Ok(!ncrank_pencil(l, policy)?.is_full())
}

/// `U M V` with generic `r x rows` and `cols x r` matrices of fresh
/// variables numbered after those of `M`; it is full exactly when
/// `ncrank(M) >= r`.
pub fn ncrank_to_singular(m: &LinearPencil, r: usize) -> Result<PolyMatrix> {
    let f = m.field();
    if r > m.rows().min(m.cols()) {
        return Err(Error::OutOfRange(format!(
            "r = {r} exceeds min({}, {})",
            m.rows(),
            m.cols()
        )));
    }
    let first = m.variables().last().map_or(1, |v| v + 1);
    let u = |i: usize, a: usize| Formula::var(first + (i * m.rows() + a) as u32);
    let v_base = first + (r * m.rows()) as u32;
    let v = |b: usize, j: usize| Formula::var(v_base + (b * r + j) as u32);
    let entries: Vec<Vec<Formula>> = (0..m.rows())
        .map(|a| (0..m.cols()).map(|b| m.entry(a, b).to_formula(f)).collect())
        .collect();
    let mut out = PolyMatrix::zero(f, r, r);
    for i in 0..r {
        for j in 0..r {
            let mut terms = Vec::new();
            for (a, row) in entries.iter().enumerate() {
                for (b, e) in row.iter().enumerate() {
                    if !e.is_zero() {
                        terms.push(smart::mul(f, smart::mul(f, u(i, a), e.clone()), v(b, j)));
                    }
                }
            }
            if !terms.is_empty() {
                out.set(i, j, Formula::sum(&terms));
            }
        }
    }
    Ok(out)
}

/// Noncommutative rank of a square polynomial matrix read off random
/// evaluations at `k = rows + 1`; exact when full, a lower bound otherwise.
pub fn polymatrix_rank_by_evaluation(a: &PolyMatrix, policy: &TrialPolicy) -> Result<RankReport> {
    let f = a.field();
    let top = a.max_var().unwrap_or(0);
    let k = policy
        .dims
        .as_ref()
        .and_then(|d| d.last().copied())
        .unwrap_or(a.rows().max(a.cols()) + 1);
    let cap = k * a.rows().min(a.cols());
    let mut ranks = Vec::new();
    for t in 0..policy.trials {
        let tuple = MatrixTuple::random(f, k, top, derive_seed(policy.seed, &[k as u64, t as u64]));
        let r = a.evaluate(&tuple)?.map_or(0, |m| m.rank());
        ranks.push(r);
        if r == cap {
            break;
        }
    }
    let best = ranks.iter().copied().max().unwrap_or(0);
    Ok(RankReport {
        estimate: best / k,
        rows: a.rows(),
        cols: a.cols(),
        k,
        trials: ranks.len(),
        divisible: best % k == 0,
        ranks,
        escalation: vec![k],
        padding: 0,
        higman: None,
        note: "direct evaluation of the polynomial matrix".into(),
    })
}

/// A rank report together with the linearization it was computed from.
#[derive(Clone, Debug)]
pub struct PolyRank {
    pub report: RankReport,
    pub certificate: HigmanCertificate,
}

/// Depth-reduces each entry, linearizes and subtracts the padding.
pub fn ncrank_polymatrix(a: &PolyMatrix, policy: &TrialPolicy) -> Result<PolyRank> {
    let f = a.field();
    let balanced = a.try_map(|e| depth_reduce_polynomial(e, f))?;
    let cert = linearize_polymatrix(&balanced)?;
    let mut report = ncrank_pencil(&cert.l, policy)?;
    report.estimate = report.estimate.saturating_sub(cert.k);
    report.padding = cert.k;
    report.rows = a.rows();
    report.cols = a.cols();
    report.higman = Some(cert.summary());
    Ok(PolyRank {
        report,
        certificate: cert,
    })
}

/// Rank of the bivariate image under the commutator embedding.
pub fn ncrank_bivariate(l: &LinearPencil, policy: &TrialPolicy) -> Result<RankReport> {
    Ok(ncrank_polymatrix(&embed_pencil(l)?, policy)?.report)
}

/// Identity test through the inverse-completeness pencil. Shares the knobs
/// of the identity oracles.
#[derive(Clone, Debug)]
pub struct PencilOracle {
    pub policy: TrialPolicy,
}

impl RitOracle for PencilOracle {
    fn is_zero(&self, phi: &Formula) -> Result<bool> {
        let inner = TrialPolicy {
            route: OracleRoute::Eval,
            ..self.policy.clone()
        };
        oracle_answer(phi, rit_full(phi, &inner)?, inner.field)
    }
}

/// [`PencilOracle`] applied to the bivariate image.
#[derive(Clone, Debug)]
pub struct BivariateOracle {
    pub policy: TrialPolicy,
}

impl RitOracle for BivariateOracle {
    fn is_zero(&self, phi: &Formula) -> Result<bool> {
        let inner = TrialPolicy {
            route: OracleRoute::Eval,
            ..self.policy.clone()
        };
        oracle_answer(phi, rit_bivariate(phi, &inner)?, inner.field)
    }
}

fn oracle_answer(phi: &Formula, v: ZeroVerdict, field: PrimeField) -> Result<bool> {
    match v.verdict {
        Verdict::Zero => Ok(true),
        Verdict::Nonzero => Ok(false),
        Verdict::DomainEmpty => Err(Error::OracleInconsistency(format_formula(phi, field))),
    }
}

/// The oracle selected by `policy.route`.
pub fn oracle_for(policy: &TrialPolicy) -> Box<dyn RitOracle> {
    let policy = policy.clone();
    match policy.route {
        OracleRoute::Eval => Box::new(DirectOracle { policy }),
        OracleRoute::Pencil => Box::new(PencilOracle { policy }),
        OracleRoute::Bivariate => Box::new(BivariateOracle { policy }),
    }
}

/// Identity test by routing `policy.route`: [`rit_eval`], [`rit_full`] or
/// [`rit_bivariate`].
pub fn rit(phi: &Formula, policy: &TrialPolicy) -> Result<ZeroVerdict> {
    match policy.route {
        OracleRoute::Eval => rit_eval(phi, policy),
        OracleRoute::Pencil => rit_full(phi, policy),
        OracleRoute::Bivariate => rit_bivariate(phi, policy),
    }
}

fn domain_empty(tried: usize) -> ZeroVerdict {
    ZeroVerdict {
        verdict: Verdict::DomainEmpty,
        witnesses_tried: tried,
        dimension_used: 0,
        heuristic: true,
        note: "probabilistic: no sampled tuple lies in the domain".into(),
        witness: None,
    }
}

/// Depth reduction, the wrapper pencil and a singularity test: `Nonzero`
/// exactly when the pencil is found full.
pub fn rit_full(phi: &Formula, policy: &TrialPolicy) -> Result<ZeroVerdict> {
    let f = policy.field;
    let correct = check_correct(phi, policy)?;
    if !correct.correct {
        return Ok(domain_empty(correct.tried));
    }
    let oracle = oracle_for(policy);
    let psi = depth_reduce_rational(phi, f, oracle.as_ref())?;
    if !check_correct(&psi, policy)?.correct {
        return Err(Error::OracleInconsistency(format_formula(&psi, f)));
    }
    let m = rit_to_pencil(&psi, f);
    let report = ncrank_pencil(&m, policy)?;
    let full = report.is_full();
    let ks = report.escalation.clone();
    let top_k = ks.iter().copied().max().unwrap_or(0);
    let heuristic = !full && top_k as u64 <= 2 * psi.size();
    let verdict = if full { Verdict::Nonzero } else { Verdict::Zero };
    let note = if full {
        format!(
            "exact: blow-up of the {}x{} pencil at k = {} is invertible",
            m.rows(),
            m.rows(),
            report.k
        )
    } else {
        format!(
            "probabilistic: {}x{} pencil never full at k in {:?}{}",
            m.rows(),
            m.rows(),
            ks,
            if heuristic { " (below 2s+1)" } else { "" }
        )
    };
    let tried = report.trials;
    Ok(ZeroVerdict {
        verdict,
        witnesses_tried: tried,
        dimension_used: if full { report.k } else { top_k },
        heuristic,
        note,
        witness: None,
    })
}

/// Renumbers `x_i -> x_(i+1)` when `x_0` occurs, so the embedding applies.
fn lift_variables(phi: &Formula) -> Formula {
    if phi.contains_var(0) {
        phi.substitute(&|v| Some(Formula::var(v + 1)))
    } else {
        phi.clone()
    }
}

/// [`rit_full`] on the bivariate image under the commutator embedding.
pub fn rit_bivariate(phi: &Formula, policy: &TrialPolicy) -> Result<ZeroVerdict> {
    let correct = check_correct(phi, policy)?;
    if !correct.correct {
        return Ok(domain_empty(correct.tried));
    }
    let image = embed_formula(&lift_variables(phi), policy.field)?;
    rit_full(&image, policy)
}
