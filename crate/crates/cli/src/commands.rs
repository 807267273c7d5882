use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use ncrit::cohn::{embed_formula, embed_pencil, naive_embed_formula, naive_embed_pencil};
use ncrit::corpus::{random_correct_formula, random_formula, random_pencil, FormulaShape};
use ncrit::depth::{depth_bound, depth_reduce_polynomial, depth_reduce_rational, B_RAT, C_POLY, C_RAT};
use ncrit::eval::evaluate_in;
use ncrit::field::{derive_seed, rng_from_seed};
use ncrit::formula::{format_formula_with, VarStyle};
use ncrit::higman::{linearize_polymatrix, verify_certificate};
use ncrit::hw::{hw_linear_matrix, rit_to_pencil, verify_hw_contract, HwContract};
use ncrit::io::{self, MAX_VARIABLE};
use ncrit::ncrank::{
    ncrank_bivariate, ncrank_pencil, ncrank_polymatrix, ncrank_to_singular, oracle_for,
    polymatrix_rank_by_evaluation, rit, RankReport,
};
use ncrit::oracle::check_correct;
use ncrit::{
    format_formula, parse_formula, FieldMatrix, Formula, MatrixTuple, PolyMatrix, PrimeField, Verdict,
};

use crate::{
    Command, CorpusKind, EmbedInput, EmbedMode, FormulaInput, HigmanInput, MatrixInput, RankRoute,
    EXIT_DOMAIN_EMPTY, EXIT_NONZERO, EXIT_ZERO,
};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn formula_text(formula: &Option<String>, input: &Option<PathBuf>) -> Result<String> {
    match (formula, input) {
        (Some(s), _) => Ok(s.clone()),
        (None, Some(p)) => Ok(read(p)?.trim().to_string()),
        (None, None) => bail!("no formula given (use --formula or --input)"),
    }
}

fn parse(text: &str, field: PrimeField) -> Result<Formula> {
    Ok(parse_formula(text, MAX_VARIABLE, field)?)
}

fn read_formula(input: &FormulaInput, field: PrimeField) -> Result<Formula> {
    parse(&formula_text(&input.formula, &input.input)?, field)
}

fn matrix_rows(m: &FieldMatrix) -> Vec<Vec<u64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Prints the report and optionally saves it.
fn emit(report: &Value, output: &Option<PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    print!("{text}");
    if let Some(p) = output {
        write(p, &text)?;
    }
    Ok(())
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Zero => EXIT_ZERO,
        Verdict::Nonzero => EXIT_NONZERO,
        Verdict::DomainEmpty => EXIT_DOMAIN_EMPTY,
    }
}

fn rank_code(r: &RankReport) -> u8 {
    if r.is_full() {
        EXIT_NONZERO
    } else {
        EXIT_ZERO
    }
}

pub fn execute(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Rit { input, knobs, output } => {
            let policy = knobs.policy();
            let phi = read_formula(&input, policy.field)?;
            let v = rit(&phi, &policy)?;
            emit(
                &json!({
                    "command": "rit",
                    "formula": format_formula(&phi, policy.field),
                    "size": phi.size(),
                    "policy": policy,
                    "result": v,
                }),
                &output,
            )?;
            Ok(verdict_code(v.verdict))
        }
        Command::Ncrank {
            input,
            route,
            r,
            knobs,
            output,
        } => ncrank(&input, route, r, &knobs.policy(), &output),
        Command::Embed {
            input,
            mode,
            prime,
            output,
        } => embed(&input, mode, PrimeField::new(prime)?, &output),
        Command::DepthReduce { input, knobs, output } => {
            let policy = knobs.policy();
            let f = policy.field;
            let phi = read_formula(&input, f)?;
            let s = phi.size();
            let (mode, out, bound) = if phi.is_division_free() {
                (
                    "division-free",
                    depth_reduce_polynomial(&phi, f)?,
                    depth_bound(C_POLY, 0.0, s),
                )
            } else {
                let oracle = oracle_for(&policy);
                let out = depth_reduce_rational(&phi, f, oracle.as_ref())?;
                ("rational", out, depth_bound(C_RAT, B_RAT, s))
            };
            emit(
                &json!({
                    "command": "depth-reduce",
                    "mode": mode,
                    "policy": policy,
                    "input": { "size": s, "depth": phi.depth() },
                    "output": {
                        "size": out.size(),
                        "depth": out.depth(),
                        "formula": format_formula(&out, f),
                    },
                    "depth_bound": bound,
                    "within_bound": (out.depth() as f64) <= bound,
                }),
                &output,
            )?;
            Ok(EXIT_ZERO)
        }
        Command::Higman {
            input,
            cert,
            knobs,
            output,
        } => {
            let policy = knobs.policy();
            let a = higman_input(&input, policy.field)?;
            let c = linearize_polymatrix(&a)?;
            let verified = verify_certificate(&c, &a, &policy)?;
            if let Some(p) = &cert {
                write(p, &io::write_certificate(&c))?;
            }
            emit(
                &json!({
                    "command": "higman",
                    "policy": policy,
                    "certificate": c.summary(),
                    "certificate_file": cert.as_ref().map(|p| p.display().to_string()),
                    "verified": verified,
                }),
                &output,
            )?;
            Ok(EXIT_ZERO)
        }
        Command::HwMatrix {
            input,
            wrap,
            pencil,
            knobs,
            output,
        } => {
            let policy = knobs.policy();
            let f = policy.field;
            let phi = read_formula(&input, f)?;
            let m = if wrap {
                rit_to_pencil(&phi, f)
            } else {
                hw_linear_matrix(&phi, f)
            };
            let correct = check_correct(&phi, &policy)?.correct;
            let text = io::write_pencil(&m);
            let mut report = json!({
                "command": "hw-matrix",
                "wrapped": wrap,
                "dimension": m.rows(),
                "formula_correct": correct,
                "policy": policy,
                "note": if correct { "" } else { "no sampled point in the domain; the inverse-corner contract is void" },
            });
            match &pencil {
                Some(p) => {
                    write(p, &text)?;
                    report["pencil_file"] = json!(p.display().to_string());
                }
                None => report["pencil"] = serde_json::from_str(&text)?,
            }
            emit(&report, &output)?;
            Ok(EXIT_ZERO)
        }
        Command::Eval { input, knobs, output } => {
            let f = knobs.field();
            let phi = read_formula(&input, f)?;
            let k = knobs.k.unwrap_or(2) as usize;
            let tuple = MatrixTuple::random(
                f,
                k,
                phi.max_var().unwrap_or(0),
                derive_seed(knobs.seed, &[k as u64]),
            );
            let (defined, body) = match evaluate_in(&phi, &tuple, f)? {
                ncrit::EvalOutcome::Defined(m) => (true, json!({ "value": matrix_rows(&m) })),
                ncrit::EvalOutcome::UndefinedAt(i) => (false, json!({ "undefined_at_gate": i })),
            };
            emit(
                &json!({
                    "command": "eval",
                    "k": k,
                    "seed": knobs.seed,
                    "modulus": f.modulus(),
                    "defined": defined,
                    "result": body,
                }),
                &output,
            )?;
            Ok(if defined { EXIT_ZERO } else { EXIT_DOMAIN_EMPTY })
        }
        Command::GenCorpus {
            kind,
            count,
            min_size,
            max_size,
            vars,
            dim,
            out_dir,
            knobs,
        } => gen_corpus(
            kind,
            count,
            min_size,
            max_size,
            vars,
            dim,
            &out_dir,
            &knobs.policy(),
        ),
        Command::Verify {
            cert,
            hw_pencil,
            polymatrix,
            formula,
            input,
            knobs,
            output,
        } => {
            let policy = knobs.policy();
            let f = policy.field;
            if let Some(c) = cert {
                let c = io::read_certificate(&read(&c)?)?;
                let a = match (&polymatrix, &formula, &input) {
                    (Some(p), _, _) => io::read_polymatrix(&read(p)?)?,
                    _ => PolyMatrix::from_rows(f, vec![vec![parse(&formula_text(&formula, &input)?, f)?]])?,
                };
                let ok = verify_certificate(&c, &a, &policy)?;
                emit(
                    &json!({ "command": "verify", "kind": "certificate", "passed": ok, "policy": policy }),
                    &output,
                )?;
                return Ok(if ok { EXIT_ZERO } else { EXIT_NONZERO });
            }
            let Some(p) = hw_pencil else {
                bail!("nothing to verify (use --cert or --hw-pencil)");
            };
            let m = io::read_pencil(&read(&p)?)?;
            let phi = parse(&formula_text(&formula, &input)?, f)?;
            let contract = verify_hw_contract(&phi, &m, &policy)?;
            let code = match contract {
                HwContract::Holds { .. } => EXIT_ZERO,
                HwContract::Violated { .. } => EXIT_NONZERO,
                HwContract::Inconclusive { .. } => EXIT_DOMAIN_EMPTY,
            };
            emit(
                &json!({ "command": "verify", "kind": "hw-contract", "result": contract, "policy": policy }),
                &output,
            )?;
            Ok(code)
        }
    }
}

fn higman_input(input: &HigmanInput, f: PrimeField) -> Result<PolyMatrix> {
    if let Some(p) = &input.polymatrix {
        return Ok(io::read_polymatrix(&read(p)?)?);
    }
    let phi = parse(&formula_text(&input.formula, &input.input)?, f)?;
    Ok(PolyMatrix::from_rows(f, vec![vec![phi]])?)
}

fn ncrank(
    input: &MatrixInput,
    route: RankRoute,
    r: Option<usize>,
    policy: &ncrit::TrialPolicy,
    output: &Option<PathBuf>,
) -> Result<u8> {
    let pencil = match &input.pencil {
        Some(p) => Some(io::read_pencil(&read(p)?)?),
        None => None,
    };
    let report = match (&pencil, route) {
        (Some(l), RankRoute::Direct) => ncrank_pencil(l, policy)?,
        (Some(l), RankRoute::Bivariate) => ncrank_bivariate(l, policy)?,
        (Some(l), RankRoute::Naive) => ncrank_polymatrix(&naive_embed_pencil(l)?, policy)?.report,
        (None, RankRoute::Direct) => {
            let path = input.polymatrix.as_ref().expect("one input is required");
            ncrank_polymatrix(&io::read_polymatrix(&read(path)?)?, policy)?.report
        }
        (None, _) => bail!("the bivariate and naive routes take a --pencil"),
    };
    let mut out = json!({
        "command": "ncrank",
        "route": format!("{route:?}").to_lowercase(),
        "policy": policy,
        "result": report,
    });
    if let Some(r) = r {
        let Some(l) = &pencil else {
            bail!("--r needs a --pencil");
        };
        let umv = ncrank_to_singular(l, r)?;
        let check = polymatrix_rank_by_evaluation(&umv, policy)?;
        out["singular_check"] = json!({ "r": r, "full": check.is_full(), "k": check.k });
    }
    emit(&out, output)?;
    Ok(rank_code(&report))
}

fn embed(input: &EmbedInput, mode: EmbedMode, f: PrimeField, output: &Option<PathBuf>) -> Result<u8> {
    let text = if let Some(p) = &input.pencil {
        let l = io::read_pencil(&read(p)?)?;
        let img = match mode {
            EmbedMode::Cohn => embed_pencil(&l)?,
            EmbedMode::Naive => naive_embed_pencil(&l)?,
        };
        io::write_polymatrix(&img)
    } else {
        let phi = parse(&formula_text(&input.formula, &input.input)?, f)?;
        let img = match mode {
            EmbedMode::Cohn => embed_formula(&phi, f)?,
            EmbedMode::Naive => naive_embed_formula(&phi)?,
        };
        format!("{}\n", format_formula_with(&img, f, VarStyle::Bivariate))
    };
    match output {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_ZERO)
}

#[allow(clippy::too_many_arguments)]
fn gen_corpus(
    kind: CorpusKind,
    count: usize,
    min_size: u64,
    max_size: u64,
    vars: u32,
    dim: usize,
    out_dir: &Path,
    policy: &ncrit::TrialPolicy,
) -> Result<u8> {
    if min_size == 0 || min_size > max_size {
        bail!("need 1 <= min-size <= max-size");
    }
    let f = policy.field;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = rng_from_seed(derive_seed(policy.seed, &[i as u64]));
        let size = min_size + (derive_seed(policy.seed, &[i as u64, 1]) % (max_size - min_size + 1));
        let (name, text) = match kind {
            CorpusKind::DivisionFree => {
                let phi = random_formula(f, size, &FormulaShape::division_free(vars), &mut rng);
                (
                    format!("{i:03}.formula"),
                    format!("{}\n", format_formula(&phi, f)),
                )
            }
            CorpusKind::Rational => {
                let phi = random_correct_formula(size, &FormulaShape::rational(vars), policy, &mut rng)?;
                (
                    format!("{i:03}.formula"),
                    format!("{}\n", format_formula(&phi, f)),
                )
            }
            CorpusKind::Pencils => {
                let l = random_pencil(f, dim, dim, vars, 0.6, i % 2 == 1, &mut rng);
                (format!("{i:03}.pencil"), io::write_pencil(&l))
            }
        };
        write(&out_dir.join(&name), &text)?;
        files.push(name);
    }
    emit(
        &json!({
            "command": "gen-corpus",
            "kind": format!("{kind:?}"),
            "seed": policy.seed,
            "modulus": f.modulus(),
            "files": files,
        }),
        &None,
    )?;
    Ok(EXIT_ZERO)
}
