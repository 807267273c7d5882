//! `ncrit`: identity testing and noncommutative rank from the shell.
//!
//! Reports are JSON on stdout. Exit codes: 0 zero / not full, 1 nonzero /
//! full, 2 error, 3 empty domain. `verify` exits 0 on success and 1 on
//! failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncrit::{OracleRoute, PrimeField, TrialPolicy, DEFAULT_MODULUS};

pub const EXIT_ZERO: u8 = 0;
pub const EXIT_NONZERO: u8 = 1;
pub const EXIT_ERROR: u8 = 2;
pub const EXIT_DOMAIN_EMPTY: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "ncrit",
    version,
    about = "Noncommutative rational identity testing and rank"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn parse_prime(s: &str) -> Result<u64, String> {
    let p: u64 = s.parse().map_err(|e| format!("{e}"))?;
    PrimeField::new(p).map(|f| f.modulus()).map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct Knobs {
    /// Prime modulus of the field.
    #[arg(long, value_parser = parse_prime, default_value_t = DEFAULT_MODULUS)]
    pub prime: u64,
    /// Fixed matrix (or blow-up) dimension; default is the doubling schedule.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    /// Random trials per dimension.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Identity oracle: eval, pencil or bivariate.
    #[arg(long, default_value = "eval")]
    pub oracle: OracleRoute,
    /// Run the dimension schedule up to 2s+1.
    #[arg(long)]
    pub guarantee: bool,
    /// Largest blown-up side length for rank computations.
    #[arg(long, default_value_t = 4096)]
    pub budget: usize,
}

impl Knobs {
    pub fn policy(&self) -> TrialPolicy {
        TrialPolicy {
            field: PrimeField::new(self.prime).expect("validated by the parser"),
            seed: self.seed,
            trials: self.trials as usize,
            dims: self.k.map(|k| vec![k as usize]),
            guarantee: self.guarantee,
            route: self.oracle,
            blowup_budget: self.budget,
            ..TrialPolicy::default()
        }
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.prime).expect("validated by the parser")
    }
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct FormulaInput {
    /// Formula text, e.g. "x1*x2 - x2*x1".
    #[arg(long)]
    pub formula: Option<String>,
    /// File holding formula text.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct MatrixInput {
    #[arg(long)]
    pub pencil: Option<PathBuf>,
    #[arg(long)]
    pub polymatrix: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct EmbedInput {
    #[arg(long)]
    pub formula: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub pencil: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct HigmanInput {
    #[arg(long)]
    pub formula: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub polymatrix: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RankRoute {
    /// Blow-up rank of the pencil or of its Higman linearization.
    Direct,
    /// Rank of the image under the commutator embedding.
    Bivariate,
    /// Rank of the image under the monomial embedding (not rank-preserving).
    Naive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmbedMode {
    Cohn,
    Naive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CorpusKind {
    DivisionFree,
    Rational,
    Pencils,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a rational formula is identically zero.
    Rit {
        #[command(flatten)]
        input: FormulaInput,
        #[command(flatten)]
        knobs: Knobs,
        /// Also write the report here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Noncommutative rank of a pencil or polynomial matrix.
    Ncrank {
        #[command(flatten)]
        input: MatrixInput,
        #[arg(long, value_enum, default_value = "direct")]
        route: RankRoute,
        /// Also test fullness of U M V for this r.
        #[arg(long)]
        r: Option<usize>,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Map a formula or pencil into two variables.
    Embed {
        #[command(flatten)]
        input: EmbedInput,
        #[arg(long, value_enum, default_value = "cohn")]
        mode: EmbedMode,
        #[arg(long, default_value_t = DEFAULT_MODULUS, value_parser = parse_prime)]
        prime: u64,
        /// Write the result here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rewrite a formula to logarithmic depth.
    DepthReduce {
        #[command(flatten)]
        input: FormulaInput,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Linearize a division-free formula or polynomial matrix.
    Higman {
        #[command(flatten)]
        input: HigmanInput,
        /// Certificate file to write.
        #[arg(long)]
        cert: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the pencil whose inverse carries the formula.
    HwMatrix {
        #[command(flatten)]
        input: FormulaInput,
        /// Emit the wrapper pencil that is full iff the formula is nonzero.
        #[arg(long)]
        wrap: bool,
        /// Pencil file to write.
        #[arg(long)]
        pencil: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a formula at a random matrix tuple.
    Eval {
        #[command(flatten)]
        input: FormulaInput,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a random corpus of formulas or pencils.
    GenCorpus {
        #[arg(long, value_enum)]
        kind: CorpusKind,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 9)]
        min_size: u64,
        #[arg(long, default_value_t = 60)]
        max_size: u64,
        #[arg(long, default_value_t = 4)]
        vars: u32,
        /// Pencil side lengths.
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Check a Higman certificate or an inverse-corner pencil.
    Verify {
        /// Certificate to check against --polymatrix, --formula or --input.
        #[arg(long, conflicts_with = "hw_pencil")]
        cert: Option<PathBuf>,
        /// Pencil whose inverse should carry --formula or --input.
        #[arg(long)]
        hw_pencil: Option<PathBuf>,
        #[arg(long)]
        polymatrix: Option<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
