//! `nilwalk`: exact concentration experiments for random walks on groups.

mod commands;
mod error;
mod format;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "nilwalk", version, about = "Exact concentration probabilities of random walks on groups")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Write the JSON report here (`-` for stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the CSV table here (`-` for stdout).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Root seed for sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on supports and enumerations.
    #[arg(long, global = true, default_value_t = nilwalk::DEFAULT_CAP)]
    cap: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Concentration probability of a walk, exact or sampled.
    Rho(RhoArgs),
    /// Flat-segment search by dyadic descent.
    Dyadic(DyadicArgs),
    /// Progression tools.
    #[command(subcommand)]
    Nilprog(NilprogCommand),
    /// Multiplicative energy of two sets, or truncation of a walk window.
    Energy(EnergyArgs),
    /// End-to-end structure detection.
    Detect(DetectArgs),
    /// Forward concentration bounds.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Transfer-matrix concentration profile.
    Anderson(AndersonArgs),
    /// Load and check a walk or progression file.
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Order {
    /// `mu_j * ... * mu_i`
    LaterLeft,
    /// `mu_i * ... * mu_j`
    LaterRight,
}

#[derive(Args, Debug)]
pub struct RhoArgs {
    #[arg(long)]
    walk: PathBuf,
    /// 1-based inclusive window `i:j`.
    #[arg(long)]
    range: Option<String>,
    #[arg(long, value_enum, default_value_t = Order::LaterLeft)]
    order: Order,
    /// Monte Carlo instead of exact convolution.
    #[arg(long)]
    mc: bool,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// One CSV row per prefix.
    #[arg(long)]
    profile: bool,
}

#[derive(Args, Debug)]
pub struct DyadicArgs {
    #[arg(long)]
    walk: PathBuf,
    #[arg(long, default_value = "1/2")]
    c: String,
    #[arg(long, default_value = "1/2")]
    eps: String,
    #[arg(long)]
    tau: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum NilprogCommand {
    /// Check the three C-normal form axioms.
    VerifyNormalForm {
        #[arg(long)]
        prog: PathBuf,
        /// Defaults to the file's `C`, else 1.
        #[arg(long)]
        c: Option<String>,
    },
    /// `HP`-norm of an element.
    Norm {
        #[arg(long)]
        prog: PathBuf,
        #[arg(long)]
        elem: String,
        #[arg(long, default_value = "4")]
        lambda_max: String,
    },
    /// `(HP, X)`-norm of an element.
    XNorm {
        #[arg(long)]
        prog: PathBuf,
        #[arg(long)]
        elem: String,
        /// Representatives as a list, e.g. `[0,6]`.
        #[arg(long)]
        xs: String,
        #[arg(long, default_value = "4")]
        lambda_max: String,
    },
    /// Sizes of `(HP)^k`.
    Growth {
        #[arg(long)]
        prog: PathBuf,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
    /// Shrink to `Q` with lengths `N / (C D^2)` and check its properties.
    Shrink {
        #[arg(long)]
        prog: PathBuf,
        #[arg(long, default_value = "1")]
        c: String,
        #[arg(long, default_value = "2")]
        d: String,
        #[arg(long)]
        comparability: Option<String>,
        /// Square-root checks beyond which elements are sampled.
        #[arg(long, default_value_t = 10_000)]
        max_checks: usize,
    },
    /// Collect a word into normal form.
    Collect {
        #[arg(long)]
        prog: PathBuf,
        /// Signed 1-based generator indices, e.g. `2,-1,3`.
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        #[arg(long, default_value = "1")]
        d: String,
    },
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    /// JSON `{"group": .., "b1": [..], "b2": [..]}`.
    #[arg(long, conflicts_with = "walk")]
    sets: Option<PathBuf>,
    /// Truncate the window measure of this walk.
    #[arg(long, requires = "k")]
    walk: Option<PathBuf>,
    #[arg(long)]
    window: Option<String>,
    /// Truncation constant `K >= 1`.
    #[arg(long)]
    k: Option<String>,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long)]
    walk: PathBuf,
    /// Catalog file or directory of progression files; defaults to the built-in catalog.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value = "1/2")]
    c: String,
    #[arg(long, default_value = "1/2")]
    eps: String,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    lambda_max: Option<String>,
    #[arg(long)]
    lmax: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum BoundsCommand {
    /// `rho <= C(n, n/2) / 2^n` for steps uniform on `{a_i, -a_i}`.
    Elo(SignWalkArgs),
    /// `rho <= C n^(-3/2)` for distinct `a_i`.
    Ssz {
        #[command(flatten)]
        walk: SignWalkArgs,
        #[arg(long, default_value = "3")]
        constant: String,
    },
    /// `rho <= 141 max(1/s, n^(-1/2))` for steps of order at least `s`.
    Matrix {
        #[arg(long, conflicts_with = "cycle")]
        walk: Option<PathBuf>,
        /// Use the `s`-cycle permutation matrix walk with this many steps.
        #[arg(long)]
        cycle: Option<usize>,
        #[arg(long)]
        s: u64,
        #[arg(long, default_value = "1/10")]
        delta: String,
    },
    /// The two sharpness constructions.
    Sharpness {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
pub struct SignWalkArgs {
    #[arg(long, conflicts_with = "values")]
    walk: Option<PathBuf>,
    /// Comma-separated integers `a_i`.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Args, Debug)]
pub struct AndersonArgs {
    #[arg(long = "E", default_value = "0", allow_hyphen_values = true)]
    e: String,
    #[arg(long, default_value = "1")]
    lambda: String,
    /// Defaults to half the largest `a` with `{a, -a}` in the first step's support.
    #[arg(long)]
    gamma: Option<String>,
    /// Distribution of `eps_i`: `{"atoms": [{"value": .., "w": ..}]}` or `{"steps": [..]}`; defaults to uniform `+-1`.
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Window for the pair hypothesis; defaults to the whole walk.
    #[arg(long)]
    window: Option<usize>,
    /// Radius of the free-group ball check.
    #[arg(long, default_value_t = 7)]
    free_k: usize,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    walk: Option<PathBuf>,
    #[arg(long)]
    prog: Option<PathBuf>,
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    if let Some(t) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    let g = &cli.global;
    let (name, out) = match cli.command {
        Command::Rho(a) => ("rho", commands::rho(g, a)?),
        Command::Dyadic(a) => ("dyadic", commands::dyadic(g, a)?),
        Command::Nilprog(a) => ("nilprog", commands::nilprog(g, a)?),
        Command::Energy(a) => ("energy", commands::energy(g, a)?),
        Command::Detect(a) => ("detect", commands::detect(g, a)?),
        Command::Bounds(a) => ("bounds", commands::bounds(g, a)?),
        Command::Anderson(a) => ("anderson", commands::anderson(g, a)?),
        Command::Validate(a) => ("validate", commands::validate(g, a)?),
    };
    output::emit(g, name, &argv, out)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli, argv[1..].to_vec()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
