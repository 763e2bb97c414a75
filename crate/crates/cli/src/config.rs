//! Command-line surface and the validated run configuration built from it.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use sympent::flows::ADMISSIBILITY_TOL;
use sympent::numkit::{RankTol, DEFAULT_RANK_TOL};
use sympent::spectramap::DEFAULT_GROUP_TOL;
use sympent::Tolerances;

use crate::error::CliError;

/// Seed used when neither `--seed` nor `SYMPENT_SEED` is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "sympent",
    version,
    about = "Symplectic entanglement indicator for multipartite pure states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for every random draw.
    #[arg(long, global = true, env = "SYMPENT_SEED")]
    pub seed: Option<u64>,

    /// Relative rank tolerance.
    #[arg(long = "rank-tol", global = true, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,

    /// Relative eigenvalue grouping tolerance.
    #[arg(long = "group-tol", global = true, default_value_t = DEFAULT_GROUP_TOL)]
    pub group_tol: f64,

    /// Admissibility threshold on |dH(v)|.
    #[arg(long = "adm-tol", global = true, default_value_t = ADMISSIBILITY_TOL)]
    pub adm_tol: f64,

    /// Output path (a file prefix for `flow`). Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Compute E by every route for one state.
    Analyze {
        /// State expression, e.g. "ghz(3,2)" or "(|01> - |10>)/sqrt(2)".
        #[arg(long)]
        state: String,
        /// Local dimension for ket literals without an `@ d=N` suffix.
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Check route agreement on Haar-random states.
    Verify {
        /// Comma-separated `LxD:count` cases, e.g. "2x2:100,3x2:100".
        #[arg(long)]
        cases: String,
    },
    /// Reference and null-perturbed trajectories under a local Hamiltonian.
    Flow {
        #[arg(long)]
        state: String,
        /// Per-factor terms, e.g. "Z,Z,Z", "0.5X+0.3Z,I,Y" or "[[1,0],[0,-1]],...".
        #[arg(long)]
        ham: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long = "T", default_value_t = 10.0)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Sample the ordered local spectra of Haar-random states.
    Polytope {
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        d: usize,
        #[arg(long = "N")]
        n: usize,
    },
}

/// Validated settings shared by every command.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub tolerances: Tolerances,
    pub adm_tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Input(format!(
            "{name} must be a positive number, got {x}"
        )))
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        Ok(Self {
            tolerances: Tolerances {
                rank: RankTol::Relative(positive("--rank-tol", cli.rank_tol)?),
                group: positive("--group-tol", cli.group_tol)?,
            },
            adm_tol: positive("--adm-tol", cli.adm_tol)?,
            seed: cli.seed.unwrap_or(DEFAULT_SEED),
            out: cli.out,
            format: cli.format,
            command: cli.command,
        })
    }
}
