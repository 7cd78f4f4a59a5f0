//! `beltrami` — a numerical laboratory for Beltrami flows.
//!
//! Subcommands construct exact Beltrami fields, integrate their field
//! lines, analyze zero sets and nodal domains, restrict tangent ball
//! fields to the boundary sphere, run recurrence ensembles, and verify
//! the whole battery of structural checks. Reports are JSON with fixed
//! top-level keys; tabular artifacts (trajectories, potential grids,
//! box-count tables) are CSV.
//!
//! Exit codes: 0 all checks passed, 1 a verified-property violation was
//! found, 2 usage or configuration error.

mod commands;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use beltrami_core::domain::Domain;
use beltrami_core::field::{catalog_lookup_in, BeltramiField};

#[derive(Debug, Parser)]
#[command(name = "beltrami", version, about = "Numerical laboratory for Beltrami flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Field spec: "abc:A,B,C", "spheromak:R,B0" or "expr:<file>"
    #[arg(long, global = true)]
    pub field: Option<String>,

    /// Master seed for all randomized steps
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory for reports and CSV artifacts
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// json writes the report plus CSV artifacts, csv only the artifacts
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Omit the timestamp so reports are byte-identical across runs
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Domain override for expression fields: "torus:Lx,Ly,Lz" or "ball:R"
    #[arg(long, global = true)]
    pub domain: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Describe a catalog field, or list the valid formats
    Catalog,
    /// Integrate one field line, classify it, and emit the trajectory CSV
    Trace {
        /// Start point "x,y,z"
        #[arg(long)]
        start: String,
        /// Signed integration horizon
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        /// Relative integration tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Return radius for the periodicity test
        #[arg(long, default_value_t = 0.05)]
        return_eps: f64,
        /// Smallest period considered
        #[arg(long, default_value_t = 1.0)]
        min_period: f64,
    },
    /// Locate and characterize the zero set
    Zeros {
        #[arg(long, default_value_t = 48)]
        grid: usize,
        /// Relative Newton residual tolerance
        #[arg(long, default_value_t = 1e-10)]
        refine_tol: f64,
    },
    /// Box-counting dimension of the zero set
    Dimension {
        #[arg(long, default_value_t = 48)]
        grid: usize,
    },
    /// Count nodal domains of the zero-set complement
    Nodal {
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Exclusion margin around zeros (default 1.5 × cell diagonal)
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Boundary-sphere suite for a tangent ball field
    Boundary {
        #[arg(long, default_value_t = 20)]
        traces: usize,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
    },
    /// Poincaré recurrence ensemble
    Recurrence {
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
    },
    /// Run every structural check relevant to the given field
    Verify,
}

fn parse_domain_override(spec: &str) -> Result<Domain, String> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| format!("domain `{spec}` has no `kind:params` separator"))?;
    let nums: Result<Vec<f64>, _> = rest.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let nums = nums.map_err(|_| format!("domain `{spec}` has non-numeric parameters"))?;
    match (kind, nums.as_slice()) {
        ("torus", [a, b, c]) => Domain::torus([*a, *b, *c]).map_err(|e| e.to_string()),
        ("ball", [r]) => Domain::ball(*r).map_err(|e| e.to_string()),
        _ => Err(format!(
            "domain `{spec}` not recognized; use torus:Lx,Ly,Lz or ball:R"
        )),
    }
}

pub fn load_field(common: &Common) -> Result<BeltramiField, String> {
    let spec = common
        .field
        .as_deref()
        .ok_or_else(|| "--field is required for this command".to_string())?;
    let domain_override = match &common.domain {
        Some(d) => {
            if !spec.starts_with("expr:") {
                return Err("--domain only applies to expr fields".to_string());
            }
            Some(parse_domain_override(d)?)
        }
        None => None,
    };
    catalog_lookup_in(spec, domain_override).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();

    if let Some(threads) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cli::run: failed to configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }

    match commands::run(&cli) {
        Ok(violations) if violations.is_empty() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
