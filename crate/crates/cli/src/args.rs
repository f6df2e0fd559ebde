use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tnf", version, about = "Normal forms of vector fields near an invariant torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// System description (JSON).
    pub file: PathBuf,
    /// Overrides the backend named in the file.
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// g(m) as an expression in `m`, e.g. "2*m^3".
    #[arg(long, conflicts_with = "gtable")]
    pub gform: Option<String>,
    /// Named parameter of --gform, as NAME=VALUE.
    #[arg(long = "gparam", value_parser = parse_param)]
    pub gparams: Vec<(String, f64)>,
    /// JSON object mapping m to g(m), e.g. {"1": 2.5, "3": 40}.
    #[arg(long)]
    pub gtable: Option<PathBuf>,
    /// doubling, saturating, or a comma-separated list of m_k.
    #[arg(long, default_value = "saturating")]
    pub mk: String,
    /// epsilon_k = (1 - 2^(-k/2^k))/4 + margin.
    #[arg(long = "eps-margin", default_value_t = 1e-3)]
    pub eps_margin: f64,
    /// r_0 of the radius sequence; defaults to the file's norm.r0, else 1.
    #[arg(long)]
    pub r0: Option<f64>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Divisor classes of the index box |P| <= maxP, |Q| <= maxQ.
    Resonances {
        #[command(flatten)]
        common: Common,
        #[arg(long = "maxP")]
        max_p: u32,
        #[arg(long = "maxQ")]
        max_q: u32,
    },
    /// Formal normal form and conjugacy up to --order (default: the file's cap).
    Normalize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<u32>,
    },
    /// Brjuno sum of the schedule and, given a system, the finite assumption checks.
    Brjuno {
        /// Optional system description; without it g must be given.
        file: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Number of summands; defaults to 40, or to --steps when g comes from the divisors.
        #[arg(long)]
        terms: Option<usize>,
        /// Steps over which the assumption items are checked.
        #[arg(long, default_value_t = 4)]
        steps: usize,
        /// Exit with status 4 when an item fails.
        #[arg(long)]
        strict: bool,
    },
    /// Newton iteration with per-step norm diagnostics.
    Iterate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = 3)]
        steps: usize,
        /// The constant C''_S of the zeta recursion.
        #[arg(long = "CS2", default_value_t = 1.0)]
        c_s2: f64,
        /// zeta_0; defaults to |R_0| at (r_0, delta_0).
        #[arg(long)]
        zeta0: Option<f64>,
        /// delta_0; defaults to the file's norm.delta0.
        #[arg(long)]
        delta0: Option<f64>,
        /// Exit with status 4 when a norm bound is violated.
        #[arg(long)]
        strict: bool,
    },
    /// Re-checks a JSON report of `normalize` against the system.
    Verify {
        #[command(flatten)]
        common: Common,
        /// JSON output of `tnf normalize --format json`.
        #[arg(long)]
        against: PathBuf,
    },
}
