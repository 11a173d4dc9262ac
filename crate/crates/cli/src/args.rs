use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rzl_core::params::ParamOverrides;

#[derive(Debug, Parser)]
#[command(name = "rzl", version, about = "Resonance-method experiments on extreme values of log zeta")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(flatten)]
    pub params: ParamArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Key-value config file; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Write the provenance header here instead of stderr.
    #[arg(long, global = true, value_name = "FILE")]
    pub provenance: Option<PathBuf>,

    /// Zero database file; overrides the config file and RZL_ZERO_DB.
    #[arg(long, global = true, value_name = "FILE")]
    pub zero_db: Option<PathBuf>,

    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Enumeration cap for the support set.
    #[arg(long, global = true)]
    pub enum_cap: Option<usize>,

    /// Suppress the provenance header on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Args, Default)]
pub struct ParamArgs {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Height `T`.
    #[arg(long = "T", global = true)]
    pub t_height: Option<f64>,
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Resonator budget, replacing floor(T^kappa).
    #[arg(long = "N", global = true, value_parser = parse_count)]
    pub n_budget: Option<u64>,
}

impl ParamArgs {
    pub fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            sigma: self.sigma,
            beta: self.beta,
            kappa: self.kappa,
            theta: self.theta,
            t_height: self.t_height,
            a: self.a,
            gamma: self.gamma,
            b: self.b,
            n_override: self.n_budget,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The three prime windows for a budget N.
    Windows,
    /// Prime windows, factor thresholds, masses and ratios.
    Sets {
        /// Enumerate the support set and count its lattice representatives.
        #[arg(long)]
        enumerate: bool,
    },
    /// The resonator on an equispaced grid, as CSV.
    Resonator {
        #[arg(long, value_name = "LO:HI:N", value_parser = parse_grid, allow_hyphen_values = true)]
        t_grid: Grid,
        /// Use the printed bucket endpoints instead of the lattice neighbours.
        #[arg(long)]
        literal_window: bool,
    },
    /// zeta (or log zeta) at one point, or on a grid as CSV.
    Zeta {
        #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
        t: Option<f64>,
        #[arg(long, value_name = "LO:HI:N", value_parser = parse_grid, conflicts_with = "t")]
        grid: Option<Grid>,
        /// Include the continued logarithm.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Residual of the convolution identity at one height, or across heights as CSV.
    VerifyConvolution {
        #[arg(long, allow_hyphen_values = true, required_unless_present = "sweep_t")]
        t: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        psi: f64,
        /// Frequency shift.
        #[arg(long = "H", allow_hyphen_values = true, default_value_t = 0.0)]
        shift: f64,
        /// Check the combined identity at this centre (angle from --theta).
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, value_name = "LO:HI:N", value_parser = parse_grid, conflicts_with = "t")]
        sweep_t: Option<Grid>,
        #[arg(long, value_enum, default_value_t = Triangle::Transform)]
        triangle: Triangle,
        /// Absolute quadrature tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// First and second moments of the resonated zeta.
    Moments {
        #[arg(long, default_value = "quad")]
        mode: String,
        /// Comma-separated angles; defaults to --theta.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thetas: Option<Vec<f64>>,
        #[arg(long)]
        quad_step: Option<f64>,
        #[arg(long)]
        cost_limit: Option<f64>,
        #[arg(long)]
        literal_window: bool,
    },
    /// Maximize Re(e^{-i theta} log zeta) over [T^beta, T].
    Search {
        #[arg(long = "grid", default_value = "100000", value_parser = parse_count)]
        grid_n: u64,
        /// Comma-separated heights T to scan in turn.
        #[arg(long, value_delimiter = ',', value_parser = parse_positive, conflicts_with = "thetas")]
        sweep: Option<Vec<f64>>,
        /// Comma-separated angles scanned on one shared grid.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thetas: Option<Vec<f64>>,
        /// Write every grid sample to this CSV file.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// The extreme-value lower bound and its constants.
    Bounds,
    /// Low-factor-count mass ratios across a ladder of budgets.
    Ratios {
        #[arg(long = "Ns", value_delimiter = ',', value_parser = parse_count, default_value = "1000,10000,100000,1000000")]
        budgets: Vec<u64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Windows => "windows",
            Command::Sets { .. } => "sets",
            Command::Resonator { .. } => "resonator",
            Command::Zeta { .. } => "zeta",
            Command::VerifyConvolution { .. } => "verify-convolution",
            Command::Moments { .. } => "moments",
            Command::Search { .. } => "search",
            Command::Bounds => "bounds",
            Command::Ratios { .. } => "ratios",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Triangle {
    Transform,
    Displayed,
}

/// `n` equispaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
                }
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        if self.n > 1 {
            (self.hi - self.lo) / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected LO:HI:N, got `{s}`"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number `{x}`"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    let n = parse_count(n)? as usize;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(format!("need finite LO <= HI, got {lo}:{hi}"));
    }
    if n == 0 {
        return Err("grid needs at least one point".into());
    }
    Ok(Grid { lo, hi, n })
}

/// A nonnegative integer, also written as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("expected a nonnegative integer, got `{s}`")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}
