use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "MARKOVFIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "markovfit", version, about = "Fit time-dependent Lindblad generators to channel snapshots")]
pub struct Cli {
    /// Worker threads for the branch search (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit piecewise-constant Lindbladians to a snapshot file.
    ///
    /// Exit status: 0 Markov-consistent, 2 non-Markovian, 3 cannot assess,
    /// 1 usage or input error.
    Fit(FitArgs),
    /// Simulate a generator trajectory and write its snapshots.
    Simulate(SimulateArgs),
    /// Report complete-positivity and trace residuals of a snapshot file.
    Check(CheckArgs),
    /// Print the error bounds and the suggested ball radius.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub input: PathBuf,

    /// Largest branch shift per conjugate pair.
    #[arg(long, default_value_t = 1)]
    pub m_max: u32,

    /// Radius of the ball tying consecutive generators together.
    #[arg(long, conflicts_with = "beta_sweep")]
    pub beta: Option<f64>,

    /// Geometric grid `lo:hi:steps` of radii; the best total distance wins.
    #[arg(long, value_name = "LO:HI:STEPS")]
    pub beta_sweep: Option<SweepGrid>,

    /// Largest acceptable per-interval distance (default 1e-3·d).
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Lipschitz constant of the generator; enables the bound comparison
    /// and, without --beta, sets the ball radius.
    #[arg(long)]
    pub eta: Option<f64>,

    /// Total time, when the file carries no timestamps (default 1).
    #[arg(long)]
    pub total_time: Option<f64>,

    /// Magnus truncation estimate added to the default ball radius.
    #[arg(long, default_value_t = 0.0)]
    pub magnus: f64,

    /// Choose each interval's branch on its own instead of sharing one.
    #[arg(long)]
    pub per_interval: bool,

    /// Report destination (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl FromStr for SweepGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts[..] else {
            return Err(format!("expected LO:HI:STEPS, got {s:?}"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let steps = steps.trim().parse::<usize>().map_err(|e| format!("{steps:?}: {e}"))?;
        Ok(Self { lo: num(lo)?, hi: num(hi)?, steps })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrajectoryChoice {
    /// One random generator for the whole horizon.
    Constant,
    /// A random generator drifting linearly at Frobenius speed --eta.
    Linear,
    /// Two random generators switching at half the horizon.
    Piecewise,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,

    #[arg(long, value_enum, default_value_t = TrajectoryChoice::Constant)]
    pub trajectory: TrajectoryChoice,

    /// Drift speed of the linear trajectory.
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,

    /// Number of snapshots.
    #[arg(long, default_value_t = 8)]
    pub n: usize,

    /// Total time.
    #[arg(long = "total-time", short = 't', default_value_t = 1.0)]
    pub total_time: f64,

    /// Integration step (default T/(1000·N)).
    #[arg(long)]
    pub dt: Option<f64>,

    /// Standard deviation of the entrywise noise on real and imaginary parts.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Jump operators per random generator.
    #[arg(long, default_value_t = 2)]
    pub jumps: usize,

    /// Upper end of the uniform jump-rate distribution.
    #[arg(long, default_value_t = 0.5)]
    pub rate_scale: f64,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub eta: f64,

    #[arg(long = "total-time", short = 't', default_value_t = 1.0)]
    pub total_time: f64,

    /// Interval counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,

    #[arg(long, default_value_t = 2)]
    pub d: usize,

    /// Magnus truncation estimate.
    #[arg(long, default_value_t = 0.0)]
    pub magnus: f64,

    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}
