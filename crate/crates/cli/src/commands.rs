use std::path::Path;

use anyhow::{bail, Context, Result};
use markovfit::bounds::{self, BoundInputs};
use markovfit::fitter::{self, FitConfig, FitResult, BRANCH_TIE_TOL};
use markovfit::lindblad::{self, gkls_to_transfer, random_gkls};
use markovfit::linalg;
use markovfit::simulator::{self, GeneratorTrajectory, NoiseSpec};
use serde::Serialize;

use crate::args::{BoundsArgs, CheckArgs, FitArgs, SimulateArgs, TrajectoryChoice};
use crate::format::{to_json_pretty, write_output, SnapshotFile};
use crate::report::{
    BoundComparison, CheckReport, ConfigEcho, FitReport, IntervalCheck, Metadata, SnapshotCheck, SweepEntry, ToolInfo,
};

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        bail!("--{name} must be a positive number, got {x}")
    }
}

fn nonnegative(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        bail!("--{name} must be a nonnegative number, got {x}")
    }
}

/// Builds the report without touching the filesystem; the exit code is
/// `report.verdict.exit_code()`.
pub fn fit_report(file: &SnapshotFile, args: &FitArgs) -> Result<FitReport> {
    let series = file.to_series()?;
    let (d, n) = (series.dim(), series.len());
    let threshold = args.threshold.map(|t| positive("threshold", t)).transpose()?;
    let magnus = nonnegative("magnus", args.magnus)?;
    let total_time = match (args.total_time, series.timestamps()) {
        (Some(t), _) => positive("total-time", t)?,
        (None, Some(ts)) => positive("total-time (last timestamp)", ts[n - 1])?,
        (None, None) => 1.0,
    };
    let bound_inputs = match args.eta {
        Some(eta) => Some(BoundInputs::new(nonnegative("eta", eta)?, total_time, n, d)?.with_magnus_remainder(magnus)?),
        None => None,
    };

    let mut cfg = FitConfig {
        m_max: args.m_max,
        markov_threshold: threshold,
        per_interval_branches: args.per_interval,
        ..FitConfig::default()
    };
    if let Some(beta) = args.beta {
        cfg.beta = positive("beta", beta)?;
    } else if let Some(b) = &bound_inputs {
        cfg.beta = bounds::beta_default(b);
    }

    let (result, sweep, grid) = match args.beta_sweep {
        Some(g) => {
            let grid = fitter::geometric_grid(g.lo, g.hi, g.steps)?;
            let results = fitter::beta_sweep(&series, &cfg, &grid)?;
            let sweep: Vec<SweepEntry> = results
                .iter()
                .map(|r| SweepEntry { beta: r.beta, total_distance: r.total_distance, verdict: r.verdict })
                .collect();
            (best_of_sweep(results), sweep, Some(grid))
        }
        None => (fitter::fit(&series, &cfg)?, Vec::new(), None),
    };

    let config = ConfigEcho {
        input: file_label(args.input.as_path()),
        m_max: args.m_max,
        beta: grid.is_none().then_some(cfg.beta),
        beta_sweep: grid,
        threshold: cfg.threshold_for(d),
        eta: args.eta,
        total_time: Some(total_time),
        magnus_remainder: magnus,
        per_interval_branches: args.per_interval,
    };
    let comparison = bound_inputs.as_ref().map(|b| BoundComparison::new(b, &result));
    Ok(FitReport::new(&result, config, sweep, comparison))
}

/// Smallest total distance; near-ties keep the smaller radius.
fn best_of_sweep(results: Vec<FitResult>) -> FitResult {
    let mut best: Option<FitResult> = None;
    for r in results {
        let better = match &best {
            None => true,
            Some(b) => r.total_distance < b.total_distance - BRANCH_TIE_TOL * (1.0 + b.total_distance),
        };
        if better {
            best = Some(r);
        }
    }
    best.expect("sweep grid is never empty")
}

fn file_label(p: &Path) -> String {
    p.display().to_string()
}

pub fn fit(args: &FitArgs) -> Result<i32> {
    let file = SnapshotFile::read(&args.input)?;
    let mut report = fit_report(&file, args)?;
    report.metadata = Metadata::now();
    write_output(args.out.as_deref(), &to_json_pretty(&report)).context("writing report")?;
    eprintln!(
        "{}: total distance {:.3e}, beta {:.3e}, threshold {:.3e}",
        report.verdict, report.total_distance, report.beta_used, report.threshold
    );
    Ok(report.verdict.exit_code())
}

pub fn simulate_file(args: &SimulateArgs) -> Result<SnapshotFile> {
    if args.d < 2 {
        bail!("--d must be at least 2, got {}", args.d);
    }
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let total_time = positive("total-time", args.total_time)?;
    let sigma = nonnegative("noise-sigma", args.noise_sigma)?;
    let rate_scale = nonnegative("rate-scale", args.rate_scale)?;
    if let Some(dt) = args.dt {
        positive("dt", dt)?;
    }
    let gen = |seed: u64| -> Result<_> { Ok(gkls_to_transfer(&random_gkls(args.d, args.jumps, rate_scale, seed)?)?) };
    let first = gen(args.seed)?;
    let traj = match args.trajectory {
        TrajectoryChoice::Constant => GeneratorTrajectory::constant(first, total_time)?,
        TrajectoryChoice::Linear => {
            let eta = nonnegative("eta", args.eta)?;
            let direction = gen(args.seed.wrapping_add(1))?;
            if direction.frob() == 0.0 {
                bail!("the drift direction vanished; use a positive --rate-scale or more --jumps");
            }
            GeneratorTrajectory::linear_drift(first, &direction, eta, total_time)?
        }
        TrajectoryChoice::Piecewise => {
            let second = gen(args.seed.wrapping_add(1))?;
            GeneratorTrajectory::piecewise(vec![(0.5 * total_time, first), (total_time, second)])?
        }
    };
    let noise = if sigma > 0.0 { NoiseSpec::additive(sigma, args.seed.wrapping_add(2)) } else { NoiseSpec::none() };
    let series = simulator::emit_snapshots(&traj, args.n, total_time, args.dt, &noise)?;
    Ok(SnapshotFile::from_series(&series))
}

pub fn simulate(args: &SimulateArgs) -> Result<i32> {
    let file = simulate_file(args)?;
    write_output(args.out.as_deref(), &to_json_pretty(&file)).context("writing snapshots")?;
    Ok(0)
}

pub fn check_report(file: &SnapshotFile, input: &str) -> Result<CheckReport> {
    let series = file.to_series()?;
    let snapshots: Vec<SnapshotCheck> = series
        .snapshots()
        .iter()
        .map(|m| {
            let (min, tp) = lindblad::channel_residuals(m);
            SnapshotCheck { choi_min_eigenvalue: min, trace_residual: tp }
        })
        .collect();
    let cap = FitConfig::default().inversion_condition_cap;
    let intervals: Vec<IntervalCheck> = fitter::compute_thetas(&series, cap)
        .into_iter()
        .enumerate()
        .map(|(p, theta)| match theta {
            Ok(theta) => {
                let inversion_condition = if p == 0 {
                    1.0
                } else {
                    linalg::condition_number(series.snapshots()[p - 1].entries())
                };
                let (min, tp) = lindblad::channel_residuals(&theta);
                IntervalCheck::Computed { inversion_condition, choi_min_eigenvalue: min, trace_residual: tp }
            }
            Err(e) => IntervalCheck::Skipped { reason: e.to_string() },
        })
        .collect();
    let worst_snapshot = snapshots.iter().map(|s| s.choi_min_eigenvalue).fold(f64::INFINITY, f64::min);
    let worst_interval = intervals
        .iter()
        .filter_map(|c| match c {
            IntervalCheck::Computed { choi_min_eigenvalue, .. } => Some(*choi_min_eigenvalue),
            IntervalCheck::Skipped { .. } => None,
        })
        .reduce(f64::min);
    Ok(CheckReport {
        tool: ToolInfo::current(),
        input: input.to_string(),
        dim: series.dim(),
        snapshots,
        intervals,
        worst_snapshot_choi_eigenvalue: worst_snapshot,
        worst_interval_choi_eigenvalue: worst_interval,
    })
}

pub fn check(args: &CheckArgs) -> Result<i32> {
    let file = SnapshotFile::read(&args.input)?;
    let report = check_report(&file, &file_label(&args.input))?;
    write_output(args.out.as_deref(), &to_json_pretty(&report)).context("writing check report")?;
    for (p, c) in report.intervals.iter().enumerate() {
        match c {
            IntervalCheck::Computed { choi_min_eigenvalue, trace_residual, .. } => eprintln!(
                "interval {}: Choi min eigenvalue {choi_min_eigenvalue:.3e}, trace residual {trace_residual:.3e}",
                p + 1
            ),
            IntervalCheck::Skipped { reason } => eprintln!("interval {}: skipped ({reason})", p + 1),
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub intervals: usize,
    pub theta_error_bound: f64,
    pub snapshot_error_bound: f64,
    pub beta_default: f64,
}

pub fn bound_rows(args: &BoundsArgs) -> Result<Vec<BoundRow>> {
    args.n
        .iter()
        .map(|&n| {
            let b = BoundInputs::new(args.eta, args.total_time, n, args.d)?.with_magnus_remainder(args.magnus)?;
            Ok(BoundRow {
                intervals: n,
                theta_error_bound: bounds::theta_error_bound(&b),
                snapshot_error_bound: bounds::snapshot_error_bound(&b),
                beta_default: bounds::beta_default(&b),
            })
        })
        .collect()
}

pub fn format_bound_table(rows: &[BoundRow]) -> String {
    let mut out = format!("{:>6}  {:>14}  {:>14}  {:>14}\n", "N", "theta_error", "snapshot_error", "beta_default");
    for r in rows {
        out += &format!(
            "{:>6}  {:>14.6e}  {:>14.6e}  {:>14.6e}\n",
            r.intervals, r.theta_error_bound, r.snapshot_error_bound, r.beta_default
        );
    }
    out
}

pub fn bounds(args: &BoundsArgs) -> Result<i32> {
    let rows = bound_rows(args)?;
    let text = if args.json { to_json_pretty(&rows) } else { format_bound_table(&rows) };
    write_output(None, &text)?;
    Ok(0)
}
