//! Fitting piecewise-constant Lindbladians to a snapshot series.
//!
//! Inter-snapshot maps `Θ_p = M_p M_{p−1}⁻¹` are decomposed, and for every
//! branch choice the nearest Lindbladian to each logarithm is found, the
//! generators of consecutive intervals being tied together by a Frobenius
//! ball of radius β. The branch with the smallest total distance
//! `Σ_p ‖Θ_p − exp L_p‖_F` wins.
//!
//! A branch is described by one slot value per conjugate pair, shared by all
//! intervals: slot `k` shifts the `k`-th pair of every `Θ_p` (pairs ordered
//! by decreasing argument of their upper member).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chanrep::{ChoiMatrix, TransferMatrix};
use crate::error::{Error, Result};
use crate::lindblad::{self, ConditionReport};
use crate::linalg;
use crate::projector::{self, ConstraintSpec, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::spectral::{self, BranchVector, SpectralDecomposition, SpectralOptions};

/// Relative margin by which a later branch must beat the current best.
pub const BRANCH_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries {
    dim: usize,
    snapshots: Vec<TransferMatrix>,
    timestamps: Option<Vec<f64>>,
}

impl SnapshotSeries {
    pub fn new(dim: usize, snapshots: Vec<TransferMatrix>) -> Result<Self> {
        Self::build(dim, snapshots, None)
    }

    pub fn with_times(dim: usize, snapshots: Vec<TransferMatrix>, timestamps: Vec<f64>) -> Result<Self> {
        Self::build(dim, snapshots, Some(timestamps))
    }

    fn build(dim: usize, snapshots: Vec<TransferMatrix>, timestamps: Option<Vec<f64>>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidParameter("a series needs at least one snapshot".into()));
        }
        if let Some(k) = snapshots.iter().position(|m| m.dim() != dim) {
            return Err(Error::InvalidDimension(format!(
                "snapshot {} has dimension {}, expected {dim}",
                k + 1,
                snapshots[k].dim()
            )));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != snapshots.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} timestamps for {} snapshots",
                    ts.len(),
                    snapshots.len()
                )));
            }
            if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidParameter("timestamps must be finite and strictly increasing".into()));
            }
        }
        Ok(Self { dim, snapshots, timestamps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[TransferMatrix] {
        &self.snapshots
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub m_max: u32,
    pub beta: f64,
    /// Largest acceptable per-interval distance; `None` means `1e−3·d`.
    pub markov_threshold: Option<f64>,
    pub inversion_condition_cap: f64,
    pub projector_tol: f64,
    pub projector_max_iters: usize,
    pub spectral: SpectralOptions,
    /// Choose the branch of each interval greedily instead of sharing one
    /// branch vector across the series.
    pub per_interval_branches: bool,
    pub parallel: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            m_max: 1,
            beta: 1.0,
            markov_threshold: None,
            inversion_condition_cap: 1e8,
            projector_tol: DEFAULT_TOL,
            projector_max_iters: DEFAULT_MAX_ITERS,
            spectral: SpectralOptions::default(),
            per_interval_branches: false,
            parallel: true,
        }
    }
}

impl FitConfig {
    pub fn threshold_for(&self, dim: usize) -> f64 {
        self.markov_threshold.unwrap_or(1e-3 * dim as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if let Some(eps) = self.markov_threshold {
            if !(eps > 0.0) {
                return Err(Error::InvalidParameter(format!("threshold must be positive, got {eps}")));
            }
        }
        if !(self.inversion_condition_cap > 1.0) {
            return Err(Error::InvalidParameter("inversion condition cap must exceed 1".into()));
        }
        if !(self.projector_tol > 0.0) || self.projector_max_iters == 0 {
            return Err(Error::InvalidParameter("projector tolerance and budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MarkovConsistent,
    NonMarkovian,
    CannotAssess,
}

impl Verdict {
    /// Process exit code: 0 Markov-consistent, 2 non-Markovian, 3 cannot
    /// assess.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::MarkovConsistent => 0,
            Verdict::NonMarkovian => 2,
            Verdict::CannotAssess => 3,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::MarkovConsistent => "markov-consistent",
            Verdict::NonMarkovian => "non-markovian",
            Verdict::CannotAssess => "cannot-assess",
        })
    }
}

/// Fit of a single interval on the chosen branch.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFit {
    pub lindbladian: TransferMatrix,
    pub branch: BranchVector,
    /// `‖Θ_p − exp L_p‖_F`.
    pub distance: f64,
    pub conditions: ConditionReport,
    pub converged: bool,
    pub iterations: usize,
    pub ball_slack: Option<f64>,
    /// The principal logarithm used `Log λ = ln|λ| + iπ` somewhere.
    pub on_branch_cut: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntervalOutcome {
    Fitted(IntervalFit),
    /// The interval could not be assessed (ill-conditioned inversion,
    /// non-diagonalizable or singular `Θ_p`).
    Skipped(String),
}

impl IntervalOutcome {
    pub fn fit(&self) -> Option<&IntervalFit> {
        match self {
            IntervalOutcome::Fitted(f) => Some(f),
            IntervalOutcome::Skipped(_) => None,
        }
    }
}

/// Total distance of one shared branch choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchScore {
    pub slots: Vec<i64>,
    pub total_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub dim: usize,
    pub intervals: Vec<IntervalOutcome>,
    /// Slot values of the winning branch (empty in per-interval mode).
    pub chosen_slots: Vec<i64>,
    pub branch_scores: Vec<BranchScore>,
    pub total_distance: f64,
    /// `exp(L_p)…exp(L_1)`, up to the first skipped interval.
    pub reconstructed: Vec<TransferMatrix>,
    /// `‖M_p − M̃_p‖_F` for each reconstructed snapshot.
    pub snapshot_errors: Vec<f64>,
    pub threshold: f64,
    pub beta: f64,
    pub verdict: Verdict,
}

impl FitResult {
    /// Generators of the fitted intervals, in order.
    pub fn lindbladians(&self) -> Vec<&TransferMatrix> {
        self.intervals.iter().filter_map(|o| o.fit()).map(|f| &f.lindbladian).collect()
    }

    pub fn per_interval_distance(&self) -> Vec<f64> {
        self.intervals.iter().filter_map(|o| o.fit()).map(|f| f.distance).collect()
    }

    pub fn max_distance(&self) -> f64 {
        self.per_interval_distance().into_iter().fold(0.0, f64::max)
    }

    /// Per-interval branch vectors of the winning branch.
    pub fn chosen_branch(&self) -> Vec<Option<&BranchVector>> {
        self.intervals.iter().map(|o| o.fit().map(|f| &f.branch)).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.intervals.iter().filter_map(|o| o.fit()).all(|f| f.converged)
    }
}

/// `Θ₁ = M₁`, `Θ_p = M_p M_{p−1}⁻¹`. An interval whose `M_{p−1}` has
/// condition number above `cond_cap` yields an error entry.
pub fn compute_thetas(series: &SnapshotSeries, cond_cap: f64) -> Vec<Result<TransferMatrix>> {
    let s = series.snapshots();
    let mut out = Vec::with_capacity(s.len());
    out.push(Ok(s[0].clone()));
    for p in 1..s.len() {
        let prev = s[p - 1].entries();
        let condition = linalg::condition_number(prev);
        if !(condition <= cond_cap) {
            out.push(Err(Error::IllConditioned { index: p, condition }));
            continue;
        }
        let theta = linalg::solve(prev.transpose(), s[p].entries().transpose()).transpose().to_owned();
        out.push(TransferMatrix::new(series.dim(), theta));
    }
    out
}

/// `M̃_p = exp(L_p)·…·exp(L_1)`.
pub fn reconstruct(lindbladians: &[&TransferMatrix]) -> Vec<TransferMatrix> {
    let mut out: Vec<TransferMatrix> = Vec::with_capacity(lindbladians.len());
    for l in lindbladians {
        let step = l.exp();
        let next = match out.last() {
            Some(prev) => step.compose(prev),
            None => step,
        };
        out.push(next);
    }
    out
}

/// Spectral data of one interval.
struct Prepared {
    theta: TransferMatrix,
    spectrum: SpectralDecomposition,
    log0: spectral::PrincipalLog,
}

fn prepare(theta: Result<TransferMatrix>, opts: &SpectralOptions) -> std::result::Result<Prepared, String> {
    let theta = theta.map_err(|e| e.to_string())?;
    let spectrum = spectral::decompose_with(theta.entries(), opts).map_err(|e| e.to_string())?;
    let log0 = spectral::principal_log(&spectrum).map_err(|e| e.to_string())?;
    Ok(Prepared { theta, spectrum, log0 })
}

fn fit_interval(
    prep: &Prepared,
    branch: BranchVector,
    previous: Option<&ChoiMatrix>,
    cfg: &FitConfig,
) -> Result<(IntervalFit, ChoiMatrix)> {
    let d = prep.theta.dim();
    let g = spectral::branch_log(prep.log0.matrix.as_ref(), &prep.spectrum, &branch)?;
    let target = TransferMatrix::new(d, g)?.to_choi();
    let mut spec = match previous {
        Some(prev) => ConstraintSpec::with_ball(d, prev.clone(), cfg.beta),
        None => ConstraintSpec::unconstrained(d),
    };
    spec.tol = cfg.projector_tol;
    spec.max_iters = cfg.projector_max_iters;
    let res = projector::dykstra_nearest(&target, &spec)?;
    let lindbladian = res.point.to_transfer();
    let distance = prep.theta.distance(&lindbladian.exp());
    let conditions = lindblad::check_lindblad_conditions(&res.point, res.feasibility.conditions.tol);
    let fit = IntervalFit {
        lindbladian,
        branch,
        distance,
        conditions,
        converged: res.converged,
        iterations: res.iterations,
        ball_slack: res.feasibility.ball_slack,
        on_branch_cut: prep.log0.on_branch_cut(),
    };
    Ok((fit, res.point))
}

fn run_shared_branch(prepared: &[std::result::Result<Prepared, String>], slots: &[i64], cfg: &FitConfig) -> Result<Vec<IntervalOutcome>> {
    let mut previous: Option<ChoiMatrix> = None;
    let mut out = Vec::with_capacity(prepared.len());
    for prep in prepared {
        match prep {
            Err(reason) => out.push(IntervalOutcome::Skipped(reason.clone())),
            Ok(prep) => {
                let branch = BranchVector::from_slots(&prep.spectrum, slots);
                let (fit, point) = fit_interval(prep, branch, previous.as_ref(), cfg)?;
                previous = Some(point);
                out.push(IntervalOutcome::Fitted(fit));
            }
        }
    }
    Ok(out)
}

fn run_per_interval(prepared: &[std::result::Result<Prepared, String>], cfg: &FitConfig) -> Result<Vec<IntervalOutcome>> {
    let mut previous: Option<ChoiMatrix> = None;
    let mut out = Vec::with_capacity(prepared.len());
    for prep in prepared {
        match prep {
            Err(reason) => out.push(IntervalOutcome::Skipped(reason.clone())),
            Ok(prep) => {
                let candidates = spectral::enumerate_branches(&prep.spectrum, cfg.m_max);
                let fits: Vec<(IntervalFit, ChoiMatrix)> = candidates
                    .into_iter()
                    .map(|b| fit_interval(prep, b, previous.as_ref(), cfg))
                    .collect::<Result<_>>()?;
                let best = fits
                    .into_iter()
                    .reduce(|best, next| {
                        if next.0.distance < best.0.distance - BRANCH_TIE_TOL * (1.0 + best.0.distance) {
                            next
                        } else {
                            best
                        }
                    })
                    .expect("the zero branch is always enumerated");
                previous = Some(best.1);
                out.push(IntervalOutcome::Fitted(best.0));
            }
        }
    }
    Ok(out)
}

fn total(outcomes: &[IntervalOutcome]) -> f64 {
    outcomes.iter().filter_map(|o| o.fit()).map(|f| f.distance).sum()
}

fn verdict(outcomes: &[IntervalOutcome], threshold: f64) -> Verdict {
    let fits: Vec<&IntervalFit> = outcomes.iter().filter_map(|o| o.fit()).collect();
    if fits.is_empty() {
        Verdict::CannotAssess
    } else if fits.iter().any(|f| !(f.distance <= threshold)) {
        Verdict::NonMarkovian
    } else if fits.len() < outcomes.len() {
        Verdict::CannotAssess
    } else {
        Verdict::MarkovConsistent
    }
}

/// Runs the branch search and returns the best fit.
pub fn fit(series: &SnapshotSeries, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let thetas = compute_thetas(series, cfg.inversion_condition_cap);
    let prepared: Vec<std::result::Result<Prepared, String>> =
        thetas.into_iter().map(|t| prepare(t, &cfg.spectral)).collect();

    let (intervals, chosen_slots, branch_scores) = if cfg.per_interval_branches {
        (run_per_interval(&prepared, cfg)?, Vec::new(), Vec::new())
    } else {
        let n_slots = prepared
            .iter()
            .filter_map(|p| p.as_ref().ok())
            .map(|p| p.spectrum.pairs().len())
            .max()
            .unwrap_or(0);
        let all_slots = spectral::slot_vectors(n_slots, cfg.m_max);
        let runs: Vec<Result<Vec<IntervalOutcome>>> = if cfg.parallel {
            all_slots.par_iter().map(|s| run_shared_branch(&prepared, s, cfg)).collect()
        } else {
            all_slots.iter().map(|s| run_shared_branch(&prepared, s, cfg)).collect()
        };
        let mut best: Option<(usize, f64)> = None;
        let mut scores = Vec::with_capacity(runs.len());
        let mut outcomes = Vec::with_capacity(runs.len());
        for (k, run) in runs.into_iter().enumerate() {
            let run = run?;
            let t = total(&run);
            scores.push(BranchScore { slots: all_slots[k].clone(), total_distance: t });
            // totals within the tie tolerance keep the lexicographically first branch
            if best.is_none_or(|(_, b)| t < b - BRANCH_TIE_TOL * (1.0 + b)) {
                best = Some((k, t));
            }
            outcomes.push(run);
        }
        let (k, _) = best.expect("at least the zero branch");
        (outcomes.swap_remove(k), all_slots[k].clone(), scores)
    };

    let dim = series.dim();
    let threshold = cfg.threshold_for(dim);
    let leading: Vec<&TransferMatrix> = intervals
        .iter()
        .map_while(|o| o.fit())
        .map(|f| &f.lindbladian)
        .collect();
    let reconstructed = reconstruct(&leading);
    let snapshot_errors = reconstructed
        .iter()
        .zip(series.snapshots())
        .map(|(r, m)| r.distance(m))
        .collect();
    Ok(FitResult {
        dim,
        total_distance: total(&intervals),
        verdict: verdict(&intervals, threshold),
        intervals,
        chosen_slots,
        branch_scores,
        reconstructed,
        snapshot_errors,
        threshold,
        beta: cfg.beta,
    })
}

/// `steps` values from `lo` to `hi`, evenly spaced in log scale.
pub fn geometric_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "geometric grid needs 0 < lo ≤ hi and at least one step, got {lo}:{hi}:{steps}"
        )));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln() / (steps - 1) as f64;
    Ok((0..steps).map(|k| lo * (ratio * k as f64).exp()).collect())
}

/// Refits the series for every β in `betas`.
pub fn beta_sweep(series: &SnapshotSeries, cfg: &FitConfig, betas: &[f64]) -> Result<Vec<FitResult>> {
    betas
        .iter()
        .map(|&beta| fit(series, &FitConfig { beta, ..cfg.clone() }))
        .collect()
}

/// The single-interval scenario `exp(L)` with `L` generated by
/// `H = (ω/2)σ_z` and dephasing `J = σ_z` at rate `γ`, both per unit `Δt`.
pub fn rotating_dephasing_channel(omega_dt: f64, gamma_dt: f64) -> Result<TransferMatrix> {
    let h = linalg::scale_re(lindblad::pauli_z().as_ref(), omega_dt / 2.0);
    let params = lindblad::GklsParams::new(h, vec![(lindblad::pauli_z(), gamma_dt)])?;
    Ok(lindblad::gkls_to_transfer(&params)?.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub omega_dt: f64,
    pub gamma_dt: f64,
    pub principal_distance: f64,
    pub best_distance: f64,
    pub chosen_slots: Vec<i64>,
    pub chosen_indices: Vec<i64>,
    pub passed: bool,
}

/// Fits the rotating-dephasing channel with `ωΔt = 3π/2` at `m_max = 0`
/// and `m_max = 1`. Passes when the principal branch misses by at least 0.1
/// and a shifted branch recovers the channel within 1e−6.
pub fn branch_recovery_selfcheck(cfg: &FitConfig) -> Result<SelfCheckReport> {
    branch_recovery_check(1.5 * std::f64::consts::PI, 0.1, cfg)
}

pub fn branch_recovery_check(omega_dt: f64, gamma_dt: f64, cfg: &FitConfig) -> Result<SelfCheckReport> {
    let m = rotating_dephasing_channel(omega_dt, gamma_dt)?;
    let series = SnapshotSeries::new(2, vec![m])?;
    let principal = fit(&series, &FitConfig { m_max: 0, ..cfg.clone() })?;
    let shifted = fit(&series, &FitConfig { m_max: 1, ..cfg.clone() })?;
    let chosen_indices = shifted.intervals[0]
        .fit()
        .map(|f| f.branch.indices.clone())
        .unwrap_or_default();
    Ok(SelfCheckReport {
        omega_dt,
        gamma_dt,
        principal_distance: principal.total_distance,
        best_distance: shifted.total_distance,
        passed: principal.total_distance >= 0.1 && shifted.total_distance <= 1e-6,
        chosen_slots: shifted.chosen_slots,
        chosen_indices,
    })
}
