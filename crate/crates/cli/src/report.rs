//! Machine-readable reports written by the `fit` and `check` commands.

use markovfit::bounds::{self, BoundInputs};
use markovfit::fitter::{BranchScore, FitResult, IntervalOutcome};
use markovfit::{ConditionReport, Verdict};
use serde::{Deserialize, Serialize};

use crate::format::{matrix_to_json, MatrixJson};

pub const TOOL_NAME: &str = "markovfit";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self { name: TOOL_NAME.into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

/// Everything that varies between otherwise identical runs lives here.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    pub generated_unix_seconds: Option<u64>,
}

impl Metadata {
    pub fn now() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        Self { generated_unix_seconds: secs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub m_max: u32,
    pub beta: Option<f64>,
    pub beta_sweep: Option<Vec<f64>>,
    pub threshold: f64,
    pub eta: Option<f64>,
    pub total_time: Option<f64>,
    pub magnus_remainder: f64,
    pub per_interval_branches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenBranch {
    /// One value per conjugate-pair slot, shared by all intervals.
    pub slots: Vec<i64>,
    /// Per-eigenvalue branch indices of each interval (`None` if skipped).
    pub per_interval: Vec<Option<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum IntervalRecord {
    Fitted {
        distance: f64,
        conditions: ConditionReport,
        converged: bool,
        iterations: usize,
        ball_slack: Option<f64>,
        on_branch_cut: bool,
        lindbladian: MatrixJson,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub beta: f64,
    pub total_distance: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub eta: f64,
    pub total_time: f64,
    pub intervals: usize,
    pub dim: usize,
    pub theta_error_bound: f64,
    pub snapshot_error_bound: f64,
    pub beta_default: f64,
    /// Largest measured `‖Θ_p − exp L_p‖_F`.
    pub max_theta_error: f64,
    /// Largest measured `‖M_p − M̃_p‖_F`.
    pub max_snapshot_error: f64,
}

impl BoundComparison {
    pub fn new(inputs: &BoundInputs, result: &FitResult) -> Self {
        Self {
            eta: inputs.eta,
            total_time: inputs.total_time,
            intervals: inputs.intervals,
            dim: inputs.dim,
            theta_error_bound: bounds::theta_error_bound(inputs),
            snapshot_error_bound: bounds::snapshot_error_bound(inputs),
            beta_default: bounds::beta_default(inputs),
            max_theta_error: result.max_distance(),
            max_snapshot_error: result.snapshot_errors.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub verdict: Verdict,
    pub chosen_branch: ChosenBranch,
    pub beta_used: f64,
    pub threshold: f64,
    pub total_distance: f64,
    pub intervals: Vec<IntervalRecord>,
    pub snapshot_errors: Vec<f64>,
    pub branch_scores: Vec<BranchScore>,
    pub beta_sweep: Vec<SweepEntry>,
    pub bounds: Option<BoundComparison>,
    pub metadata: Metadata,
}

impl FitReport {
    pub fn new(result: &FitResult, config: ConfigEcho, sweep: Vec<SweepEntry>, bounds: Option<BoundComparison>) -> Self {
        let intervals = result
            .intervals
            .iter()
            .map(|o| match o {
                IntervalOutcome::Fitted(f) => IntervalRecord::Fitted {
                    distance: f.distance,
                    conditions: f.conditions,
                    converged: f.converged,
                    iterations: f.iterations,
                    ball_slack: f.ball_slack,
                    on_branch_cut: f.on_branch_cut,
                    lindbladian: matrix_to_json(f.lindbladian.entries()),
                },
                IntervalOutcome::Skipped(reason) => IntervalRecord::Skipped { reason: reason.clone() },
            })
            .collect();
        let per_interval = result.chosen_branch().into_iter().map(|b| b.map(|b| b.indices.clone())).collect();
        Self {
            tool: ToolInfo::current(),
            config,
            verdict: result.verdict,
            chosen_branch: ChosenBranch { slots: result.chosen_slots.clone(), per_interval },
            beta_used: result.beta,
            threshold: result.threshold,
            total_distance: result.total_distance,
            intervals,
            snapshot_errors: result.snapshot_errors.clone(),
            branch_scores: result.branch_scores.clone(),
            beta_sweep: sweep,
            bounds,
            metadata: Metadata::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotCheck {
    /// Smallest eigenvalue of the Choi matrix; negative means not CP.
    pub choi_min_eigenvalue: f64,
    /// `‖Tr₁τ − 𝟙‖₁`.
    pub trace_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum IntervalCheck {
    Computed {
        /// Condition number of the snapshot that was inverted.
        inversion_condition: f64,
        choi_min_eigenvalue: f64,
        trace_residual: f64,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub tool: ToolInfo,
    pub input: String,
    pub dim: usize,
    pub snapshots: Vec<SnapshotCheck>,
    /// Residuals of the inter-snapshot maps `Θ_p`.
    pub intervals: Vec<IntervalCheck>,
    pub worst_snapshot_choi_eigenvalue: f64,
    pub worst_interval_choi_eigenvalue: Option<f64>,
}
