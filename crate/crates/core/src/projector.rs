//! Orthogonal projections onto the Lindbladian constraint sets and a
//! Dykstra solver for the nearest point in their intersection.
//!
//! Everything works in the real inner-product space of hermitian
//! `d² × d²` matrices with `⟨X, Y⟩ = Re Tr[X†Y]`.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::chanrep::{self, ChoiMatrix};
use crate::error::{Error, Result};
use crate::lindblad::{self, ConditionReport};
use crate::linalg;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 50_000;

/// Hermiticity slack accepted by [`project_ccp`], relative to `‖X‖_F`.
const HERMITIAN_INPUT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub dim: usize,
    /// Centre of the Frobenius ball; `None` drops the ball constraint.
    pub previous: Option<ChoiMatrix>,
    pub beta: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl ConstraintSpec {
    pub fn unconstrained(dim: usize) -> Self {
        Self { dim, previous: None, beta: f64::INFINITY, tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS }
    }

    pub fn with_ball(dim: usize, previous: ChoiMatrix, beta: f64) -> Self {
        Self { previous: Some(previous), beta, ..Self::unconstrained(dim) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidDimension("dimension must be positive".into()));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance {} and iteration budget {} must be positive",
                self.tol, self.max_iters
            )));
        }
        if let Some(prev) = &self.previous {
            if prev.dim() != self.dim {
                return Err(Error::InvalidDimension(format!(
                    "ball centre has dimension {}, expected {}",
                    prev.dim(),
                    self.dim
                )));
            }
            if !(self.beta > 0.0) {
                return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub conditions: ConditionReport,
    /// `β − ‖X − X_prev‖_F`, absent without a ball constraint.
    pub ball_slack: Option<f64>,
}

impl Feasibility {
    pub fn passed(&self) -> bool {
        self.conditions.passed && self.ball_slack.is_none_or(|s| s >= -self.conditions.tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: ChoiMatrix,
    pub iterations: usize,
    pub final_change: f64,
    pub converged: bool,
    pub feasibility: Feasibility,
}

/// `(X + X†)/2`.
pub fn project_hermitian(x: &ChoiMatrix) -> ChoiMatrix {
    ChoiMatrix::from_square(linalg::hermitian_part(x.entries())).expect("shape preserved")
}

/// Clips the negative spectrum of the compression `V†XV` onto the range of
/// ω⊥, leaving every block that touches `|ω⟩` as it was.
pub fn project_ccp(x: &ChoiMatrix) -> Result<ChoiMatrix> {
    let scale = x.frob().max(1.0);
    let skew = chanrep::anti_hermitian_norm(x.entries());
    if skew > HERMITIAN_INPUT_TOL * scale {
        return Err(Error::ContractViolation(format!(
            "CCP projection needs a hermitian input, anti-hermitian part has norm {skew:.3e}"
        )));
    }
    let basis = chanrep::omega_perp_basis(x.dim());
    Ok(ChoiMatrix::from_square(ccp_step(x.entries(), basis.as_ref())).expect("shape preserved"))
}

fn ccp_step(x: MatRef<'_, c64>, basis: MatRef<'_, c64>) -> Mat<c64> {
    let compressed = &(basis.adjoint() * x) * basis;
    let (vals, vecs) = linalg::hermitian_eig(linalg::hermitian_part(compressed.as_ref()).as_ref());
    let k = vals.iter().take_while(|&&v| v < 0.0).count();
    if k == 0 {
        return x.to_owned();
    }
    let n = vals.len();
    // negative part of the compressed block, lifted back through V
    let scaled = Mat::from_fn(n, k, |i, j| vecs[(i, j)] * vals[j]);
    let neg = &scaled * vecs.get(.., ..k).adjoint();
    let lifted = &(basis * &neg) * basis.adjoint();
    let out = x - &lifted;
    linalg::hermitian_part(out.as_ref())
}

/// `X − (1/d)·(𝟙 ⊗ Tr₁X)`.
pub fn project_tracefree(x: &ChoiMatrix) -> ChoiMatrix {
    ChoiMatrix::from_square(tracefree_step(x.entries(), x.dim())).expect("shape preserved")
}

fn tracefree_step(x: MatRef<'_, c64>, d: usize) -> Mat<c64> {
    let tr = chanrep::partial_trace_first_raw(x, d);
    let inv_d = 1.0 / d as f64;
    // (𝟙 ⊗ Y) has entry δ_{jℓ} Y_{km} at ((j,k),(ℓ,m))
    Mat::from_fn(d * d, d * d, |r, c| {
        let corr = if r / d == c / d { tr[(r % d, c % d)] * inv_d } else { linalg::ZERO };
        x[(r, c)] - corr
    })
}

/// Radial projection onto `{X : ‖X − center‖_F ≤ β}`.
pub fn project_ball(x: &ChoiMatrix, center: &ChoiMatrix, beta: f64) -> ChoiMatrix {
    ChoiMatrix::from_square(ball_step(x.entries(), center.entries(), beta)).expect("shape preserved")
}

fn ball_step(x: MatRef<'_, c64>, center: MatRef<'_, c64>, beta: f64) -> Mat<c64> {
    let dist = linalg::frob_dist(x, center);
    if dist <= beta {
        return x.to_owned();
    }
    let k = beta / dist;
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| center[(i, j)] + (x[(i, j)] - center[(i, j)]) * k)
}

/// State handed to a [`dykstra_observed`] callback after each full cycle.
pub struct CycleState<'a> {
    pub cycle: usize,
    pub iterate: MatRef<'a, c64>,
    /// Dykstra correction terms, one per constraint set in cycle order
    /// (CCP, trace-free, and the ball when present).
    pub corrections: &'a [Mat<c64>],
    pub change: f64,
}

/// Frobenius-nearest point to `project_hermitian(target)` satisfying the
/// Lindbladian conditions and, with a previous generator, the ball
/// constraint.
pub fn dykstra_nearest(target: &ChoiMatrix, spec: &ConstraintSpec) -> Result<ProjectionResult> {
    dykstra_observed(target, spec, |_| {})
}

pub fn dykstra_observed(
    target: &ChoiMatrix,
    spec: &ConstraintSpec,
    mut observe: impl FnMut(&CycleState<'_>),
) -> Result<ProjectionResult> {
    spec.validate()?;
    let d = spec.dim;
    if target.dim() != d {
        return Err(Error::InvalidDimension(format!(
            "target has dimension {}, spec expects {d}",
            target.dim()
        )));
    }
    let basis = chanrep::omega_perp_basis(d);
    let start = linalg::hermitian_part(target.entries());
    let ball = spec.previous.as_ref().map(|p| linalg::hermitian_part(p.entries()));
    let n_sets = if ball.is_some() { 3 } else { 2 };
    let n = d * d;
    let mut corrections: Vec<Mat<c64>> = (0..n_sets).map(|_| linalg::zeros(n, n)).collect();
    let mut x = start;
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    let mut converged = false;

    while iterations < spec.max_iters {
        iterations += 1;
        let before = x.clone();
        for (set, corr) in corrections.iter_mut().enumerate() {
            let y = &x + &*corr;
            let next = match set {
                0 => ccp_step(y.as_ref(), basis.as_ref()),
                1 => tracefree_step(y.as_ref(), d),
                _ => ball_step(y.as_ref(), ball.as_ref().expect("ball set").as_ref(), spec.beta),
            };
            *corr = &y - &next;
            x = next;
        }
        change = linalg::frob_dist(x.as_ref(), before.as_ref());
        observe(&CycleState { cycle: iterations, iterate: x.as_ref(), corrections: &corrections, change });
        // a small step alone can stall short of the constraints, so also
        // require feasibility before stopping
        if change <= spec.tol && feasible(x.as_ref(), spec, ball.as_ref()) {
            converged = true;
            break;
        }
    }

    let point = ChoiMatrix::new(d, x)?;
    let conditions = lindblad::check_lindblad_conditions(&point, 10.0 * spec.tol);
    let ball_slack = spec.previous.as_ref().map(|p| spec.beta - point.distance(p));
    Ok(ProjectionResult {
        point,
        iterations,
        final_change: change,
        converged,
        feasibility: Feasibility { conditions, ball_slack },
    })
}

fn feasible(x: MatRef<'_, c64>, spec: &ConstraintSpec, center: Option<&Mat<c64>>) -> bool {
    let tol = 10.0 * spec.tol;
    let Ok(point) = ChoiMatrix::new(spec.dim, x.to_owned()) else {
        return false;
    };
    let in_ball = center.is_none_or(|c| linalg::frob_dist(x, c.as_ref()) <= spec.beta + tol);
    in_ball && lindblad::check_lindblad_conditions(&point, tol).passed
}
