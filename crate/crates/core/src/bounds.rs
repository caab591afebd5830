//! Error bounds for piecewise-constant Lindbladian fits of a generator with
//! Lipschitz time dependence, and the ball radius derived from them.

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use crate::chanrep::TransferMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Smallest ball radius handed to the solver.
pub const BETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Lipschitz constant of the generator, per unit time.
    pub eta: f64,
    pub total_time: f64,
    pub intervals: usize,
    pub dim: usize,
    /// Per-interval truncation error of the first-order Magnus term.
    pub magnus_remainder: f64,
}

impl BoundInputs {
    pub fn new(eta: f64, total_time: f64, intervals: usize, dim: usize) -> Result<Self> {
        let b = Self { eta, total_time, intervals, dim, magnus_remainder: 0.0 };
        b.validate()?;
        Ok(b)
    }

    pub fn with_magnus_remainder(mut self, remainder: f64) -> Result<Self> {
        self.magnus_remainder = remainder;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.eta) || !finite_nonneg(self.magnus_remainder) {
            return Err(Error::InvalidParameter(format!(
                "eta ({}) and Magnus remainder ({}) must be finite and nonnegative",
                self.eta, self.magnus_remainder
            )));
        }
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return Err(Error::InvalidParameter(format!("total time must be positive, got {}", self.total_time)));
        }
        if self.intervals == 0 || self.dim == 0 {
            return Err(Error::InvalidParameter("interval count and dimension must be at least 1".into()));
        }
        Ok(())
    }
}

/// Leading-order bound `η²T⁴/N³` on `‖Θ_p − e^{L_p}‖`.
pub fn theta_error_bound(b: &BoundInputs) -> f64 {
    let n = b.intervals as f64;
    b.eta * b.eta * b.total_time.powi(4) / n.powi(3)
}

/// Bound `√d (exp(√d η²T⁴/N²) − 1)` on the accumulated snapshot error.
pub fn snapshot_error_bound(b: &BoundInputs) -> f64 {
    let n = b.intervals as f64;
    let sd = (b.dim as f64).sqrt();
    sd * (sd * b.eta * b.eta * b.total_time.powi(4) / (n * n)).exp_m1()
}

/// Suggested ball radius `ηT²/N² + 4ℜ`, floored at [`BETA_FLOOR`].
pub fn beta_default(b: &BoundInputs) -> f64 {
    let n = b.intervals as f64;
    (b.eta * b.total_time * b.total_time / (n * n) + 4.0 * b.magnus_remainder).max(BETA_FLOOR)
}

/// Second-order Magnus estimate `η·‖L‖_avg·(T/N)³` of the truncation error.
pub fn magnus_remainder_estimate(eta: f64, mean_generator_norm: f64, total_time: f64, intervals: usize) -> f64 {
    eta * mean_generator_norm * (total_time / intervals as f64).powi(3)
}

/// Matrix norms for comparing measured errors with the bounds, which hold
/// for some unspecified norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixNorm {
    #[default]
    Frobenius,
    /// Largest singular value.
    Spectral,
    /// Sum of singular values.
    Trace,
}

impl MatrixNorm {
    pub fn evaluate(self, m: MatRef<'_, c64>) -> f64 {
        match self {
            MatrixNorm::Frobenius => linalg::frob(m),
            MatrixNorm::Spectral => linalg::singular_values(m).first().copied().unwrap_or(0.0),
            MatrixNorm::Trace => linalg::singular_values(m).iter().sum(),
        }
    }
}

/// `‖Θ_p − exp L_p‖` for each interval.
pub fn theta_errors(thetas: &[TransferMatrix], lindbladians: &[TransferMatrix], norm: MatrixNorm) -> Vec<f64> {
    thetas
        .iter()
        .zip(lindbladians)
        .map(|(t, l)| norm.evaluate((t.entries() - l.exp().entries()).as_ref()))
        .collect()
}

/// `‖L_p − L_{p−1}‖` for consecutive generators.
pub fn consecutive_differences(lindbladians: &[TransferMatrix], norm: MatrixNorm) -> Vec<f64> {
    lindbladians
        .windows(2)
        .map(|w| norm.evaluate((w[1].entries() - w[0].entries()).as_ref()))
        .collect()
}
