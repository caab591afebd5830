//! Generators in GKLS form and the three Lindbladian conditions.
//!
//! Sign convention: the Hamiltonian part is `−i[H, ρ]` (equal to `i[ρ, H]`).

use faer::{c64, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chanrep::{self, ChoiMatrix, TransferMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, I, ONE, ZERO};

/// Default tolerance for exact (synthetic) data.
pub const DEFAULT_CONDITION_TOL: f64 = 1e-8;

/// Hamiltonian plus rate-weighted jump operators.
#[derive(Debug, Clone, PartialEq)]
pub struct GklsParams {
    pub dim: usize,
    pub hamiltonian: Mat<c64>,
    pub jumps: Vec<(Mat<c64>, f64)>,
}

impl GklsParams {
    pub fn new(hamiltonian: Mat<c64>, jumps: Vec<(Mat<c64>, f64)>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        let params = Self { dim, hamiltonian, jumps };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 || self.hamiltonian.nrows() != d || self.hamiltonian.ncols() != d {
            return Err(Error::InvalidDimension("hamiltonian must be d×d".into()));
        }
        let anti = chanrep::anti_hermitian_norm(self.hamiltonian.as_ref());
        if anti > 1e-12 * (1.0 + linalg::frob(self.hamiltonian.as_ref())) {
            return Err(Error::InvalidParameter(format!(
                "hamiltonian is not hermitian (residual {anti:.3e})"
            )));
        }
        for (idx, (jump, rate)) in self.jumps.iter().enumerate() {
            if jump.nrows() != d || jump.ncols() != d {
                return Err(Error::InvalidDimension(format!("jump {idx} must be d×d")));
            }
            if !(*rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "rate of jump {idx} must be a finite nonnegative number, got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Residuals of the conditions (i) X hermitian, (ii) ω⊥Xω⊥ ⪰ 0,
/// (iii) Tr₁X = 0 on a Choi-form generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub hermiticity_residual: f64,
    pub ccp_min_eigenvalue: f64,
    pub trace_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl ConditionReport {
    fn new(hermiticity_residual: f64, ccp_min_eigenvalue: f64, trace_residual: f64, tol: f64) -> Self {
        let passed = hermiticity_residual <= tol
            && ccp_min_eigenvalue >= -tol
            && trace_residual <= tol;
        Self { hermiticity_residual, ccp_min_eigenvalue, trace_residual, tol, passed }
    }

    /// Re-evaluates `passed` under another tolerance.
    pub fn passes(&self, tol: f64) -> bool {
        Self::new(self.hermiticity_residual, self.ccp_min_eigenvalue, self.trace_residual, tol).passed
    }
}

/// Transfer matrix of the GKLS generator
/// `−i(H⊗𝟙 − 𝟙⊗H̄) + Σ γ (J⊗J̄ − ½(J†J⊗𝟙 + 𝟙⊗(J†J)ᵀ))`.
pub fn gkls_to_transfer(params: &GklsParams) -> Result<TransferMatrix> {
    params.validate()?;
    let d = params.dim;
    let id = linalg::identity(d);
    let h = params.hamiltonian.as_ref();
    let mut gen = &linalg::kron(h, id.as_ref()) - &linalg::kron(id.as_ref(), linalg::conj(h).as_ref());
    gen = linalg::scale(gen.as_ref(), -I);
    for (jump, rate) in &params.jumps {
        gen = &gen + &dissipator(jump.as_ref(), *rate);
    }
    TransferMatrix::new(d, gen)
}

/// `γ (J⊗J̄ − ½(J†J⊗𝟙 + 𝟙⊗(J†J)ᵀ))`.
pub fn dissipator(jump: MatRef<'_, c64>, rate: f64) -> Mat<c64> {
    let d = jump.nrows();
    let id = linalg::identity(d);
    let jdj = jump.adjoint() * jump;
    let sandwich = chanrep::sandwich(jump, jump);
    let left = linalg::kron(jdj.as_ref(), id.as_ref());
    let right = linalg::kron(id.as_ref(), jdj.transpose());
    Mat::from_fn(d * d, d * d, |i, j| {
        (sandwich[(i, j)] - (left[(i, j)] + right[(i, j)]) * 0.5) * rate
    })
}

/// Residuals of the three Lindbladian conditions on `X`.
pub fn check_lindblad_conditions(x: &ChoiMatrix, tol: f64) -> ConditionReport {
    let d = x.dim();
    let hermiticity = chanrep::anti_hermitian_norm(x.entries());
    let wp = chanrep::omega_perp(d);
    let compressed = &(&wp * x.entries()) * &wp;
    let ccp_min = linalg::hermitian_eigenvalues(compressed.as_ref())
        .first()
        .copied()
        .unwrap_or(0.0);
    let trace = linalg::entrywise_l1(chanrep::partial_trace_first(x).as_ref());
    ConditionReport::new(hermiticity, ccp_min, trace, tol)
}

/// Complete positivity and trace preservation residuals of a channel:
/// minimum Choi eigenvalue and `‖Tr₁τ − 𝟙‖₁`.
pub fn channel_residuals(c: &TransferMatrix) -> (f64, f64) {
    let choi = c.to_choi();
    let min_eig = linalg::hermitian_eigenvalues(choi.entries())[0];
    let mut tr = chanrep::partial_trace_first(&choi);
    for k in 0..c.dim() {
        tr[(k, k)] -= ONE;
    }
    (min_eig, linalg::entrywise_l1(tr.as_ref()))
}

/// Random generator for tests and simulation, deterministic in `seed`.
///
/// `H = (A + A†)/2` with complex-normal `A`, jumps have complex-normal
/// entries and rates are uniform in `[0, rate_scale]`.
pub fn random_gkls(d: usize, n_jumps: usize, rate_scale: f64, seed: u64) -> Result<GklsParams> {
    if d < 2 {
        return Err(Error::InvalidDimension("random_gkls needs d ≥ 2".into()));
    }
    if !(rate_scale >= 0.0) {
        return Err(Error::InvalidParameter("rate_scale must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = complex_normal(d, &mut rng);
    let hamiltonian = linalg::hermitian_part(a.as_ref());
    let jumps = (0..n_jumps)
        .map(|_| {
            let j = complex_normal(d, &mut rng);
            let rate = rate_scale * rng.random::<f64>();
            (j, rate)
        })
        .collect();
    GklsParams::new(hamiltonian, jumps)
}

fn complex_normal(d: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    Mat::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn pauli_x() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn pauli_y() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    })
}

pub fn pauli_z() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => ONE,
        (1, 1) => -ONE,
        _ => ZERO,
    })
}

/// `|0⟩⟨1|`.
pub fn sigma_minus() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { ONE } else { ZERO })
}
