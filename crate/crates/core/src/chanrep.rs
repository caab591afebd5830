//! Transfer-matrix and Choi representations of superoperators.
//!
//! Row index `(j, k)` and column index `(ℓ, m)` of a transfer matrix are
//! flattened as `j·d + k` and `ℓ·d + m`; the entry at `((j,k),(ℓ,m))` is
//! `Tr[|e_k⟩⟨e_j| 𝒞(|e_ℓ⟩⟨e_m|)] = ⟨e_j|𝒞(|e_ℓ⟩⟨e_m|)|e_k⟩`.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};

fn check_side(rows: usize, cols: usize, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dimension must be positive".into()));
    }
    let side = dim * dim;
    if rows != side || cols != side {
        return Err(Error::InvalidDimension(format!(
            "expected {side}×{side} matrix for d = {dim}, got {rows}×{cols}"
        )));
    }
    Ok(())
}

/// A superoperator in the elementary-basis (natural) representation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    dim: usize,
    entries: Mat<c64>,
}

/// A superoperator in Choi representation, `τ = C^Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    entries: Mat<c64>,
}

macro_rules! superop_common {
    ($t:ty) => {
        impl $t {
            pub fn new(dim: usize, entries: Mat<c64>) -> Result<Self> {
                check_side(entries.nrows(), entries.ncols(), dim)?;
                Ok(Self { dim, entries })
            }

            /// Infers `d` from the side length `d²`.
            pub fn from_square(entries: Mat<c64>) -> Result<Self> {
                let dim = dim_from_side(entries.nrows())?;
                Self::new(dim, entries)
            }

            pub fn zeros(dim: usize) -> Self {
                Self { dim, entries: linalg::zeros(dim * dim, dim * dim) }
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn entries(&self) -> MatRef<'_, c64> {
                self.entries.as_ref()
            }

            pub fn into_entries(self) -> Mat<c64> {
                self.entries
            }

            pub fn frob(&self) -> f64 {
                linalg::frob(self.entries.as_ref())
            }

            pub fn distance(&self, other: &Self) -> f64 {
                linalg::frob_dist(self.entries.as_ref(), other.entries.as_ref())
            }
        }
    };
}

superop_common!(TransferMatrix);
superop_common!(ChoiMatrix);

impl TransferMatrix {
    pub fn identity(dim: usize) -> Self {
        Self { dim, entries: linalg::identity(dim * dim) }
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        ChoiMatrix { dim: self.dim, entries: gamma_unchecked(self.entries.as_ref(), self.dim) }
    }

    /// Applies the map to a `d × d` operator.
    pub fn apply(&self, op: MatRef<'_, c64>) -> Mat<c64> {
        let v = vectorize(op);
        unvectorize(&linalg::matvec(self.entries.as_ref(), &v), self.dim)
    }

    pub fn compose(&self, first: &TransferMatrix) -> TransferMatrix {
        TransferMatrix { dim: self.dim, entries: &self.entries * &first.entries }
    }

    pub fn exp(&self) -> TransferMatrix {
        TransferMatrix { dim: self.dim, entries: linalg::expm(self.entries.as_ref()) }
    }
}

impl ChoiMatrix {
    pub fn to_transfer(&self) -> TransferMatrix {
        TransferMatrix { dim: self.dim, entries: gamma_unchecked(self.entries.as_ref(), self.dim) }
    }
}

pub(crate) fn dim_from_side(side: usize) -> Result<usize> {
    let d = (side as f64).sqrt().round() as usize;
    if d == 0 || d * d != side {
        return Err(Error::InvalidDimension(format!("side {side} is not a perfect square")));
    }
    Ok(d)
}

fn gamma_unchecked(a: MatRef<'_, c64>, d: usize) -> Mat<c64> {
    // B[(j,ℓ),(k,m)] = A[(j,k),(ℓ,m)]
    Mat::from_fn(d * d, d * d, |row, col| {
        let (j, l) = (row / d, row % d);
        let (k, m) = (col / d, col % d);
        a[(j * d + k, l * d + m)]
    })
}

/// The Γ-involution `|e_j,e_k⟩⟨e_ℓ,e_m| ↦ |e_j,e_ℓ⟩⟨e_k,e_m|`.
pub fn gamma_involution(a: MatRef<'_, c64>, d: usize) -> Result<Mat<c64>> {
    check_side(a.nrows(), a.ncols(), d)?;
    Ok(gamma_unchecked(a, d))
}

/// `|ω⟩ = Σ_j |e_j,e_j⟩ / √d`.
pub fn omega_vector(d: usize) -> Vec<c64> {
    let amp = c64::new(1.0 / (d as f64).sqrt(), 0.0);
    (0..d * d).map(|i| if i / d == i % d { amp } else { ZERO }).collect()
}

/// `ω⊥ = 𝟙 − |ω⟩⟨ω|`.
pub fn omega_perp(d: usize) -> Mat<c64> {
    let w = omega_vector(d);
    let mut p = linalg::outer(&w, &w);
    for i in 0..d * d {
        for j in 0..d * d {
            p[(i, j)] = if i == j { ONE } else { ZERO } - p[(i, j)];
        }
    }
    p
}

/// Orthonormal basis of the range of `ω⊥` as columns (`d² × (d² − 1)`).
///
/// Off-diagonal pairs `|e_j,e_k⟩` (j ≠ k) come first, followed by the
/// Helmert vectors `(Σ_{j<k} |e_j,e_j⟩ − k|e_k,e_k⟩)/√(k(k+1))`.
pub fn omega_perp_basis(d: usize) -> Mat<c64> {
    let n = d * d;
    let mut basis = linalg::zeros(n, n - 1);
    let mut col = 0;
    for j in 0..d {
        for k in 0..d {
            if j != k {
                basis[(j * d + k, col)] = ONE;
                col += 1;
            }
        }
    }
    for k in 1..d {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for j in 0..k {
            basis[(j * d + j, col)] = c64::new(1.0 / norm, 0.0);
        }
        basis[(k * d + k, col)] = c64::new(-(k as f64) / norm, 0.0);
        col += 1;
    }
    debug_assert_eq!(col, n - 1);
    basis
}

/// The flip `𝔽|e_j,e_k⟩ = |e_k,e_j⟩`.
pub fn flip_operator(d: usize) -> Mat<c64> {
    Mat::from_fn(d * d, d * d, |row, col| {
        let (j, k) = (col / d, col % d);
        if row == k * d + j {
            ONE
        } else {
            ZERO
        }
    })
}

/// `(Tr₁X)[k,m] = Σ_a X[(a,k),(a,m)]`.
pub fn partial_trace_first_raw(x: MatRef<'_, c64>, d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |k, m| (0..d).map(|a| x[(a * d + k, a * d + m)]).sum())
}

pub fn partial_trace_first(x: &ChoiMatrix) -> Mat<c64> {
    partial_trace_first_raw(x.entries(), x.dim())
}

/// `‖C^Γ − (C^Γ)†‖_F`, zero exactly when the map is hermiticity preserving.
pub fn hermiticity_preserving_residual(c: &TransferMatrix) -> f64 {
    let x = c.to_choi();
    anti_hermitian_norm(x.entries())
}

pub(crate) fn anti_hermitian_norm(x: MatRef<'_, c64>) -> f64 {
    let n = x.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (x[(i, j)] - x[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Row-major vectorization `v[j·d + k] = V[j,k]`.
pub fn vectorize(op: MatRef<'_, c64>) -> Vec<c64> {
    let d = op.nrows();
    (0..d * d).map(|i| op[(i / d, i % d)]).collect()
}

pub fn unvectorize(v: &[c64], d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |j, k| v[j * d + k])
}

/// Transfer matrix `A ⊗ B̄` of `ρ ↦ AρB†`.
pub fn sandwich(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    linalg::kron(a, linalg::conj(b).as_ref())
}

/// Transfer matrix of a channel with Kraus operators `{K_i}`.
pub fn kraus_channel(kraus: &[Mat<c64>]) -> Result<TransferMatrix> {
    let d = kraus
        .first()
        .map(|k| k.nrows())
        .ok_or_else(|| Error::InvalidParameter("empty Kraus list".into()))?;
    let mut acc = linalg::zeros(d * d, d * d);
    for k in kraus {
        if k.nrows() != d || k.ncols() != d {
            return Err(Error::InvalidDimension("Kraus operators must be d×d".into()));
        }
        acc = &acc + &sandwich(k.as_ref(), k.as_ref());
    }
    TransferMatrix::new(d, acc)
}
