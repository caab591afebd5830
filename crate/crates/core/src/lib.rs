//! Fitting time-dependent Markovian (Lindblad) dynamics to tomographic
//! snapshots of a quantum channel.
//!
//! Superoperators are stored as dense `d² × d²` complex matrices in the
//! elementary basis. A `d × d` operator `V` is vectorized row-major,
//! `v[j·d + k] = ⟨e_j|V|e_k⟩`, so the map `ρ ↦ AρB†` has transfer matrix
//! `A ⊗ B̄`. The Choi matrix of a transfer matrix is its image under the
//! Γ-involution (see [`chanrep::gamma_involution`]).
//!
//! The pipeline is:
//!
//! 1. [`fitter::compute_thetas`] turns snapshots `M_p` into inter-snapshot
//!    maps `Θ_p = M_p M_{p-1}^{-1}`.
//! 2. [`spectral`] decomposes each `Θ_p` and builds logarithm branches.
//! 3. [`projector::dykstra_nearest`] finds the closest generator satisfying
//!    the Lindblad conditions (and a Frobenius ball around the previous one).
//! 4. [`fitter::fit`] picks the branch with the smallest total distance.

pub mod bounds;
pub mod chanrep;
pub mod error;
pub mod fitter;
pub mod lindblad;
pub mod linalg;
pub mod projector;
pub mod simulator;
pub mod spectral;

pub use chanrep::{ChoiMatrix, TransferMatrix};
pub use error::{Error, Result};
pub use faer;
pub use faer::{c64, Mat};
pub use fitter::{FitConfig, FitResult, SnapshotSeries, Verdict};
pub use lindblad::{ConditionReport, GklsParams};
pub use projector::{ConstraintSpec, ProjectionResult};
pub use spectral::{BranchVector, SpectralDecomposition};
