//! Time-dependent Markovian dynamics from products of short-time
//! exponentials, snapshot emission and entrywise tomographic noise.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chanrep::TransferMatrix;
use crate::error::{Error, Result};
use crate::fitter::SnapshotSeries;
use crate::lindblad;
use crate::linalg;

/// Tolerance at which trajectory endpoints must be Lindbladians.
pub const ENDPOINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryKind {
    Constant(TransferMatrix),
    /// `L(t) = (1 − t/T)·start + (t/T)·end` on `[0, T]`.
    Linear { start: TransferMatrix, end: TransferMatrix },
    /// `segments[k] = (end_k, L_k)`: `L(t) = L_k` on `[end_{k−1}, end_k)`.
    Piecewise(Vec<(f64, TransferMatrix)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorTrajectory {
    dim: usize,
    kind: TrajectoryKind,
    horizon: f64,
    lipschitz_eta: f64,
}

fn check_generator(l: &TransferMatrix, what: &str) -> Result<()> {
    let report = lindblad::check_lindblad_conditions(&l.to_choi(), ENDPOINT_TOL);
    if !report.passed {
        return Err(Error::InvalidParameter(format!(
            "{what} is not a Lindbladian (hermiticity {:.2e}, CCP min eigenvalue {:.2e}, trace {:.2e})",
            report.hermiticity_residual, report.ccp_min_eigenvalue, report.trace_residual
        )));
    }
    Ok(())
}

fn check_horizon(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time horizon must be positive, got {t}")))
    }
}

impl GeneratorTrajectory {
    pub fn constant(l: TransferMatrix, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        check_generator(&l, "generator")?;
        Ok(Self { dim: l.dim(), kind: TrajectoryKind::Constant(l), horizon, lipschitz_eta: 0.0 })
    }

    pub fn linear(start: TransferMatrix, end: TransferMatrix, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if start.dim() != end.dim() {
            return Err(Error::InvalidDimension(format!(
                "endpoint dimensions differ: {} and {}",
                start.dim(),
                end.dim()
            )));
        }
        check_generator(&start, "start generator")?;
        check_generator(&end, "end generator")?;
        let eta = start.distance(&end) / horizon;
        Ok(Self { dim: start.dim(), kind: TrajectoryKind::Linear { start, end }, horizon, lipschitz_eta: eta })
    }

    /// Linear trajectory from `start` moving along the Lindbladian
    /// `direction` at Frobenius speed `eta`. The end point is a positive
    /// combination of two Lindbladians, hence a Lindbladian.
    pub fn linear_drift(start: TransferMatrix, direction: &TransferMatrix, eta: f64, horizon: f64) -> Result<Self> {
        check_generator(direction, "drift direction")?;
        let norm = direction.frob();
        if !(eta >= 0.0 && eta.is_finite()) || norm == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "drift needs eta ≥ 0 and a nonzero direction (eta {eta}, ‖direction‖ {norm})"
            )));
        }
        let k = eta * horizon / norm;
        let end = TransferMatrix::new(start.dim(), start.entries() + &linalg::scale_re(direction.entries(), k))?;
        Self::linear(start, end, horizon)
    }

    pub fn piecewise(segments: Vec<(f64, TransferMatrix)>) -> Result<Self> {
        let Some((horizon, first)) = segments.last().map(|(t, _)| *t).zip(segments.first().map(|s| s.1.dim())) else {
            return Err(Error::InvalidParameter("piecewise trajectory needs a segment".into()));
        };
        check_horizon(horizon)?;
        let mut prev_end = 0.0;
        for (k, (end, l)) in segments.iter().enumerate() {
            if !(*end > prev_end) {
                return Err(Error::InvalidParameter(format!("segment end times must increase (segment {k})")));
            }
            if l.dim() != first {
                return Err(Error::InvalidDimension(format!("segment {k} has dimension {}", l.dim())));
            }
            check_generator(l, &format!("segment {k} generator"))?;
            prev_end = *end;
        }
        let jumps = segments.windows(2).any(|w| w[0].1 != w[1].1);
        let eta = if jumps { f64::INFINITY } else { 0.0 };
        Ok(Self { dim: first, kind: TrajectoryKind::Piecewise(segments), horizon, lipschitz_eta: eta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &TrajectoryKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Exact Lipschitz constant: `‖end − start‖_F / T` for linear paths,
    /// zero for constants, infinite for piecewise schedules with jumps.
    pub fn lipschitz_eta(&self) -> f64 {
        self.lipschitz_eta
    }

    /// `L(t)`, with `t` clamped to `[0, T]`.
    pub fn generator_at(&self, t: f64) -> TransferMatrix {
        let t = t.clamp(0.0, self.horizon);
        match &self.kind {
            TrajectoryKind::Constant(l) => l.clone(),
            TrajectoryKind::Linear { start, end } => {
                let s = t / self.horizon;
                let (a, b) = (start.entries(), end.entries());
                let m = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (1.0 - s) + b[(i, j)] * s);
                TransferMatrix::new(self.dim, m).expect("shape preserved")
            }
            TrajectoryKind::Piecewise(segs) => {
                let k = segs.iter().position(|(end, _)| t < *end).unwrap_or(segs.len() - 1);
                segs[k].1.clone()
            }
        }
    }

    /// Time-averaged generator norm `‖L‖_F` over `[0, T]` (midpoint rule).
    pub fn mean_generator_norm(&self, samples: usize) -> f64 {
        let n = samples.max(1);
        (0..n)
            .map(|k| self.generator_at((k as f64 + 0.5) * self.horizon / n as f64).frob())
            .sum::<f64>()
            / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub map: TransferMatrix,
    pub steps: usize,
    /// Set when `dt` covers the whole span, so only one step was taken.
    pub single_step: bool,
}

/// Number of grid steps covering `span` with step `dt`; the last one may be
/// shorter. Spans within a relative 1e−9 of a multiple of `dt` are not
/// given a sliver step.
pub fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt - 1e-9).ceil() as usize).max(1)
}

/// `Π_{j=n}^{1} exp(L(t_j*)·h_j)` with midpoint samples `t_j*` on the grid
/// `t1, t1 + dt, …` clipped at `t2`.
pub fn propagate(traj: &GeneratorTrajectory, t1: f64, t2: f64, dt: f64) -> Result<Propagation> {
    if !(t1.is_finite() && t2.is_finite() && t1 < t2) {
        return Err(Error::InvalidParameter(format!("need t1 < t2, got [{t1}, {t2}]")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let span = t2 - t1;
    let steps = step_count(span, dt);
    let n = traj.dim * traj.dim;
    let mut acc = linalg::identity(n);
    for j in 0..steps {
        let a = t1 + j as f64 * dt;
        let b = if j + 1 == steps { t2 } else { t1 + (j + 1) as f64 * dt };
        let l = traj.generator_at(0.5 * (a + b));
        let factor = linalg::expm(linalg::scale_re(l.entries(), b - a).as_ref());
        acc = &factor * &acc;
    }
    Ok(Propagation { map: TransferMatrix::new(traj.dim, acc)?, steps, single_step: dt >= span })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    #[default]
    None,
    /// Independent `N(0, σ²)` on the real and imaginary part of every
    /// transfer-matrix entry; the result is not re-projected onto channels.
    AdditiveEntrywise,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub scale: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn additive(scale: f64, seed: u64) -> Self {
        Self { scale, mode: NoiseMode::AdditiveEntrywise, seed }
    }
}

/// Snapshots `M_p = Φ(0, pT/N)` with noise added afterwards. `dt` defaults
/// to `T/(1000·N)`. Snapshots are built incrementally,
/// `M_p = Φ((p−1)T/N, pT/N)·M_{p−1}`, on a grid shared by all intervals.
pub fn emit_snapshots(
    traj: &GeneratorTrajectory,
    n: usize,
    total_time: f64,
    dt: Option<f64>,
    noise: &NoiseSpec,
) -> Result<SnapshotSeries> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one snapshot".into()));
    }
    check_horizon(total_time)?;
    if !(noise.scale >= 0.0 && noise.scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise scale must be nonnegative, got {}", noise.scale)));
    }
    let dt = dt.unwrap_or(total_time / (1000.0 * n as f64));
    let times: Vec<f64> = (1..=n).map(|p| p as f64 * total_time / n as f64).collect();
    let mut exact = Vec::with_capacity(n);
    let mut current = TransferMatrix::identity(traj.dim);
    let mut prev_t = 0.0;
    for &t in &times {
        let step = propagate(traj, prev_t, t, dt)?;
        current = step.map.compose(&current);
        exact.push(current.clone());
        prev_t = t;
    }
    let noisy = match noise.mode {
        NoiseMode::None => exact,
        NoiseMode::AdditiveEntrywise => {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            let normal = Normal::new(0.0, noise.scale).expect("validated scale");
            exact
                .into_iter()
                .map(|m| {
                    let e = m.entries();
                    let noisy = Mat::from_fn(e.nrows(), e.ncols(), |i, j| {
                        e[(i, j)] + faer::c64::new(normal.sample(&mut rng), normal.sample(&mut rng))
                    });
                    TransferMatrix::new(traj.dim, noisy).expect("shape preserved")
                })
                .collect()
        }
    };
    SnapshotSeries::with_times(traj.dim, noisy, times)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub eta: f64,
    /// A sampled difference failed to shrink under refinement, which
    /// indicates a discontinuity.
    pub discontinuous: bool,
}

/// Largest finite-difference slope `‖L(t_{i+1}) − L(t_i)‖_F / (t_{i+1} − t_i)`
/// over `n_samples` uniform points on `[0, T]`.
pub fn measure_lipschitz(traj: &GeneratorTrajectory, n_samples: usize) -> Result<LipschitzEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let h = traj.horizon / (n_samples - 1) as f64;
    let samples: Vec<TransferMatrix> = (0..n_samples).map(|i| traj.generator_at(i as f64 * h)).collect();
    let mut eta: f64 = 0.0;
    let mut discontinuous = false;
    for (i, w) in samples.windows(2).enumerate() {
        let diff = w[0].distance(&w[1]);
        eta = eta.max(diff / h);
        if diff > 1e-12 * (1.0 + w[0].frob()) {
            let mid = traj.generator_at((i as f64 + 0.5) * h);
            let half = w[0].distance(&mid).max(mid.distance(&w[1]));
            if half > 0.75 * diff {
                discontinuous = true;
            }
        }
    }
    Ok(LipschitzEstimate { eta, discontinuous })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{gkls_to_transfer, random_gkls, GklsParams};
    use crate::linalg::frob_dist;

    fn random_l(d: usize, seed: u64) -> TransferMatrix {
        gkls_to_transfer(&random_gkls(d, 2, 0.5, seed).unwrap()).unwrap()
    }

    fn diag_dephasing(rate: f64, omega: f64) -> TransferMatrix {
        let h = linalg::scale_re(lindblad::pauli_z().as_ref(), omega / 2.0);
        gkls_to_transfer(&GklsParams::new(h, vec![(lindblad::pauli_z(), rate)]).unwrap()).unwrap()
    }

    #[test]
    fn constant_matches_exponential() {
        let l = random_l(2, 1);
        let traj = GeneratorTrajectory::constant(l.clone(), 2.0).unwrap();
        let want = linalg::expm(linalg::scale_re(l.entries(), 1.3).as_ref());
        for dt in [0.01, 0.3, 5.0] {
            let p = propagate(&traj, 0.2, 1.5, dt).unwrap();
            assert!(frob_dist(p.map.entries(), want.as_ref()) < 1e-12, "dt {dt}");
            assert_eq!(p.single_step, dt >= 1.3);
        }
    }

    #[test]
    fn commuting_linear_path_closed_form() {
        let a = diag_dephasing(0.2, 1.0);
        let b = diag_dephasing(0.7, -0.5);
        let traj = GeneratorTrajectory::linear(a.clone(), b.clone(), 1.0).unwrap();
        // ∫₀¹ L = (A + B)/2
        let avg = linalg::scale_re((a.entries() + b.entries()).as_ref(), 0.5);
        let want = linalg::expm(avg.as_ref());
        let got = propagate(&traj, 0.0, 1.0, 0.013).unwrap();
        assert!(frob_dist(got.map.entries(), want.as_ref()) < 1e-12);
    }

    #[test]
    fn step_halving_converges() {
        let traj = GeneratorTrajectory::linear(random_l(2, 3), random_l(2, 4), 1.0).unwrap();
        let coarse = propagate(&traj, 0.0, 1.0, 0.1).unwrap().map;
        let mid = propagate(&traj, 0.0, 1.0, 0.05).unwrap().map;
        let fine = propagate(&traj, 0.0, 1.0, 0.025).unwrap().map;
        let e1 = coarse.distance(&mid);
        let e2 = mid.distance(&fine);
        assert!(e1 <= 0.1 && e2 <= 0.5 * e1, "{e1} {e2}");
    }

    #[test]
    fn propagation_is_a_channel() {
        let traj = GeneratorTrajectory::linear(random_l(3, 5), random_l(3, 6), 2.0).unwrap();
        let p = propagate(&traj, 0.0, 2.0, 0.01).unwrap();
        let (min_eig, trace) = lindblad::channel_residuals(&p.map);
        assert!(min_eig >= -1e-9 && trace <= 1e-9);
    }

    #[test]
    fn snapshots_are_divisible() {
        let traj = GeneratorTrajectory::linear(random_l(2, 7), random_l(2, 8), 1.0).unwrap();
        let s = emit_snapshots(&traj, 4, 1.0, None, &NoiseSpec::none()).unwrap();
        let dt = 1.0 / 4000.0;
        for p in 1..4 {
            let step = propagate(&traj, p as f64 / 4.0, (p + 1) as f64 / 4.0, dt).unwrap().map;
            let composed = step.compose(&s.snapshots()[p - 1]);
            assert!(composed.distance(&s.snapshots()[p]) < 1e-10);
        }
        let single = emit_snapshots(&traj, 1, 1.0, None, &NoiseSpec::none()).unwrap();
        let whole = propagate(&traj, 0.0, 1.0, 1e-3).unwrap().map;
        assert!(single.snapshots()[0].distance(&whole) < 1e-12);
    }

    #[test]
    fn noise_is_seeded() {
        let traj = GeneratorTrajectory::constant(random_l(2, 9), 1.0).unwrap();
        let clean = emit_snapshots(&traj, 2, 1.0, Some(0.01), &NoiseSpec::none()).unwrap();
        let a = emit_snapshots(&traj, 2, 1.0, Some(0.01), &NoiseSpec::additive(1e-3, 5)).unwrap();
        let b = emit_snapshots(&traj, 2, 1.0, Some(0.01), &NoiseSpec::additive(1e-3, 5)).unwrap();
        let c = emit_snapshots(&traj, 2, 1.0, Some(0.01), &NoiseSpec::additive(1e-3, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let dev = a.snapshots()[0].distance(&clean.snapshots()[0]);
        // 32 real Gaussians of variance σ²
        assert!(dev > 1e-4 && dev < 2e-2, "{dev}");
    }

    #[test]
    fn lipschitz_measurements() {
        let l = random_l(2, 10);
        let c = GeneratorTrajectory::constant(l.clone(), 1.0).unwrap();
        assert_eq!(measure_lipschitz(&c, 10).unwrap().eta, 0.0);

        let b = random_l(2, 11);
        let lin = GeneratorTrajectory::linear(l.clone(), b.clone(), 2.0).unwrap();
        let est = measure_lipschitz(&lin, 7).unwrap();
        assert!((est.eta - l.distance(&b) / 2.0).abs() < 1e-12);
        assert!(!est.discontinuous);
        assert!((lin.lipschitz_eta() - est.eta).abs() < 1e-12);

        let pw = GeneratorTrajectory::piecewise(vec![(0.5, l.clone()), (1.0, b.clone())]).unwrap();
        let coarse = measure_lipschitz(&pw, 10).unwrap();
        let fine = measure_lipschitz(&pw, 100).unwrap();
        assert!(coarse.discontinuous && fine.discontinuous);
        assert!(fine.eta > 5.0 * coarse.eta);
        assert!(pw.lipschitz_eta().is_infinite());
    }

    #[test]
    fn drift_endpoint_and_speed() {
        let a = random_l(2, 12);
        let dir = random_l(2, 13);
        let traj = GeneratorTrajectory::linear_drift(a.clone(), &dir, 0.3, 1.0).unwrap();
        assert!((traj.lipschitz_eta() - 0.3).abs() < 1e-12);
        for t in [0.0, 0.37, 1.0] {
            let rep = lindblad::check_lindblad_conditions(&traj.generator_at(t).to_choi(), 1e-10);
            assert!(rep.passed);
        }
    }

    #[test]
    fn invalid_inputs() {
        let l = random_l(2, 14);
        let traj = GeneratorTrajectory::constant(l.clone(), 1.0).unwrap();
        assert!(propagate(&traj, 1.0, 0.5, 0.1).is_err());
        assert!(propagate(&traj, 0.0, 0.5, 0.0).is_err());
        assert!(emit_snapshots(&traj, 0, 1.0, None, &NoiseSpec::none()).is_err());
        assert!(emit_snapshots(&traj, 2, 1.0, None, &NoiseSpec::additive(-1.0, 0)).is_err());
        let bad = TransferMatrix::new(2, linalg::identity(4)).unwrap();
        assert!(GeneratorTrajectory::constant(bad, 1.0).is_err());
        assert!(GeneratorTrajectory::piecewise(vec![]).is_err());
        assert_eq!(step_count(1.0, 0.25), 4);
        assert_eq!(step_count(1.0, 0.3), 4);
    }
}
