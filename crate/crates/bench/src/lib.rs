//! Fixtures shared by the benchmarks.

use markovfit::lindblad::{gkls_to_transfer, random_gkls};
use markovfit::linalg;
use markovfit::simulator::{self, GeneratorTrajectory, NoiseSpec};
use markovfit::{ChoiMatrix, SnapshotSeries, TransferMatrix};

/// Random generator rescaled to Frobenius norm `norm`.
pub fn generator(d: usize, norm: f64, seed: u64) -> TransferMatrix {
    let l = gkls_to_transfer(&random_gkls(d, 2, 1.0, seed).expect("valid parameters")).expect("valid generator");
    let k = norm / l.frob();
    TransferMatrix::new(d, linalg::scale_re(l.entries(), k)).expect("same shape")
}

/// A generator perturbed off the Lindbladian set, as a projection target.
pub fn perturbed_target(d: usize, seed: u64) -> ChoiMatrix {
    let l = generator(d, 1.0, seed).to_choi();
    let noise = generator(d, 0.5, seed ^ 0x5a5a).to_choi();
    ChoiMatrix::new(d, l.entries() - noise.entries()).expect("same shape")
}

/// Snapshots of a linear drift between two random generators.
pub fn linear_series(d: usize, n: usize, seed: u64) -> SnapshotSeries {
    let traj = GeneratorTrajectory::linear(generator(d, 1.0, seed), generator(d, 1.0, seed + 1), 1.0)
        .expect("endpoints are Lindbladians");
    simulator::emit_snapshots(&traj, n, 1.0, None, &NoiseSpec::none()).expect("valid series")
}
