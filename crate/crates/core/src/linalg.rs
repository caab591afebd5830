//! Dense complex matrix helpers on top of `faer`.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat, MatRef, Side};

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn identity(n: usize) -> Mat<c64> {
    Mat::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> Mat<c64> {
    Mat::zeros(n, m)
}

/// Frobenius norm.
pub fn frob(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

/// Frobenius distance `‖a − b‖_F`.
pub fn frob_dist(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Entrywise 1-norm `Σ |m_jk|`.
pub fn entrywise_l1(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm();
        }
    }
    acc
}

/// Induced 1-norm (maximum absolute column sum).
pub fn induced_l1(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Real inner product `Re Tr[a† b]`.
pub fn inner_re(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)].conj() * b[(i, j)]).re;
        }
    }
    acc
}

pub fn adjoint(m: MatRef<'_, c64>) -> Mat<c64> {
    m.adjoint().to_owned()
}

pub fn conj(m: MatRef<'_, c64>) -> Mat<c64> {
    m.conjugate().to_owned()
}

pub fn transpose(m: MatRef<'_, c64>) -> Mat<c64> {
    m.transpose().to_owned()
}

pub fn scale(m: MatRef<'_, c64>, k: c64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| k * m[(i, j)])
}

pub fn scale_re(m: MatRef<'_, c64>, k: f64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * k)
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Kronecker product `a ⊗ b` with row index `i_a · rows(b) + i_b`.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    Mat::from_fn(ra * rb, ca * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &[c64], v: &[c64]) -> Mat<c64> {
    Mat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

pub fn column(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn row(m: MatRef<'_, c64>, i: usize) -> Vec<c64> {
    (0..m.ncols()).map(|j| m[(i, j)]).collect()
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matvec(m: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn inverse(m: MatRef<'_, c64>) -> Mat<c64> {
    m.partial_piv_lu().inverse()
}

/// Solves `a x = b`.
pub fn solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    a.partial_piv_lu().solve(b)
}

/// Singular values in non-increasing order.
pub fn singular_values(m: MatRef<'_, c64>) -> Vec<f64> {
    let mut sv = m
        .singular_values()
        .expect("singular value decomposition did not converge");
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectral condition number; infinite for numerically singular input.
pub fn condition_number(m: MatRef<'_, c64>) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Eigendecomposition of a hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvectors as columns. Only the lower triangle is read.
pub fn hermitian_eig(m: MatRef<'_, c64>) -> (Vec<f64>, Mat<c64>) {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigendecomposition did not converge");
    let s = evd.S().column_vector();
    let vals: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let u = evd.U().to_owned();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = order.iter().map(|&k| vals[k]).collect();
    let sorted_vecs = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, order[j])]);
    (sorted_vals, sorted_vecs)
}

/// Ascending eigenvalues of the hermitian part of `m`.
pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Vec<f64> {
    hermitian_eig(hermitian_part(m).as_ref()).0
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

fn lincomb(terms: &[(f64, &Mat<c64>)], n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| {
        terms
            .iter()
            .map(|(k, m)| m[(i, j)] * *k)
            .sum::<c64>()
    })
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: MatRef<'_, c64>) -> Mat<c64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return zeros(0, 0);
    }
    let norm = induced_l1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scale_re(a, 0.5f64.powi(squarings));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_tail = lincomb(
        &[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)],
        n,
    );
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);

    let v_inner = lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v_tail = lincomb(
        &[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)],
        n,
    );
    let v = &(&a6 * &v_inner) + &v_tail;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(q.as_ref(), p.as_ref());
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
