//! Log-barrier interior-point solver for the nearest-Lindbladian program,
//! used as a reference for the alternating-projection solver.
//!
//! The variable lives in real coordinates of the hermitian matrices with
//! vanishing partial trace. The conic constraint enters as
//! `−log det(V†XV)` for an orthonormal basis `V` of the complement of `|ω⟩`,
//! the optional ball as `−log(β² − ‖X − C‖²)`. Newton steps are solved with
//! a hand-written Cholesky factorization, so no library decomposition is
//! shared with the code under test.

#![allow(dead_code)]

use markovfit::{c64, Mat};

type RVec = Vec<f64>;

pub struct BarrierOptions {
    pub final_gap: f64,
    pub growth: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { final_gap: 1e-13, growth: 8.0, max_newton: 200 }
    }
}

pub struct BarrierSolution {
    pub point: Mat<c64>,
    pub duality_gap: f64,
    pub newton_steps: usize,
}

struct Program {
    d: usize,
    n: usize,
    /// Orthonormal hermitian basis of the feasible subspace.
    dirs: Vec<Mat<c64>>,
    /// Their compressions `V†BV`.
    compressed: Vec<Mat<c64>>,
    perp: Mat<c64>,
}

fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

fn hermitian_basis(n: usize) -> Vec<Mat<c64>> {
    let s = 0.5f64.sqrt();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        out.push(Mat::from_fn(n, n, |a, b| if a == j && b == j { re(1.0) } else { re(0.0) }));
    }
    for j in 0..n {
        for k in j + 1..n {
            out.push(Mat::from_fn(n, n, |a, b| if (a, b) == (j, k) || (a, b) == (k, j) { re(s) } else { re(0.0) }));
            out.push(Mat::from_fn(n, n, |a, b| {
                if (a, b) == (j, k) {
                    c64::new(0.0, -s)
                } else if (a, b) == (k, j) {
                    c64::new(0.0, s)
                } else {
                    re(0.0)
                }
            }));
        }
    }
    out
}

fn inner(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)].conj() * b[(i, j)]).re;
        }
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram–Schmidt with one re-orthogonalization pass; returns the vectors of
/// `candidates` that add a new direction, normalized.
fn orthonormalize(fixed: &[RVec], candidates: &[RVec]) -> Vec<RVec> {
    let mut basis: Vec<RVec> = fixed.to_vec();
    let start = basis.len();
    for c in candidates {
        let mut v = c.clone();
        for _ in 0..2 {
            for b in &basis {
                let p = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis.split_off(start)
}

fn partial_trace_first(x: &Mat<c64>, d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |k, m| (0..d).map(|a| x[(a * d + k, a * d + m)]).sum())
}

impl Program {
    fn new(d: usize) -> Self {
        let n = d * d;
        let full = hermitian_basis(n);
        let small = hermitian_basis(d);
        // rows of the partial-trace map in the full coordinates
        let rows: Vec<RVec> = small
            .iter()
            .map(|s| full.iter().map(|b| inner(s, &partial_trace_first(b, d))).collect())
            .collect();
        let row_space = orthonormalize(&[], &rows);
        let unit: Vec<RVec> = (0..n * n)
            .map(|k| (0..n * n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let null = orthonormalize(&row_space, &unit);
        let dirs: Vec<Mat<c64>> = null
            .iter()
            .map(|coef| {
                Mat::from_fn(n, n, |i, j| {
                    coef.iter().zip(&full).map(|(c, b)| b[(i, j)] * *c).sum::<c64>()
                })
            })
            .collect();

        let w = 1.0 / (d as f64).sqrt();
        let comp: Vec<RVec> = (0..n)
            .map(|col| {
                (0..2 * n)
                    .map(|i| {
                        // real embedding of the column of 𝟙 − |ω⟩⟨ω|
                        let (row, part) = (i % n, i / n);
                        let diag = |r: usize| r % (d + 1) == 0;
                        let v = if row == col { 1.0 } else { 0.0 } - if diag(row) && diag(col) { w * w } else { 0.0 };
                        if part == 0 { v } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let perp_real = orthonormalize(&[], &comp);
        assert_eq!(perp_real.len(), n - 1);
        let perp = Mat::from_fn(n, n - 1, |i, j| re(perp_real[j][i]));
        let compressed = dirs.iter().map(|b| &(perp.adjoint() * b) * &perp).collect();
        Self { d, n, dirs, compressed, perp }
    }

    fn coords(&self, x: &Mat<c64>) -> RVec {
        self.dirs.iter().map(|b| inner(b, x)).collect()
    }

    fn point(&self, base: &Mat<c64>, z: &[f64]) -> Mat<c64> {
        Mat::from_fn(self.n, self.n, |i, j| {
            base[(i, j)] + z.iter().zip(&self.dirs).map(|(c, b)| b[(i, j)] * *c).sum::<c64>()
        })
    }
}

/// Lower-triangular complex Cholesky factor, or `None` if not positive
/// definite.
fn cholesky_c(a: &Mat<c64>) -> Option<Vec<Vec<c64>>> {
    let n = a.nrows();
    let mut l = vec![vec![re(0.0); n]; n];
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[j][k].norm_sqr();
        }
        if !(diag > 0.0) {
            return None;
        }
        let ljj = diag.sqrt();
        l[j][j] = re(ljj);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / ljj;
        }
    }
    Some(l)
}

fn inverse_from_cholesky(l: &[Vec<c64>]) -> Mat<c64> {
    let n = l.len();
    let mut inv = Mat::zeros(n, n);
    for col in 0..n {
        // L y = e_col, then L† x = y
        let mut y = vec![re(0.0); n];
        for i in 0..n {
            let mut s = if i == col { re(1.0) } else { re(0.0) };
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x = vec![re(0.0); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k][i].conj() * x[k];
            }
            x[i] = s / l[i][i];
        }
        for i in 0..n {
            inv[(i, col)] = x[i];
        }
    }
    inv
}

fn cholesky_solve_r(h: &[RVec], g: &[f64]) -> Option<RVec> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut diag = h[j][j];
        for k in 0..j {
            diag -= l[j][k] * l[j][k];
        }
        if !(diag > 0.0) {
            return None;
        }
        l[j][j] = diag.sqrt();
        for i in j + 1..n {
            let mut s = h[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (g[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

struct State<'a> {
    prog: &'a Program,
    base: Mat<c64>,
    target_z: RVec,
    ball: Option<(RVec, f64)>,
}

impl State<'_> {
    /// Barrier value, or `None` outside the domain.
    fn barrier(&self, z: &[f64]) -> Option<f64> {
        let x = self.prog.point(&self.base, z);
        let s = &(self.prog.perp.adjoint() * &x) * &self.prog.perp;
        let l = cholesky_c(&s)?;
        let mut val = -2.0 * l.iter().enumerate().map(|(i, r)| r[i].re.ln()).sum::<f64>();
        if let Some((c, beta)) = &self.ball {
            let q = beta * beta - z.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            if !(q > 0.0) {
                return None;
            }
            val -= q.ln();
        }
        Some(val)
    }

    fn objective(&self, z: &[f64], t: f64) -> Option<f64> {
        let b = self.barrier(z)?;
        let f: f64 = z.iter().zip(&self.target_z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
        Some(t * f + b)
    }

    fn gradient_hessian(&self, z: &[f64], t: f64) -> (RVec, Vec<RVec>) {
        let m = z.len();
        let x = self.prog.point(&self.base, z);
        let s = &(self.prog.perp.adjoint() * &x) * &self.prog.perp;
        let inv = inverse_from_cholesky(&cholesky_c(&s).expect("iterate left the domain"));
        let zc: Vec<Mat<c64>> = self.prog.compressed.iter().map(|c| &inv * c).collect();
        let mut g: RVec = (0..m).map(|k| t * (z[k] - self.target_z[k])).collect();
        let mut h = vec![vec![0.0; m]; m];
        for k in 0..m {
            let mut tr = re(0.0);
            for i in 0..zc[k].nrows() {
                tr += zc[k][(i, i)];
            }
            g[k] -= tr.re;
            h[k][k] += t;
            for l in 0..=k {
                let mut acc = 0.0;
                for i in 0..zc[k].nrows() {
                    for j in 0..zc[k].nrows() {
                        acc += (zc[k][(i, j)] * zc[l][(j, i)]).re;
                    }
                }
                h[k][l] += acc;
                if l != k {
                    h[l][k] += acc;
                }
            }
        }
        if let Some((c, beta)) = &self.ball {
            let diff: RVec = z.iter().zip(c).map(|(a, b)| a - b).collect();
            let q = beta * beta - dot(&diff, &diff);
            for k in 0..m {
                g[k] += 2.0 * diff[k] / q;
                h[k][k] += 2.0 / q;
                for l in 0..m {
                    h[k][l] += 4.0 * diff[k] * diff[l] / (q * q);
                }
            }
        }
        (g, h)
    }
}

/// Minimizes `‖X − herm(target)‖_F` over the Lindbladian cone (and the ball
/// `‖X − center‖_F ≤ β` when given). `start` must be strictly feasible.
pub fn nearest_lindbladian(
    target: &Mat<c64>,
    d: usize,
    ball: Option<(&Mat<c64>, f64)>,
    start: &Mat<c64>,
    opts: &BarrierOptions,
) -> BarrierSolution {
    let prog = Program::new(d);
    let n = prog.n;
    let herm = Mat::from_fn(n, n, |i, j| (target[(i, j)] + target[(j, i)].conj()) * 0.5);
    // coordinates relative to the start point
    let base = start.clone();
    let target_z: RVec = prog.coords(&(&herm - &base));
    let ball = ball.map(|(c, beta)| (prog.coords(&(c - &base)), beta));
    let state = State { prog: &prog, base, target_z, ball };
    let m = prog.dirs.len();
    let n_barrier = (n - 1) as f64 + if state.ball.is_some() { 1.0 } else { 0.0 };

    let mut z = vec![0.0; m];
    assert!(state.barrier(&z).is_some(), "start point is not strictly feasible");
    let mut t = 1.0;
    let mut steps = 0;
    loop {
        for _ in 0..opts.max_newton {
            let (g, h) = state.gradient_hessian(&z, t);
            let dir = cholesky_solve_r(&h, &g).expect("barrier Hessian lost definiteness");
            let decrement = dot(&g, &dir);
            if decrement * 0.5 <= 1e-14 {
                break;
            }
            steps += 1;
            let f0 = state.objective(&z, t).expect("feasible iterate");
            let mut s = 1.0;
            loop {
                let trial: RVec = z.iter().zip(&dir).map(|(a, b)| a - s * b).collect();
                if let Some(f) = state.objective(&trial, t) {
                    if f <= f0 - 0.25 * s * decrement {
                        z = trial;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-20 {
                    break;
                }
            }
            if s < 1e-20 {
                break;
            }
        }
        let gap = n_barrier / t;
        if gap <= opts.final_gap {
            return BarrierSolution { point: prog.point(&state.base, &z), duality_gap: gap, newton_steps: steps };
        }
        t *= opts.growth;
    }
}

/// A strictly feasible point: the depolarizing generator's Choi matrix
/// `𝟙/d − d|ω⟩⟨ω|`, scaled by `s` and shifted by `shift`.
pub fn interior_point(d: usize, shift: Option<&Mat<c64>>, s: f64) -> Mat<c64> {
    let n = d * d;
    let diag = |r: usize| r % (d + 1) == 0;
    let dep = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 / d as f64 } else { 0.0 };
        let w = if diag(i) && diag(j) { 1.0 } else { 0.0 };
        re(s * (id - w))
    });
    match shift {
        Some(c) => c + &dep,
        None => dep,
    }
}
