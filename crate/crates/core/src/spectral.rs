//! Eigendecomposition of general complex matrices, the principal matrix
//! logarithm and its branches.
//!
//! A decomposition groups eigenvalues closer than `cluster_tol` into
//! clusters. Each cluster owns a basis of its invariant subspace (the
//! eigenvector for singletons, an orthonormal basis otherwise) and the
//! compressed block of the matrix on that subspace. Logarithms are taken
//! block-wise, so exact or near degeneracies and even Jordan blocks inside a
//! cluster are handled without individual eigenvectors.
//!
//! For a hermiticity-preserving matrix the antiunitary `K v = 𝔽 v̄` maps the
//! eigenspace of `λ` onto the eigenspace of `λ̄`. Mirror clusters are given
//! `K`-related bases so that symmetric branch shifts keep the logarithm
//! hermiticity preserving.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::chanrep;
use crate::error::{Error, Result};
use crate::linalg::{self, ONE};

/// Relative threshold below which an eigenvalue counts as zero.
const ZERO_EIGENVALUE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Absolute clustering radius; `None` means `1e-6·‖M‖_F`.
    pub cluster_tol: Option<f64>,
    /// Largest accepted condition number of the eigenvector matrix.
    pub condition_cap: f64,
    /// Relative hermiticity-preservation residual below which mirror bases
    /// are enforced.
    pub hp_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { cluster_tol: None, condition_cap: 1e10, hp_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// `λ` and `λ̄` in mirror clusters; symmetric shifts are `m' = −m`.
    Conjugate,
    /// Two members of a negative real cluster, both with principal
    /// logarithm `ln|λ| + iπ`; symmetric shifts are `m' = −1 − m`.
    BranchCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConjugatePair {
    pub upper: usize,
    pub lower: usize,
    pub kind: PairKind,
}

impl ConjugatePair {
    /// Branch indices `(m_upper, m_lower)` for slot value `t`.
    pub fn shifts(&self, t: i64) -> (i64, i64) {
        match self.kind {
            PairKind::Conjugate => (t, -t),
            PairKind::BranchCut => match t {
                0 => (0, 0),
                t if t < 0 => (t, -1 - t),
                t => (t - 1, -t),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cluster {
    members: Vec<usize>,
    center: c64,
    real: bool,
    block: Mat<c64>,
}

/// Biorthogonal spectral data of a diagonalizable (up to clusters) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<c64>,
    right: Mat<c64>,
    left: Mat<c64>,
    cluster_ids: Vec<usize>,
    clusters: Vec<Cluster>,
    pairs: Vec<ConjugatePair>,
    branch_cut: Vec<usize>,
    hermiticity_preserving: bool,
    condition: f64,
    cluster_tol: f64,
    scale: f64,
}

/// Principal logarithm with the indices of eigenvalues on the negative
/// real axis, where `Log λ = ln|λ| + iπ` was used.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalLog {
    pub matrix: Mat<c64>,
    pub branch_cut: Vec<usize>,
}

impl PrincipalLog {
    pub fn on_branch_cut(&self) -> bool {
        !self.branch_cut.is_empty()
    }
}

/// Integer shifts `m̄` of the logarithm branch, one per eigenvalue.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchVector {
    pub indices: Vec<i64>,
    pub pairs: Vec<ConjugatePair>,
}

impl BranchVector {
    pub fn zero(s: &SpectralDecomposition) -> Self {
        Self { indices: vec![0; s.len()], pairs: s.pairs.clone() }
    }

    /// Expands one slot value per conjugate pair into a full index vector.
    /// Slots beyond the number of pairs are ignored; missing slots are zero.
    pub fn from_slots(s: &SpectralDecomposition, slots: &[i64]) -> Self {
        let mut indices = vec![0; s.len()];
        for (pair, &t) in s.pairs.iter().zip(slots) {
            let (a, b) = pair.shifts(t);
            indices[pair.upper] = a;
            indices[pair.lower] = b;
        }
        Self { indices, pairs: s.pairs.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.indices.iter().all(|&m| m == 0)
    }

    /// Whether the index vector respects the pairing rules: unpaired
    /// eigenvalues are unshifted and each pair uses its symmetric relation.
    pub fn is_symmetric(&self) -> bool {
        let mut paired = vec![false; self.indices.len()];
        for p in &self.pairs {
            paired[p.upper] = true;
            paired[p.lower] = true;
            let (a, b) = (self.indices[p.upper], self.indices[p.lower]);
            let ok = match p.kind {
                PairKind::Conjugate => b == -a,
                PairKind::BranchCut => (a, b) == (0, 0) || b == -1 - a,
            };
            if !ok {
                return false;
            }
        }
        self.indices.iter().zip(&paired).all(|(&m, &p)| p || m == 0)
    }
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    /// Right vectors `r_j` as columns.
    pub fn right_vectors(&self) -> MatRef<'_, c64> {
        self.right.as_ref()
    }

    /// Left vectors as rows `⟨ℓ_j|`, so that `left · right = 𝟙`.
    pub fn left_rows(&self) -> MatRef<'_, c64> {
        self.left.as_ref()
    }

    pub fn right_vector(&self, j: usize) -> Vec<c64> {
        linalg::column(self.right.as_ref(), j)
    }

    /// The ket `|ℓ_j⟩`.
    pub fn left_vector(&self, j: usize) -> Vec<c64> {
        linalg::row(self.left.as_ref(), j).into_iter().map(|z| z.conj()).collect()
    }

    /// `|r_j⟩⟨ℓ_j|`.
    pub fn projector(&self, j: usize) -> Mat<c64> {
        let n = self.len();
        Mat::from_fn(n, n, |a, b| self.right[(a, j)] * self.left[(j, b)])
    }

    pub fn cluster_ids(&self) -> &[usize] {
        &self.cluster_ids
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_members(&self, cluster: usize) -> &[usize] {
        &self.clusters[cluster].members
    }

    pub fn pairs(&self) -> &[ConjugatePair] {
        &self.pairs
    }

    pub fn branch_cut_indices(&self) -> &[usize] {
        &self.branch_cut
    }

    pub fn is_hermiticity_preserving(&self) -> bool {
        self.hermiticity_preserving
    }

    /// Condition number of the right-vector matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// `Σ_c R_c B_c L_c`, equal to the input matrix.
    pub fn reconstruct(&self) -> Mat<c64> {
        self.block_function(|c| c.block.clone())
    }

    /// `Σ_j λ_j |r_j⟩⟨ℓ_j|`; equals [`Self::reconstruct`] unless a cluster
    /// block is not diagonal.
    pub fn reconstruct_diagonal(&self) -> Mat<c64> {
        let n = self.len();
        let scaled = Mat::from_fn(n, n, |a, j| self.right[(a, j)] * self.eigenvalues[j]);
        &scaled * &self.left
    }

    fn block_function(&self, f: impl Fn(&Cluster) -> Mat<c64>) -> Mat<c64> {
        let n = self.len();
        let mut inner = linalg::zeros(n, n);
        for c in &self.clusters {
            let fb = f(c);
            for (a, &i) in c.members.iter().enumerate() {
                for (b, &j) in c.members.iter().enumerate() {
                    inner[(i, j)] = fb[(a, b)];
                }
            }
        }
        &(&self.right * &inner) * &self.left
    }
}

/// `K v = 𝔽 v̄`.
fn antiunitary(v: &[c64], d: usize) -> Vec<c64> {
    (0..d * d).map(|i| v[(i % d) * d + i / d].conj()).collect()
}

fn normalized(mut v: Vec<c64>) -> Vec<c64> {
    let n = linalg::vec_norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    v
}

fn columns_to_mat(cols: &[Vec<c64>], n: usize) -> Mat<c64> {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

fn min_singular_value(cols: &[Vec<c64>], n: usize) -> f64 {
    let m = columns_to_mat(cols, n);
    linalg::singular_values(m.as_ref()).last().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the null space of `Π_{λ∈cluster}(M − λ𝟙)`.
fn invariant_subspace(m: MatRef<'_, c64>, values: &[c64]) -> Vec<Vec<c64>> {
    let n = m.nrows();
    let mut poly = linalg::identity(n);
    for &lam in values {
        let mut shifted = m.to_owned();
        for i in 0..n {
            shifted[(i, i)] -= lam;
        }
        poly = &shifted * &poly;
    }
    let svd = poly.svd().expect("singular value decomposition did not converge");
    let v = svd.V();
    let k = values.len();
    (n - k..n).map(|j| linalg::column(v, j)).collect()
}

/// Greedy `K`-paired basis `[v₁, Kv₁, v₂, Kv₂, …]` of a `K`-invariant
/// subspace, or `None` when no well-conditioned pairing is found.
fn k_paired_basis(q: &[Vec<c64>], d: usize) -> Option<Vec<Vec<c64>>> {
    let n = d * d;
    let k = q.len();
    let mut candidates: Vec<Vec<c64>> = q.to_vec();
    for a in 0..k {
        for b in a + 1..k {
            candidates.push(q[a].iter().zip(&q[b]).map(|(x, y)| x + y).collect());
            candidates.push(q[a].iter().zip(&q[b]).map(|(x, y)| x + y * linalg::I).collect());
        }
    }
    let candidates: Vec<Vec<c64>> = candidates.into_iter().map(normalized).collect();
    let mut chosen: Vec<Vec<c64>> = Vec::with_capacity(k);
    for _ in 0..k / 2 {
        let mut best: Option<(f64, Vec<c64>)> = None;
        for v in &candidates {
            let kv = antiunitary(v, d);
            let mut trial = chosen.clone();
            trial.push(v.clone());
            trial.push(kv);
            let s = min_singular_value(&trial, n);
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, v.clone()));
            }
        }
        let (s, v) = best?;
        if s < 1e-6 {
            return None;
        }
        let kv = antiunitary(&v, d);
        chosen.push(v);
        chosen.push(kv);
    }
    if k % 2 == 1 {
        let mut best: Option<(f64, Vec<c64>)> = None;
        for v in &candidates {
            let mut trial = chosen.clone();
            trial.push(v.clone());
            let s = min_singular_value(&trial, n);
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, v.clone()));
            }
        }
        let (s, v) = best?;
        if s < 1e-6 {
            return None;
        }
        chosen.push(v);
    }
    Some(chosen)
}

fn single_linkage(values: &[c64], tol: f64) -> Vec<usize> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    let mut root_ids = std::collections::HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let id = *root_ids.entry(r).or_insert_with(|| {
            next += 1;
            next - 1
        });
        ids[i] = id;
    }
    ids
}

/// Decomposes `m` with default options.
pub fn decompose(m: MatRef<'_, c64>, cluster_tol: Option<f64>) -> Result<SpectralDecomposition> {
    decompose_with(m, &SpectralOptions { cluster_tol, ..SpectralOptions::default() })
}

pub fn decompose_with(m: MatRef<'_, c64>, opts: &SpectralOptions) -> Result<SpectralDecomposition> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidDimension(format!(
            "expected a nonempty square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if (0..n).any(|j| (0..n).any(|i| !m[(i, j)].re.is_finite() || !m[(i, j)].im.is_finite())) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let scale = linalg::frob(m);
    let tol = opts.cluster_tol.unwrap_or(1e-6 * scale);

    let evd = m.eigen().map_err(|_| Error::NonDiagonalizable { condition: f64::INFINITY })?;
    let s = evd.S().column_vector();
    let raw_vals: Vec<c64> = (0..n).map(|i| s[i]).collect();
    let raw_vecs = evd.U().to_owned();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        raw_vals[b]
            .re
            .total_cmp(&raw_vals[a].re)
            .then(raw_vals[b].im.total_cmp(&raw_vals[a].im))
    });
    let mut eigenvalues: Vec<c64> = order.iter().map(|&k| raw_vals[k]).collect();
    let eigvecs: Vec<Vec<c64>> = order
        .iter()
        .map(|&k| normalized(linalg::column(raw_vecs.as_ref(), k)))
        .collect();

    let cluster_ids = single_linkage(&eigenvalues, tol);
    let n_clusters = cluster_ids.iter().max().map_or(0, |m| m + 1);
    let mut clusters: Vec<Cluster> = (0..n_clusters)
        .map(|c| {
            let members: Vec<usize> = (0..n).filter(|&j| cluster_ids[j] == c).collect();
            let center = members.iter().map(|&j| eigenvalues[j]).sum::<c64>() / members.len() as f64;
            let real = center.im.abs() <= tol;
            Cluster { members, center, real, block: Mat::zeros(0, 0) }
        })
        .collect();

    let mut basis: Vec<Vec<c64>> = eigvecs.clone();
    for c in &clusters {
        if c.members.len() > 1 {
            let values: Vec<c64> = c.members.iter().map(|&j| eigenvalues[j]).collect();
            let q = invariant_subspace(m, &values);
            for (&j, v) in c.members.iter().zip(q) {
                basis[j] = v;
            }
        }
    }

    // Mirror clusters: mutual nearest neighbours under conjugation.
    let nearest_mirror = |c: usize, want_upper: bool| -> Option<usize> {
        let target = clusters[c].center.conj();
        (0..clusters.len())
            .filter(|&o| {
                !clusters[o].real
                    && (clusters[o].center.im > 0.0) == want_upper
                    && clusters[o].members.len() == clusters[c].members.len()
            })
            .min_by(|&a, &b| {
                (clusters[a].center - target)
                    .norm()
                    .total_cmp(&(clusters[b].center - target).norm())
            })
    };
    let mut mirrors: Vec<(usize, usize)> = Vec::new();
    for c in 0..clusters.len() {
        if clusters[c].real || clusters[c].center.im < 0.0 {
            continue;
        }
        if let Some(o) = nearest_mirror(c, false) {
            if nearest_mirror(o, true) == Some(c) {
                mirrors.push((c, o));
            }
        }
    }

    let dim = chanrep::dim_from_side(n).ok();
    let hermiticity_preserving = match dim {
        Some(d) => {
            let res = chanrep::anti_hermitian_norm(chanrep::gamma_involution(m, d)?.as_ref());
            res <= opts.hp_tol * scale.max(1.0)
        }
        None => false,
    };

    let mut pairs = Vec::new();
    for &(c, o) in &mirrors {
        let (up, lo) = (&clusters[c].members, &clusters[o].members);
        if let (true, Some(d)) = (hermiticity_preserving, dim) {
            for (&j, &jj) in up.iter().zip(lo) {
                basis[jj] = antiunitary(&basis[j], d);
                eigenvalues[jj] = eigenvalues[j].conj();
            }
        }
        for (&j, &jj) in up.iter().zip(lo) {
            pairs.push(ConjugatePair { upper: j, lower: jj, kind: PairKind::Conjugate });
        }
    }

    let mut branch_cut = Vec::new();
    for c in &clusters {
        if !(c.real && c.center.re < 0.0) {
            continue;
        }
        branch_cut.extend_from_slice(&c.members);
        if c.members.len() < 2 {
            continue;
        }
        if let (true, Some(d)) = (hermiticity_preserving, dim) {
            let q: Vec<Vec<c64>> = c.members.iter().map(|&j| basis[j].clone()).collect();
            if let Some(paired) = k_paired_basis(&q, d) {
                for (&j, v) in c.members.iter().zip(paired) {
                    basis[j] = v;
                }
            }
        }
        for chunk in c.members.chunks_exact(2) {
            pairs.push(ConjugatePair { upper: chunk[0], lower: chunk[1], kind: PairKind::BranchCut });
        }
    }
    pairs.sort_by(|a, b| {
        eigenvalues[b.upper]
            .arg()
            .total_cmp(&eigenvalues[a.upper].arg())
            .then(a.upper.cmp(&b.upper))
    });
    branch_cut.sort_unstable();

    let right = columns_to_mat(&basis, n);
    let condition = linalg::condition_number(right.as_ref());
    if !(condition <= opts.condition_cap) {
        return Err(Error::NonDiagonalizable { condition });
    }
    let left = linalg::inverse(right.as_ref());

    let compressed = &(&left * m) * &right;
    for c in &mut clusters {
        let k = c.members.len();
        c.block = Mat::from_fn(k, k, |a, b| compressed[(c.members[a], c.members[b])]);
        if c.real {
            c.center = c64::new(c.center.re, 0.0);
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        right,
        left,
        cluster_ids,
        clusters,
        pairs,
        branch_cut,
        hermiticity_preserving,
        condition,
        cluster_tol: tol,
        scale,
    })
}

/// Scalar logarithm with `Log(−x) = ln x + iπ` on the negative real axis.
fn scalar_log(z: c64, on_cut: bool) -> c64 {
    if on_cut {
        c64::new(z.norm().ln(), PI)
    } else {
        z.ln()
    }
}

/// `log(B)` for a block whose spectrum clusters around `center`.
fn block_log(block: &Mat<c64>, center: c64, on_cut: bool) -> Mat<c64> {
    let k = block.nrows();
    if k == 1 {
        let mut out = linalg::zeros(1, 1);
        out[(0, 0)] = scalar_log(block[(0, 0)], on_cut);
        return out;
    }
    // log B = Log(μ)𝟙 + log(𝟙 + N), N = (B − μ𝟙)/μ
    let mut n = block.clone();
    for i in 0..k {
        n[(i, i)] -= center;
    }
    let n = linalg::scale(n.as_ref(), ONE / center);
    let mut out = linalg::identity(k);
    out = linalg::scale(out.as_ref(), scalar_log(center, on_cut));
    let mut power = n.clone();
    for term in 1..=200 {
        let sign = if term % 2 == 1 { 1.0 } else { -1.0 };
        let contrib = linalg::scale_re(power.as_ref(), sign / term as f64);
        out = &out + &contrib;
        if linalg::frob(contrib.as_ref()) <= 1e-17 * (1.0 + linalg::frob(out.as_ref())) {
            break;
        }
        power = &power * &n;
    }
    out
}

/// `L₀ = Σ_j Log(λ_j)|r_j⟩⟨ℓ_j|`, evaluated cluster-wise.
pub fn principal_log(s: &SpectralDecomposition) -> Result<PrincipalLog> {
    let floor = ZERO_EIGENVALUE_TOL * s.scale.max(1.0);
    if let Some(z) = s.eigenvalues.iter().find(|z| z.norm() <= floor) {
        return Err(Error::SingularChannel { modulus: z.norm() });
    }
    let matrix = s.block_function(|c| {
        let on_cut = c.real && c.center.re < 0.0;
        block_log(&c.block, c.center, on_cut)
    });
    Ok(PrincipalLog { matrix, branch_cut: s.branch_cut.clone() })
}

/// `L_m̄ = L₀ + 2πi Σ_j m_j |r_j⟩⟨ℓ_j|`.
pub fn branch_log(l0: MatRef<'_, c64>, s: &SpectralDecomposition, m: &BranchVector) -> Result<Mat<c64>> {
    let n = s.len();
    if m.indices.len() != n || l0.nrows() != n || l0.ncols() != n {
        return Err(Error::InvalidDimension(format!(
            "branch vector of length {} for a spectrum of size {n}",
            m.indices.len()
        )));
    }
    if m.is_zero() {
        return Ok(l0.to_owned());
    }
    let two_pi_i = c64::new(0.0, 2.0 * PI);
    let scaled = Mat::from_fn(n, n, |a, j| s.right[(a, j)] * (two_pi_i * m.indices[j] as f64));
    let shift = &scaled * &s.left;
    Ok(&l0 + &shift)
}

/// All symmetric branch vectors with entries in `[−m_max, m_max]`, sorted
/// lexicographically.
pub fn enumerate_branches(s: &SpectralDecomposition, m_max: u32) -> Vec<BranchVector> {
    let mut out: Vec<BranchVector> = slot_vectors(s.pairs.len(), m_max)
        .into_iter()
        .map(|slots| BranchVector::from_slots(s, &slots))
        .collect();
    out.sort_by(|a, b| a.indices.cmp(&b.indices));
    out.dedup_by(|a, b| a.indices == b.indices);
    out
}

/// Every vector in `[−m_max, m_max]^len`, in lexicographic order.
pub fn slot_vectors(len: usize, m_max: u32) -> Vec<Vec<i64>> {
    let m = m_max as i64;
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-m..=m).map(move |t| {
                    let mut v = prefix.clone();
                    v.push(t);
                    v
                })
            })
            .collect();
    }
    out
}
