//! Dense complex linear algebra shared by every other module: density
//! matrices, Hermitian eigendecomposition, partial traces, Schmidt forms,
//! local embeddings and seeded random sampling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_err, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Numerical tolerances used across the crate.
pub mod tol {
    pub const HERM: f64 = 1e-10;
    pub const UNIT: f64 = 1e-10;
    pub const PSD: f64 = 1e-10;
    pub const TRACE: f64 = 1e-10;
    pub const RECON: f64 = 1e-9;
    /// Relative to the spectral radius.
    pub const DEGEN: f64 = 1e-12;
}

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Pauli matrix `σ_k` for `k ∈ {1, 2, 3}` (x, y, z); `k = 0` gives the identity.
pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => identity(2),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |m_ij - conj(m_ji)|`, or infinity for non-square input.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(u.adjoint() * u - identity(u.nrows())))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix,
    /// Index groups whose eigenvalues agree within `tol::DEGEN` times the spectral radius.
    pub degeneracy_clusters: Vec<Vec<usize>>,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from descending eigenvalues and matching
    /// orthonormal eigenvector columns.
    pub fn from_sorted(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Self {
        let radius = eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let degeneracy_clusters = cluster_sorted(&eigenvalues, tol::DEGEN * radius);
        Self {
            eigenvalues,
            eigenvectors,
            degeneracy_clusters,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        v * real_diag(&self.eigenvalues) * v.adjoint()
    }

    /// `V† X V`: the matrix elements of `x` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * x * &self.eigenvectors
    }

    pub fn from_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        &self.eigenvectors * x * self.eigenvectors.adjoint()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, &l| a.max(l.abs()))
    }
}

pub fn spectral_decompose(h: &CMatrix) -> Result<SpectralDecomposition> {
    let defect = hermitian_defect(h);
    if defect > tol::HERM {
        return Err(Error::NonHermitian(defect));
    }
    Ok(decompose_hermitian(&hermitian_part(h)))
}

/// Eigendecomposition of an already-Hermitian matrix. Eigenvector phases are
/// fixed so that the largest-modulus component of each column is real positive.
pub(crate) fn decompose_hermitian(h: &CMatrix) -> SpectralDecomposition {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        let mut best = -1.0;
        for (i, z) in v.iter().enumerate() {
            if z.norm() > best {
                best = z.norm();
                pivot = i;
            }
        }
        let phase = if best > 0.0 { v[pivot].conj() / best } else { ONE };
        for i in 0..n {
            eigenvectors[(i, col)] = v[i] * phase;
        }
    }

    SpectralDecomposition::from_sorted(eigenvalues, eigenvectors)
}

fn cluster_sorted(values: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if (values[*last.last().unwrap()] - v).abs() <= gap => last.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

/// A validated quantum state: Hermitian, positive semidefinite, unit trace,
/// tagged with its subsystem dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, dims: &[usize]) -> Result<Self> {
        validate_density(matrix, dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            matrix: identity(d).scale(1.0 / d as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn from_pure(psi: &CVector, dims: &[usize]) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > tol::TRACE {
            return Err(Error::NotNormalized(norm));
        }
        validate_density(psi * psi.adjoint(), dims)
    }

    pub fn spectrum(&self) -> SpectralDecomposition {
        decompose_hermitian(&self.matrix)
    }

    /// `Tr[ρ X]`.
    pub fn expectation(&self, x: &CMatrix) -> Complex64 {
        trace_product(&self.matrix, x)
    }

    /// `U ρ U†` with the same subsystem tags.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(dim_err(format!(
                "unitary is {}x{}, state is {}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        validate_density(u * &self.matrix * u.adjoint(), &self.dims)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix {
            dims,
            matrix: kron(&self.matrix, &other.matrix),
        }
    }
}

/// Checks that `m` is a density matrix over subsystems `dims`.
///
/// Small asymmetries (below `tol::HERM`) are symmetrized away and negative
/// eigenvalues in `(-tol::PSD, 0)` are clipped to zero with renormalization.
pub fn validate_density(m: CMatrix, dims: &[usize]) -> Result<DensityMatrix> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(dim_err(format!("invalid subsystem dimensions {dims:?}")));
    }
    let total: usize = dims.iter().product();
    if m.nrows() != m.ncols() || m.nrows() != total {
        return Err(dim_err(format!(
            "matrix is {}x{} but dims {:?} require {}x{}",
            m.nrows(),
            m.ncols(),
            dims,
            total,
            total
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("non-finite matrix entry".into()));
    }
    let defect = hermitian_defect(&m);
    if defect > tol::HERM {
        return Err(Error::NonHermitian(defect));
    }
    let h = hermitian_part(&m);
    let trace: f64 = (0..total).map(|i| h[(i, i)].re).sum();
    if (trace - 1.0).abs() > tol::TRACE {
        return Err(Error::TraceMismatch(trace));
    }
    let spec = decompose_hermitian(&h);
    let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -tol::PSD {
        return Err(Error::NonPositive(min));
    }
    let matrix = if min < 0.0 {
        let clipped: Vec<f64> = spec.eigenvalues.iter().map(|&p| p.max(0.0)).collect();
        let sum: f64 = clipped.iter().sum();
        let p: Vec<f64> = clipped.iter().map(|&x| x / sum).collect();
        hermitian_part(&(&spec.eigenvectors * real_diag(&p) * spec.eigenvectors.adjoint()))
    } else {
        h
    };
    Ok(DensityMatrix {
        dims: dims.to_vec(),
        matrix,
    })
}

/// Partial trace of an arbitrary operator, keeping subsystems `keep` (in
/// ascending order).
pub fn partial_trace_op(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(dim_err(format!(
            "operator is {}x{}, dims {:?}",
            m.nrows(),
            m.ncols(),
            dims
        )));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.is_empty() || keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(dim_err(format!(
            "cannot keep subsystems {keep:?} of {} subsystems",
            dims.len()
        )));
    }
    let kept: Vec<bool> = (0..dims.len()).map(|k| keep_sorted.contains(&k)).collect();
    let dk: usize = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let dt = total / dk;

    // full[k * dt + t] = flat index of kept multi-index k and traced multi-index t
    let mut full = vec![0usize; total];
    let mut digits = vec![0usize; dims.len()];
    for flat in 0..total {
        let mut rem = flat;
        for s in (0..dims.len()).rev() {
            digits[s] = rem % dims[s];
            rem /= dims[s];
        }
        let (mut ki, mut ti) = (0usize, 0usize);
        for s in 0..dims.len() {
            if kept[s] {
                ki = ki * dims[s] + digits[s];
            } else {
                ti = ti * dims[s] + digits[s];
            }
        }
        full[ki * dt + ti] = flat;
    }

    let mut out = CMatrix::zeros(dk, dk);
    for r in 0..dk {
        for col in 0..dk {
            let mut acc = ZERO;
            for t in 0..dt {
                acc += m[(full[r * dt + t], full[col * dt + t])];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(out)
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_op(rho.matrix(), rho.dims(), keep)?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let dims: Vec<usize> = keep_sorted.iter().map(|&k| rho.dims()[k]).collect();
    validate_density(reduced, &dims)
}

/// `|ψ⟩ = Σ_i λ_i |e_i⟩ ⊗ |f_i⟩`.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    /// Descending, `min(d_A, d_B)` entries.
    pub coefficients: Vec<f64>,
    /// Columns `|e_i⟩`.
    pub left: CMatrix,
    /// Columns `|f_i⟩`.
    pub right: CMatrix,
}

impl SchmidtForm {
    pub fn reconstruct(&self) -> CVector {
        let mut psi = CVector::zeros(self.left.nrows() * self.right.nrows());
        for (i, &l) in self.coefficients.iter().enumerate() {
            let e = self.left.column(i).clone_owned();
            let f = self.right.column(i).clone_owned();
            psi += e.kronecker(&f) * c(l, 0.0);
        }
        psi
    }
}

pub fn schmidt_decompose(psi: &CVector, dims: [usize; 2]) -> Result<SchmidtForm> {
    let [da, db] = dims;
    if psi.len() != da * db {
        return Err(dim_err(format!(
            "vector of length {} does not match dims {:?}",
            psi.len(),
            dims
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > tol::TRACE {
        return Err(Error::NotNormalized(norm));
    }
    let amp = CMatrix::from_fn(da, db, |a, b| psi[a * db + b]);
    let svd = amp.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let k = da.min(db);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients = order.iter().map(|&i| svd.singular_values[i]).collect();
    let left = CMatrix::from_fn(da, k, |r, col| u[(r, order[col])]);
    // amp = U Σ V†, so |f_i⟩ has components (V†)_{i b}
    let right = CMatrix::from_fn(db, k, |r, col| v_t[(order[col], r)]);
    Ok(SchmidtForm {
        coefficients,
        left,
        right,
    })
}

/// Reproducible random stream: the same `(master_seed, stream_index)` always
/// yields the same draws, independent of the order streams are consumed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Complex Ginibre matrix with independent `N(0, 1/2) + i N(0, 1/2)` entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the phases of
/// `diag(R)` absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let z = ginibre(d, d, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniformly distributed unit vector in `C^d`.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let g = ginibre(d, 1, rng).column(0).clone_owned();
    let n = g.norm();
    g.unscale(n)
}

/// Hilbert-Schmidt random state `G G† / Tr(G G†)`.
pub fn random_density_hs<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let g = ginibre(d, d, rng);
    normalized_gram(&g, dims)
}

/// Bures random state `(1+U) G G† (1+U)† / Tr(...)` with Haar `U`.
pub fn random_density_bures<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let g = ginibre(d, d, rng);
    let u = haar_unitary(d, rng);
    normalized_gram(&((identity(d) + u) * g), dims)
}

fn normalized_gram(a: &CMatrix, dims: &[usize]) -> DensityMatrix {
    let gram = a * a.adjoint();
    let tr: f64 = (0..gram.nrows()).map(|i| gram[(i, i)].re).sum();
    DensityMatrix {
        dims: dims.to_vec(),
        matrix: hermitian_part(&gram.unscale(tr)),
    }
}

/// Which party of a bipartite system an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// `I ⊗ … ⊗ o ⊗ … ⊗ I` with `o` on subsystem `index`.
pub fn embed_at(o: &CMatrix, index: usize, dims: &[usize]) -> Result<CMatrix> {
    if index >= dims.len() {
        return Err(dim_err(format!("no subsystem {index} in dims {dims:?}")));
    }
    if o.nrows() != dims[index] || o.ncols() != dims[index] {
        return Err(dim_err(format!(
            "operator is {}x{} but subsystem {} has dimension {}",
            o.nrows(),
            o.ncols(),
            index,
            dims[index]
        )));
    }
    let before: usize = dims[..index].iter().product();
    let after: usize = dims[index + 1..].iter().product();
    Ok(kron(&kron(&identity(before), o), &identity(after)))
}

pub fn embed_local(o: &CMatrix, side: Side, dims: &[usize]) -> Result<CMatrix> {
    embed_at(o, side.index(), dims)
}
