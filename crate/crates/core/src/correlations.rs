//! Skew informations, covariances and metric-adjusted f-correlations.
//!
//! All spectral functionals are evaluated in the eigenbasis of the state:
//! observables are rotated once, then combined with a [`WeightTable`].

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{dim_err, Error, Result};
use crate::fops::{build_weight_table, FOpSpec, WeightTable};
use crate::hermitian::{
    self, embed_at, hermitian_defect, hermitian_part, identity, pauli, tol, CMatrix,
    DensityMatrix, Side, SpectralDecomposition, ZERO,
};

/// A Hermitian operator, optionally carrying the spectrum it was built with.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    declared_spectrum: Option<Vec<f64>>,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let defect = hermitian_defect(&matrix);
        if defect > tol::HERM {
            return Err(Error::NonHermitian(defect));
        }
        Ok(Self {
            matrix: hermitian_part(&matrix),
            declared_spectrum: None,
        })
    }

    /// Checks that the eigenvalues of `matrix` match `spectrum` as multisets.
    pub fn with_spectrum(matrix: CMatrix, spectrum: Vec<f64>) -> Result<Self> {
        let mut obs = Self::new(matrix)?;
        if spectrum.len() != obs.dim() {
            return Err(dim_err(format!(
                "declared {} eigenvalues for a {}-dimensional observable",
                spectrum.len(),
                obs.dim()
            )));
        }
        let actual = hermitian::decompose_hermitian(&obs.matrix).eigenvalues;
        let mut declared = spectrum.clone();
        declared.sort_by(|a, b| b.total_cmp(a));
        let scale = declared.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let worst = actual
            .iter()
            .zip(&declared)
            .fold(0.0f64, |m, (a, d)| m.max((a - d).abs()));
        // eigen-solver noise on a matrix assembled from a spectrum is ~1e-15
        if worst > 100.0 * tol::DEGEN * scale {
            return Err(Error::Domain(format!(
                "eigenvalues differ from the declared spectrum by {worst:.3e}"
            )));
        }
        obs.declared_spectrum = Some(spectrum);
        Ok(obs)
    }

    /// `U diag(spectrum) U†`.
    pub fn from_spectrum(basis: &CMatrix, spectrum: &[f64]) -> Self {
        let m = hermitian_part(&(basis * hermitian::real_diag(spectrum) * basis.adjoint()));
        Self {
            matrix: m,
            declared_spectrum: Some(spectrum.to_vec()),
        }
    }

    pub fn pauli(k: usize) -> Self {
        let spectrum = if k == 0 { vec![1.0, 1.0] } else { vec![-1.0, 1.0] };
        Self {
            matrix: pauli(k),
            declared_spectrum: Some(spectrum),
        }
    }

    /// `n · σ` for a nonzero real vector (normalized internally).
    pub fn bloch(n: [f64; 3]) -> Self {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let mut m = CMatrix::zeros(2, 2);
        for (k, &nk) in n.iter().enumerate() {
            m += pauli(k + 1).scale(nk / norm);
        }
        Self {
            matrix: m,
            declared_spectrum: Some(vec![-1.0, 1.0]),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn declared_spectrum(&self) -> Option<&[f64]> {
        self.declared_spectrum.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The same observable acting on subsystem `side` of a composite system.
    pub fn embed(&self, side: Side, dims: &[usize]) -> Result<Observable> {
        self.embed_at(side.index(), dims)
    }

    pub fn embed_at(&self, index: usize, dims: &[usize]) -> Result<Observable> {
        let matrix = embed_at(&self.matrix, index, dims)?;
        let declared_spectrum = self.declared_spectrum.as_ref().map(|s| {
            let others: usize = dims.iter().product::<usize>() / dims[index];
            s.iter()
                .flat_map(|&v| std::iter::repeat_n(v, others))
                .collect()
        });
        Ok(Observable {
            matrix,
            declared_spectrum,
        })
    }

    pub fn shifted(&self, c0: f64) -> Observable {
        let d = self.dim();
        Observable {
            matrix: &self.matrix + identity(d).scale(c0),
            declared_spectrum: self
                .declared_spectrum
                .as_ref()
                .map(|s| s.iter().map(|v| v + c0).collect()),
        }
    }
}

impl std::ops::Add for &Observable {
    type Output = Observable;

    fn add(self, rhs: &Observable) -> Observable {
        Observable {
            matrix: &self.matrix + &rhs.matrix,
            declared_spectrum: None,
        }
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Observable", 2)?;
        st.serialize_field("matrix", &crate::io::matrix_to_rows(&self.matrix))?;
        st.serialize_field("spectrum", &self.declared_spectrum)?;
        st.end()
    }
}

/// Spectral data of a state reused across several functionals.
#[derive(Clone, Debug)]
pub struct Eigenframe {
    spectral: SpectralDecomposition,
}

impl Eigenframe {
    /// Eigenvalues within `tol::DEGEN` (relative) of zero are set to zero:
    /// below that the solver output is noise, and the `f` weights of slowly
    /// converging means (QVAR) would otherwise read it as a real population.
    pub fn new(rho: &DensityMatrix) -> Self {
        let mut spectral = rho.spectrum();
        let floor = tol::DEGEN * spectral.spectral_radius();
        for p in spectral.eigenvalues.iter_mut() {
            if *p <= floor {
                *p = 0.0;
            }
        }
        Self { spectral }
    }

    /// A frame from an already known decomposition, e.g. a Gibbs state whose
    /// Boltzmann weights are more accurate than a fresh eigensolve.
    pub fn from_spectral(spectral: SpectralDecomposition) -> Self {
        Self { spectral }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral.eigenvalues
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn weights(&self, f: &FOpSpec) -> WeightTable {
        build_weight_table(f, &self.spectral.eigenvalues)
    }

    pub fn rotate(&self, x: &CMatrix) -> CMatrix {
        self.spectral.to_eigenbasis(x)
    }

    /// `Σ_ij w_ij a_ij b_ji` for matrices already in the eigenbasis.
    pub fn pair_sum(w: &DMatrix<f64>, a: &CMatrix, b: &CMatrix) -> Complex64 {
        let n = a.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                let wij = w[(i, j)];
                if wij != 0.0 {
                    acc += a[(i, j)] * b[(j, i)] * wij;
                }
            }
        }
        acc
    }

    pub fn masi(&self, o: &CMatrix, f: &FOpSpec) -> f64 {
        masi_in_frame(self, &self.weights(f), o)
    }

    pub fn f_correlation(&self, a: &CMatrix, b: &CMatrix, f: &FOpSpec) -> f64 {
        let w = self.weights(f);
        Self::pair_sum(&w.g, &self.rotate(a), &self.rotate(b)).re
    }

    /// `⟨X⟩` from the eigenbasis representation.
    fn mean_of(&self, xt: &CMatrix) -> f64 {
        self.spectral
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &p)| p.max(0.0) * xt[(i, i)].re)
            .sum()
    }

    fn centered(&self, xt: &CMatrix) -> CMatrix {
        let mean = self.mean_of(xt);
        xt - identity(xt.nrows()).scale(mean)
    }
}

fn check_dim(rho: &DensityMatrix, o: &Observable) -> Result<()> {
    if o.dim() != rho.dim() {
        return Err(dim_err(format!(
            "observable is {}-dimensional, state is {}-dimensional",
            o.dim(),
            rho.dim()
        )));
    }
    Ok(())
}

/// Symmetrized covariance `½Tr[ρ(AB + BA)] - Tr[ρA] Tr[ρB]`, computed
/// directly from the matrices (no eigendecomposition).
pub fn covariance(rho: &DensityMatrix, a: &Observable, b: &Observable) -> Result<f64> {
    check_dim(rho, a)?;
    check_dim(rho, b)?;
    let ab = a.matrix() * b.matrix();
    let sym = &ab + ab.adjoint();
    let second = 0.5 * rho.expectation(&sym).re;
    Ok(second - rho.expectation(a.matrix()).re * rho.expectation(b.matrix()).re)
}

pub fn variance(rho: &DensityMatrix, o: &Observable) -> Result<f64> {
    covariance(rho, o, o)
}

/// Metric-adjusted skew information `Σ_ij g^f(p_i, p_j) |⟨i|O|j⟩|²`.
pub fn masi(rho: &DensityMatrix, o: &Observable, f: &FOpSpec) -> Result<f64> {
    check_dim(rho, o)?;
    let frame = Eigenframe::new(rho);
    Ok(masi_in_frame(&frame, &frame.weights(f), o.matrix()))
}

pub(crate) fn masi_in_frame(frame: &Eigenframe, w: &WeightTable, o: &CMatrix) -> f64 {
    let ot = frame.rotate(o);
    let n = ot.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += w.g[(i, j)] * ot[(i, j)].norm_sqr();
        }
    }
    acc
}

/// Petz f-covariance `Σ_ij m_f(p_i, p_j) ⟨i|A₀|j⟩⟨j|B₀|i⟩` of the centered observables.
pub fn f_covariance(
    rho: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    f: &FOpSpec,
) -> Result<f64> {
    check_dim(rho, a)?;
    check_dim(rho, b)?;
    let frame = Eigenframe::new(rho);
    let p = frame.eigenvalues();
    let n = p.len();
    let w = DMatrix::from_fn(n, n, |i, j| f.mean(p[i].max(0.0), p[j].max(0.0)));
    let at = frame.centered(&frame.rotate(a.matrix()));
    let bt = frame.centered(&frame.rotate(b.matrix()));
    Ok(Eigenframe::pair_sum(&w, &at, &bt).re)
}

/// Petz covariance for the transformed function `f̃`.
pub fn f_tilde_covariance(
    rho: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    f: &FOpSpec,
) -> Result<f64> {
    check_dim(rho, a)?;
    check_dim(rho, b)?;
    let frame = Eigenframe::new(rho);
    let w = frame.weights(f);
    let at = frame.centered(&frame.rotate(a.matrix()));
    let bt = frame.centered(&frame.rotate(b.matrix()));
    Ok(Eigenframe::pair_sum(&w.mean_tilde, &at, &bt).re)
}

/// Metric-adjusted f-correlation `Σ_ij g^f(p_i, p_j) ⟨i|A|j⟩⟨j|B|i⟩`.
pub fn f_correlation(
    rho: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    f: &FOpSpec,
) -> Result<f64> {
    Ok(f_correlation_complex(rho, a, b, f)?.re)
}

/// The weighted sum before discarding its (vanishing) imaginary part.
pub fn f_correlation_complex(
    rho: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    f: &FOpSpec,
) -> Result<Complex64> {
    check_dim(rho, a)?;
    check_dim(rho, b)?;
    let frame = Eigenframe::new(rho);
    let w = frame.weights(f);
    Ok(Eigenframe::pair_sum(
        &w.g,
        &frame.rotate(a.matrix()),
        &frame.rotate(b.matrix()),
    ))
}

/// The f-correlation through `Cov(A, B) - Cov^{f̃}(A, B)`.
pub fn f_correlation_via_covariances(
    rho: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    f: &FOpSpec,
) -> Result<f64> {
    Ok(covariance(rho, a, b)? - f_tilde_covariance(rho, a, b, f)?)
}

/// `½[I^f(A + B) - I^f(A) - I^f(B)]`.
pub fn nonadditivity_gap(
    rho: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    f: &FOpSpec,
) -> Result<f64> {
    check_dim(rho, a)?;
    check_dim(rho, b)?;
    let frame = Eigenframe::new(rho);
    let w = frame.weights(f);
    let sum = a.matrix() + b.matrix();
    Ok(0.5
        * (masi_in_frame(&frame, &w, &sum)
            - masi_in_frame(&frame, &w, a.matrix())
            - masi_in_frame(&frame, &w, b.matrix())))
}

/// `M^f_ij = Υ^f(ρ, σ_i ⊗ I, I ⊗ σ_j)` for a two-qubit state.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: Matrix3<f64>,
    pub f_spec: FOpSpec,
}

impl CorrelationMatrix {
    pub fn singular_values(&self) -> [f64; 3] {
        let sv = self.entries.svd(false, false).singular_values;
        let mut s = [sv[0], sv[1], sv[2]];
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn s_max(&self) -> f64 {
        self.singular_values()[0]
    }

    /// `n_A^T M n_B`.
    pub fn bilinear(&self, n_a: &[f64; 3], n_b: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += n_a[i] * self.entries[(i, j)] * n_b[j];
            }
        }
        acc
    }
}

pub fn correlation_matrix(rho: &DensityMatrix, f: &FOpSpec) -> Result<CorrelationMatrix> {
    if rho.dims() != [2, 2] {
        return Err(dim_err(format!(
            "correlation matrix needs dims [2, 2], got {:?}",
            rho.dims()
        )));
    }
    pauli_correlations(rho, f, 0, 1)
}

/// Pauli correlation matrix between qubit subsystems `a_index` and `b_index`
/// of a state with any number of subsystems.
pub fn pauli_correlations(
    rho: &DensityMatrix,
    f: &FOpSpec,
    a_index: usize,
    b_index: usize,
) -> Result<CorrelationMatrix> {
    let dims = rho.dims();
    if a_index == b_index
        || a_index >= dims.len()
        || b_index >= dims.len()
        || dims[a_index] != 2
        || dims[b_index] != 2
    {
        return Err(dim_err(format!(
            "subsystems {a_index} and {b_index} of {dims:?} are not two distinct qubits"
        )));
    }
    let frame = Eigenframe::new(rho);
    let w = frame.weights(f);
    let mut sa = Vec::with_capacity(3);
    let mut sb = Vec::with_capacity(3);
    for k in 1..=3 {
        sa.push(frame.rotate(&embed_at(&pauli(k), a_index, dims)?));
        sb.push(frame.rotate(&embed_at(&pauli(k), b_index, dims)?));
    }
    let entries = Matrix3::from_fn(|i, j| Eigenframe::pair_sum(&w.g, &sa[i], &sb[j]).re);
    Ok(CorrelationMatrix {
        entries,
        f_spec: *f,
    })
}

/// Commutator norm `max |[ρ, O]_ij|`.
pub fn commutator_norm(rho: &DensityMatrix, o: &Observable) -> f64 {
    let r = rho.matrix();
    let m = o.matrix();
    hermitian::max_abs(&(r * m - m * r))
}
