//! The quantum f-correlation `Q^f(ρ) = max Υ^f(ρ, O_A ⊗ I, I ⊗ O_B)` over
//! local observables with a fixed equispaced spectrum.
//!
//! Three routes are provided: the two-qubit closed form (largest singular
//! value of the Pauli correlation matrix), a general alternating maximizer,
//! and the pure-state Schmidt formula `2 λ₁ λ₂` for qubit-qudit states.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlations::{correlation_matrix, Eigenframe, Observable};
use crate::error::{dim_err, Result};
use crate::fops::{FOpSpec, WeightTable};
use crate::hermitian::{
    self, decompose_hermitian, embed_at, haar_unitary, hermitian_part, partial_trace_op,
    schmidt_decompose, CMatrix, CVector, DensityMatrix, RngStream, Side,
};

/// Local spectra for the two parties. The first `d = min(d_A, d_B)` values
/// are `-d/2, -d/2 + d/(d-1), …, d/2`; the larger side is padded with zeros.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquispacedSpectrum {
    pub d_a: usize,
    pub d_b: usize,
    pub values_a: Vec<f64>,
    pub values_b: Vec<f64>,
}

impl EquispacedSpectrum {
    pub fn values(&self, side: Side) -> &[f64] {
        match side {
            Side::A => &self.values_a,
            Side::B => &self.values_b,
        }
    }
}

pub fn equispaced_spectrum(d_a: usize, d_b: usize) -> Result<EquispacedSpectrum> {
    if d_a < 2 || d_b < 2 {
        return Err(dim_err(format!(
            "both local dimensions must be at least 2, got ({d_a}, {d_b})"
        )));
    }
    let d = d_a.min(d_b);
    let half = d as f64 / 2.0;
    let step = d as f64 / (d - 1) as f64;
    let base: Vec<f64> = (0..d)
        .map(|k| if k == d - 1 { half } else { -half + step * k as f64 })
        .collect();
    let pad = |n: usize| {
        let mut v = base.clone();
        v.resize(n, 0.0);
        v
    };
    Ok(EquispacedSpectrum {
        d_a,
        d_b,
        values_a: pad(d_a),
        values_b: pad(d_b),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QfMethod {
    ClosedForm2Q,
    AlternatingOpt,
    PureSchmidt,
}

#[derive(Clone, Debug, Serialize)]
pub struct QfResult {
    pub value: f64,
    pub optimal_a: Observable,
    pub optimal_b: Observable,
    pub method: QfMethod,
    pub restarts_used: usize,
    pub converged: bool,
}

fn two_party_dims(rho: &DensityMatrix) -> Result<[usize; 2]> {
    match rho.dims() {
        &[a, b] => Ok([a, b]),
        other => Err(dim_err(format!(
            "expected a bipartite state, got dims {other:?}"
        ))),
    }
}

/// Two-qubit closed form: the largest singular value of `M^f`, with the
/// optimal observables `n_A · σ`, `n_B · σ` read off the singular vectors.
pub fn qf_two_qubit(rho: &DensityMatrix, f: &FOpSpec) -> Result<QfResult> {
    let m = correlation_matrix(rho, f)?;
    let svd = m.entries.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut k = 0;
    for i in 1..3 {
        if svd.singular_values[i] > svd.singular_values[k] {
            k = i;
        }
    }
    let n_a: Vector3<f64> = u.column(k).into_owned();
    let mut n_b: Vector3<f64> = v_t.row(k).transpose();
    let na = [n_a[0], n_a[1], n_a[2]];
    let mut nb = [n_b[0], n_b[1], n_b[2]];
    if m.bilinear(&na, &nb) < 0.0 {
        n_b = -n_b;
        nb = [n_b[0], n_b[1], n_b[2]];
    }
    Ok(QfResult {
        value: svd.singular_values[k],
        optimal_a: Observable::bloch(na),
        optimal_b: Observable::bloch(nb),
        method: QfMethod::ClosedForm2Q,
        restarts_used: 0,
        converged: true,
    })
}

/// Largest singular value only; the hot path of the channel scan.
pub fn qf_two_qubit_value(rho: &DensityMatrix, f: &FOpSpec) -> Result<f64> {
    Ok(correlation_matrix(rho, f)?.s_max())
}

/// Spectral data for repeated kernel evaluations on one state.
pub struct KernelContext {
    frame: Eigenframe,
    weights: WeightTable,
    dims: [usize; 2],
}

impl KernelContext {
    pub fn new(rho: &DensityMatrix, f: &FOpSpec) -> Result<Self> {
        let dims = two_party_dims(rho)?;
        let frame = Eigenframe::new(rho);
        let weights = frame.weights(f);
        Ok(Self {
            frame,
            weights,
            dims,
        })
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    /// Hermitian `K` on the free side with `Υ^f(ρ, O_free, O_fixed) = Tr[O_free K]`
    /// for every `O_free` on that side.
    pub fn kernel(&self, fixed: &CMatrix, fixed_side: Side) -> Result<CMatrix> {
        let embedded = embed_at(fixed, fixed_side.index(), &self.dims)?;
        let rotated = self.frame.rotate(&embedded);
        let n = rotated.nrows();
        let weighted = CMatrix::from_fn(n, n, |i, j| rotated[(i, j)] * self.weights.g[(i, j)]);
        let full = self.frame.spectral().from_eigenbasis(&weighted);
        let free = fixed_side.other().index();
        Ok(hermitian_part(&partial_trace_op(&full, &self.dims, &[free])?))
    }

    /// `Υ^f(ρ, O_A ⊗ I, I ⊗ O_B)`.
    pub fn objective(&self, o_a: &CMatrix, o_b: &CMatrix) -> Result<f64> {
        let k = self.kernel(o_b, Side::B)?;
        Ok(hermitian::trace_product(o_a, &k).re)
    }
}

pub fn linear_kernel(
    rho: &DensityMatrix,
    fixed: &Observable,
    fixed_side: Side,
    f: &FOpSpec,
) -> Result<CMatrix> {
    KernelContext::new(rho, f)?.kernel(fixed.matrix(), fixed_side)
}

/// Maximizer of `Tr[O K]` over `O` with the given spectrum: eigenvalues of
/// `O` sorted descending are paired with the eigenvectors of `K` sorted by
/// descending eigenvalue.
pub fn align_to_kernel(kernel: &CMatrix, spectrum: &[f64]) -> Observable {
    let spec = decompose_hermitian(&hermitian_part(kernel));
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Observable::from_spectrum(&spec.eigenvectors, &sorted)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 500,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Outcome of one alternating run from a single starting point.
#[derive(Clone, Debug)]
pub struct AscentTrace {
    pub value: f64,
    pub o_a: Observable,
    pub o_b: Observable,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every half-step.
    pub history: Vec<f64>,
}

/// Alternating maximization from a fixed initial `O_B`.
pub fn alternating_ascent(
    ctx: &KernelContext,
    spectrum: &EquispacedSpectrum,
    initial_b: Observable,
    max_iters: usize,
    tol: f64,
) -> Result<AscentTrace> {
    let mut o_b = initial_b;
    let mut o_a = align_to_kernel(&ctx.kernel(o_b.matrix(), Side::B)?, &spectrum.values_a);
    let mut value = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let k_a = ctx.kernel(o_b.matrix(), Side::B)?;
        o_a = align_to_kernel(&k_a, &spectrum.values_a);
        history.push(hermitian::trace_product(o_a.matrix(), &k_a).re);

        let k_b = ctx.kernel(o_a.matrix(), Side::A)?;
        o_b = align_to_kernel(&k_b, &spectrum.values_b);
        let next = hermitian::trace_product(o_b.matrix(), &k_b).re;
        history.push(next);

        let improvement = next - value;
        value = next;
        if improvement < tol {
            converged = true;
            break;
        }
    }
    Ok(AscentTrace {
        value,
        o_a,
        o_b,
        iterations,
        converged,
        history,
    })
}

/// General maximizer for any bipartite dimensions: alternating exact
/// half-steps from Haar-random starts, best run kept. Restart `r` draws from
/// `RngStream(seed, r)`, so the result does not depend on scheduling.
pub fn qf_optimize(rho: &DensityMatrix, f: &FOpSpec, opts: &OptimizeOptions) -> Result<QfResult> {
    let ctx = KernelContext::new(rho, f)?;
    let [d_a, d_b] = ctx.dims();
    let spectrum = equispaced_spectrum(d_a, d_b)?;
    let restarts = opts.restarts.max(1);
    let runs: Vec<AscentTrace> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(opts.seed, r as u64).rng();
            let u = haar_unitary(d_b, &mut rng);
            let start = Observable::from_spectrum(&u, &spectrum.values_b);
            alternating_ascent(&ctx, &spectrum, start, opts.max_iters, opts.tol)
        })
        .collect::<Result<_>>()?;
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(j.cmp(i)))
        .map(|(_, r)| r.clone())
        .expect("at least one restart");
    Ok(QfResult {
        value: best.value,
        optimal_a: best.o_a,
        optimal_b: best.o_b,
        method: QfMethod::AlternatingOpt,
        restarts_used: restarts,
        converged: best.converged,
    })
}

/// Pure qubit-qudit states: `Q^f = 2 λ₁ λ₂` from the Schmidt coefficients,
/// independent of `f`.
pub fn pure_qf(psi: &CVector, dims: [usize; 2]) -> Result<f64> {
    if dims[0] != 2 {
        return Err(dim_err(format!(
            "pure-state formula needs a qubit on A, got dims {dims:?}"
        )));
    }
    let s = schmidt_decompose(psi, dims)?;
    Ok(2.0 * s.coefficients[0] * s.coefficients[1])
}

/// Picks the closed form for two qubits and the optimizer otherwise.
pub fn quantify(rho: &DensityMatrix, f: &FOpSpec, opts: &OptimizeOptions) -> Result<QfResult> {
    if rho.dims() == [2, 2] {
        qf_two_qubit(rho, f)
    } else {
        qf_optimize(rho, f, opts)
    }
}
