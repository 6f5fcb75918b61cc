//! Gibbs states of small spin chains and the quantum variance, computed by
//! the closed-form f̄ weights, by α-quadrature over the WYD family, and
//! thermodynamically as `Cov - T χ`.

use log::warn;
use serde::Serialize;

use crate::correlations::{covariance, masi_in_frame, Eigenframe, Observable};
use crate::error::{dim_err, Error, Result};
use crate::fops::FOpSpec;
use crate::hermitian::{
    decompose_hermitian, embed_at, hermitian_defect, hermitian_part, pauli, tol, CMatrix,
    DensityMatrix, SpectralDecomposition,
};
use crate::quadrature::default_rule;

pub const MAX_SITES: usize = 8;

/// Open transverse-field Ising chain `-J Σ σz σz - h Σ σx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpinChainSpec {
    pub n: usize,
    pub j: f64,
    pub h: f64,
}

impl SpinChainSpec {
    pub fn dims(&self) -> Vec<usize> {
        vec![2; self.n]
    }
}

/// Pauli `k` acting on `site` of an `n`-qubit chain.
pub fn site_pauli(k: usize, site: usize, n: usize) -> Result<CMatrix> {
    if site >= n {
        return Err(dim_err(format!("site {site} outside a chain of {n}")));
    }
    embed_at(&pauli(k), site, &vec![2; n])
}

pub fn tfi_hamiltonian(spec: &SpinChainSpec) -> Result<CMatrix> {
    if spec.n == 0 || spec.n > MAX_SITES {
        return Err(dim_err(format!(
            "chain length {} outside 1..={MAX_SITES}",
            spec.n
        )));
    }
    let d = 1usize << spec.n;
    let mut h = CMatrix::zeros(d, d);
    for i in 0..spec.n {
        h -= site_pauli(1, i, spec.n)?.scale(spec.h);
        if i + 1 < spec.n {
            h -= (site_pauli(3, i, spec.n)? * site_pauli(3, i + 1, spec.n)?).scale(spec.j);
        }
    }
    Ok(h)
}

/// `ρ = e^{-H/T} / Z` with the Boltzmann weights kept in log form.
#[derive(Clone, Debug)]
pub struct GibbsModel {
    pub hamiltonian: CMatrix,
    pub temperature: f64,
    pub log_z: f64,
    /// `ln p_i`, descending, matching `spectral`.
    pub log_weights: Vec<f64>,
    pub spectral: SpectralDecomposition,
    pub rho: DensityMatrix,
}

pub fn gibbs(h: &CMatrix, dims: &[usize], temperature: f64) -> Result<GibbsModel> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::Domain(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    let defect = hermitian_defect(h);
    if defect > tol::HERM {
        return Err(Error::NonHermitian(defect));
    }
    let d: usize = dims.iter().product();
    if h.nrows() != d || h.ncols() != d {
        return Err(dim_err(format!(
            "Hamiltonian is {}x{}, dims {dims:?} need {d}",
            h.nrows(),
            h.ncols()
        )));
    }
    let eig = decompose_hermitian(&hermitian_part(h));
    // descending energies, so reverse for descending weights
    let order: Vec<usize> = (0..d).rev().collect();
    let e_min = eig.eigenvalues[d - 1];
    let shifted: Vec<f64> = order
        .iter()
        .map(|&k| -(eig.eigenvalues[k] - e_min) / temperature)
        .collect();
    let log_sum = shifted.iter().map(|x| x.exp()).sum::<f64>().ln();
    let log_weights: Vec<f64> = shifted.iter().map(|x| x - log_sum).collect();
    let probs: Vec<f64> = log_weights.iter().map(|x| x.exp()).collect();
    let vectors = CMatrix::from_fn(d, d, |i, col| eig.eigenvectors[(i, order[col])]);
    let spectral = SpectralDecomposition::from_sorted(probs, vectors);
    let rho = DensityMatrix::new(hermitian_part(&spectral.reconstruct()), dims)?;
    Ok(GibbsModel {
        hamiltonian: h.clone(),
        temperature,
        log_z: -e_min / temperature + log_sum,
        log_weights,
        spectral,
        rho,
    })
}

impl GibbsModel {
    pub fn probabilities(&self) -> &[f64] {
        &self.spectral.eigenvalues
    }

    pub fn frame(&self) -> Eigenframe {
        Eigenframe::from_spectral(self.spectral.clone())
    }

    /// `Tr[ρ O]` from the diagonal of `O` in the energy basis.
    pub fn expectation(&self, o: &CMatrix) -> f64 {
        let ot = self.spectral.to_eigenbasis(o);
        self.probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| p * ot[(i, i)].re)
            .sum()
    }

    /// Kubo-Mori covariance from the exact log-weights.
    pub fn kubo_mori(&self, a: &CMatrix, b: &CMatrix) -> f64 {
        let at = self.spectral.to_eigenbasis(a);
        let bt = self.spectral.to_eigenbasis(b);
        kubo_mori_sum(self.probabilities(), &self.log_weights, &at, &bt)
    }
}

/// `(x - y) / (ln x - ln y)` with the diagonal limit `x`.
fn log_mean(x: f64, lx: f64, y: f64, ly: f64) -> f64 {
    let (hi, lhi, llo) = if x >= y { (x, lx, ly) } else { (y, ly, lx) };
    let d = llo - lhi;
    if d == 0.0 {
        hi
    } else {
        hi * d.exp_m1() / d
    }
}

fn kubo_mori_sum(p: &[f64], lp: &[f64], at: &CMatrix, bt: &CMatrix) -> f64 {
    let n = p.len();
    let mean = |xt: &CMatrix| -> f64 { (0..n).map(|i| p[i] * xt[(i, i)].re).sum() };
    let (ma, mb) = (mean(at), mean(bt));
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut aij = at[(i, j)];
            let mut bji = bt[(j, i)];
            if i == j {
                aij -= ma;
                bji -= mb;
            }
            acc += log_mean(p[i], lp[i], p[j], lp[j]) * (aij * bji).re;
        }
    }
    acc
}

pub const KM_FLOOR: f64 = 1e-14;
pub const KM_RANK_TOL: f64 = 1e-12;

fn kubo_mori_impl(rho: &DensityMatrix, a: &Observable, b: &Observable, floor: Option<f64>) -> Result<f64> {
    for o in [a, b] {
        if o.dim() != rho.dim() {
            return Err(dim_err(format!(
                "observable is {}-dimensional, state is {}-dimensional",
                o.dim(),
                rho.dim()
            )));
        }
    }
    let spec = rho.spectrum();
    let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
    let p: Vec<f64> = match floor {
        None if min < KM_RANK_TOL => return Err(Error::RankDeficient(min)),
        None => spec.eigenvalues.clone(),
        Some(fl) => {
            if min < fl {
                warn!("flooring eigenvalue {min:.3e} at {fl:.0e} for the Kubo-Mori covariance");
            }
            let raw: Vec<f64> = spec.eigenvalues.iter().map(|&x| x.max(fl)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        }
    };
    let lp: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let at = spec.to_eigenbasis(a.matrix());
    let bt = spec.to_eigenbasis(b.matrix());
    Ok(kubo_mori_sum(&p, &lp, &at, &bt))
}

/// `∫₀¹ Tr[ρ^α A₀ ρ^{1-α} B₀] dα` for a full-rank state.
pub fn kubo_mori_cov(rho: &DensityMatrix, a: &Observable, b: &Observable) -> Result<f64> {
    kubo_mori_impl(rho, a, b, None)
}

/// As [`kubo_mori_cov`], flooring eigenvalues at `KM_FLOOR` instead of failing.
pub fn kubo_mori_cov_regularized(rho: &DensityMatrix, a: &Observable, b: &Observable) -> Result<f64> {
    kubo_mori_impl(rho, a, b, Some(KM_FLOOR))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QvarMethod {
    ClosedForm,
    Quadrature,
}

pub fn quantum_variance_in_frame(frame: &Eigenframe, o: &CMatrix, method: QvarMethod) -> f64 {
    match method {
        QvarMethod::ClosedForm => frame.masi(o, &FOpSpec::quantum_variance()),
        QvarMethod::Quadrature => default_rule().integrate(|alpha| {
            let f = FOpSpec::wyd(alpha).expect("Gauss-Legendre nodes are interior");
            masi_in_frame(frame, &frame.weights(&f), o)
        }),
    }
}

pub fn quantum_variance(rho: &DensityMatrix, o: &Observable, method: QvarMethod) -> Result<f64> {
    if o.dim() != rho.dim() {
        return Err(dim_err(format!(
            "observable is {}-dimensional, state is {}-dimensional",
            o.dim(),
            rho.dim()
        )));
    }
    Ok(quantum_variance_in_frame(&Eigenframe::new(rho), o.matrix(), method))
}

/// `10⁻⁴ max(1, ‖O_B‖)`.
pub fn default_fd_step(o_b: &CMatrix) -> f64 {
    let norm = decompose_hermitian(&hermitian_part(o_b)).spectral_radius();
    1e-4 * norm.max(1.0)
}

/// `∂⟨O_A⟩/∂h_B` at `h_B = 0` for `H(h_B) = H - h_B O_B`, by central difference.
pub fn susceptibility_fd(
    h: &CMatrix,
    dims: &[usize],
    temperature: f64,
    o_a: &CMatrix,
    o_b: &CMatrix,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {delta}")));
    }
    let plus = gibbs(&(h - o_b.scale(delta)), dims, temperature)?.expectation(o_a);
    let minus = gibbs(&(h + o_b.scale(delta)), dims, temperature)?.expectation(o_a);
    Ok((plus - minus) / (2.0 * delta))
}

/// Both routes to `Υ^{f̄}` at thermal equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermalReport {
    pub cov: f64,
    pub t_chi: f64,
    pub kubo_mori: f64,
    /// `Cov - T χ`.
    pub quantum_cov_thermo: f64,
    /// `Υ^{f̄}` from the spectral weights.
    pub quantum_cov_spectral: f64,
    /// `|quantum_cov_thermo - quantum_cov_spectral|`.
    pub delta: f64,
    pub fd_step: f64,
}

pub fn thermal_report(
    h: &CMatrix,
    dims: &[usize],
    temperature: f64,
    o_a: &Observable,
    o_b: &Observable,
) -> Result<ThermalReport> {
    let model = gibbs(h, dims, temperature)?;
    let cov = covariance(&model.rho, o_a, o_b)?;
    let step = default_fd_step(o_b.matrix());
    let chi = susceptibility_fd(h, dims, temperature, o_a.matrix(), o_b.matrix(), step)?;
    let t_chi = temperature * chi;
    let spectral = model
        .frame()
        .f_correlation(o_a.matrix(), o_b.matrix(), &FOpSpec::quantum_variance());
    let thermo = cov - t_chi;
    Ok(ThermalReport {
        cov,
        t_chi,
        kubo_mori: model.kubo_mori(o_a.matrix(), o_b.matrix()),
        quantum_cov_thermo: thermo,
        quantum_cov_spectral: spectral,
        delta: (thermo - spectral).abs(),
        fd_step: step,
    })
}

/// `Cov(O_A, O_B) - T ∂⟨O_A⟩/∂h_B`.
pub fn thermo_f_correlation(
    h: &CMatrix,
    dims: &[usize],
    temperature: f64,
    o_a: &Observable,
    o_b: &Observable,
) -> Result<f64> {
    let model = gibbs(h, dims, temperature)?;
    let cov = covariance(&model.rho, o_a, o_b)?;
    let step = default_fd_step(o_b.matrix());
    let chi = susceptibility_fd(h, dims, temperature, o_a.matrix(), o_b.matrix(), step)?;
    Ok(cov - temperature * chi)
}
