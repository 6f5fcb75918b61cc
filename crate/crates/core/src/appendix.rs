//! Dilation of a local mixed-unitary qubit channel and the contraction
//! `M^f_τ = S M^f` of the Pauli correlation matrix.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{apply_local, random_unital_qubit, UnitalQubitChannel};
use crate::correlations::{correlation_matrix, pauli_correlations, CorrelationMatrix};
use crate::error::{dim_err, Error, Result};
use crate::fops::FOpSpec;
use crate::hermitian::{
    hermitian_part, identity, kron, max_abs, partial_trace_op, pauli, random_density_hs,
    real_diag, tol, trace_product, unitarity_defect, CMatrix, CVector, DensityMatrix, RngStream,
    Side,
};

/// Orthogonal `R` with `U† σ_i U = Σ_j R_ij σ_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(pub Matrix3<f64>);

impl RotationMatrix {
    pub fn orthogonality_defect(&self) -> f64 {
        (self.0 * self.0.transpose() - Matrix3::identity()).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

pub fn so3_from_su2(u: &CMatrix) -> Result<RotationMatrix> {
    if u.shape() != (2, 2) {
        return Err(dim_err(format!("expected a 2x2 unitary, got {:?}", u.shape())));
    }
    let defect = unitarity_defect(u);
    if defect > tol::UNIT {
        return Err(Error::NotUnitary(defect));
    }
    let conj: Vec<CMatrix> = (1..=3).map(|i| u.adjoint() * pauli(i) * u).collect();
    Ok(RotationMatrix(Matrix3::from_fn(|i, j| {
        0.5 * trace_product(&pauli(j + 1), &conj[i]).re
    })))
}

#[derive(Clone, Debug)]
pub struct DilationResult {
    /// State on `A ⊗ B ⊗ D`.
    pub tau: DensityMatrix,
    /// `Σ_k q_k R_k`.
    pub s: Matrix3<f64>,
}

/// `τ = U_AD (ρ ⊗ |α⟩⟨α|) U_AD†` with `U_AD = Σ_k U_k ⊗ |k⟩⟨k|` and
/// `|α⟩ = Σ_k √q_k |k⟩`, for the channel `Σ_k q_k U_k · U_k†` on qubit A.
pub fn dilate_mixed_unitary(rho: &DensityMatrix, terms: &[(f64, CMatrix)]) -> Result<DilationResult> {
    if rho.dims() != [2, 2] {
        return Err(dim_err(format!("dilation needs dims [2, 2], got {:?}", rho.dims())));
    }
    let k = terms.len();
    if k == 0 {
        return Err(dim_err("mixture has no terms"));
    }
    let total: f64 = terms.iter().map(|(q, _)| q).sum();
    if terms.iter().any(|(q, _)| *q < 0.0) || (total - 1.0).abs() > tol::TRACE {
        return Err(Error::NotNormalized(total));
    }
    let mut u_ad = CMatrix::zeros(4 * k, 4 * k);
    let mut s = Matrix3::zeros();
    let mut alpha = CVector::zeros(k);
    for (idx, (q, u)) in terms.iter().enumerate() {
        let mut proj = vec![0.0; k];
        proj[idx] = 1.0;
        u_ad += kron(&kron(u, &identity(2)), &real_diag(&proj));
        s += so3_from_su2(u)?.0 * *q;
        alpha[idx] = crate::hermitian::c(q.sqrt(), 0.0);
    }
    let ancilla = &alpha * alpha.adjoint();
    let input = kron(rho.matrix(), &ancilla);
    let tau = &u_ad * input * u_ad.adjoint();
    Ok(DilationResult {
        tau: DensityMatrix::new(hermitian_part(&tau), &[2, 2, k])?,
        s,
    })
}

pub fn dilate_unital(rho: &DensityMatrix, ch: &UnitalQubitChannel) -> Result<DilationResult> {
    let terms: Vec<(f64, CMatrix)> = ch.terms().iter().map(|(q, u)| (*q, (*u).clone())).collect();
    dilate_mixed_unitary(rho, &terms)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `max |M_out - S M_in|`.
    pub identity_residual: f64,
    pub s_max_in: f64,
    pub s_max_out: f64,
    /// `s_max(M_out) - s_max(M_in)`; positive means the contraction failed.
    pub contraction_violation: f64,
    /// `λ_max(S Sᵀ) - 1`.
    pub s_norm_excess: f64,
    /// `max |Tr_D τ - (Λ ⊗ id)(ρ)|`.
    pub marginal_residual: f64,
    /// Largest mismatch between the spectrum of `τ` and that of `ρ` padded with zeros.
    pub eigenvalue_residual: f64,
}

pub fn contraction_check(
    rho: &DensityMatrix,
    ch: &UnitalQubitChannel,
    f: &FOpSpec,
) -> Result<ContractionReport> {
    let m_in = correlation_matrix(rho, f)?;
    let dil = dilate_unital(rho, ch)?;
    let m_out: CorrelationMatrix = pauli_correlations(&dil.tau, f, 0, 1)?;
    let predicted = dil.s * m_in.entries;
    let identity_residual = (m_out.entries - predicted).abs().max();

    let sst = (dil.s * dil.s.transpose()).symmetric_eigen();
    let s_norm_excess = sst.eigenvalues.max() - 1.0;

    let marginal = partial_trace_op(dil.tau.matrix(), dil.tau.dims(), &[0, 1])?;
    let direct = apply_local(ch, rho, Side::A)?;
    let marginal_residual = max_abs(&(marginal - direct.matrix()));

    let tau_spec = dil.tau.spectrum().eigenvalues;
    let rho_spec = rho.spectrum().eigenvalues;
    let eigenvalue_residual = tau_spec
        .iter()
        .enumerate()
        .map(|(i, t)| (t - rho_spec.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);

    let (s_in, s_out) = (m_in.s_max(), m_out.s_max());
    Ok(ContractionReport {
        identity_residual,
        s_max_in: s_in,
        s_max_out: s_out,
        contraction_violation: s_out - s_in,
        s_norm_excess,
        marginal_residual,
        eigenvalue_residual,
    })
}

/// Aggregate over random trials; what `appendix-check` prints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixSummary {
    pub trials: usize,
    pub max_identity_residual: f64,
    pub max_contraction_violation: f64,
    pub max_s_norm_excess: f64,
    pub max_marginal_residual: f64,
    pub max_eigenvalue_residual: f64,
}

impl AppendixSummary {
    /// Identity within `10⁻⁹`, no contraction violation beyond `10⁻⁹`,
    /// `S Sᵀ ≤ 1 + 10⁻¹⁰`.
    pub fn passes(&self) -> bool {
        self.max_identity_residual < 1e-9
            && self.max_contraction_violation <= 1e-9
            && self.max_s_norm_excess <= 1e-10
            && self.max_marginal_residual < tol::RECON
            && self.max_eigenvalue_residual < 1e-10
    }
}

/// Trial `i` draws an HS state and a random unital channel from
/// `RngStream(seed, i)` and uses `fs[i % fs.len()]`.
pub fn appendix_trials(trials: usize, fs: &[FOpSpec], seed: u64) -> Result<AppendixSummary> {
    if fs.is_empty() {
        return Err(Error::Domain("no f specified".into()));
    }
    let reports: Vec<ContractionReport> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64).rng();
            let rho = random_density_hs(&[2, 2], &mut rng);
            let ch = random_unital_qubit(&mut rng);
            contraction_check(&rho, &ch, &fs[i % fs.len()])
        })
        .collect::<Result<_>>()?;
    let max_of = |g: fn(&ContractionReport) -> f64| {
        reports.iter().map(g).fold(f64::NEG_INFINITY, f64::max)
    };
    if reports.is_empty() {
        return Ok(AppendixSummary {
            trials: 0,
            max_identity_residual: 0.0,
            max_contraction_violation: 0.0,
            max_s_norm_excess: 0.0,
            max_marginal_residual: 0.0,
            max_eigenvalue_residual: 0.0,
        });
    }
    Ok(AppendixSummary {
        trials,
        max_identity_residual: max_of(|r| r.identity_residual),
        max_contraction_violation: max_of(|r| r.contraction_violation),
        max_s_norm_excess: max_of(|r| r.s_norm_excess),
        max_marginal_residual: max_of(|r| r.marginal_residual),
        max_eigenvalue_residual: max_of(|r| r.eigenvalue_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::haar_unitary;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rotation_examples() {
        let r = so3_from_su2(&identity(2)).unwrap();
        assert_eq!(r.0, Matrix3::identity());
        let r = so3_from_su2(&pauli(1)).unwrap();
        assert!((r.0 - Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, -1.0))).abs().max() < 1e-15);
        let phased = pauli(1) * crate::hermitian::c(0.0, 1.0);
        assert_eq!(so3_from_su2(&phased).unwrap().0, r.0);
        assert!(matches!(so3_from_su2(&identity(2).scale(1.1)), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn rotation_satisfies_defining_relation() {
        let mut rng = RngStream::new(70, 0).rng();
        for _ in 0..100 {
            let u = haar_unitary(2, &mut rng);
            let r = so3_from_su2(&u).unwrap();
            assert!(r.orthogonality_defect() < 1e-10);
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-10);
            for i in 0..3 {
                let lhs = u.adjoint() * pauli(i + 1) * &u;
                let mut rhs = CMatrix::zeros(2, 2);
                for j in 0..3 {
                    rhs += pauli(j + 1).scale(r.0[(i, j)]);
                }
                assert!(max_abs(&(lhs - rhs)) < 1e-10);
            }
        }
    }

    #[test]
    fn dilation_examples() {
        let mut rng = RngStream::new(71, 0).rng();
        let rho = random_density_hs(&[2, 2], &mut rng);
        let u = haar_unitary(2, &mut rng);
        let ch = UnitalQubitChannel::new(1.0, u.clone(), haar_unitary(2, &mut rng)).unwrap();
        let dil = dilate_unital(&rho, &ch).unwrap();
        let uab = kron(&u, &identity(2));
        let expect = kron(&(&uab * rho.matrix() * uab.adjoint()), &real_diag(&[1.0, 0.0]));
        assert!(max_abs(&(dil.tau.matrix() - expect)) < 1e-14);
        assert!((dil.s - so3_from_su2(&u).unwrap().0).abs().max() < 1e-15);

        let dil = dilate_unital(&rho, &UnitalQubitChannel::z_dephasing()).unwrap();
        let expect = Matrix3::from_diagonal(&nalgebra::Vector3::new(0.0, 0.0, 1.0));
        assert!((dil.s - expect).abs().max() < 1e-15);

        let bad = [(0.7, identity(2)), (0.7, pauli(3))];
        assert!(matches!(dilate_mixed_unitary(&rho, &bad), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn three_term_dilation_contracts() {
        let mut rng = RngStream::new(72, 0).rng();
        let rho = random_density_hs(&[2, 2], &mut rng);
        let terms: Vec<(f64, CMatrix)> = [0.2, 0.5, 0.3]
            .iter()
            .map(|&q| (q, haar_unitary(2, &mut rng)))
            .collect();
        let dil = dilate_mixed_unitary(&rho, &terms).unwrap();
        assert_eq!(dil.tau.dims(), &[2, 2, 3]);
        for f in FOpSpec::registry() {
            let m_in = correlation_matrix(&rho, &f).unwrap();
            let m_out = pauli_correlations(&dil.tau, &f, 0, 1).unwrap();
            assert!((m_out.entries - dil.s * m_in.entries).abs().max() < 1e-9);
            assert!(m_out.s_max() <= m_in.s_max() + 1e-9);
        }
    }

    #[test]
    fn identity_channel_and_dephasing() {
        let rho = random_density_hs(&[2, 2], &mut RngStream::new(73, 0).rng());
        for f in FOpSpec::registry() {
            let r = contraction_check(&rho, &UnitalQubitChannel::identity(), &f).unwrap();
            assert!(r.identity_residual < 1e-10);
            assert_abs_diff_eq!(r.s_max_out, r.s_max_in, epsilon = 1e-10);
            let r = contraction_check(&rho, &UnitalQubitChannel::z_dephasing(), &f).unwrap();
            assert!(r.identity_residual < 1e-9);
            assert!(r.contraction_violation <= 1e-9);
        }
    }

    #[test]
    fn random_trials_pass() {
        let s = appendix_trials(100, &FOpSpec::registry(), 5).unwrap();
        assert_eq!(s.trials, 100);
        assert!(s.passes(), "{s:?}");
        assert_eq!(s, appendix_trials(100, &FOpSpec::registry(), 5).unwrap());
        assert!(appendix_trials(3, &[], 5).is_err());
    }
}
