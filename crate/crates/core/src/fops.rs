//! Regular symmetric normalized operator monotone functions and the scalar
//! kernels derived from them.
//!
//! Every function `f` here satisfies `f(1) = 1`, `t f(1/t) = f(t)` and
//! `f(0) > 0`. From `f` we derive the matrix-mean scalar `m_f(x, y) = y f(x/y)`,
//! the skew-information weight `g^f(x, y) = (f(0)/2) (x - y)^2 / m_f(x, y)`,
//! and the transform `f̃(t) = ½[(t + 1) - (t - 1)^2 f(0)/f(t)]` whose mean
//! enters the covariance route to the f-correlation.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hermitian::{self, tol, CMatrix};

/// Below this distance from `t = 1` the WYD closed form is replaced by its
/// Taylor polynomial.
const WYD_SERIES_RADIUS: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FKind {
    /// Bures-Uhlmann, `(1 + t)/2`.
    BuresUhlmann,
    /// Wigner-Yanase-Dyson with parameter `α ∈ (0, 1)`.
    Wyd(f64),
    /// Wigner-Yanase, `(1 + √t)^2 / 4`.
    WignerYanase,
    /// The α-average of the WYD family (quantum variance).
    QuantumVariance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FOpSpec {
    kind: FKind,
    f_zero: f64,
}

impl FOpSpec {
    pub fn bures_uhlmann() -> Self {
        Self::from_kind_unchecked(FKind::BuresUhlmann)
    }

    pub fn wigner_yanase() -> Self {
        Self::from_kind_unchecked(FKind::WignerYanase)
    }

    pub fn quantum_variance() -> Self {
        Self::from_kind_unchecked(FKind::QuantumVariance)
    }

    pub fn wyd(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!(
                "WYD parameter must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self::from_kind_unchecked(FKind::Wyd(alpha)))
    }

    pub fn new(kind: FKind) -> Result<Self> {
        match kind {
            FKind::Wyd(a) => Self::wyd(a),
            k => Ok(Self::from_kind_unchecked(k)),
        }
    }

    fn from_kind_unchecked(kind: FKind) -> Self {
        let f_zero = match kind {
            FKind::BuresUhlmann => 0.5,
            FKind::Wyd(a) => a * (1.0 - a),
            FKind::WignerYanase => 0.25,
            FKind::QuantumVariance => 1.0 / 6.0,
        };
        Self { kind, f_zero }
    }

    /// The four registered specs used by tests and sweeps: BU, WY, WYD(1/4), QVAR.
    pub fn registry() -> [FOpSpec; 4] {
        [
            Self::bures_uhlmann(),
            Self::wigner_yanase(),
            Self::from_kind_unchecked(FKind::Wyd(0.25)),
            Self::quantum_variance(),
        ]
    }

    pub fn kind(&self) -> FKind {
        self.kind
    }

    pub fn f_zero(&self) -> f64 {
        self.f_zero
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("f(t) needs t >= 0, got {t}")));
        }
        Ok(self.value(t))
    }

    /// `f(t)` for `t >= 0` (unchecked).
    pub(crate) fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.f_zero;
        }
        match self.kind {
            FKind::BuresUhlmann => 0.5 * (1.0 + t),
            FKind::WignerYanase => {
                let s = 1.0 + t.sqrt();
                0.25 * s * s
            }
            FKind::Wyd(a) => wyd_value(a, t),
            FKind::QuantumVariance => qvar_value(t),
        }
    }

    pub fn f_tilde_eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Domain(format!("f̃(t) needs t > 0, got {t}")));
        }
        Ok(self.tilde_value(t))
    }

    fn tilde_value(&self, t: f64) -> f64 {
        let d = t - 1.0;
        0.5 * ((t + 1.0) - d * d * self.f_zero / self.value(t))
    }

    /// Scalar matrix mean `m_f(x, y) = y f(x/y)`, evaluated with the larger
    /// argument outside so that it is exactly symmetric.
    pub fn mean(&self, x: f64, y: f64) -> f64 {
        let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
        if hi <= 0.0 {
            return 0.0;
        }
        hi * self.value(lo / hi)
    }

    /// `m_{f̃}(x, y)`; vanishes when either argument is zero since `f̃(0) = 0`.
    pub fn mean_tilde(&self, x: f64, y: f64) -> f64 {
        let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
        if lo <= 0.0 {
            return 0.0;
        }
        hi * self.tilde_value(lo / hi)
    }

    /// Skew-information weight `(f(0)/2) (x - y)^2 / m_f(x, y)`, which equals
    /// `(f(0)/2) c^f(x, y) (x - y)^2`.
    pub fn weight(&self, x: f64, y: f64) -> f64 {
        if x == y {
            return 0.0;
        }
        let d = x - y;
        0.5 * self.f_zero * d * d / self.mean(x, y)
    }
}

impl fmt::Display for FOpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FKind::BuresUhlmann => write!(f, "bu"),
            FKind::WignerYanase => write!(f, "wy"),
            FKind::Wyd(a) => write!(f, "wyd:{a}"),
            FKind::QuantumVariance => write!(f, "qvar"),
        }
    }
}

/// Parses `bu | wy | wyd:<alpha> | qvar`.
impl FromStr for FOpSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "bu" => Ok(Self::bures_uhlmann()),
            "wy" => Ok(Self::wigner_yanase()),
            "qvar" => Ok(Self::quantum_variance()),
            other => match other.strip_prefix("wyd:") {
                Some(alpha) => {
                    let a: f64 = alpha
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad WYD parameter '{alpha}'")))?;
                    Self::wyd(a)
                }
                None => Err(Error::Parse(format!(
                    "unknown function '{s}' (expected bu, wy, wyd:<alpha> or qvar)"
                ))),
            },
        }
    }
}

fn wyd_value(a: f64, t: f64) -> f64 {
    let e = t - 1.0;
    if e.abs() < WYD_SERIES_RADIUS {
        // Taylor expansion about t = 1 through fourth order
        let q = a * a - a + 1.0;
        let c4 = (3.0 * a.powi(4) - 6.0 * a.powi(3) - 16.0 * a * a + 19.0 * a - 19.0) / 720.0;
        return 1.0 + e * (0.5 + e * (-q / 12.0 + e * (q / 24.0 + e * c4)));
    }
    let u = t.ln();
    let num = u.exp_m1();
    a * (1.0 - a) * num * num / ((a * u).exp_m1() * ((1.0 - a) * u).exp_m1())
}

/// `f̄(t) = (1 - t)^2 / (12 ((t + 1)/2 - (t - 1)/ln t))`.
///
/// With `t = e^{2s}` this is `√t sinh²s / (3 (cosh s - sinh s / s))`; the
/// denominator is summed as a power series for `|s| < 1`, which removes the
/// 0/0 at `t = 1`.
fn qvar_value(t: f64) -> f64 {
    if t == 1.0 {
        return 1.0;
    }
    let s = 0.5 * t.ln();
    if s.abs() < 1.0 {
        let s2 = s * s;
        // (cosh s - sinh s / s) / s^2 = Σ_{k≥1} 2k s^{2k-2} / (2k+1)!
        let mut term = 1.0 / 6.0;
        let mut sum = 2.0 * term;
        for k in 2..=12 {
            let kf = k as f64;
            term *= s2 / ((2.0 * kf) * (2.0 * kf + 1.0));
            sum += 2.0 * kf * term;
        }
        let sinhc = s.sinh() / s;
        return t.sqrt() * sinhc * sinhc / (3.0 * sum);
    }
    let d = 1.0 - t;
    d * d / (12.0 * (0.5 * (t + 1.0) - (t - 1.0) / t.ln()))
}

/// Precomputed weights over the eigenvalues of a state.
#[derive(Clone, Debug)]
pub struct WeightTable {
    pub eigenvalues: Vec<f64>,
    /// `g^f(p_i, p_j)`, zero on the diagonal and on degenerate pairs.
    pub g: DMatrix<f64>,
    /// `m_{f̃}(p_i, p_j)`.
    pub mean_tilde: DMatrix<f64>,
}

pub fn build_weight_table(spec: &FOpSpec, eigenvalues: &[f64]) -> WeightTable {
    let n = eigenvalues.len();
    let radius = eigenvalues.iter().fold(0.0f64, |a, &p| a.max(p.abs()));
    let gap = tol::DEGEN * radius;
    let p: Vec<f64> = eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let mut g = DMatrix::zeros(n, n);
    let mut mt = DMatrix::zeros(n, n);
    for i in 0..n {
        mt[(i, i)] = p[i];
        for j in (i + 1)..n {
            let (gij, mij) = if (p[i] - p[j]).abs() <= gap {
                (0.0, p[i])
            } else {
                (spec.weight(p[i], p[j]), spec.mean_tilde(p[i], p[j]))
            };
            g[(i, j)] = gij;
            g[(j, i)] = gij;
            mt[(i, j)] = mij;
            mt[(j, i)] = mij;
        }
    }
    WeightTable {
        eigenvalues: p,
        g,
        mean_tilde: mt,
    }
}

/// Worst observed violations of the defining properties of a standard function.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct FopReport {
    pub max_symmetry_violation: f64,
    pub normalization_violation: f64,
    /// Largest `-λ_min(f(B) - f(A))` over sampled pairs `0 ≤ A ≤ B`.
    pub max_monotonicity_violation: f64,
    pub pairs_checked: usize,
}

impl FopReport {
    pub fn is_clean(&self, tol: f64) -> bool {
        self.max_symmetry_violation <= tol
            && self.normalization_violation <= tol
            && self.max_monotonicity_violation <= tol
    }
}

/// Log-spaced grid on `[10^lo, 10^hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (points - 1).max(1) as f64))
        .collect()
}

/// Samples the three defining properties of a standard operator monotone
/// function. Matrix monotonicity is only sampled on random 2×2 pairs, so a
/// clean report is evidence, not proof.
pub fn check_fop_properties<F, R>(f: F, grid: &[f64], pairs: usize, rng: &mut R) -> FopReport
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let mut report = FopReport {
        normalization_violation: (f(1.0) - 1.0).abs(),
        pairs_checked: pairs,
        ..Default::default()
    };
    for &t in grid {
        let v = (t * f(1.0 / t) - f(t)).abs() / f(t).abs().max(1.0);
        report.max_symmetry_violation = report.max_symmetry_violation.max(v);
    }
    for _ in 0..pairs {
        let a = random_psd(rng);
        let b = &a + random_psd(rng);
        let fa = apply_fn(&a, &f);
        let fb = apply_fn(&b, &f);
        let diff = hermitian::hermitian_part(&(fb - fa));
        let min = hermitian::decompose_hermitian(&diff)
            .eigenvalues
            .last()
            .copied()
            .unwrap_or(0.0);
        report.max_monotonicity_violation = report.max_monotonicity_violation.max(-min);
    }
    report
}

pub fn check_spec_properties<R: Rng + ?Sized>(
    spec: &FOpSpec,
    grid: &[f64],
    pairs: usize,
    rng: &mut R,
) -> FopReport {
    check_fop_properties(|t| spec.value(t), grid, pairs, rng)
}

fn random_psd<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let g = hermitian::ginibre(2, 2, rng);
    let scale: f64 = rng.random_range(0.01..3.0);
    (&g * g.adjoint()).scale(scale)
}

fn apply_fn<F: Fn(f64) -> f64>(m: &CMatrix, f: &F) -> CMatrix {
    let s = hermitian::decompose_hermitian(m);
    let vals: Vec<f64> = s.eigenvalues.iter().map(|&l| f(l.max(0.0))).collect();
    s.from_eigenbasis(&hermitian::real_diag(&vals))
}
