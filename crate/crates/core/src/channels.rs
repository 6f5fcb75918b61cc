//! Local qubit channels that preserve commutativity, CQ/QC state
//! generators, and the Monte Carlo monotonicity scan.

use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{dim_err, Error, Result};
use crate::fops::FOpSpec;
use crate::hermitian::{
    embed_local, haar_unitary, hermitian_part, identity, kron, pauli, random_density_bures,
    random_density_hs, real_diag, tol, unitarity_defect, CMatrix, DensityMatrix, RngStream, Side,
};
use crate::qfcorr::qf_two_qubit_value;

/// `ρ ↦ p UρU† + (1-p) VρV†` on one qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitalQubitChannel {
    pub p: f64,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl UnitalQubitChannel {
    pub fn new(p: f64, u: CMatrix, v: CMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("mixing probability {p} outside [0, 1]")));
        }
        for w in [&u, &v] {
            if w.shape() != (2, 2) {
                return Err(dim_err(format!("expected a 2x2 unitary, got {:?}", w.shape())));
            }
            let defect = unitarity_defect(w);
            if defect > tol::UNIT {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(Self { p, u, v })
    }

    pub fn identity() -> Self {
        Self {
            p: 1.0,
            u: identity(2),
            v: identity(2),
        }
    }

    /// `½(ρ + σ_z ρ σ_z)`.
    pub fn z_dephasing() -> Self {
        Self {
            p: 0.5,
            u: identity(2),
            v: pauli(3),
        }
    }

    /// Mixture weights and unitaries `(q_k, U_k)`.
    pub fn terms(&self) -> [(f64, &CMatrix); 2] {
        [(self.p, &self.u), (1.0 - self.p, &self.v)]
    }

    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        let a = &self.u * m * self.u.adjoint();
        let b = &self.v * m * self.v.adjoint();
        hermitian_part(&(a.scale(self.p) + b.scale(1.0 - self.p)))
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.p.to_le_bytes());
        for w in [&self.u, &self.v] {
            for z in w.iter() {
                h.update(z.re.to_le_bytes());
                h.update(z.im.to_le_bytes());
            }
        }
        short_hex(&h.finalize())
    }
}

/// Measure in an orthonormal basis, flip the outcome with probability `p`,
/// and re-prepare in the same basis. Every output is diagonal in `basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiClassicalChannel {
    pub basis: CMatrix,
    pub p: f64,
}

impl SemiClassicalChannel {
    pub fn new(basis: CMatrix, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("flip probability {p} outside [0, 1]")));
        }
        let defect = unitarity_defect(&basis);
        if basis.shape() != (2, 2) || defect > tol::UNIT {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { basis, p })
    }

    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        let w = &self.basis;
        let local = w.adjoint() * m * w;
        let (q0, q1) = (local[(0, 0)].re, local[(1, 1)].re);
        let out0 = (1.0 - self.p) * q0 + self.p * q1;
        let out1 = self.p * q0 + (1.0 - self.p) * q1;
        hermitian_part(&(w * real_diag(&[out0, out1]) * w.adjoint()))
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.p.to_le_bytes());
        for z in self.basis.iter() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
        short_hex(&h.finalize())
    }
}

fn short_hex(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn random_unital_qubit<R: Rng + ?Sized>(rng: &mut R) -> UnitalQubitChannel {
    let u = haar_unitary(2, rng);
    let v = haar_unitary(2, rng);
    let p = rng.random::<f64>();
    UnitalQubitChannel { p, u, v }
}

pub fn random_semiclassical_qubit<R: Rng + ?Sized>(rng: &mut R) -> SemiClassicalChannel {
    let basis = haar_unitary(2, rng);
    let p = rng.random::<f64>();
    SemiClassicalChannel { basis, p }
}

/// Single-qubit map applied to one side of a two-qubit state.
pub trait QubitChannel {
    fn kraus(&self) -> Vec<CMatrix>;
}

impl QubitChannel for UnitalQubitChannel {
    fn kraus(&self) -> Vec<CMatrix> {
        self.terms()
            .iter()
            .map(|(q, w)| w.scale(q.sqrt()))
            .collect()
    }
}

impl QubitChannel for SemiClassicalChannel {
    fn kraus(&self) -> Vec<CMatrix> {
        // |w_j⟩⟨w_k| with weight T_jk
        let mut out = Vec::with_capacity(4);
        for j in 0..2 {
            for k in 0..2 {
                let t = if j == k { 1.0 - self.p } else { self.p };
                let ket = self.basis.column(j);
                let bra = self.basis.column(k).adjoint();
                out.push((ket * bra).scale(t.sqrt()));
            }
        }
        out
    }
}

pub fn apply_local<C: QubitChannel>(ch: &C, rho: &DensityMatrix, side: Side) -> Result<DensityMatrix> {
    if rho.dims() != [2, 2] {
        return Err(dim_err(format!(
            "local qubit channels need dims [2, 2], got {:?}",
            rho.dims()
        )));
    }
    let mut out = CMatrix::zeros(4, 4);
    for k in ch.kraus() {
        let big = embed_local(&k, side, rho.dims())?;
        out += &big * rho.matrix() * big.adjoint();
    }
    DensityMatrix::new(hermitian_part(&out), rho.dims())
}

fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn classical_block<R: Rng + ?Sized>(d_classical: usize, d_other: usize, classical_first: bool, rng: &mut R) -> CMatrix {
    let basis = haar_unitary(d_classical, rng);
    let probs = random_probabilities(d_classical, rng);
    let d = d_classical * d_other;
    let mut m = CMatrix::zeros(d, d);
    for (i, &pi) in probs.iter().enumerate() {
        let ket = basis.column(i);
        let proj = ket * ket.adjoint();
        let tau = random_density_hs(&[d_other], rng);
        let term = if classical_first {
            kron(&proj, tau.matrix())
        } else {
            kron(tau.matrix(), &proj)
        };
        m += term.scale(pi);
    }
    m
}

/// `Σ_i p_i |i⟩⟨i| ⊗ τ_i` with a Haar basis on A.
pub fn make_cq_state<R: Rng + ?Sized>(rng: &mut R, d_a: usize, d_b: usize) -> Result<DensityMatrix> {
    if d_a < 2 || d_b < 2 {
        return Err(dim_err(format!("dims must be at least 2, got ({d_a}, {d_b})")));
    }
    DensityMatrix::new(classical_block(d_a, d_b, true, rng), &[d_a, d_b])
}

/// `Σ_i p_i τ_i ⊗ |i⟩⟨i|` with a Haar basis on B.
pub fn make_qc_state<R: Rng + ?Sized>(rng: &mut R, d_a: usize, d_b: usize) -> Result<DensityMatrix> {
    if d_a < 2 || d_b < 2 {
        return Err(dim_err(format!("dims must be at least 2, got ({d_a}, {d_b})")));
    }
    DensityMatrix::new(classical_block(d_b, d_a, false, rng), &[d_a, d_b])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMeasure {
    #[serde(rename = "hs")]
    HilbertSchmidt,
    #[default]
    Bures,
}

impl StateMeasure {
    pub fn sample<R: Rng + ?Sized>(self, dims: &[usize], rng: &mut R) -> DensityMatrix {
        match self {
            StateMeasure::HilbertSchmidt => random_density_hs(dims, rng),
            StateMeasure::Bures => random_density_bures(dims, rng),
        }
    }
}

impl FromStr for StateMeasure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hs" => Ok(StateMeasure::HilbertSchmidt),
            "bures" => Ok(StateMeasure::Bures),
            other => Err(Error::Parse(format!("unknown state measure `{other}` (hs|bures)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    #[default]
    Unital,
    SemiClassical,
}

impl FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unital" => Ok(ChannelKind::Unital),
            "semiclassical" => Ok(ChannelKind::SemiClassical),
            other => Err(Error::Parse(format!(
                "unknown channel `{other}` (unital|semiclassical)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanOptions {
    pub channel: ChannelKind,
    pub measure: StateMeasure,
    pub side: Side,
    pub epsilon: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            channel: ChannelKind::Unital,
            measure: StateMeasure::Bures,
            side: Side::A,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    pub sample_index: u64,
    pub p: f64,
    pub q_in: f64,
    pub q_out: f64,
    pub violation: f64,
    pub channel_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub n_samples: usize,
    pub violation_count: usize,
    pub violation_fraction: f64,
    pub max_violation: f64,
    pub mean_q_in: f64,
    #[serde(skip)]
    pub records: Vec<ScanRecord>,
}

fn scan_sample(index: u64, f: &FOpSpec, seed: u64, opts: &ScanOptions) -> Result<ScanRecord> {
    let mut rng = RngStream::new(seed, index).rng();
    let rho = opts.measure.sample(&[2, 2], &mut rng);
    let (p, out, digest) = match opts.channel {
        ChannelKind::Unital => {
            let ch = random_unital_qubit(&mut rng);
            (ch.p, apply_local(&ch, &rho, opts.side)?, ch.digest())
        }
        ChannelKind::SemiClassical => {
            let ch = random_semiclassical_qubit(&mut rng);
            (ch.p, apply_local(&ch, &rho, opts.side)?, ch.digest())
        }
    };
    let q_in = qf_two_qubit_value(&rho, f)?;
    let q_out = qf_two_qubit_value(&out, f)?;
    Ok(ScanRecord {
        sample_index: index,
        p,
        q_in,
        q_out,
        violation: q_out - q_in,
        channel_digest: digest,
    })
}

/// Draws `n` (state, channel) pairs and compares `Q^f` before and after the
/// channel. Sample `i` uses `RngStream(seed, i)`.
pub fn monotonicity_scan(n: usize, f: &FOpSpec, seed: u64, opts: &ScanOptions) -> Result<ScanReport> {
    let records: Vec<ScanRecord> = (0..n as u64)
        .into_par_iter()
        .map(|i| scan_sample(i, f, seed, opts))
        .collect::<Result<_>>()?;
    let violation_count = records.iter().filter(|r| r.violation > opts.epsilon).count();
    let max_violation = records
        .iter()
        .map(|r| r.violation)
        .fold(f64::NEG_INFINITY, f64::max);
    let mean_q_in = if n == 0 {
        0.0
    } else {
        records.iter().map(|r| r.q_in).sum::<f64>() / n as f64
    };
    Ok(ScanReport {
        n_samples: n,
        violation_count,
        violation_fraction: if n == 0 { 0.0 } else { violation_count as f64 / n as f64 },
        max_violation: if n == 0 { 0.0 } else { max_violation },
        mean_q_in,
        records,
    })
}

pub const MAX_CSV_ROWS: usize = 10_000;

impl ScanReport {
    /// Writes `sample_index,p,q_in,q_out,violation`; unless `full`, keeps
    /// every `ceil(n / 10⁴)`-th record.
    pub fn write_csv<W: Write>(&self, out: W, full: bool) -> Result<()> {
        let stride = if full {
            1
        } else {
            self.records.len().div_ceil(MAX_CSV_ROWS).max(1)
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample_index", "p", "q_in", "q_out", "violation"])
            .map_err(csv_err)?;
        for r in self.records.iter().step_by(stride) {
            w.write_record([
                r.sample_index.to_string(),
                format!("{:.16e}", r.p),
                format!("{:.16e}", r.q_in),
                format!("{:.16e}", r.q_out),
                format!("{:.16e}", r.violation),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
