//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::Rng;

use qf_core::appendix::appendix_trials;
use qf_core::channels::{make_cq_state, make_qc_state, monotonicity_scan, ChannelKind, ScanOptions, StateMeasure};
use qf_core::correlations::{
    f_correlation, f_correlation_via_covariances, masi, nonadditivity_gap, variance, Eigenframe,
    Observable,
};
use qf_core::fops::FOpSpec;
use qf_core::hermitian::{
    ginibre, hermitian_part, partial_trace, random_density_hs, random_pure_state, DensityMatrix,
    RngStream, Side,
};
use qf_core::io::read_state;
use qf_core::qfcorr::{qf_optimize, qf_two_qubit, OptimizeOptions};
use qf_core::thermal::{
    default_fd_step, gibbs, quantum_variance_in_frame, site_pauli, susceptibility_fd,
    tfi_hamiltonian, QvarMethod, SpinChainSpec,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn random_observable<R: Rng>(d: usize, rng: &mut R) -> Observable {
    Observable::new(hermitian_part(&ginibre(d, d, rng))).unwrap()
}

fn local_pair<R: Rng>(dims: &[usize], rng: &mut R) -> (Observable, Observable) {
    let a = random_observable(dims[0], rng).embed(Side::A, dims).unwrap();
    let b = random_observable(dims[1], rng).embed(Side::B, dims).unwrap();
    (a, b)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn ac1_cq_qc_annihilation() -> Verdict {
    let start = Instant::now();
    let fs = FOpSpec::registry();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for (g, dims) in [[2usize, 2], [2, 3]].iter().enumerate() {
        for (m, make) in [make_cq_state::<rand_chacha::ChaCha20Rng>, make_qc_state].iter().enumerate() {
            for s in 0..1000u64 {
                let mut rng = RngStream::new(101, (g * 2 + m) as u64 * 10_000 + s).rng();
                let rho = make(&mut rng, dims[0], dims[1]).unwrap();
                let frame = Eigenframe::new(&rho);
                for _ in 0..10 {
                    let (a, b) = local_pair(dims, &mut rng);
                    for f in &fs {
                        worst = worst.max(frame.f_correlation(a.matrix(), b.matrix(), f).abs());
                        count += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-9 && elapsed < Duration::from_secs(30),
        format!("{count} evaluations, max |Υ| = {worst:.2e} (tol 1e-9), {:.1} s (limit 30 s)", elapsed.as_secs_f64()),
    )
}

/// Random states and local observable pairs over a few bipartitions.
fn corpus() -> Vec<(DensityMatrix, Observable, Observable)> {
    let dims_cycle = [[2usize, 2], [2, 3], [3, 3], [3, 2]];
    (0..1000u64)
        .map(|i| {
            let mut rng = RngStream::new(202, i).rng();
            let dims = dims_cycle[i as usize % dims_cycle.len()];
            let rho = random_density_hs(&dims, &mut rng);
            let (a, b) = local_pair(&dims, &mut rng);
            (rho, a, b)
        })
        .collect()
}

fn ac2_two_routes(corpus: &[(DensityMatrix, Observable, Observable)]) -> Verdict {
    let mut worst = 0.0f64;
    for (rho, a, b) in corpus {
        for f in FOpSpec::registry() {
            let direct = f_correlation(rho, a, b, &f).unwrap();
            let via = f_correlation_via_covariances(rho, a, b, &f).unwrap();
            worst = worst.max((direct - via).abs());
        }
    }
    verdict(worst < 1e-9, format!("max |Υ - (Cov - Cov~)| = {worst:.2e} (tol 1e-9)"))
}

fn ac3_nonadditivity(corpus: &[(DensityMatrix, Observable, Observable)]) -> Verdict {
    let mut worst = 0.0f64;
    for (rho, a, b) in corpus {
        for f in FOpSpec::registry() {
            let direct = f_correlation(rho, a, b, &f).unwrap();
            let gap = nonadditivity_gap(rho, a, b, &f).unwrap();
            worst = worst.max((direct - gap).abs());
        }
    }
    verdict(worst < 1e-9, format!("max |Υ - gap| = {worst:.2e} (tol 1e-9)"))
}

fn ac4_pure_states() -> Verdict {
    let mut spread = 0.0f64;
    let mut err = 0.0f64;
    for i in 0..500u64 {
        let mut rng = RngStream::new(404, i).rng();
        let psi = random_pure_state(4, &mut rng);
        let rho = DensityMatrix::from_pure(&psi, &[2, 2]).unwrap();
        // 2 λ₁ λ₂ = 2 sqrt(det ρ_A)
        let ra = partial_trace(&rho, &[0]).unwrap();
        let m = ra.matrix();
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
        let oracle = 2.0 * det.sqrt();
        let values: Vec<f64> = FOpSpec::registry()
            .iter()
            .map(|f| qf_two_qubit(&rho, f).unwrap().value)
            .collect();
        let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        spread = spread.max(hi - lo);
        err = err.max(values.iter().map(|v| (v - oracle).abs()).fold(0.0, f64::max));
    }
    let bell = read_state(&fixture("bell.json")).unwrap();
    let bell_err = FOpSpec::registry()
        .iter()
        .map(|f| (qf_two_qubit(&bell, f).unwrap().value - 1.0).abs())
        .fold(0.0, f64::max);
    verdict(
        spread < 1e-6 && err < 1e-6 && bell_err < 1e-8,
        format!(
            "f-spread {spread:.2e} (tol 1e-6), |Q - 2λ₁λ₂| {err:.2e} (tol 1e-6), Bell |Q - 1| {bell_err:.2e} (tol 1e-8)"
        ),
    )
}

fn ac5_closed_vs_optimizer() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let opts = OptimizeOptions {
        restarts: 20,
        ..Default::default()
    };
    for i in 0..200u64 {
        let rho = random_density_hs(&[2, 2], &mut RngStream::new(505, i).rng());
        for f in FOpSpec::registry() {
            let closed = qf_two_qubit(&rho, &f).unwrap().value;
            let opt = qf_optimize(&rho, &f, &OptimizeOptions { seed: i, ..opts }).unwrap().value;
            worst = worst.max((closed - opt).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-6 && elapsed < Duration::from_secs(120),
        format!("max |Q_opt - Q_closed| = {worst:.2e} (tol 1e-6), {:.1} s (limit 120 s)", elapsed.as_secs_f64()),
    )
}

fn ac6_scan() -> Verdict {
    let start = Instant::now();
    let f = FOpSpec::wigner_yanase();
    let opts = ScanOptions::default();
    let unital = monotonicity_scan(100_000, &f, 0, &opts).unwrap();
    let semi = monotonicity_scan(
        100_000,
        &f,
        0,
        &ScanOptions {
            channel: ChannelKind::SemiClassical,
            ..opts
        },
    )
    .unwrap();
    let elapsed = start.elapsed();
    let hs = monotonicity_scan(
        100_000,
        &f,
        0,
        &ScanOptions {
            measure: StateMeasure::HilbertSchmidt,
            ..opts
        },
    )
    .unwrap();
    let frac = unital.violation_fraction;
    verdict(
        (1e-4..=1e-2).contains(&frac) && semi.violation_count == 0 && elapsed < Duration::from_secs(300),
        format!(
            "Bures inputs: fraction {frac:.2e} ({} / 1e5, band [1e-4, 1e-2]), max violation {:.2e}; semi-classical violations {}; {:.1} s (limit 300 s); info: HS inputs fraction {:.2e}",
            unital.violation_count,
            unital.max_violation,
            semi.violation_count,
            elapsed.as_secs_f64(),
            hs.violation_fraction
        ),
    )
}

fn ac7_thermal() -> Verdict {
    let start = Instant::now();
    let mut worst_route = 0.0f64;
    let mut worst_km = 0.0f64;
    let mut cases = 0;
    for n in [2usize, 3, 4] {
        let spec = SpinChainSpec { n, j: 1.0, h: 1.0 };
        let h = tfi_hamiltonian(&spec).unwrap();
        let dims = spec.dims();
        for (ti, t) in [0.2, 1.0, 5.0].into_iter().enumerate() {
            let model = gibbs(&h, &dims, t).unwrap();
            let frame = model.frame();
            let mut rng = RngStream::new(707, (n * 10 + ti) as u64).rng();
            for _ in 0..5 {
                let sa = rng.random_range(0..n);
                let sb = (sa + rng.random_range(1..n)) % n;
                let a = site_pauli(rng.random_range(1..=3), sa, n).unwrap();
                let b = site_pauli(rng.random_range(1..=3), sb, n).unwrap();
                let (oa, ob) = (Observable::new(a.clone()).unwrap(), Observable::new(b.clone()).unwrap());
                let cov = qf_core::correlations::covariance(&model.rho, &oa, &ob).unwrap();
                let chi = susceptibility_fd(&h, &dims, t, &a, &b, default_fd_step(&b)).unwrap();
                let thermo = cov - t * chi;
                let spectral = frame.f_correlation(&a, &b, &FOpSpec::quantum_variance());
                worst_route = worst_route.max((thermo - spectral).abs());
                worst_km = worst_km.max((t * chi - model.kubo_mori(&a, &b)).abs());
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst_route < 1e-5 && worst_km < 1e-5 && elapsed < Duration::from_secs(60),
        format!(
            "{cases} cases, max |Cov - Tχ - Υ^QVAR| = {worst_route:.2e}, max |Tχ - KM| = {worst_km:.2e} (tol 1e-5), {:.1} s (limit 60 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn ac8_quadrature() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..200u64 {
        let mut rng = RngStream::new(808, i).rng();
        let d = 2 + (i as usize % 3);
        let rho = random_density_hs(&[d], &mut rng);
        let o = random_observable(d, &mut rng);
        let frame = Eigenframe::new(&rho);
        let closed = quantum_variance_in_frame(&frame, o.matrix(), QvarMethod::ClosedForm);
        let quad = quantum_variance_in_frame(&frame, o.matrix(), QvarMethod::Quadrature);
        worst = worst.max((closed - quad).abs());
    }
    verdict(worst < 1e-7, format!("max |closed - 32-node quadrature| = {worst:.2e} (tol 1e-7)"))
}

fn ac9_appendix() -> Verdict {
    let start = Instant::now();
    let s = appendix_trials(1000, &FOpSpec::registry(), 909).unwrap();
    let elapsed = start.elapsed();
    verdict(
        s.max_identity_residual < 1e-9 && s.max_contraction_violation <= 1e-9 && elapsed < Duration::from_secs(60),
        format!(
            "{} trials, max |M_out - S M_in| = {:.2e} (tol 1e-9), max s_max increase = {:.2e} (tol 1e-9), {:.1} s (limit 60 s)",
            s.trials,
            s.max_identity_residual,
            s.max_contraction_violation,
            elapsed.as_secs_f64()
        ),
    )
}

fn ac10_sandwich() -> Verdict {
    let fs = FOpSpec::registry();
    let mut worst_low = 0.0f64;
    let mut worst_high = 0.0f64;
    for i in 0..1000u64 {
        let mut rng = RngStream::new(1010, i).rng();
        let d = 2 + (i as usize % 4);
        let rho = random_density_hs(&[d], &mut rng);
        let o = random_observable(d, &mut rng);
        let f = fs[i as usize % fs.len()];
        let info = masi(&rho, &o, &f).unwrap();
        let var = variance(&rho, &o).unwrap();
        worst_low = worst_low.max(-info);
        worst_high = worst_high.max(info - var);
    }
    let mut worst_pure = 0.0f64;
    for i in 0..200u64 {
        let mut rng = RngStream::new(1011, i).rng();
        let d = 2 + (i as usize % 4);
        let rho = DensityMatrix::from_pure(&random_pure_state(d, &mut rng), &[d]).unwrap();
        let o = random_observable(d, &mut rng);
        let var = variance(&rho, &o).unwrap();
        for f in &fs {
            worst_pure = worst_pure.max((masi(&rho, &o, f).unwrap() - var).abs());
        }
    }
    verdict(
        worst_low <= 1e-9 && worst_high <= 1e-9 && worst_pure < 1e-9,
        format!(
            "max(-I) = {worst_low:.2e}, max(I - Var) = {worst_high:.2e} (tol 1e-9), pure max |I - Var| = {worst_pure:.2e} (tol 1e-9)"
        ),
    )
}

fn run_qf(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qf"));
    cmd.args(args).current_dir(dir);
    if let Some(t) = threads {
        cmd.env("QF_THREADS", t);
    }
    cmd.output().expect("qf runs")
}

fn ac11_determinism() -> Verdict {
    let bell = fixture("bell.json");
    let mixed = fixture("qubit_qutrit.json");
    let (bell, mixed) = (bell.to_str().unwrap(), mixed.to_str().unwrap());
    let cases: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("compute", vec!["compute", "--state", mixed, "--f", "qvar", "--out", "out.json"], vec!["out.json"]),
        ("quantify", vec!["quantify", "--state", mixed, "--f", "wyd:0.25", "--seed", "3", "--out", "out.json"], vec!["out.json"]),
        ("quantify-bell", vec!["quantify", "--state", bell, "--out", "out.json"], vec!["out.json"]),
        ("scan", vec!["scan", "--samples", "20000", "--seed", "7", "--out", "scan.csv"], vec!["scan.csv"]),
        ("thermal", vec!["thermal", "--model", "tfi", "--n", "2", "--t", "0.5", "--site-a", "0", "--site-b", "1", "--out", "out.json"], vec!["out.json"]),
        ("appendix-check", vec!["appendix-check", "--trials", "200", "--seed", "4", "--out", "out.json"], vec!["out.json"]),
        ("random-state", vec!["random-state", "--dims", "2,3", "--seed", "9", "--out", "state.json"], vec!["state.json"]),
    ];
    let mut failures = Vec::new();
    for (name, args, artifacts) in &cases {
        let mut captures = Vec::new();
        for threads in [None, Some("1"), None] {
            let dir = tempfile::tempdir().unwrap();
            let out = run_qf(args, dir.path(), threads);
            if !out.status.success() {
                failures.push(format!("{name}: exit {:?}", out.status.code()));
                break;
            }
            let mut bytes = out.stdout.clone();
            for a in artifacts {
                bytes.extend(std::fs::read(dir.path().join(a)).unwrap_or_default());
            }
            captures.push(bytes);
        }
        if captures.len() == 3 && !(captures[0] == captures[1] && captures[1] == captures[2]) {
            failures.push(format!("{name}: artifacts differ"));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} subcommand configs, 3 runs each (default and QF_THREADS=1): byte-identical", cases.len())
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let corpus = corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("AC1  CQ/QC annihilation", Box::new(ac1_cq_qc_annihilation)),
        ("AC2  two-route equality", Box::new(|| ac2_two_routes(&corpus))),
        ("AC3  non-additivity identity", Box::new(|| ac3_nonadditivity(&corpus))),
        ("AC4  pure-state universality", Box::new(ac4_pure_states)),
        ("AC5  closed form vs optimizer", Box::new(ac5_closed_vs_optimizer)),
        ("AC6  monotonicity scan", Box::new(ac6_scan)),
        ("AC7  thermal route agreement", Box::new(ac7_thermal)),
        ("AC8  quadrature consistency", Box::new(ac8_quadrature)),
        ("AC9  appendix contraction", Box::new(ac9_appendix)),
        ("AC10 MASI sandwich", Box::new(ac10_sandwich)),
        ("AC11 CLI determinism", Box::new(ac11_determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let v = check();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        if !v.passed {
            failed += 1;
        }
        println!("{tag} {name:<32} {} [{:.2} s]", v.detail, start.elapsed().as_secs_f64());
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
