//! Brute-force search over Bloch directions at 2° resolution, compared with
//! the two-qubit closed form.

use std::f64::consts::PI;

use qf_core::correlations::Observable;
use qf_core::fops::FOpSpec;
use qf_core::hermitian::{pauli, random_density_hs, trace_product, RngStream, Side};
use qf_core::qfcorr::{qf_two_qubit, KernelContext};

const STEP_DEG: f64 = 2.0;

fn sphere_grid() -> Vec<[f64; 3]> {
    let step = STEP_DEG.to_radians();
    let n_theta = (PI / step).round() as usize;
    let n_phi = (2.0 * PI / step).round() as usize;
    let mut out = vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    for i in 1..n_theta {
        let theta = i as f64 * step;
        for k in 0..n_phi {
            let phi = k as f64 * step;
            out.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    out
}

#[test]
fn grid_search_never_beats_closed_form() {
    let grid = sphere_grid();
    let (bx, by, bz): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        grid.iter().map(|n| n[0]).collect(),
        grid.iter().map(|n| n[1]).collect(),
        grid.iter().map(|n| n[2]).collect(),
    );
    let paulis: Vec<_> = (1..=3).map(pauli).collect();
    let registry = FOpSpec::registry();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_gap: f64 = 0.0;
    for s in 0..50u64 {
        let rho = random_density_hs(&[2, 2], &mut RngStream::new(2024, s).rng());
        let f = registry[s as usize % registry.len()];
        let ctx = KernelContext::new(&rho, &f).unwrap();
        let closed = qf_two_qubit(&rho, &f).unwrap().value;
        let mut best = f64::NEG_INFINITY;
        for n_a in &grid {
            let k = ctx.kernel(Observable::bloch(*n_a).matrix(), Side::A).unwrap();
            let kv: Vec<f64> = paulis.iter().map(|p| trace_product(p, &k).re).collect();
            let top = bx
                .iter()
                .zip(&by)
                .zip(&bz)
                .map(|((x, y), z)| x * kv[0] + y * kv[1] + z * kv[2])
                .fold(f64::NEG_INFINITY, f64::max);
            best = best.max(top);
        }
        worst_excess = worst_excess.max(best - closed);
        worst_gap = worst_gap.max(closed - best);
    }
    assert!(worst_excess <= 1e-3, "grid exceeds closed form by {worst_excess:e}");
    // 2° misalignment on both sides costs at most 1 - cos²(√2°) in relative terms
    assert!(worst_gap < 2e-3, "grid falls short by {worst_gap:e}");
}
