use hmf_core::diagnostics::power_fit;
use hmf_core::grid::{embedding_constant, embedding_worst_ratio};
use hmf_core::{
    assemble_rhs, kernel_k, solve_volterra, sobolev_norm, Complex64, HomogeneousProfile, InteractionKernel,
    Perturbation, PhaseGrid, SimConfig, SpectralField, ZetaSeries,
};
use proptest::prelude::*;

fn grid() -> PhaseGrid {
    PhaseGrid::new(2, 16.0, 257, 1).unwrap()
}

/// Real field from per-mode Gaussian bumps `(center, width, re, im)` on modes 0..=2.
fn field(bumps: &[(f64, f64, f64, f64)]) -> SpectralField {
    let row = |k: i32, xi: f64| -> Complex64 {
        let (c, w, a, b) = bumps[k as usize];
        Complex64::new(a, b) * (-((xi - c) / w).powi(2)).exp()
    };
    SpectralField::from_fn(grid(), true, |n, xi| match n {
        0 => 0.5 * (row(0, xi) + row(0, -xi).conj()),
        n if n > 0 => row(n, xi),
        n => row(-n, -xi).conj(),
    })
}

fn bump() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-3.0..3.0f64, 0.6..2.5f64, -1.0..1.0f64, -1.0..1.0f64)
}

fn config() -> SimConfig {
    SimConfig {
        grid: grid(),
        kernel: InteractionKernel::new(vec![0.5, 0.25]).unwrap(),
        profile: HomogeneousProfile::maxwellian(1.0),
        perturbation: Perturbation::gaussian(1, 1.0),
        epsilon: 0.1,
        dt: 0.1,
        t_final: 2.0,
        record_every: 1,
        s: 10,
    }
}

fn series(a: f64, b: f64, w: f64) -> ZetaSeries {
    ZetaSeries::sample(vec![1], 0.05, 10.0, |_, t| Complex64::new(a * (-w * t).exp() + b * (1.0 + t * t).powf(-1.0), 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn volterra_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, w in 0.1..2.0f64) {
        let ik = InteractionKernel::cosine();
        let p = HomogeneousProfile::maxwellian(1.0);
        let k = |n, t| kernel_k(&ik, &p, n, t);
        let combo = solve_volterra(k, &series(a, b, w)).unwrap();
        let one = solve_volterra(k, &series(1.0, 0.0, w)).unwrap();
        let two = solve_volterra(k, &series(0.0, 1.0, w)).unwrap();
        let (c, x, y) = (combo.mode(1).unwrap(), one.mode(1).unwrap(), two.mode(1).unwrap());
        for i in 0..c.len() {
            prop_assert!((c[i] - (x[i] * a + y[i] * b)).norm() <= 1e-12 * (1.0 + c[i].norm()));
        }
    }

    #[test]
    fn volterra_is_causal(cut in 1.0..9.0f64, bump in -3.0..3.0f64) {
        let k = |_, t: f64| Complex64::new(-0.5 * (-t).exp(), 0.2);
        let base = series(1.0, 0.5, 0.7);
        let edited = ZetaSeries::sample(vec![1], 0.05, 10.0, |_, t| {
            let v = (-0.7 * t).exp() + 0.5 * (1.0 + t * t).powf(-1.0);
            Complex64::new(if t > cut { v + bump } else { v }, 0.0)
        });
        let (z0, z1) = (solve_volterra(k, &base).unwrap(), solve_volterra(k, &edited).unwrap());
        let (a, b) = (z0.mode(1).unwrap(), z1.mode(1).unwrap());
        for i in 0..a.len() {
            if z0.time(i) <= cut - 1e-9 {
                prop_assert_eq!(a[i], b[i]);
            }
        }
    }

    #[test]
    fn rhs_preserves_reality(b0 in bump(), b1 in bump(), b2 in bump(), t in 0.0..2.0f64) {
        let g = field(&[b0, b1, b2]);
        prop_assert!(g.reality_defect() < 1e-15);
        let r = assemble_rhs(&g, t, &config()).unwrap();
        prop_assert!(r.reality_defect() <= 1e-13 * (1.0 + r.max_abs()));
    }

    #[test]
    fn rhs_is_blind_to_the_mass_mode(b0 in bump(), t in 0.0..2.0f64) {
        // A pure x-average does not act on itself: every term needs zeta_k, k != 0.
        let zero = (0.0, 1.0, 0.0, 0.0);
        let g = field(&[b0, zero, zero]);
        let r = assemble_rhs(&g, t, &config()).unwrap();
        prop_assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn embedding_holds_with_cauchy_schwarz_constant(b0 in bump(), b1 in bump(), b2 in bump()) {
        let g = field(&[b0, b1, b2]);
        prop_assert!(embedding_worst_ratio(&g, 3, embedding_constant(1)).unwrap() <= 1.0);
    }

    #[test]
    fn sobolev_norm_is_homogeneous(b0 in bump(), b1 in bump(), a in -3.0..3.0f64, n in 0..4i32) {
        let g = field(&[b0, b1, (0.0, 1.0, 0.0, 0.0)]);
        let lhs = sobolev_norm(&g.scaled(a), n, 1).unwrap();
        let rhs = a.abs() * sobolev_norm(&g, n, 1).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn power_fit_recovers_exponent(slope in -8.0..-0.5f64, c in 0.1..10.0f64) {
        let t: Vec<f64> = (1..=400).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = t.iter().map(|s| c * s.powf(slope)).collect();
        let fit = power_fit(&t, &y, (2.0, 20.0)).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!(fit.r2 > 1.0 - 1e-12);
    }
}
