//! The linear (eps = 0) simulation and the Volterra solver describe the same
//! field: `zeta_n` read off the evolved state must match the solution of
//! `zeta = K * zeta + F` with `F_n(t) = g_n(0, n t)`.

use hmf_core::penrose::kernel_k;
use hmf_core::{
    run, solve_volterra, HomogeneousProfile, InteractionKernel, Perturbation, PhaseGrid, SimConfig, ZetaSeries,
};

fn crosscheck(profile: HomogeneousProfile, perturbation: Perturbation, t_final: f64) -> f64 {
    let cfg = SimConfig {
        grid: PhaseGrid::new(4, 81.0, 4097, 1).unwrap(),
        kernel: InteractionKernel::cosine(),
        profile: profile.clone(),
        perturbation,
        epsilon: 0.0,
        dt: 0.01,
        t_final,
        record_every: 1000,
        s: 7,
    };
    let traj = run(&cfg).unwrap();
    let g0 = &traj.snapshots[0].field;
    let sub = 4;
    let fine_dt = cfg.dt / sub as f64;
    let source = ZetaSeries::sample(vec![-1, 1], fine_dt, t_final, |n, t| g0.interp(n, n as f64 * t));
    let ik = cfg.kernel.clone();
    let vol = solve_volterra(|n, t| kernel_k(&ik, &profile, n, t), &source).unwrap();
    let sim = traj.zeta.mode(1).unwrap();
    let reference = vol.mode(1).unwrap();
    let scale = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = sim
        .iter()
        .enumerate()
        .map(|(i, z)| (z - reference[i * sub]).norm())
        .fold(0.0, f64::max);
    diff / scale
}

#[test]
fn linear_run_matches_volterra_gaussian_seed() {
    let rel = crosscheck(HomogeneousProfile::maxwellian(1.0), Perturbation::gaussian(1, 1.0), 20.0);
    println!("relative sup discrepancy {rel:e}");
    assert!(rel <= 1e-4, "{rel:e}");
}

#[test]
fn linear_run_matches_volterra_algebraic_seed_cold_profile() {
    let rel = crosscheck(HomogeneousProfile::maxwellian(0.7), Perturbation::algebraic(1, 7.0, 1.0), 20.0);
    println!("relative sup discrepancy {rel:e}");
    assert!(rel <= 1e-4, "{rel:e}");
}
