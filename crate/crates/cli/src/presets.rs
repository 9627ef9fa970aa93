//! Named experiments with built-in assertions.
//!
//! Each preset runs its pipeline, writes artifacts into a fresh directory and
//! returns a list of [`Check`]s; the preset passes iff every check passes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hmf_core::diagnostics::{
    power_fit, scattering_distance, scattering_increments, weighted_decay_fit, MonitorVariant, PowerFit,
};
use hmf_core::penrose::{kernel_k, unstable_root, DEFAULT_KAPPA};
use hmf_core::sim::Trajectory;
use hmf_core::{
    critical_parameter, decay_fit, lemvolterra_harness, penrose_check, q_monitor, run, scattering_limit,
    solve_volterra, weak_limit_profile, Complex64, Error, HomogeneousProfile, InteractionKernel, Perturbation,
    PhaseGrid, ScanParams, SimConfig, ZetaSeries,
};
use serde::Serialize;

use crate::config::to_doc;
use crate::output::{penrose_entries, sci, write_ratios, write_timeseries, write_zeta, RunDir};
use crate::CliError;

pub const PRESETS: [&str; 7] = [
    "linear-crosscheck",
    "damping-cosine",
    "unstable-anticosine",
    "scattering",
    "finite-M2",
    "penrose-scan",
    "volterra-analytic",
];

/// One assertion: `value` compared against `bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: format!("<= {bound:e}"), pass: value <= bound, note: None }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: format!(">= {bound:e}"), pass: value >= bound, note: None }
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: format!("< {bound:e}"), pass: value < bound, note: None }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("{target} +- {tol}"),
            pass: (value - target).abs() <= tol,
            note: None,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: "true".into(), pass: ok, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{verdict}  {}: {:.6e} (want {})", self.name, self.value, self.bound);
        if let Some(n) = &self.note {
            s.push_str(&format!(" [{n}]"));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PresetReport {
    pub preset: String,
    // Wall time and location stay out of report.json so reruns are byte-identical.
    #[serde(skip)]
    pub dir: PathBuf,
    #[serde(skip)]
    pub seconds: f64,
    pub checks: Vec<Check>,
}

impl PresetReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, prefix: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name.starts_with(prefix))
    }
}

/// Runs preset `name` into `<out>/<name>-<timestamp>/`.
pub fn run_preset(name: &str, out: &Path) -> Result<PresetReport, CliError> {
    if !PRESETS.contains(&name) {
        return Err(CliError::Usage(format!("unknown preset `{name}`; available: {}", PRESETS.join(", "))));
    }
    let dir = RunDir::timestamped(out, name)?;
    let start = Instant::now();
    let checks = match name {
        "linear-crosscheck" => linear_crosscheck(&dir)?,
        "damping-cosine" => damping_study(&dir, &damping_config(), false)?,
        "scattering" => damping_study(&dir, &damping_config(), true)?,
        "unstable-anticosine" => unstable_anticosine(&dir)?,
        "finite-M2" => finite_m2(&dir)?,
        "penrose-scan" => penrose_scan(&dir)?,
        "volterra-analytic" => volterra_analytic(&dir)?,
        _ => unreachable!(),
    };
    let report =
        PresetReport { preset: name.into(), dir: dir.path().to_path_buf(), seconds: start.elapsed().as_secs_f64(), checks };
    dir.json("report.json", &report)?;
    Ok(report)
}

fn grid(n_max: i64, xi_max: f64, n_xi: i64) -> PhaseGrid {
    PhaseGrid::new(n_max, xi_max, n_xi, 1).expect("preset grids are valid")
}

pub fn crosscheck_config() -> SimConfig {
    SimConfig {
        grid: grid(4, 81.0, 4097),
        kernel: InteractionKernel::cosine(),
        profile: HomogeneousProfile::maxwellian(1.0),
        perturbation: Perturbation::gaussian(1, 1.0),
        epsilon: 0.0,
        dt: 0.01,
        t_final: 20.0,
        record_every: 100,
        s: 7,
    }
}

/// Stable cosine run with an algebraic `<xi>^{-7}` seed, shared by the damping
/// and scattering presets.
pub fn damping_config() -> SimConfig {
    SimConfig {
        grid: grid(2, 160.5, 2569),
        kernel: InteractionKernel::cosine(),
        profile: HomogeneousProfile::maxwellian(1.0),
        perturbation: Perturbation::algebraic(1, 7.0, 1.0),
        epsilon: 0.01,
        dt: 0.1,
        t_final: 80.0,
        record_every: 1,
        s: 7,
    }
}

pub fn unstable_config() -> SimConfig {
    SimConfig {
        grid: grid(1, 32.0, 1025),
        kernel: InteractionKernel::new(vec![-0.5]).expect("valid kernel"),
        profile: HomogeneousProfile::maxwellian(0.4),
        perturbation: Perturbation::gaussian(1, 1e-6),
        epsilon: 0.0,
        dt: 0.05,
        t_final: 30.0,
        record_every: 10,
        s: 7,
    }
}

/// Two-mode kernel; the seed tail `s' = s + 1` is the smallest integer tail
/// with a finite `H^s` norm at `s = 10`.
pub fn finite_m_config() -> SimConfig {
    SimConfig {
        grid: grid(4, 160.5, 2569),
        kernel: InteractionKernel::new(vec![0.5, 0.25]).expect("valid kernel"),
        profile: HomogeneousProfile::maxwellian(1.0),
        perturbation: Perturbation::algebraic(1, 11.0, 1.0),
        epsilon: 0.01,
        dt: 0.05,
        t_final: 40.0,
        record_every: 1,
        s: 10,
    }
}

pub fn conservation_checks(traj: &Trajectory) -> Vec<Check> {
    vec![
        Check::at_most("conservation: mass drift", traj.mass_drift(), 1e-12),
        Check::at_most("conservation: L2 drift", traj.l2_drift(), 1e-6),
        Check::at_most("conservation: reality defect", traj.max_reality_defect(), 1e-10),
    ]
}

pub fn write_run(dir: &RunDir, cfg: &SimConfig, traj: &Trajectory) -> Result<(), CliError> {
    dir.json("config.json", &to_doc(cfg))?;
    write_timeseries(dir.file("timeseries.csv")?, traj, cfg)?;
    write_zeta(dir.file("zeta.csv")?, &traj.zeta)?;
    dir.snapshot("g_initial.csv", &traj.snapshots[0].field)?;
    dir.snapshot("g_final.csv", &traj.final_snapshot().field)?;
    if let Some(p) = &traj.penrose {
        dir.json("penrose.json", &penrose_entries(p))?;
    }
    Ok(())
}

/// Fit on `window`, falling back to the largest usable sub-window when the
/// series underflows; the fallback is noted on the resulting check.
fn fit_with_fallback(fit: impl Fn((f64, f64)) -> hmf_core::Result<PowerFit>, window: (f64, f64)) -> (Option<PowerFit>, Option<String>) {
    match fit(window) {
        Ok(f) => (Some(f), None),
        Err(Error::FitWindow { usable: Some(w), reason, .. }) => match fit(w) {
            Ok(f) => (Some(f), Some(format!("{reason}; fitted on usable sub-window [{:.2}, {:.2}]", w.0, w.1))),
            Err(e) => (None, Some(e.to_string())),
        },
        Err(e) => (None, Some(e.to_string())),
    }
}

fn slope_check(name: String, fit: (Option<PowerFit>, Option<String>), bound: f64, upper: bool) -> Check {
    let value = fit.0.map_or(f64::NAN, |f| f.slope);
    let mut c = if upper { Check::at_most(name, value, bound) } else { Check::at_least(name, value, bound) };
    if let Some(f) = fit.0 {
        c = c.with_note(format!("r2 = {:.4}", f.r2));
    }
    if let Some(n) = fit.1 {
        let prev = c.note.take().map(|p| format!("{p}; ")).unwrap_or_default();
        c = c.with_note(format!("{prev}{n}"));
    }
    c
}

fn linear_crosscheck(dir: &RunDir) -> Result<Vec<Check>, CliError> {
    let cfg = crosscheck_config();
    let traj = run(&cfg)?;
    write_run(dir, &cfg, &traj)?;
    // Volterra side on a 4x finer time grid, sourced from the initial field.
    let sub = 4;
    let g0 = &traj.snapshots[0].field;
    let source = ZetaSeries::sample(vec![-1, 1], cfg.dt / sub as f64, cfg.t_final, |n, t| g0.interp(n, n as f64 * t));
    let (ik, profile) = (cfg.kernel.clone(), cfg.profile.clone());
    let vol = solve_volterra(|n, t| kernel_k(&ik, &profile, n, t), &source)?;
    let coarse: Vec<Vec<Complex64>> =
        vol.columns().map(|(_, c)| c.iter().step_by(sub).copied().collect()).collect();
    let vol_coarse = ZetaSeries::from_columns(cfg.dt, vol.modes().to_vec(), coarse)?;
    write_zeta(dir.file("zeta_volterra.csv")?, &vol_coarse)?;
    let sim = traj.zeta.mode(1).expect("mode 1 active");
    let reference = vol_coarse.mode(1).expect("mode 1 active");
    let scale = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = sim.iter().zip(reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mut checks = vec![Check::at_most("crosscheck: relative sup discrepancy of zeta_1", diff / scale, 1e-4)];
    checks.extend(conservation_checks(&traj));
    Ok(checks)
}

#[derive(Serialize)]
struct FitRecord {
    quantity: String,
    window: (f64, f64),
    slope: f64,
    r2: f64,
    samples: usize,
}

fn record(quantity: &str, f: &Option<PowerFit>) -> Option<FitRecord> {
    f.map(|f| FitRecord { quantity: quantity.into(), window: (f.t_a, f.t_b), slope: f.slope, r2: f.r2, samples: f.samples })
}

fn write_monitor(dir: &RunDir, mon: &hmf_core::NormMonitor) -> Result<(), CliError> {
    use std::io::Write;
    let mut f = dir.file("monitor.csv")?;
    writeln!(f, "t,n_part,m_part,low_part,edge_mass,q_sup")?;
    for (s, q) in mon.samples.iter().zip(&mon.q_sup) {
        writeln!(f, "{},{},{},{},{},{}", sci(s.t), sci(s.n_part), sci(s.m_part), sci(s.low_part), sci(s.edge_mass), sci(*q))?;
    }
    f.flush()?;
    Ok(())
}

/// Damping rate of `zeta_1`, and with `scatter` also the scattering state,
/// its convergence rate and the weak limit profile.
pub fn damping_study(dir: &RunDir, cfg: &SimConfig, scatter: bool) -> Result<Vec<Check>, CliError> {
    let traj = run(cfg)?;
    write_run(dir, cfg, &traj)?;
    let s_tail = cfg.perturbation.tail_exponent;
    let (t, window) = (cfg.t_final, (cfg.t_final / 8.0, cfg.t_final));
    let mut checks = Vec::new();
    let mut fits = Vec::new();

    let plain = fit_with_fallback(|w| decay_fit(&traj.zeta, w), window);
    fits.extend(record("|zeta_1|", &plain.0));
    checks.push(slope_check(
        format!("damping: |zeta_1| slope on [{}, {t}]", window.0),
        plain,
        -(s_tail - 1.0) + 0.5,
        true,
    ));
    let gamma = s_tail - 1.0;
    let weighted = fit_with_fallback(|w| weighted_decay_fit(&traj.zeta, 1, gamma, w), window);
    fits.extend(record("<t>^(s'-1) |zeta_1|", &weighted.0));
    checks.push(slope_check(format!("damping: <t>^{gamma} |zeta_1| slope on [{}, {t}]", window.0), weighted, -0.5, false));

    let mon = q_monitor(&traj, cfg.s, MonitorVariant::Cosine)?;
    write_monitor(dir, &mon)?;
    checks.push(Check::below("damping: q_sup(T) / q_sup(T/2)", mon.growth_ratio(), 2.0));
    checks.extend(conservation_checks(&traj));

    if scatter {
        let lim = scattering_limit(&traj, cfg)?;
        dir.snapshot("g_inf.csv", &lim.field)?;
        let eta_inf = weak_limit_profile(&lim.field, &cfg.profile, cfg.epsilon)?;
        eta_inf.write_csv(dir.file("eta_inf.csv")?)?;

        let dist = scattering_distance(&traj, cfg, 1)?;
        {
            use std::io::Write;
            let mut f = dir.file("distance_h1.csv")?;
            writeln!(f, "t,dist_h1")?;
            for (t, d) in &dist {
                writeln!(f, "{},{}", sci(*t), sci(*d))?;
            }
            f.flush()?;
        }
        // The last tenth is excluded: A(T) - A(t) vanishes identically at t = T,
        // which would steepen the fit.
        let swin = (t / 10.0, 0.9 * t);
        let (ts, ds): (Vec<f64>, Vec<f64>) = dist.iter().copied().unzip();
        let sfit = fit_with_fallback(|w| power_fit(&ts, &ds, w), swin);
        fits.extend(record("||g(t) - g_inf||_H1", &sfit.0));
        let r = 1.0;
        checks.push(slope_check(
            format!("scattering: ||g - g_inf||_H1 slope on [{}, {}]", swin.0, swin.1),
            sfit,
            -(cfg.s as f64 - r - 3.0) + 1.0,
            true,
        ));
        let late: Vec<f64> = dist.iter().filter(|(s, _)| *s >= 0.5 * t).map(|(_, d)| *d).collect();
        let monotone = late.windows(2).all(|w| w[1] <= w[0]);
        checks.push(Check::holds("scattering: ||g - g_inf||_H1 nonincreasing on [T/2, T]", monotone));

        // Weak convergence of the x-average at fixed xi.
        let probes = [0.5, 1.0, 2.0];
        let eps = cfg.epsilon;
        let pointwise = scattering_increments(&traj, cfg, |d| {
            Ok(probes.iter().map(|&xi| eps * d.interp(0, xi).norm()).collect::<Vec<f64>>())
        })?;
        let at = |target: f64| {
            pointwise.iter().min_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs())).map(|p| p.1.clone())
        };
        let (early, mid) = (at(t / 10.0).unwrap_or_default(), at(t / 2.0).unwrap_or_default());
        // The zero mode settles fast; the T/2 increment may sit below roundoff.
        for (i, xi) in probes.iter().enumerate() {
            let mut c = Check::at_most(format!("weak limit: |f_0(T/2, {xi}) - eta_inf({xi})|"), mid[i], early[i]);
            c.pass &= early[i] > 0.0;
            checks.push(c.with_note("bound is the same distance at T/10"));
        }
        #[derive(Serialize)]
        struct Rates {
            fits: Vec<FitRecord>,
            t_final: f64,
            tail_estimate: f64,
            eta_inf_mass: f64,
        }
        dir.json(
            "rates.json",
            &Rates { fits, t_final: lim.t_final, tail_estimate: lim.tail_estimate, eta_inf_mass: eta_inf.mass() },
        )?;
    } else {
        dir.json("fits.json", &fits)?;
    }
    Ok(checks)
}

/// Least-squares slope of `ln y` against `t`.
fn exp_rate(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    sxy / sxx
}

fn unstable_anticosine(dir: &RunDir) -> Result<Vec<Check>, CliError> {
    let cfg = unstable_config();
    let traj = run(&cfg)?;
    write_run(dir, &cfg, &traj)?;
    let stable = traj.penrose.as_ref().map_or(true, |p| p.stable);
    let lambda = unstable_root(&cfg.kernel, &cfg.profile, 1)?.unwrap_or(f64::NAN);
    let col = traj.zeta.mode(1).expect("mode 1 active");
    let growth = col.last().unwrap().norm() / col[0].norm();
    let (ts, ys): (Vec<f64>, Vec<f64>) = (0..col.len())
        .map(|i| (traj.zeta.time(i), col[i].norm()))
        .filter(|(t, _)| *t >= 0.5 * cfg.t_final)
        .unzip();
    let rate = exp_rate(&ts, &ys);
    let mut checks = vec![
        Check::holds("instability: penrose_check reports unstable", !stable),
        Check::at_least(format!("instability: |zeta_1(T)| / |zeta_1(0)| over [0, {}]", cfg.t_final), growth, 10.0),
        Check::at_most("instability: |rate - lambda| / lambda", (rate - lambda).abs() / lambda, 0.2)
            .with_note(format!("rate {rate:.6}, lambda {lambda:.6}")),
    ];
    checks.extend(conservation_checks(&traj));
    Ok(checks)
}

fn finite_m2(dir: &RunDir) -> Result<Vec<Check>, CliError> {
    let cfg = finite_m_config();
    let traj = run(&cfg)?;
    write_run(dir, &cfg, &traj)?;
    let m = cfg.kernel.m();
    let stable = traj.penrose.as_ref().is_some_and(|p| p.stable);
    let mon = q_monitor(&traj, cfg.s, MonitorVariant::FiniteM { m })?;
    write_monitor(dir, &mon)?;
    let mut checks = vec![
        Check::holds("finite-M: penrose_check reports stable", stable),
        Check::below("finite-M: q_sup(T) / q_sup(T/2)", mon.growth_ratio(), 2.0),
    ];
    let window = (cfg.t_final / 8.0, cfg.t_final);
    let mut fits = Vec::new();
    for k in 1..=m as i32 {
        let gamma = (cfg.s as i32 + 1 - 2 * k) as f64;
        let fit = fit_with_fallback(|w| weighted_decay_fit(&traj.zeta, k, gamma, w), window);
        fits.extend(record(&format!("<t>^{gamma} |zeta_{k}|"), &fit.0));
        checks.push(slope_check(
            format!("finite-M: <t>^{gamma} |zeta_{k}| slope on [{}, {}]", window.0, window.1),
            fit,
            -0.5,
            false,
        ));
    }
    dir.json("fits.json", &fits)?;
    checks.extend(conservation_checks(&traj));
    Ok(checks)
}

/// `T_c` of the `p_1 = -1/2` Maxwellian family; the stability verdict flips
/// where `min |1 - K_hat| = kappa_target`, so a small target is used.
pub const CRITICAL_KAPPA: f64 = 1e-4;

fn penrose_scan(dir: &RunDir) -> Result<Vec<Check>, CliError> {
    let scan = ScanParams::default();
    let anti = InteractionKernel::new(vec![-0.5]).expect("valid kernel");
    let family = |t: f64| (anti.clone(), HomogeneousProfile::maxwellian(t));
    let t_c = critical_parameter(family, (0.3, 0.8), 2e-5, CRITICAL_KAPPA, &scan)?;
    let cosine = penrose_check(&InteractionKernel::cosine(), &HomogeneousProfile::maxwellian(1.0), DEFAULT_KAPPA, &scan)?;
    dir.json("penrose_cosine_T1.json", &penrose_entries(&cosine))?;
    let cold = penrose_check(&anti, &HomogeneousProfile::maxwellian(0.4), DEFAULT_KAPPA, &scan)?;
    dir.json("penrose_anticosine_T0.4.json", &penrose_entries(&cold))?;
    #[derive(Serialize)]
    struct Critical {
        t_c: f64,
        kappa_target: f64,
        bracket: (f64, f64),
    }
    dir.json("critical.json", &Critical { t_c, kappa_target: CRITICAL_KAPPA, bracket: (0.3, 0.8) })?;
    let winding = cosine.modes.first().map_or(0, |m| m.winding);
    Ok(vec![
        Check::within("penrose: critical temperature of p_1 = -1/2", t_c, 0.5, 1e-3),
        Check::holds("penrose: p_1 = 1/2, T = 1 stable", cosine.stable),
        Check::holds("penrose: p_1 = 1/2, T = 1 winding 0", winding == 0),
        Check::holds("penrose: p_1 = -1/2, T = 0.4 unstable", !cold.stable),
    ])
}

fn volterra_error(dt: f64, t_final: f64) -> hmf_core::Result<(ZetaSeries, f64)> {
    let f = ZetaSeries::sample(vec![1], dt, t_final, |_, _| Complex64::new(1.0, 0.0));
    let z = solve_volterra(|_, _| Complex64::new(-1.0, 0.0), &f)?;
    let col = z.mode(1).expect("mode 1");
    let err = (0..col.len()).map(|i| (col[i] - (-z.time(i)).exp()).norm()).fold(0.0, f64::max);
    Ok((z, err))
}

/// Horizons of the uniform-in-T ratio check.
pub const RATIO_HORIZONS: [f64; 2] = [50.0, 100.0];
pub const RATIO_GAMMAS: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];

fn volterra_analytic(dir: &RunDir) -> Result<Vec<Check>, CliError> {
    let (z, e1) = volterra_error(1e-3, 5.0)?;
    let (_, e2) = volterra_error(5e-4, 5.0)?;
    {
        use std::io::Write;
        let mut f = dir.file("volterra_exp.csv")?;
        writeln!(f, "t,re,im,exact")?;
        let col = z.mode(1).expect("mode 1");
        for (i, v) in col.iter().enumerate().step_by(10) {
            writeln!(f, "{},{},{},{}", sci(z.time(i)), sci(v.re), sci(v.im), sci((-z.time(i)).exp()))?;
        }
        f.flush()?;
    }
    let at_one = z.mode(1).expect("mode 1")[1000];
    let mut checks = vec![
        Check::at_most("volterra: max |zeta - e^-t| on [0, 5], dt = 1e-3", e1, 1e-6),
        Check::within("volterra: error ratio dt -> dt/2", e1 / e2, 4.0, 0.8),
        Check::at_most("volterra: |zeta(1) - e^-1|", (at_one.re - (-1.0f64).exp()).abs(), 1e-6),
    ];
    let rows = lemvolterra_harness(
        &InteractionKernel::cosine(),
        &HomogeneousProfile::maxwellian(1.0),
        &RATIO_GAMMAS,
        |gamma, t| Complex64::new((1.0 + t * t).powf(-gamma / 2.0), 0.0),
        &RATIO_HORIZONS,
        0.02,
        DEFAULT_KAPPA,
        &ScanParams::default(),
    )?;
    write_ratios(dir.file("ratios.csv")?, &rows)?;
    for &gamma in &RATIO_GAMMAS {
        let r: Vec<f64> = rows.iter().filter(|r| r.gamma == gamma).map(|r| r.ratio).collect();
        let change = (r[1] - r[0]).abs() / r[0];
        checks.push(Check::below(format!("volterra: ratio change T = 50 -> 100, gamma = {gamma}"), change, 0.1));
    }
    Ok(checks)
}
