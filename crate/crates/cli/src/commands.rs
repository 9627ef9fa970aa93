//! The config-driven subcommands.

use std::path::Path;

use hmf_core::{lemvolterra_harness, penrose_check, run, Complex64};
use serde::Serialize;

use crate::config::ConfigDoc;
use crate::output::{penrose_entries, write_ratios, RunDir};
use crate::presets::{damping_study, write_run, Check};
use crate::CliError;

#[derive(Serialize)]
struct RunSummary {
    steps: usize,
    t_final: f64,
    mass_drift: f64,
    l2_drift: f64,
    max_reality_defect: f64,
    warnings: Vec<String>,
}

pub fn run_sim(config: &Path, out: &Path) -> Result<String, CliError> {
    let cfg = ConfigDoc::read(config)?.sim_config()?;
    let dir = RunDir::create(out)?;
    let traj = run(&cfg)?;
    write_run(&dir, &cfg, &traj)?;
    let summary = RunSummary {
        steps: cfg.steps(),
        t_final: traj.final_snapshot().t,
        mass_drift: traj.mass_drift(),
        l2_drift: traj.l2_drift(),
        max_reality_defect: traj.max_reality_defect(),
        warnings: traj.warnings.clone(),
    };
    dir.json("report.json", &summary)?;
    let mut text = format!(
        "ran {} steps to t = {}; mass drift {:.3e}, L2 drift {:.3e}",
        summary.steps, summary.t_final, summary.mass_drift, summary.l2_drift
    );
    for w in &summary.warnings {
        text.push_str(&format!("\nwarning: {w}"));
    }
    Ok(text)
}

/// Prints the per-mode JSON array and writes it to `penrose.json`.
pub fn penrose(config: &Path, out: &Path) -> Result<String, CliError> {
    let doc = ConfigDoc::read(config)?;
    let settings = doc.penrose_settings();
    let report =
        penrose_check(&doc.interaction_kernel()?, &doc.homogeneous_profile()?, settings.kappa_target, &settings.scan())?;
    let dir = RunDir::create(out)?;
    let entries = penrose_entries(&report);
    dir.json("penrose.json", &entries)?;
    serde_json::to_string_pretty(&entries).map_err(|e| CliError::Io(e.into()))
}

/// Empirical ratio table with the algebraic source `<t>^{-gamma}`.
pub fn volterra_bench(config: &Path, out: &Path) -> Result<String, CliError> {
    let doc = ConfigDoc::read(config)?;
    let settings = doc.penrose_settings();
    let v = doc.volterra_settings();
    let rows = lemvolterra_harness(
        &doc.interaction_kernel()?,
        &doc.homogeneous_profile()?,
        &v.gammas,
        |gamma, t| Complex64::new((1.0 + t * t).powf(-gamma / 2.0), 0.0),
        &v.horizons,
        v.dt,
        settings.kappa_target,
        &settings.scan(),
    )?;
    let dir = RunDir::create(out)?;
    write_ratios(dir.file("ratios.csv")?, &rows)?;
    Ok(rows.iter().map(|r| format!("gamma {} T {} ratio {:.6}", r.gamma, r.t_final, r.ratio)).collect::<Vec<_>>().join("\n"))
}

/// Simulation plus scattering state, weak limit and fitted rates.
///
/// The fitted rates are reported, not asserted: their bounds only make sense
/// for the preset configurations.
pub fn scatter(config: &Path, out: &Path) -> Result<String, CliError> {
    let cfg = ConfigDoc::read(config)?.sim_config()?;
    if cfg.record_every != 1 {
        return Err(CliError::Schema(format!("scatter needs record_every = 1, got {}", cfg.record_every)));
    }
    let dir = RunDir::create(out)?;
    let checks: Vec<Check> = damping_study(&dir, &cfg, true)?;
    dir.json("checks.json", &checks)?;
    Ok(checks.iter().map(Check::line).collect::<Vec<_>>().join("\n"))
}
