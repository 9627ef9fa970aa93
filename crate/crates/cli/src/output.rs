//! Artifact files: CSV series, JSON reports, snapshot fields.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hmf_core::penrose::ModeReport;
use hmf_core::sim::Trajectory;
use hmf_core::{sobolev_norm, Complex64, PenroseReport, RatioRow, SimConfig, SpectralField, ZetaSeries};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

/// 17 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// An output directory that artifact files are written into.
#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self, CliError> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
        Ok(Self { path })
    }

    /// `<parent>/<name>-<UTC timestamp>`, with a numeric suffix if that already exists.
    pub fn timestamped(parent: &Path, name: &str) -> Result<Self, CliError> {
        let now = time::OffsetDateTime::now_utc();
        let stamp = format!(
            "{:04}{:02}{:02}T{:02}{:02}{:02}Z",
            now.year(),
            u8::from(now.month()),
            now.day(),
            now.hour(),
            now.minute(),
            now.second()
        );
        let mut path = parent.join(format!("{name}-{stamp}"));
        let mut k = 1;
        while path.exists() {
            path = parent.join(format!("{name}-{stamp}-{k}"));
            k += 1;
        }
        Self::create(path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        Ok(BufWriter::new(File::create(p)?))
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, value).map_err(|e| CliError::Io(e.into()))?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    pub fn snapshot(&self, name: &str, field: &SpectralField) -> Result<(), CliError> {
        let mut f = self.file(name)?;
        field.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// `t,re_zeta1,im_zeta1,abs_zeta1,mass_re,mass_im,l2_full,h_smin4,h_s` at every recorded snapshot.
pub fn write_timeseries<W: Write>(mut out: W, traj: &Trajectory, cfg: &SimConfig) -> Result<(), CliError> {
    let m0 = cfg.grid.m0();
    let s = cfg.s as i32;
    let norms: Vec<(f64, f64)> = traj
        .snapshots
        .par_iter()
        .map(|snap| Ok((sobolev_norm(&snap.field, s - 4, m0)?, sobolev_norm(&snap.field, s, m0)?)))
        .collect::<Result<_, hmf_core::Error>>()?;
    let zeta1 = traj.zeta.mode(1);
    writeln!(out, "t,re_zeta1,im_zeta1,abs_zeta1,mass_re,mass_im,l2_full,h_smin4,h_s")?;
    for (snap, (low, high)) in traj.snapshots.iter().zip(norms) {
        let z = zeta1.map_or(Complex64::new(0.0, 0.0), |c| c[snap.step]);
        let log = &traj.log[snap.step];
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            sci(snap.t),
            sci(z.re),
            sci(z.im),
            sci(z.norm()),
            sci(log.mass.re),
            sci(log.mass.im),
            sci(log.l2_full),
            sci(low),
            sci(high)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// `t,n,re,im` for every mode of the series.
pub fn write_zeta<W: Write>(mut out: W, series: &ZetaSeries) -> Result<(), CliError> {
    writeln!(out, "t,n,re,im")?;
    for i in 0..series.len() {
        for (n, col) in series.columns() {
            writeln!(out, "{},{},{},{}", sci(series.time(i)), n, sci(col[i].re), sci(col[i].im))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `gamma,T,ratio`.
pub fn write_ratios<W: Write>(mut out: W, rows: &[RatioRow]) -> Result<(), CliError> {
    writeln!(out, "gamma,T,ratio")?;
    for r in rows {
        writeln!(out, "{},{},{}", sci(r.gamma), sci(r.t_final), sci(r.ratio))?;
    }
    out.flush()?;
    Ok(())
}

/// Per-mode entry of the `penrose-check` JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenroseEntry {
    pub n: i32,
    pub winding: i32,
    pub min_abs: f64,
    pub kappa_est: f64,
    pub stable: bool,
    pub tau_scan: Vec<[f64; 3]>,
}

impl From<&ModeReport> for PenroseEntry {
    fn from(m: &ModeReport) -> Self {
        Self {
            n: m.n,
            winding: m.winding,
            min_abs: m.min_abs,
            kappa_est: m.kappa_est,
            stable: m.stable,
            tau_scan: m.tau_scan.clone(),
        }
    }
}

/// One JSON object per active mode `n >= 1`.
pub fn penrose_entries(report: &PenroseReport) -> Vec<PenroseEntry> {
    report.modes.iter().map(PenroseEntry::from).collect()
}
