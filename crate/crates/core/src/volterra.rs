//! Linear Volterra equation `zeta_n(t) = \int_0^t K(n, t - s) zeta_n(s) ds + F_n(t)`
//! and the weighted sup-norms `M_{T,gamma}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::japanese;
use crate::penrose::{kernel_k, penrose_check, InteractionKernel, ScanParams};
use crate::profiles::HomogeneousProfile;

/// Uniformly sampled complex series, one column per spatial mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaSeries {
    dt: f64,
    modes: Vec<i32>,
    values: Vec<Vec<Complex64>>,
}

/// Source terms share the layout of the solution.
pub type SourceSeries = ZetaSeries;

impl ZetaSeries {
    pub fn new(dt: f64, modes: Vec<i32>) -> Self {
        assert!(dt > 0.0, "dt must be positive");
        let values = vec![Vec::new(); modes.len()];
        Self { dt, modes, values }
    }

    /// Samples `f(n, t_i)` at `t_i = i dt`, `i = 0..=round(t_final / dt)`.
    pub fn sample(modes: Vec<i32>, dt: f64, t_final: f64, f: impl Fn(i32, f64) -> Complex64) -> Self {
        let steps = (t_final / dt).round() as usize;
        let values = modes.iter().map(|&n| (0..=steps).map(|i| f(n, i as f64 * dt)).collect()).collect();
        Self { dt, modes, values }
    }

    pub fn from_columns(dt: f64, modes: Vec<i32>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if modes.len() != values.len() {
            return Err(Error::InvalidArgument("one column per mode expected".into()));
        }
        if let Some(first) = values.first() {
            if values.iter().any(|c| c.len() != first.len()) {
                return Err(Error::InvalidArgument("columns must have equal length".into()));
            }
        }
        Ok(Self { dt, modes, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn modes(&self) -> &[i32] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn mode(&self, n: i32) -> Option<&[Complex64]> {
        self.modes.iter().position(|&m| m == n).map(|i| self.values[i].as_slice())
    }

    pub fn columns(&self) -> impl Iterator<Item = (i32, &[Complex64])> {
        self.modes.iter().copied().zip(self.values.iter().map(Vec::as_slice))
    }

    /// Appends one sample; `row` is ordered like `modes()`.
    pub fn push(&mut self, row: &[Complex64]) {
        assert_eq!(row.len(), self.modes.len());
        for (col, z) in self.values.iter_mut().zip(row) {
            col.push(*z);
        }
    }

    pub fn truncate(&mut self, len: usize) {
        for col in &mut self.values {
            col.truncate(len);
        }
    }
}

/// Product-trapezoidal solution of the Volterra equation, mode by mode.
///
/// `zeta_j = F_j + dt (K_j zeta_0 / 2 + sum_{0<i<j} K_{j-i} zeta_i + K_0 zeta_j / 2)`,
/// with the implicit diagonal term solved by a scalar division.
pub fn solve_volterra<K>(kernel: K, source: &SourceSeries) -> Result<ZetaSeries>
where
    K: Fn(i32, f64) -> Complex64 + Sync,
{
    let dt = source.dt();
    let columns: Vec<Result<Vec<Complex64>>> = source
        .modes
        .par_iter()
        .zip(source.values.par_iter())
        .map(|(&n, f)| solve_column(|t| kernel(n, t), f, dt))
        .collect();
    let values = columns.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ZetaSeries { dt, modes: source.modes.clone(), values })
}

fn solve_column(kernel: impl Fn(f64) -> Complex64, f: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    let len = f.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    let lags: Vec<Complex64> = (0..len).map(|m| kernel(m as f64 * dt)).collect();
    let diag = Complex64::new(1.0, 0.0) - lags[0] * (0.5 * dt);
    if diag.norm() < 1e-8 {
        return Err(Error::StepSize(diag.norm()));
    }
    let mut z = Vec::with_capacity(len);
    z.push(f[0]);
    for j in 1..len {
        let mut acc = lags[j] * z[0] * 0.5;
        for i in 1..j {
            acc += lags[j - i] * z[i];
        }
        z.push((f[j] + acc * dt) / diag);
    }
    Ok(z)
}

/// `max_{t_i, k} <t_i>^gamma |zeta_k(t_i)|`, a sampled lower bound for `M_{T,gamma}`.
pub fn weighted_sup(series: &ZetaSeries, gamma: f64) -> f64 {
    weighted_sup_until(series, gamma, f64::INFINITY)
}

/// As [`weighted_sup`] restricted to samples with `t_i <= t_max`.
pub fn weighted_sup_until(series: &ZetaSeries, gamma: f64, t_max: f64) -> f64 {
    let mut best = 0.0_f64;
    for (_, col) in series.columns() {
        for (i, z) in col.iter().enumerate() {
            let t = series.time(i);
            if t > t_max * (1.0 + 1e-12) {
                break;
            }
            best = best.max(japanese(t).powf(gamma) * z.norm());
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub gamma: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub ratio: f64,
}

/// Empirical constant `M_{T,gamma}(zeta) / M_{T,gamma}(F)` for each `(gamma, T)`.
///
/// Each `gamma` is solved once up to the largest `T`; shorter horizons are
/// prefixes, which is exact because the scheme is causal.
pub fn ratio_table<K, S>(kernel: K, modes: &[i32], gammas: &[f64], source: S, t_list: &[f64], dt: f64) -> Result<Vec<RatioRow>>
where
    K: Fn(i32, f64) -> Complex64 + Sync,
    S: Fn(f64, f64) -> Complex64,
{
    let t_max = t_list.iter().copied().fold(0.0_f64, f64::max);
    let mut rows = Vec::new();
    for &gamma in gammas {
        let f = ZetaSeries::sample(modes.to_vec(), dt, t_max, |_, t| source(gamma, t));
        let z = solve_volterra(&kernel, &f)?;
        for &t in t_list {
            let denom = weighted_sup_until(&f, gamma, t);
            let ratio = if denom == 0.0 { 0.0 } else { weighted_sup_until(&z, gamma, t) / denom };
            rows.push(RatioRow { gamma, t_final: t, ratio });
        }
    }
    Ok(rows)
}

/// Ratio table for the linearized field equation of `(ik, profile)`.
///
/// Refuses profiles that fail the Penrose check, since the uniform bound
/// presumes it.
#[allow(clippy::too_many_arguments)]
pub fn lemvolterra_harness<S>(
    ik: &InteractionKernel,
    profile: &HomogeneousProfile,
    gammas: &[f64],
    source: S,
    t_list: &[f64],
    dt: f64,
    kappa_target: f64,
    scan: &ScanParams,
) -> Result<Vec<RatioRow>>
where
    S: Fn(f64, f64) -> Complex64,
{
    let report = penrose_check(ik, profile, kappa_target, scan)?;
    if let Some(bad) = report.modes.iter().find(|m| !m.stable) {
        return Err(Error::Unstable { mode: bad.n, kappa: bad.kappa_est, winding: bad.winding });
    }
    ratio_table(|n, t| kernel_k(ik, profile, n, t), &ik.active_modes(), gammas, source, t_list, dt)
}
