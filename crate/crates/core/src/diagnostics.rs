//! Norm monitors, decay fits, the scattering state and the weak limit profile.

use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{japanese, sobolev_norm, SpectralField};
use crate::profiles::HomogeneousProfile;
use crate::sim::{Rhs, SimConfig, Trajectory};
use crate::volterra::ZetaSeries;

/// Values below this are treated as underflowed in log-log fits.
pub const FIT_FLOOR: f64 = 1e-14;
/// Minimum number of samples in a fit window.
pub const MIN_FIT_SAMPLES: usize = 20;
const EDGE_WIDTH: usize = 8;

/// Exponent structure of the monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorVariant {
    /// `||g||_{H^s}/<t>^3`, `<t>^{s-1}|zeta_{+-1}|`, `||g||_{H^{s-4}}`.
    Cosine,
    /// `||g||_{H^s}/<t>^{2M+1}`, `<t>^{s+1-2|k|}|zeta_k|`, `||g||_{H^{s-2M-2}}`.
    FiniteM { m: usize },
}

impl MonitorVariant {
    fn m(self) -> usize {
        match self {
            MonitorVariant::Cosine => 1,
            MonitorVariant::FiniteM { m } => m,
        }
    }

    pub fn growth_exponent(self) -> i32 {
        2 * self.m() as i32 + 1
    }

    pub fn low_index(self, s: u32) -> i32 {
        s as i32 - 2 * self.m() as i32 - 2
    }

    pub fn zeta_exponent(self, s: u32, k: i32) -> i32 {
        s as i32 + 1 - 2 * k.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    pub t: f64,
    pub n_part: f64,
    pub m_part: f64,
    pub low_part: f64,
    /// Spectral mass in the outermost grid nodes; large values mean the norms are under-resolved.
    pub edge_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormMonitor {
    pub s: u32,
    pub variant: MonitorVariant,
    pub samples: Vec<MonitorSample>,
    /// Running `sup N + sup M + sup low` after each sample.
    pub q_sup: Vec<f64>,
}

impl NormMonitor {
    pub fn final_q(&self) -> f64 {
        self.q_sup.last().copied().unwrap_or(0.0)
    }

    /// `q_sup` at the last sample with `t <= t`.
    pub fn q_at(&self, t: f64) -> f64 {
        let mut q = 0.0;
        for (smp, &v) in self.samples.iter().zip(&self.q_sup) {
            if smp.t <= t + 1e-12 {
                q = v;
            }
        }
        q
    }

    /// `q_sup(T) / q_sup(T/2)`.
    pub fn growth_ratio(&self) -> f64 {
        let t = self.samples.last().map_or(0.0, |s| s.t);
        let half = self.q_at(0.5 * t);
        if half == 0.0 {
            if self.final_q() == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.final_q() / half
        }
    }

    /// True if `q_sup` doubled between `T/2` and `T`.
    pub fn doubled(&self) -> bool {
        self.growth_ratio() >= 2.0
    }

    pub fn bounded_by(&self, r: f64) -> bool {
        self.final_q() <= r
    }
}

/// Monitor values on every recorded snapshot of `traj`.
///
/// Norms are evaluated on the truncated grid, so they are lower bounds of the
/// true norms; `s` is limited by how far the data is resolved in `xi`.
pub fn q_monitor(traj: &Trajectory, s: u32, variant: MonitorVariant) -> Result<NormMonitor> {
    let low = variant.low_index(s);
    if low < 0 {
        return Err(Error::InvalidArgument(format!("s = {s} leaves a negative low-norm index {low}")));
    }
    let samples: Vec<MonitorSample> = traj
        .snapshots
        .par_iter()
        .map(|snap| {
            let g = &snap.field;
            let m0 = g.grid().m0();
            let jt = japanese(snap.t);
            let mut m_part: f64 = 0.0;
            for (k, col) in traj.zeta.columns() {
                if col.len() > snap.step {
                    m_part = m_part.max(jt.powi(variant.zeta_exponent(s, k)) * col[snap.step].norm());
                }
            }
            Ok(MonitorSample {
                t: snap.t,
                n_part: sobolev_norm(g, s as i32, m0)? / jt.powi(variant.growth_exponent()),
                m_part,
                low_part: sobolev_norm(g, low, m0)?,
                edge_mass: g.edge_mass(EDGE_WIDTH),
            })
        })
        .collect::<Result<_>>()?;
    let mut sup = [0.0f64; 3];
    let q_sup = samples
        .iter()
        .map(|smp| {
            sup[0] = sup[0].max(smp.n_part);
            sup[1] = sup[1].max(smp.m_part);
            sup[2] = sup[2].max(smp.low_part);
            sup.iter().sum()
        })
        .collect();
    Ok(NormMonitor { s, variant, samples, q_sup })
}

/// Least-squares fit `log y = slope log t + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub samples: usize,
}

/// Power-law fit of `(t, y)` pairs restricted to `t_a <= t <= t_b`.
pub fn power_fit(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<PowerFit> {
    let (t_a, t_b) = window;
    let fail = |reason: String, usable| Err(Error::FitWindow { t_a, t_b, reason, usable });
    if !(t_a >= 1.0 && t_b > t_a) {
        return fail("need 1 <= t_a < t_b".into(), None);
    }
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= t_a - 1e-12 && t[i] <= t_b + 1e-12).collect();
    if idx.len() < MIN_FIT_SAMPLES {
        return fail(format!("{} samples in window, need {MIN_FIT_SAMPLES}", idx.len()), None);
    }
    if let Some(&bad) = idx.iter().find(|&&i| !(y[i].abs() > FIT_FLOOR)) {
        // Longest run of consecutive usable samples.
        let mut best: Option<(usize, usize)> = None;
        let mut start = None;
        for (pos, &i) in idx.iter().enumerate() {
            let ok = y[i].abs() > FIT_FLOOR;
            match (ok, start) {
                (true, None) => start = Some(pos),
                (false, Some(s0)) => {
                    if best.map_or(true, |(a, b)| pos - s0 > b - a + 1) {
                        best = Some((s0, pos - 1));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s0) = start {
            if best.map_or(true, |(a, b)| idx.len() - s0 > b - a + 1) {
                best = Some((s0, idx.len() - 1));
            }
        }
        let usable = best.filter(|(a, b)| b - a + 1 >= MIN_FIT_SAMPLES).map(|(a, b)| (t[idx[a]], t[idx[b]]));
        return fail(format!("|y| <= {FIT_FLOOR:e} at t = {}", t[bad]), usable);
    }
    let xs: Vec<f64> = idx.iter().map(|&i| t[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i].abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerFit { slope, intercept: my - slope * mx, r2, t_a, t_b, samples: xs.len() })
}

/// Power-law fit of `|zeta_n(t)|` on `window`.
pub fn decay_fit_mode(zeta: &ZetaSeries, n: i32, window: (f64, f64)) -> Result<PowerFit> {
    let col = zeta
        .mode(n)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {n} not in the series")))?;
    let t: Vec<f64> = (0..col.len()).map(|i| zeta.time(i)).collect();
    let y: Vec<f64> = col.iter().map(|z| z.norm()).collect();
    power_fit(&t, &y, window)
}

/// Power-law fit of `|zeta_1(t)|` on `window`.
pub fn decay_fit(zeta: &ZetaSeries, window: (f64, f64)) -> Result<PowerFit> {
    decay_fit_mode(zeta, 1, window)
}

/// Power-law fit of `<t>^gamma |zeta_n(t)|` on `window`.
///
/// The underflow floor applies to the raw `|zeta_n|`, not the weighted values.
pub fn weighted_decay_fit(zeta: &ZetaSeries, n: i32, gamma: f64, window: (f64, f64)) -> Result<PowerFit> {
    decay_fit_mode(zeta, n, window)?;
    let col = zeta.mode(n).expect("checked by decay_fit_mode");
    let t: Vec<f64> = (0..col.len()).map(|i| zeta.time(i)).collect();
    let y: Vec<f64> = col.iter().zip(&t).map(|(z, &t)| japanese(t).powf(gamma) * z.norm()).collect();
    power_fit(&t, &y, window)
}

/// Accumulator for `g(0) + \int_0^T rhs(s) ds` over uniformly spaced samples.
///
/// The rule is the trapezoid rule with Gregory end corrections through second
/// differences (end weights 3/8, 7/6, 23/24), which is fourth order and so
/// matches the RK4 trajectory it integrates; plain trapezoid leaves an
/// `O(dt^2)` offset from the early transient that swamps the late-time decay.
/// The accumulator keeps a raw running sum plus the first and last three
/// samples, so resuming it with further samples gives the same field as one
/// uninterrupted pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringAccumulator {
    initial: SpectralField,
    sum: SpectralField,
    head: Vec<SpectralField>,
    tail: VecDeque<SpectralField>,
    t_first: f64,
    t_last: f64,
    dt: f64,
    count: usize,
}

impl ScatteringAccumulator {
    pub fn new(initial: SpectralField) -> Self {
        let sum = SpectralField::zeros(*initial.grid(), initial.is_real());
        Self { initial, sum, head: Vec::new(), tail: VecDeque::new(), t_first: 0.0, t_last: 0.0, dt: 0.0, count: 0 }
    }

    pub fn push(&mut self, t: f64, rhs: SpectralField) -> Result<()> {
        match self.count {
            0 => self.t_first = t,
            1 => {
                self.dt = t - self.t_first;
                if !(self.dt > 0.0) {
                    return Err(Error::InvalidArgument(format!("sample times must increase, got {t} after {}", self.t_last)));
                }
            }
            _ => {
                let expect = self.t_first + self.count as f64 * self.dt;
                if (t - expect).abs() > 1e-9 * self.dt.max(expect.abs()) {
                    return Err(Error::InvalidArgument(format!("non-uniform sample at t = {t}, expected {expect}")));
                }
            }
        }
        self.sum.add_scaled(1.0, &rhs);
        if self.head.len() < 3 {
            self.head.push(rhs.clone());
        }
        self.tail.push_back(rhs);
        if self.tail.len() > 3 {
            self.tail.pop_front();
        }
        self.t_last = t;
        self.count += 1;
        Ok(())
    }

    pub fn time(&self) -> Option<f64> {
        (self.count > 0).then_some(self.t_last)
    }

    pub fn last_rhs(&self) -> Option<&SpectralField> {
        self.tail.back()
    }

    /// Current estimate `g(0) + \int_{t_0}^{t_last} rhs`.
    pub fn field(&self) -> SpectralField {
        let mut out = self.initial.clone();
        if self.count < 2 {
            return out;
        }
        let h = self.dt;
        out.add_scaled(h, &self.sum);
        let last = self.tail.len() - 1;
        if self.count < 6 {
            out.add_scaled(-0.5 * h, &self.head[0]);
            out.add_scaled(-0.5 * h, &self.tail[last]);
            return out;
        }
        for (w, i) in [(-5.0 / 8.0, 0), (1.0 / 6.0, 1), (-1.0 / 24.0, 2)] {
            out.add_scaled(w * h, &self.head[i]);
            out.add_scaled(w * h, &self.tail[last - i]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringLimit {
    pub field: SpectralField,
    pub t_final: f64,
    /// `||rhs(T)||_{H^1} <T>`, a proxy for the neglected integral over `[T, inf)`.
    pub tail_estimate: f64,
}

const RHS_BATCH: usize = 64;

/// Feeds the right-hand side at every snapshot of `traj` into `acc`.
pub fn accumulate(acc: &mut ScatteringAccumulator, traj: &Trajectory, cfg: &SimConfig) -> Result<()> {
    if traj.record_every != 1 {
        return Err(Error::RecordEvery(traj.record_every));
    }
    let rhs = Rhs::new(cfg);
    let start = acc.time();
    let snaps: Vec<_> = traj.snapshots.iter().filter(|s| start.map_or(true, |t0| s.t > t0 + 1e-12)).collect();
    for batch in snaps.chunks(RHS_BATCH) {
        let fields: Vec<SpectralField> = batch.par_iter().map(|s| rhs.eval(&s.field, s.t)).collect::<Result<_>>()?;
        for (s, f) in batch.iter().zip(fields) {
            acc.push(s.t, f)?;
        }
    }
    Ok(())
}

/// `g^inf ~ g(0) + \int_0^T rhs(g(s), s) ds` by the trapezoid rule on every step.
pub fn scattering_limit(traj: &Trajectory, cfg: &SimConfig) -> Result<ScatteringLimit> {
    if traj.record_every != 1 {
        return Err(Error::RecordEvery(traj.record_every));
    }
    let first = traj.snapshots.first().ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let mut acc = ScatteringAccumulator::new(first.field.clone());
    accumulate(&mut acc, traj, cfg)?;
    finish_scattering(acc)
}

pub fn finish_scattering(acc: ScatteringAccumulator) -> Result<ScatteringLimit> {
    let t_final = acc.time().unwrap_or(0.0);
    let tail = match acc.last_rhs() {
        Some(r) => sobolev_norm(r, 1, r.grid().m0())? * japanese(t_final),
        None => 0.0,
    };
    Ok(ScatteringLimit { field: acc.field(), t_final, tail_estimate: tail })
}

/// `(t, ||g(t) - g_inf||_{H^r})` over the recorded snapshots, with `g(t)` the RK4 state.
///
/// The difference bottoms out at the `O(dt^4)` mismatch between RK4 and the
/// quadrature accumulated over the initial transient; see [`scattering_distance`].
pub fn distance_series(traj: &Trajectory, g_inf: &SpectralField, r: u32) -> Result<Vec<(f64, f64)>> {
    traj.snapshots
        .par_iter()
        .map(|s| Ok((s.t, sobolev_norm(&s.field.difference(g_inf), r as i32, g_inf.grid().m0())?)))
        .collect()
}

/// `(t, ||A(T) - A(t)||_{H^r})` where `A(t) = g(0) + \int_0^t rhs` is the running
/// accumulation behind [`scattering_limit`].
///
/// This is the quadrature of `rhs` over `[t, T]`, so the discretization error
/// of the early transient cancels exactly instead of setting a floor. It
/// vanishes at `t = T`; rate fits should stop short of `T`.
pub fn scattering_distance(traj: &Trajectory, cfg: &SimConfig, r: u32) -> Result<Vec<(f64, f64)>> {
    let m0 = cfg.grid.m0();
    scattering_increments(traj, cfg, |d| sobolev_norm(d, r as i32, m0))
}

/// Applies `f` to `A(T) - A(t)` at every snapshot time (see [`scattering_distance`]).
pub fn scattering_increments<T, F>(traj: &Trajectory, cfg: &SimConfig, f: F) -> Result<Vec<(f64, T)>>
where
    T: Send,
    F: Fn(&SpectralField) -> Result<T> + Sync,
{
    if traj.record_every != 1 {
        return Err(Error::RecordEvery(traj.record_every));
    }
    let first = traj.snapshots.first().ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    // Two passes over the integrand: the first fixes A(T), the second measures
    // against it without holding every partial field in memory.
    let mut acc = ScatteringAccumulator::new(first.field.clone());
    accumulate(&mut acc, traj, cfg)?;
    let total = acc.field();
    let rhs = Rhs::new(cfg);
    let mut acc = ScatteringAccumulator::new(first.field.clone());
    let mut out = Vec::with_capacity(traj.snapshots.len());
    for batch in traj.snapshots.chunks(RHS_BATCH) {
        let fields: Vec<SpectralField> = batch.par_iter().map(|s| rhs.eval(&s.field, s.t)).collect::<Result<_>>()?;
        let mut partial = Vec::with_capacity(batch.len());
        for (s, field) in batch.iter().zip(fields) {
            acc.push(s.t, field)?;
            partial.push((s.t, acc.field()));
        }
        let values: Vec<(f64, T)> =
            partial.par_iter().map(|(t, a)| Ok((*t, f(&total.difference(a))?))).collect::<Result<_>>()?;
        out.extend(values);
    }
    Ok(out)
}

/// `eta_hat_inf(xi) = eta_hat(xi) + eps g_inf_0(xi)` at the grid nodes.
pub fn weak_limit_hat(g_inf: &SpectralField, profile: &HomogeneousProfile, eps: f64) -> Vec<Complex64> {
    let grid = g_inf.grid();
    g_inf.row(0).iter().enumerate().map(|(j, z)| profile.hat(grid.xi(j)) + z * eps).collect()
}

/// Velocity table used by [`weak_limit_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityTable {
    pub v_max: f64,
    pub dv: f64,
}

impl VelocityTable {
    /// `[-v_max, v_max]` with `v_max = min(pi/dxi, 16)`, step `1/32`.
    pub fn for_grid(g: &SpectralField) -> Self {
        let v_max = (std::f64::consts::PI / g.grid().dxi()).min(16.0);
        Self { v_max, dv: 1.0 / 32.0 }
    }
}

/// Weak limit `eta_inf` as a tabulated profile, inverse transformed by the
/// trapezoid rule over the `xi` grid.
pub fn weak_limit_profile(g_inf: &SpectralField, profile: &HomogeneousProfile, eps: f64) -> Result<HomogeneousProfile> {
    weak_limit_profile_on(g_inf, profile, eps, VelocityTable::for_grid(g_inf))
}

pub fn weak_limit_profile_on(
    g_inf: &SpectralField,
    profile: &HomogeneousProfile,
    eps: f64,
    table: VelocityTable,
) -> Result<HomogeneousProfile> {
    let hat = weak_limit_hat(g_inf, profile, eps);
    let grid = g_inf.grid();
    let xi = grid.xi_nodes();
    let count = (table.v_max / table.dv).floor() as i64;
    let dxi = grid.dxi();
    let samples: Vec<f64> = (-count..=count)
        .into_par_iter()
        .map(|i| {
            let v = i as f64 * table.dv;
            let last = xi.len() - 1;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, (h, x)) in hat.iter().zip(&xi).enumerate() {
                let w = if j == 0 || j == last { 0.5 } else { 1.0 };
                acc += h * Complex64::from_polar(w, x * v);
            }
            acc.re * dxi / (2.0 * std::f64::consts::PI)
        })
        .collect();
    HomogeneousProfile::tabulated(-(count as f64) * table.dv, table.dv, samples)
}
