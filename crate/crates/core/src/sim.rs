//! Nonlinear evolution of the gliding-frame perturbation in Fourier variables.
//!
//! The state is `g_n(t, xi)` on a [`PhaseGrid`]. Differentiating the Duhamel
//! form of the equation gives
//!
//! ```text
//! d/dt g_n(xi) = p_n zeta_n(t) eta_hat(xi - n t) (n^2 t - n xi)
//!              + eps sum_k p_k zeta_k(t) g_{n-k}(xi - k t) (n k t - k xi),
//! zeta_k(t)    = g_k(t, k t),
//! ```
//!
//! which is integrated with classical RK4. The self-consistent modes `zeta_k`
//! are re-extracted from each stage state at the stage time; extracting them
//! once per step would drop the scheme to first order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PhaseGrid, ShiftStencil, SpectralField};
use crate::penrose::{penrose_check, InteractionKernel, PenroseReport, ScanParams, DEFAULT_KAPPA};
use crate::profiles::{synth_initial, HatTable, HomogeneousProfile, Perturbation};
use crate::volterra::ZetaSeries;

/// Smallest monitor regularity compatible with an `M`-mode kernel.
pub fn min_regularity(m: usize) -> u32 {
    let m = m as u32;
    (4 * m + 2).max(2 * m + 5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: PhaseGrid,
    pub kernel: InteractionKernel,
    pub profile: HomogeneousProfile,
    pub perturbation: Perturbation,
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    /// Regularity index of the norm monitors.
    pub s: u32,
}

impl SimConfig {
    /// Smallest `xi_max` with `xi_max >= n_max t_final + 4 dxi` at this `n_xi`.
    pub fn required_xi_max(&self) -> f64 {
        let shift = self.grid.n_max() as f64 * self.t_final;
        shift / (1.0 - 8.0 / (self.grid.n_xi() - 1) as f64)
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be >= 1".into()));
        }
        if self.kernel.m() > g.n_max() {
            return Err(Error::InvalidArgument(format!(
                "kernel has M = {} modes but the grid only holds n_max = {}",
                self.kernel.m(),
                g.n_max()
            )));
        }
        if !g.contains_mode(self.perturbation.mode) {
            return Err(Error::InvalidArgument(format!("perturbation mode {} off the grid", self.perturbation.mode)));
        }
        let need = min_regularity(self.kernel.m());
        if self.s < need {
            return Err(Error::InvalidArgument(format!("s = {} below the minimum {need} for M = {}", self.s, self.kernel.m())));
        }
        if g.xi_max() < g.n_max() as f64 * self.t_final + 4.0 * g.dxi() {
            return Err(Error::XiWindow {
                xi_max: g.xi_max(),
                shift: g.n_max() as f64 * self.t_final,
                required: self.required_xi_max(),
            });
        }
        Ok(())
    }
}

/// Precomputed pieces of the right-hand side for one configuration.
#[derive(Debug, Clone)]
pub struct Rhs {
    grid: PhaseGrid,
    kernel: InteractionKernel,
    profile: HomogeneousProfile,
    table: Option<HatTable>,
    epsilon: f64,
    modes: Vec<i32>,
}

impl Rhs {
    pub fn new(cfg: &SimConfig) -> Self {
        let grid = cfg.grid;
        let table = (!cfg.profile.has_closed_form()).then(|| {
            let reach = grid.xi_max() + grid.n_max() as f64 * cfg.t_final.max(0.0) + 1.0;
            HatTable::new(&cfg.profile, reach, grid.dxi() / 4.0)
        });
        Self {
            grid,
            kernel: cfg.kernel.clone(),
            profile: cfg.profile.clone(),
            table,
            epsilon: cfg.epsilon,
            modes: cfg.kernel.signed_modes(),
        }
    }

    /// Modes `k` with `p_k != 0`, ordered `-M..=M`.
    pub fn modes(&self) -> &[i32] {
        &self.modes
    }

    fn eta_hat(&self, xi: f64) -> Complex64 {
        match &self.table {
            Some(t) => t.eval(xi),
            None => self.profile.hat(xi),
        }
    }

    /// `zeta_k(t) = g_k(t, k t)` for every active `k`, by cubic interpolation.
    pub fn zeta(&self, g: &SpectralField, t: f64) -> Result<Vec<Complex64>> {
        let limit = self.grid.xi_max() - 2.0 * self.grid.dxi();
        self.modes
            .iter()
            .map(|&k| {
                let xi = k as f64 * t;
                if xi.abs() > limit * (1.0 + 1e-12) {
                    return Err(Error::OutOfRange { xi, limit });
                }
                Ok(g.interp(k, xi))
            })
            .collect()
    }

    /// Full right-hand side at time `t`.
    pub fn eval(&self, g: &SpectralField, t: f64) -> Result<SpectralField> {
        let zeta = self.zeta(g, t)?;
        Ok(self.eval_with_zeta(g, t, &zeta))
    }

    fn eval_with_zeta(&self, g: &SpectralField, t: f64, zeta: &[Complex64]) -> SpectralField {
        let grid = self.grid;
        let w = grid.n_xi();
        let xi = grid.xi_nodes();
        let stencils: Vec<ShiftStencil> = self.modes.iter().map(|&k| ShiftStencil::new(&grid, k as f64 * t)).collect();
        let mut out = SpectralField::zeros(grid, g.is_real());
        out.values_mut().par_chunks_mut(w).enumerate().for_each(|(r, row)| {
            let n = grid.mode_of_row(r);
            let nf = n as f64;
            let pn = self.kernel.p(n);
            if pn != 0.0 {
                let zn = zeta[self.modes.iter().position(|&k| k == n).unwrap()];
                for (j, o) in row.iter_mut().enumerate() {
                    let x = xi[j];
                    *o += zn * self.eta_hat(x - nf * t) * (pn * (nf * nf * t - nf * x));
                }
            }
            if self.epsilon != 0.0 {
                for ((&k, st), zk) in self.modes.iter().zip(&stencils).zip(zeta) {
                    let src = n - k;
                    if !grid.contains_mode(src) {
                        continue;
                    }
                    let kf = k as f64;
                    let coef = *zk * (self.epsilon * self.kernel.p(k));
                    let src_row = g.row(src);
                    let (lo, hi) = st.valid_range();
                    for j in lo..=hi {
                        row[j] += coef * st.sample(src_row, j) * (nf * kf * t - kf * xi[j]);
                    }
                }
            }
        });
        out
    }
}

/// `d/dt g` at time `t` for configuration `cfg`.
pub fn assemble_rhs(g: &SpectralField, t: f64, cfg: &SimConfig) -> Result<SpectralField> {
    Rhs::new(cfg).eval(g, t)
}

/// `zeta_k(t)` for every `k` with `p_k != 0`, as `(k, value)` pairs.
pub fn extract_zeta(g: &SpectralField, t: f64, ik: &InteractionKernel) -> Result<Vec<(i32, Complex64)>> {
    let grid = g.grid();
    let limit = grid.xi_max() - 2.0 * grid.dxi();
    ik.signed_modes()
        .into_iter()
        .map(|k| {
            let xi = k as f64 * t;
            if xi.abs() > limit * (1.0 + 1e-12) {
                return Err(Error::OutOfRange { xi, limit });
            }
            Ok((k, g.interp(k, xi)))
        })
        .collect()
}

/// Mean-field potential `phi(t, x, v) = sum_k p_k e^{ik(x + t v)} zeta_k(t)`.
///
/// Equals `(1/2pi) \int\int P(x - y + t(v - u)) g(t, y, u) dy du`.
pub fn potential(ik: &InteractionKernel, zeta: &[(i32, Complex64)], t: f64, x: f64, v: f64) -> f64 {
    zeta.iter()
        .map(|&(k, z)| (Complex64::from_polar(1.0, k as f64 * (x + t * v)) * z * ik.p(k)).re)
        .sum()
}

/// One RK4 step; returns the new state and the reality defect before symmetrization.
fn rk4(rhs: &Rhs, g: &SpectralField, t: f64, dt: f64) -> Result<(SpectralField, f64)> {
    let k1 = rhs.eval(g, t)?;
    let mut s = g.clone();
    s.add_scaled(0.5 * dt, &k1);
    let k2 = rhs.eval(&s, t + 0.5 * dt)?;
    let mut s = g.clone();
    s.add_scaled(0.5 * dt, &k2);
    let k3 = rhs.eval(&s, t + 0.5 * dt)?;
    let mut s = g.clone();
    s.add_scaled(dt, &k3);
    let k4 = rhs.eval(&s, t + dt)?;
    let mut next = g.clone();
    next.add_scaled(dt / 6.0, &k1);
    next.add_scaled(dt / 3.0, &k2);
    next.add_scaled(dt / 3.0, &k3);
    next.add_scaled(dt / 6.0, &k4);
    let defect = if next.is_real() { next.enforce_reality() } else { 0.0 };
    if !next.is_finite() {
        return Err(Error::NonFinite { t: t + dt, detail: format!("max |g| before step was {:e}", g.max_abs()) });
    }
    Ok((next, defect))
}

/// Advances `g` from `t` to `t + cfg.dt`.
pub fn step(g: &SpectralField, t: f64, cfg: &SimConfig) -> Result<SpectralField> {
    Ok(rk4(&Rhs::new(cfg), g, t, cfg.dt)?.0)
}

/// Per-step conservation log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub t: f64,
    /// `g_0(t, 0)`.
    pub mass: Complex64,
    /// `||eta + eps g(t)||_{L^2}`.
    pub l2_full: f64,
    /// Reality defect of the RK4 update before symmetrization.
    pub reality_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: SpectralField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub record_every: usize,
    pub snapshots: Vec<Snapshot>,
    pub zeta: ZetaSeries,
    pub log: Vec<StepLog>,
    pub penrose: Option<PenroseReport>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.log[0].mass;
        self.log.iter().map(|l| (l.mass - m0).norm()).fold(0.0, f64::max)
    }

    pub fn l2_drift(&self) -> f64 {
        let l0 = self.log[0].l2_full;
        self.log.iter().map(|l| (l.l2_full - l0).abs()).fold(0.0, f64::max)
    }

    pub fn max_reality_defect(&self) -> f64 {
        self.log.iter().map(|l| l.reality_defect).fold(0.0, f64::max)
    }
}

/// Stepper that owns the evolving state.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    rhs: Rhs,
    eta_nodes: Vec<Complex64>,
    state: SpectralField,
    step: usize,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let state = synth_initial(&cfg.perturbation, &cfg.grid)?;
        Self::from_state(cfg, state)
    }

    /// Starts from an explicit initial field instead of the configured perturbation.
    pub fn from_state(cfg: &SimConfig, state: SpectralField) -> Result<Self> {
        cfg.validate()?;
        if state.grid() != &cfg.grid {
            return Err(Error::InvalidArgument("initial field grid differs from the configuration".into()));
        }
        let eta_nodes = cfg.grid.xi_nodes().iter().map(|&x| cfg.profile.hat(x)).collect();
        Ok(Self { cfg: cfg.clone(), rhs: Rhs::new(cfg), eta_nodes, state, step: 0 })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SpectralField {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn zeta(&self) -> Result<Vec<Complex64>> {
        self.rhs.zeta(&self.state, self.time())
    }

    /// `||eta + eps g||_{L^2(T x R)}` for the current state.
    pub fn l2_full(&self) -> f64 {
        l2_full(&self.state, &self.eta_nodes, self.cfg.epsilon)
    }

    /// Advances one step and returns the pre-symmetrization reality defect.
    pub fn advance(&mut self) -> Result<f64> {
        let (next, defect) = rk4(&self.rhs, &self.state, self.time(), self.cfg.dt)?;
        self.state = next;
        self.step += 1;
        Ok(defect)
    }

    fn log_entry(&self, reality_defect: f64) -> StepLog {
        let c = (self.cfg.grid.n_xi() - 1) / 2;
        StepLog { t: self.time(), mass: self.state.get(0, c), l2_full: self.l2_full(), reality_defect }
    }
}

fn l2_full(g: &SpectralField, eta_nodes: &[Complex64], eps: f64) -> f64 {
    let grid = g.grid();
    let mut acc = 0.0;
    for n in grid.modes() {
        let row = g.row(n);
        if n == 0 {
            acc += row.iter().zip(eta_nodes).map(|(z, e)| (e + z * eps).norm_sqr()).sum::<f64>();
        } else if eps != 0.0 {
            acc += row.iter().map(|z| (z * eps).norm_sqr()).sum::<f64>();
        }
    }
    (acc * grid.dxi()).sqrt()
}

/// Runs the configuration to `t_final`, recording every `record_every` steps
/// (and always the final state) plus `zeta` and the conservation log at every step.
///
/// A failed Penrose check is recorded as a warning; the run continues so that
/// unstable states can be studied.
pub fn run(cfg: &SimConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(cfg)?;
    run_from(&mut sim)
}

pub fn run_from(sim: &mut Simulation) -> Result<Trajectory> {
    let cfg = sim.config().clone();
    let mut warnings = Vec::new();
    let penrose = match penrose_check(&cfg.kernel, &cfg.profile, DEFAULT_KAPPA, &ScanParams::default()) {
        Ok(r) => {
            if !r.stable {
                warnings.push(format!(
                    "profile fails the Penrose check (kappa_est = {:e}); continuing for an instability study",
                    r.kappa_est
                ));
            }
            Some(r)
        }
        Err(e) => {
            warnings.push(format!("Penrose check failed to run: {e}"));
            None
        }
    };
    let steps = cfg.steps();
    let mut zeta = ZetaSeries::new(cfg.dt, sim.rhs().modes().to_vec());
    zeta.push(&sim.zeta()?);
    let mut log = vec![sim.log_entry(0.0)];
    let mut snapshots = vec![Snapshot { step: sim.step_index(), t: sim.time(), field: sim.state().clone() }];
    for i in 1..=steps {
        let defect = sim.advance()?;
        zeta.push(&sim.zeta()?);
        log.push(sim.log_entry(defect));
        if i % cfg.record_every == 0 || i == steps {
            snapshots.push(Snapshot { step: i, t: sim.time(), field: sim.state().clone() });
        }
    }
    Ok(Trajectory { dt: cfg.dt, record_every: cfg.record_every, snapshots, zeta, log, penrose, warnings })
}
