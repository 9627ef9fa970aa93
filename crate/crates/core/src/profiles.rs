//! Spatially homogeneous states `eta(v)` and initial perturbations.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cubic_weights, japanese, PhaseGrid, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// `mass * e^{-v^2/2T} / sqrt(2 pi T)`.
    Maxwellian { temperature: f64 },
    /// Two Maxwellians of temperature `T` centred at `+-v0`, equal weights.
    TwoStream { temperature: f64, v0: f64 },
    /// Uniformly sampled `eta(v_start + i dv)`.
    Tabulated { v_start: f64, dv: f64, samples: Vec<f64> },
}

/// A stationary homogeneous state and its velocity Fourier transform
/// `eta_hat(xi) = \int eta(v) e^{-i xi v} dv` (so `eta_hat(0)` is the mass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousProfile {
    kind: ProfileKind,
    mass: f64,
}

impl HomogeneousProfile {
    pub fn maxwellian(temperature: f64) -> Self {
        Self::maxwellian_with_mass(temperature, 1.0)
    }

    pub fn maxwellian_with_mass(temperature: f64, mass: f64) -> Self {
        assert!(temperature > 0.0, "temperature must be positive");
        Self { kind: ProfileKind::Maxwellian { temperature }, mass }
    }

    pub fn two_stream(temperature: f64, v0: f64) -> Self {
        assert!(temperature > 0.0, "temperature must be positive");
        Self { kind: ProfileKind::TwoStream { temperature, v0 }, mass: 1.0 }
    }

    /// Tabulated profile; the mass is the trapezoidal integral of the samples.
    pub fn tabulated(v_start: f64, dv: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 || !(dv > 0.0) {
            return Err(Error::InvalidArgument("tabulated profile needs >= 2 samples and dv > 0".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite profile sample".into()));
        }
        let mass = trapezoid(&samples) * dv;
        Ok(Self { kind: ProfileKind::Tabulated { v_start, dv, samples }, mass })
    }

    /// Reads a `v,eta` CSV with a uniform `v` column.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty profile table".into()))?
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if header.trim() != "v,eta" {
            return Err(Error::InvalidArgument(format!("bad profile header {header:?}")));
        }
        let mut vs = Vec::new();
        let mut etas = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let mut next = || -> Result<f64> {
                let s = cols.next().ok_or_else(|| Error::InvalidArgument(format!("short row {line:?}")))?;
                s.trim().parse().map_err(|e| Error::InvalidArgument(format!("{s:?}: {e}")))
            };
            vs.push(next()?);
            etas.push(next()?);
        }
        if vs.len() < 2 {
            return Err(Error::InvalidArgument("profile table needs at least two rows".into()));
        }
        let dv = (vs[vs.len() - 1] - vs[0]) / (vs.len() - 1) as f64;
        for (i, v) in vs.iter().enumerate() {
            if (v - (vs[0] + i as f64 * dv)).abs() > 1e-9 * dv.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("non-uniform v grid at row {i}")));
            }
        }
        Self::tabulated(vs[0], dv, etas)
    }

    /// Writes the `v,eta` table of a tabulated profile (17 significant digits).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let ProfileKind::Tabulated { v_start, dv, samples } = &self.kind else {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "only tabulated profiles have a table"));
        };
        writeln!(out, "v,eta")?;
        for (i, eta) in samples.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", v_start + i as f64 * dv, eta)?;
        }
        Ok(())
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `eta(v)` in physical space.
    pub fn density(&self, v: f64) -> f64 {
        use std::f64::consts::PI;
        match &self.kind {
            ProfileKind::Maxwellian { temperature: t } => {
                self.mass * (-v * v / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
            }
            ProfileKind::TwoStream { temperature: t, v0 } => {
                let g = |u: f64| (-u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt();
                self.mass * 0.5 * (g(v - v0) + g(v + v0))
            }
            ProfileKind::Tabulated { v_start, dv, samples } => {
                let u = (v - v_start) / dv;
                if u < 0.0 || u > (samples.len() - 1) as f64 {
                    return 0.0;
                }
                let i = u.floor();
                let w = cubic_weights(u - i);
                let i = i as isize;
                let at = |k: isize| if k < 0 || k as usize >= samples.len() { 0.0 } else { samples[k as usize] };
                w[0] * at(i - 1) + w[1] * at(i) + w[2] * at(i + 1) + w[3] * at(i + 2)
            }
        }
    }

    /// `eta_hat(xi)`: closed form for the analytic kinds, trapezoidal
    /// quadrature over the samples for tabulated ones.
    pub fn hat(&self, xi: f64) -> Complex64 {
        match &self.kind {
            ProfileKind::Maxwellian { temperature: t } => {
                Complex64::new(self.mass * (-t * xi * xi / 2.0).exp(), 0.0)
            }
            ProfileKind::TwoStream { temperature: t, v0 } => {
                Complex64::new(self.mass * (-t * xi * xi / 2.0).exp() * (v0 * xi).cos(), 0.0)
            }
            ProfileKind::Tabulated { v_start, dv, samples } => {
                let last = samples.len() - 1;
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, s) in samples.iter().enumerate() {
                    let w = if i == 0 || i == last { 0.5 } else { 1.0 };
                    let v = v_start + i as f64 * dv;
                    acc += Complex64::from_polar(w * s, -xi * v);
                }
                acc * *dv
            }
        }
    }

    /// Whether [`HomogeneousProfile::hat`] is cheap enough to call per grid node.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self.kind, ProfileKind::Tabulated { .. })
    }
}

fn trapezoid(samples: &[f64]) -> f64 {
    let n = samples.len();
    samples.iter().sum::<f64>() - 0.5 * (samples[0] + samples[n - 1])
}

/// `eta_hat` sampled on a uniform table and read back by cubic interpolation.
///
/// Used by the time stepper for tabulated profiles, whose transform would
/// otherwise cost a full quadrature per grid node and stage.
#[derive(Debug, Clone)]
pub struct HatTable {
    start: f64,
    step: f64,
    values: Vec<Complex64>,
}

impl HatTable {
    pub fn new(profile: &HomogeneousProfile, half_width: f64, step: f64) -> Self {
        let n = (2.0 * half_width / step).ceil() as usize + 1;
        let start = -half_width;
        let values = (0..n).map(|i| profile.hat(start + i as f64 * step)).collect();
        Self { start, step, values }
    }

    pub fn eval(&self, xi: f64) -> Complex64 {
        let u = (xi - self.start) / self.step;
        if u < 0.0 || u > (self.values.len() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = u.floor();
        let w = cubic_weights(u - i);
        let i = i as isize;
        let at = |k: isize| {
            if k < 0 || k as usize >= self.values.len() {
                Complex64::new(0.0, 0.0)
            } else {
                self.values[k as usize]
            }
        };
        at(i - 1) * w[0] + at(i) * w[1] + at(i + 1) * w[2] + at(i + 2) * w[3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// `g_mode(0, xi) = amplitude * e^{-xi^2/2}`.
    Gaussian,
    /// `g_mode(0, xi) = amplitude * <xi>^{-s'}`.
    Algebraic,
}

/// Initial perturbation carried by a single spatial mode (and its mirror).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub mode: i32,
    pub tail_exponent: f64,
    pub amplitude: f64,
    pub envelope: Envelope,
}

impl Perturbation {
    pub fn gaussian(mode: i32, amplitude: f64) -> Self {
        Self { mode, tail_exponent: 0.0, amplitude, envelope: Envelope::Gaussian }
    }

    pub fn algebraic(mode: i32, tail_exponent: f64, amplitude: f64) -> Self {
        Self { mode, tail_exponent, amplitude, envelope: Envelope::Algebraic }
    }

    /// Envelope value at `xi` (both `+-mode` rows carry the same real, even profile).
    pub fn envelope_at(&self, xi: f64) -> f64 {
        match self.envelope {
            Envelope::Gaussian => self.amplitude * (-xi * xi / 2.0).exp(),
            Envelope::Algebraic => self.amplitude * japanese(xi).powf(-self.tail_exponent),
        }
    }
}

/// Reality-symmetric initial field with `g_{+-mode}(0, xi)` set by the envelope.
pub fn synth_initial(p: &Perturbation, grid: &PhaseGrid) -> Result<SpectralField> {
    if !grid.contains_mode(p.mode) {
        return Err(Error::InvalidArgument(format!(
            "perturbation mode {} outside [-{}, {}]",
            p.mode,
            grid.n_max(),
            grid.n_max()
        )));
    }
    if !(p.amplitude >= 0.0) {
        return Err(Error::InvalidArgument(format!("amplitude must be >= 0, got {}", p.amplitude)));
    }
    let mut g = SpectralField::zeros(*grid, true);
    if p.amplitude == 0.0 {
        return Ok(g);
    }
    for mode in [p.mode, -p.mode] {
        let row = g.row_mut(mode);
        for (j, z) in row.iter_mut().enumerate() {
            *z = Complex64::new(p.envelope_at(grid.xi(j)), 0.0);
        }
    }
    Ok(g)
}
