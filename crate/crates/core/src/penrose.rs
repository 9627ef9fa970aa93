//! Linearization kernel `K(n, t)`, its Fourier-Laplace transform on the closed
//! lower half-plane, and a Nyquist (winding number) test of the Penrose
//! condition `inf_{Im tau <= 0} |1 - K_hat(n, tau)| >= kappa`.
//!
//! `K_hat(n, .)` is holomorphic in `Im tau < 0` and vanishes at infinity
//! there, so by the argument principle `1 - K_hat` has no zeros in the open
//! lower half-plane iff the real-axis curve `tau -> 1 - K_hat(n, tau)` does
//! not wind around the origin. The half-plane infimum is then attained on the
//! real axis and a one-dimensional scan is enough.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::japanese;
use crate::profiles::HomogeneousProfile;
use crate::quadrature::integrate_panels;

/// Default stability margin when the caller does not supply one.
pub const DEFAULT_KAPPA: f64 = 1e-2;

/// Truncation level of the time integral defining `K_hat`.
const KERNEL_FLOOR: f64 = 1e-16;

/// Fourier coefficients `p_k` (`k = 1..=M`, with `p_{-k} = p_k`) of the interaction `P(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionKernel {
    p: Vec<f64>,
}

impl InteractionKernel {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidArgument("kernel needs at least one mode".into()));
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("kernel coefficients must be finite".into()));
        }
        Ok(Self { p })
    }

    /// `P(x) = cos(x)`: `p_{+-1} = 1/2`.
    pub fn cosine() -> Self {
        Self { p: vec![0.5] }
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.p
    }

    /// `p_n`, zero for `n = 0` and `|n| > M`.
    pub fn p(&self, n: i32) -> f64 {
        let k = n.unsigned_abs() as usize;
        if k == 0 || k > self.p.len() {
            0.0
        } else {
            self.p[k - 1]
        }
    }

    /// Positive modes with `p_k != 0`, ascending.
    pub fn active_modes(&self) -> Vec<i32> {
        (1..=self.p.len() as i32).filter(|&k| self.p(k) != 0.0).collect()
    }

    /// `+-k` for every active `k`, ordered `-M..=M`.
    pub fn signed_modes(&self) -> Vec<i32> {
        let pos = self.active_modes();
        pos.iter().rev().map(|k| -k).chain(pos.iter().copied()).collect()
    }
}

/// `K(n, t) = -n p_n n t eta_hat(n t) 1_{t >= 0}`.
pub fn kernel_k(ik: &InteractionKernel, profile: &HomogeneousProfile, n: i32, t: f64) -> Complex64 {
    let pn = ik.p(n);
    if t < 0.0 || pn == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let nf = n as f64;
    profile.hat(nf * t) * (-nf * pn * nf * t)
}

/// Transform `tau -> \int_0^\infty e^{-i tau t} K(n, t) dt` for one mode.
#[derive(Debug, Clone)]
pub struct KernelTransform {
    ik: InteractionKernel,
    profile: HomogeneousProfile,
    n: i32,
    t_cut: f64,
}

impl KernelTransform {
    pub fn new(ik: &InteractionKernel, profile: &HomogeneousProfile, n: i32) -> Self {
        let t_cut = kernel_cutoff(ik, profile, n);
        Self { ik: ik.clone(), profile: profile.clone(), n, t_cut }
    }

    /// Time beyond which `|K(n, t)| < 1e-16`.
    pub fn t_cut(&self) -> f64 {
        self.t_cut
    }

    pub fn eval(&self, tau: Complex64) -> Result<Complex64> {
        if tau.im > 0.0 {
            return Err(Error::UpperHalfPlane(tau.im));
        }
        if self.t_cut == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let ik = &self.ik;
        let profile = &self.profile;
        let n = self.n;
        let integrand = |t: f64| {
            // e^{-i tau t} = e^{-i Re(tau) t} e^{Im(tau) t}
            Complex64::from_polar((tau.im * t).exp(), -tau.re * t) * kernel_k(ik, profile, n, t)
        };
        let panel = if tau.re.abs() > 1e-12 { (PI / tau.re.abs()).min(0.5) } else { 0.5 };
        Ok(integrate_panels(&integrand, 0.0, self.t_cut, panel, 1e-12).value)
    }
}

fn kernel_cutoff(ik: &InteractionKernel, profile: &HomogeneousProfile, n: i32) -> f64 {
    if ik.p(n) == 0.0 {
        return 0.0;
    }
    let mag = |t: f64| kernel_k(ik, profile, n, t).norm();
    let mut span = 1.0;
    loop {
        let quiet = (0..=64).all(|i| mag(span + span * i as f64 / 64.0) < KERNEL_FLOOR);
        if quiet || span >= 1e4 {
            break;
        }
        span *= 2.0;
    }
    // Walk back to the last sample that is still above the floor.
    let steps = 4096;
    let h = 2.0 * span / steps as f64;
    let last = (0..=steps).rev().find(|&i| mag(i as f64 * h) >= KERNEL_FLOOR).unwrap_or(0);
    ((last + 1) as f64 * h).min(2.0 * span)
}

/// `K_hat(n, tau)` for `Im tau <= 0`.
pub fn kernel_hat(ik: &InteractionKernel, profile: &HomogeneousProfile, n: i32, tau: Complex64) -> Result<Complex64> {
    if tau.im > 0.0 {
        return Err(Error::UpperHalfPlane(tau.im));
    }
    KernelTransform::new(ik, profile, n).eval(tau)
}

/// Real-axis scan settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Half-width of the scan; chosen automatically from the `<tau>^{-2}` decay if `None`.
    pub tau_max: Option<f64>,
    /// Initial number of uniform samples.
    pub points: usize,
    /// Maximum bisection depth when refining a segment.
    pub max_depth: u32,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self { tau_max: None, points: 801, max_depth: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub n: i32,
    pub winding: i32,
    /// Minimum of `|1 - K_hat(n, tau)|` over the sampled real axis.
    pub min_abs: f64,
    /// Half-plane infimum estimate: `min_abs` when the winding number is 0, else 0.
    pub kappa_est: f64,
    pub stable: bool,
    pub tau_max: f64,
    /// `sup <tau>^2 |K_hat|` over the scan.
    pub decay_constant: f64,
    pub t_cut: f64,
    /// `(tau, Re K_hat, Im K_hat)` samples.
    pub tau_scan: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenroseReport {
    pub kappa_target: f64,
    pub stable: bool,
    pub kappa_est: f64,
    pub modes: Vec<ModeReport>,
}

fn scan_mode(tr: &KernelTransform, kappa_target: f64, scan: &ScanParams) -> Result<ModeReport> {
    let n = tr.n;
    let at = |tau: f64| tr.eval(Complex64::new(tau, 0.0));
    let tau_max = match scan.tau_max {
        Some(t) => t,
        None => {
            let mut t: f64 = 4.0;
            while t < 1e5 && (at(t)?.norm() >= kappa_target / 10.0 || at(-t)?.norm() >= kappa_target / 10.0) {
                t *= 2.0;
            }
            t
        }
    };
    let points = scan.points.max(3) | 1;
    let mut taus = Vec::with_capacity(points);
    let mut vals = Vec::with_capacity(points);
    let mut prev: Option<(f64, Complex64)> = None;
    for i in 0..points {
        let tau = -tau_max + 2.0 * tau_max * i as f64 / (points - 1) as f64;
        let k = at(tau)?;
        if let Some((tp, kp)) = prev {
            refine(tr, (tp, kp), (tau, k), 0, scan.max_depth, &mut taus, &mut vals)?;
        }
        taus.push(tau);
        vals.push(k);
        prev = Some((tau, k));
    }

    let curve: Vec<Complex64> = vals.iter().map(|k| Complex64::new(1.0, 0.0) - k).collect();
    let min_abs = curve.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
    let winding = if min_abs == 0.0 {
        0
    } else {
        let mut total = 0.0;
        for i in 0..curve.len() {
            let next = curve[(i + 1) % curve.len()];
            total += (next / curve[i]).arg();
        }
        (total / (2.0 * PI)).round() as i32
    };
    let kappa_est = if winding == 0 && min_abs > 0.0 { min_abs } else { 0.0 };
    let decay_constant = taus.iter().zip(&vals).fold(0.0_f64, |m, (t, k)| m.max(japanese(*t).powi(2) * k.norm()));
    Ok(ModeReport {
        n,
        winding,
        min_abs,
        kappa_est,
        stable: winding == 0 && min_abs >= kappa_target,
        tau_max,
        decay_constant,
        t_cut: tr.t_cut(),
        tau_scan: taus.iter().zip(&vals).map(|(t, k)| [*t, k.re, k.im]).collect(),
    })
}

// Inserts midpoints between `a` and `b` (exclusive) until consecutive curve
// points subtend at most pi/4 about the origin.
fn refine(
    tr: &KernelTransform,
    a: (f64, Complex64),
    b: (f64, Complex64),
    depth: u32,
    max_depth: u32,
    taus: &mut Vec<f64>,
    vals: &mut Vec<Complex64>,
) -> Result<()> {
    let one = Complex64::new(1.0, 0.0);
    let (za, zb) = (one - a.1, one - b.1);
    if za.norm() == 0.0 || zb.norm() == 0.0 {
        return Ok(());
    }
    let angle = (zb / za).arg().abs();
    if angle <= PI / 4.0 {
        return Ok(());
    }
    if depth >= max_depth {
        if angle > PI / 2.0 {
            return Err(Error::ScanTooCoarse { mode: tr.n, tau: 0.5 * (a.0 + b.0) });
        }
        return Ok(());
    }
    let tm = 0.5 * (a.0 + b.0);
    let km = tr.eval(Complex64::new(tm, 0.0))?;
    refine(tr, a, (tm, km), depth + 1, max_depth, taus, vals)?;
    taus.push(tm);
    vals.push(km);
    refine(tr, (tm, km), b, depth + 1, max_depth, taus, vals)
}

/// Penrose check for every `n >= 1` with `p_n != 0`.
///
/// `K(-n, t) = conj K(n, t)` for real profiles, so negative modes mirror the
/// positive ones and are not scanned.
pub fn penrose_check(
    ik: &InteractionKernel,
    profile: &HomogeneousProfile,
    kappa_target: f64,
    scan: &ScanParams,
) -> Result<PenroseReport> {
    let modes = ik.active_modes();
    let reports: Vec<Result<ModeReport>> = modes
        .par_iter()
        .map(|&n| scan_mode(&KernelTransform::new(ik, profile, n), kappa_target, scan))
        .collect();
    let modes = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let stable = modes.iter().all(|m| m.stable);
    let kappa_est = modes.iter().fold(1.0_f64, |m, r| m.min(r.kappa_est));
    Ok(PenroseReport { kappa_target, stable, kappa_est, modes })
}

/// Bisection on the stability verdict over a one-parameter family.
///
/// The verdict must differ at the bracket ends; returns the midpoint of the
/// final bracket of width `<= width`.
pub fn critical_parameter<F>(
    family: F,
    bracket: (f64, f64),
    width: f64,
    kappa_target: f64,
    scan: &ScanParams,
) -> Result<f64>
where
    F: Fn(f64) -> (InteractionKernel, HomogeneousProfile),
{
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("degenerate bracket [{lo}, {hi}]")));
    }
    let verdict = |x: f64| -> Result<bool> {
        let (ik, p) = family(x);
        Ok(penrose_check(&ik, &p, kappa_target, scan)?.stable)
    };
    let v_lo = verdict(lo)?;
    let v_hi = verdict(hi)?;
    if v_lo == v_hi {
        return Err(Error::SameVerdict(if v_lo { "stable" } else { "unstable" }));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if verdict(mid)? == v_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Growth rate `lambda > 0` with `1 - K_hat(n, -i lambda) = 0`, if `1 - K_hat(n, 0) < 0`.
///
/// For an even profile the map `lambda -> 1 - K_hat(n, -i lambda)` is real and
/// tends to 1 as `lambda -> infinity`, so a sign change brackets the root.
pub fn unstable_root(ik: &InteractionKernel, profile: &HomogeneousProfile, n: i32) -> Result<Option<f64>> {
    let tr = KernelTransform::new(ik, profile, n);
    let f = |lam: f64| -> Result<f64> { Ok(1.0 - tr.eval(Complex64::new(0.0, -lam))?.re) };
    if f(0.0)? >= 0.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kernel_values() {
        let ik = InteractionKernel::cosine();
        let m = HomogeneousProfile::maxwellian(1.0);
        let k = kernel_k(&ik, &m, 1, 1.0);
        assert!((k.re + 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((k.re + 0.303265).abs() < 1e-6);
        assert_eq!(kernel_k(&ik, &m, 1, -0.5), c(0.0, 0.0));
        assert_eq!(kernel_k(&ik, &m, 2, 1.0), c(0.0, 0.0));

        let anti = InteractionKernel::new(vec![-0.5]).unwrap();
        let cold = HomogeneousProfile::maxwellian(0.5);
        let k = kernel_k(&anti, &cold, 1, 2.0);
        assert!((k.re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn kernel_transform_at_zero_frequency() {
        let m = HomogeneousProfile::maxwellian(1.0);
        let v = kernel_hat(&InteractionKernel::cosine(), &m, 1, c(0.0, 0.0)).unwrap();
        assert!((v - c(-0.5, 0.0)).norm() < 1e-10);
        for &t in &[0.4, 0.7, 2.0] {
            let p = HomogeneousProfile::maxwellian(t);
            let anti = InteractionKernel::new(vec![-0.5]).unwrap();
            let v = kernel_hat(&anti, &p, 1, c(0.0, 0.0)).unwrap();
            assert!((v.re - 1.0 / (2.0 * t)).abs() < 1e-10, "T = {t}");
        }
        let zero = InteractionKernel::new(vec![0.0]).unwrap();
        assert_eq!(kernel_hat(&zero, &m, 1, c(3.0, -1.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn upper_half_plane_rejected() {
        let m = HomogeneousProfile::maxwellian(1.0);
        let e = kernel_hat(&InteractionKernel::cosine(), &m, 1, c(1.0, 0.1));
        assert_eq!(e, Err(Error::UpperHalfPlane(0.1)));
    }

    #[test]
    fn conjugacy_of_transform() {
        let m = HomogeneousProfile::two_stream(0.6, 0.8);
        let tr = KernelTransform::new(&InteractionKernel::cosine(), &m, 1);
        for &tau in &[c(0.7, 0.0), c(-2.3, -0.4), c(5.0, -1.5)] {
            let a = tr.eval(tau).unwrap();
            let b = tr.eval(c(-tau.re, tau.im)).unwrap();
            assert!((b - a.conj()).norm() < 1e-11);
        }
    }

    #[test]
    fn kernel_decay_bounds() {
        let ik = InteractionKernel::cosine();
        for &t in &[0.5, 1.0, 3.0] {
            let m = HomogeneousProfile::maxwellian(t);
            let sup = (0..=10_000)
                .map(|i| {
                    let s = i as f64 * 0.01;
                    kernel_k(&ik, &m, 1, s).norm() * japanese(s).powi(4)
                })
                .fold(0.0_f64, f64::max);
            assert!(sup.is_finite() && sup < 100.0, "T = {t}: {sup}");
            let far = kernel_k(&ik, &m, 1, 60.0).norm() * japanese(60.0).powi(4);
            assert!(far < 1e-6 * sup);
        }
    }

    #[test]
    fn cosine_maxwellian_is_stable() {
        let m = HomogeneousProfile::maxwellian(1.0);
        let r = penrose_check(&InteractionKernel::cosine(), &m, DEFAULT_KAPPA, &ScanParams::default()).unwrap();
        assert!(r.stable);
        assert_eq!(r.modes.len(), 1);
        assert_eq!(r.modes[0].winding, 0);
        assert!(r.modes[0].decay_constant < 10.0);
    }

    #[test]
    fn cold_attractive_maxwellian_is_unstable() {
        let anti = InteractionKernel::new(vec![-0.5]).unwrap();
        let m = HomogeneousProfile::maxwellian(0.4);
        let r = penrose_check(&anti, &m, DEFAULT_KAPPA, &ScanParams::default()).unwrap();
        assert!(!r.stable);
        assert_ne!(r.modes[0].winding, 0);
        assert_eq!(r.kappa_est, 0.0);
        let lam = unstable_root(&anti, &m, 1).unwrap().unwrap();
        let residual = 1.0 - kernel_hat(&anti, &m, 1, c(0.0, -lam)).unwrap().re;
        assert!(residual.abs() < 1e-9);
        assert!(unstable_root(&InteractionKernel::cosine(), &m, 1).unwrap().is_none());
    }

    #[test]
    fn zero_kernel_is_trivially_stable() {
        let zero = InteractionKernel::new(vec![0.0, 0.0]).unwrap();
        let m = HomogeneousProfile::maxwellian(1.0);
        let r = penrose_check(&zero, &m, DEFAULT_KAPPA, &ScanParams::default()).unwrap();
        assert!(r.stable);
        assert_eq!(r.kappa_est, 1.0);
        assert!(r.modes.is_empty());
    }

    #[test]
    fn winding_is_invariant_under_refinement() {
        let anti = InteractionKernel::new(vec![-0.5]).unwrap();
        for &t in &[0.3, 0.45, 0.6, 1.0] {
            let m = HomogeneousProfile::maxwellian(t);
            let coarse = ScanParams { points: 401, ..Default::default() };
            let fine = ScanParams { points: 801, ..Default::default() };
            let a = penrose_check(&anti, &m, 1e-3, &coarse).unwrap();
            let b = penrose_check(&anti, &m, 1e-3, &fine).unwrap();
            assert_eq!(a.modes[0].winding, b.modes[0].winding, "T = {t}");
            assert_eq!(a.stable, b.stable);
        }
    }

    #[test]
    fn critical_parameter_errors() {
        let fam = |t: f64| (InteractionKernel::cosine(), HomogeneousProfile::maxwellian(t));
        let e = critical_parameter(fam, (0.1, 1.0), 1e-3, 1e-4, &ScanParams::default());
        assert_eq!(e, Err(Error::SameVerdict("stable")));
        let e = critical_parameter(fam, (0.5, 0.5), 1e-3, 1e-4, &ScanParams::default());
        assert!(matches!(e, Err(Error::InvalidArgument(_))));
    }
}
