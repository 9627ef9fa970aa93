use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid m0 is {grid} but the norm was requested with m0 = {requested}")]
    WeightMismatch { grid: u32, requested: u32 },

    #[error("xi = {xi} lies outside the interpolation window [-{limit}, {limit}]")]
    OutOfRange { xi: f64, limit: f64 },

    #[error("Im(tau) = {0} > 0 lies outside the closed lower half-plane")]
    UpperHalfPlane(f64),

    #[error("Nyquist scan too coarse for mode {mode} near tau = {tau}: refinement limit reached")]
    ScanTooCoarse { mode: i32, tau: f64 },

    #[error("stability verdict is {0} at both ends of the bracket")]
    SameVerdict(&'static str),

    #[error("step-size failure: |1 - dt/2 K(0)| = {0:e} is too small, reduce dt")]
    StepSize(f64),

    #[error("profile fails the Penrose check (mode {mode}, kappa_est = {kappa:e}, winding = {winding})")]
    Unstable { mode: i32, kappa: f64, winding: i32 },

    #[error("non-finite state at t = {t}: {detail}")]
    NonFinite { t: f64, detail: String },

    #[error("xi_max = {xi_max} is too small: need xi_max >= n_max*t_final + 4*dxi = {shift} + 4*dxi, i.e. xi_max >= {required} at this n_xi")]
    XiWindow { xi_max: f64, shift: f64, required: f64 },

    #[error("fit window [{t_a}, {t_b}] unusable: {reason}")]
    FitWindow { t_a: f64, t_b: f64, reason: String, usable: Option<(f64, f64)> },

    #[error("scattering limit needs a trajectory recorded at every step (record_every = {0})")]
    RecordEvery(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
