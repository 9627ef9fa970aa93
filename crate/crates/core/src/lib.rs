//! Numerical laboratory for the Vlasov-HMF equation linearized around a
//! homogeneous profile, written in gliding coordinates `g(t, x, v) = r(t, x + tv, v)`.
//!
//! The unknown is stored through its Fourier transform
//! `g_n(xi) = (1/2pi) \int\int g(x, v) e^{-inx - i xi v} dx dv`, for which Parseval
//! holds with constant one. Modules, bottom-up:
//!
//! - [`grid`]: phase grid, spectral fields, weighted Sobolev norms
//! - [`profiles`]: homogeneous profiles and initial perturbations
//! - [`penrose`]: memory kernel, its Fourier-Laplace transform, Nyquist test
//! - [`volterra`]: the linear field equation `zeta = K * zeta + F`
//! - [`sim`]: nonlinear RK4 evolution of `g`
//! - [`diagnostics`]: norm monitors, decay fits, scattering state

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod penrose;
pub mod profiles;
pub mod quadrature;
pub mod sim;
pub mod volterra;

pub use num_complex::Complex64;

pub use diagnostics::{
    decay_fit, q_monitor, scattering_distance, scattering_limit, weak_limit_profile, MonitorVariant, NormMonitor,
    PowerFit, ScatteringLimit,
};
pub use error::{Error, Result};
pub use grid::{sobolev_norm, PhaseGrid, SpectralField};
pub use penrose::{
    critical_parameter, kernel_hat, kernel_k, penrose_check, InteractionKernel, PenroseReport, ScanParams,
};
pub use profiles::{synth_initial, Envelope, HomogeneousProfile, Perturbation, ProfileKind};
pub use sim::{assemble_rhs, extract_zeta, run, step, SimConfig, Simulation, Trajectory};
pub use volterra::{lemvolterra_harness, solve_volterra, RatioRow, SourceSeries, ZetaSeries};
