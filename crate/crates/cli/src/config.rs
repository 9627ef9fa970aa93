//! JSON configuration documents.

use std::fs;
use std::path::{Path, PathBuf};

use hmf_core::penrose::{ScanParams, DEFAULT_KAPPA};
use hmf_core::{Envelope, HomogeneousProfile, InteractionKernel, Perturbation, PhaseGrid, SimConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn one() -> i64 {
    1
}

fn one_usize() -> usize {
    1
}

fn seven() -> u32 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    #[serde(rename = "M")]
    pub m: usize,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub kind: String,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    /// CSV `v,eta` for `kind = "tabulated"`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationDoc {
    pub mode: i32,
    pub envelope: Envelope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_tail: Option<f64>,
    pub amplitude: f64,
}

/// Optional settings for `penrose-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenroseDoc {
    #[serde(default = "default_kappa")]
    pub kappa_target: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_points() -> usize {
    ScanParams::default().points
}

impl Default for PenroseDoc {
    fn default() -> Self {
        Self { kappa_target: default_kappa(), tau_max: None, points: default_points() }
    }
}

impl PenroseDoc {
    pub fn scan(&self) -> ScanParams {
        ScanParams { tau_max: self.tau_max, points: self.points, ..ScanParams::default() }
    }
}

/// Optional settings for `volterra-bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolterraDoc {
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(rename = "T", default = "default_horizons")]
    pub horizons: Vec<f64>,
    #[serde(default = "default_volterra_dt")]
    pub dt: f64,
}

fn default_gammas() -> Vec<f64> {
    vec![2.0, 3.0, 4.0, 5.0, 6.0]
}

fn default_horizons() -> Vec<f64> {
    vec![50.0, 100.0]
}

fn default_volterra_dt() -> f64 {
    0.02
}

impl Default for VolterraDoc {
    fn default() -> Self {
        Self { gammas: default_gammas(), horizons: default_horizons(), dt: default_volterra_dt() }
    }
}

/// The configuration document shared by all subcommands.
///
/// `kernel` and `profile` are always required; the grid and time-stepping keys
/// are required by the subcommands that simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_xi: Option<i64>,
    #[serde(default = "one")]
    pub m0: i64,
    pub kernel: KernelDoc,
    pub profile: ProfileDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "seven")]
    pub s: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penrose: Option<PenroseDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volterra: Option<VolterraDoc>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn required<T: Copy>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Schema(format!("missing key `{key}`")))
}

impl ConfigDoc {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut doc = Self::from_json(&text)?;
        doc.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(doc)
    }

    pub fn interaction_kernel(&self) -> Result<InteractionKernel, CliError> {
        if self.kernel.p.len() != self.kernel.m {
            return Err(CliError::Schema(format!(
                "kernel.M = {} but kernel.p has {} entries",
                self.kernel.m,
                self.kernel.p.len()
            )));
        }
        InteractionKernel::new(self.kernel.p.clone()).map_err(CliError::from)
    }

    pub fn homogeneous_profile(&self) -> Result<HomogeneousProfile, CliError> {
        let p = &self.profile;
        let need_t = || required(p.temperature, "profile.T");
        match p.kind.as_str() {
            "maxwellian" => {
                let t = need_t()?;
                positive(t, "profile.T")?;
                Ok(HomogeneousProfile::maxwellian(t))
            }
            "two_stream" => {
                let t = need_t()?;
                positive(t, "profile.T")?;
                Ok(HomogeneousProfile::two_stream(t, required(p.v0, "profile.v0")?))
            }
            "tabulated" => {
                let rel = p.path.as_ref().ok_or_else(|| CliError::Schema("missing key `profile.path`".into()))?;
                let path = self.base_dir.join(rel);
                let file = fs::File::open(&path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                HomogeneousProfile::read_csv(std::io::BufReader::new(file)).map_err(CliError::from)
            }
            other => Err(CliError::Schema(format!(
                "profile.kind `{other}` is not one of maxwellian, two_stream, tabulated"
            ))),
        }
    }

    pub fn penrose_settings(&self) -> PenroseDoc {
        self.penrose.clone().unwrap_or_default()
    }

    pub fn volterra_settings(&self) -> VolterraDoc {
        self.volterra.clone().unwrap_or_default()
    }

    /// Validated simulation configuration; grid invariants fail with exit code 3.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let kernel = self.interaction_kernel()?;
        let profile = self.homogeneous_profile()?;
        let pd = self.perturbation.as_ref().ok_or_else(|| CliError::Schema("missing key `perturbation`".into()))?;
        let perturbation = match pd.envelope {
            Envelope::Gaussian => Perturbation::gaussian(pd.mode, pd.amplitude),
            Envelope::Algebraic => {
                Perturbation::algebraic(pd.mode, required(pd.s_tail, "perturbation.s_tail")?, pd.amplitude)
            }
        };
        let grid = PhaseGrid::new(
            required(self.n_max, "n_max")?,
            required(self.xi_max, "xi_max")?,
            required(self.n_xi, "n_xi")?,
            self.m0,
        )?;
        let cfg = SimConfig {
            grid,
            kernel,
            profile,
            perturbation,
            epsilon: required(self.epsilon, "epsilon")?,
            dt: required(self.dt, "dt")?,
            t_final: required(self.t_final, "t_final")?,
            record_every: self.record_every,
            s: self.s,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn positive(v: f64, key: &str) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("{key} must be positive, got {v}")))
    }
}

/// Reads and validates a simulation config from `path`.
pub fn parse_config(path: &Path) -> Result<SimConfig, CliError> {
    ConfigDoc::read(path)?.sim_config()
}

/// The JSON document describing `cfg` (tabulated profiles are not representable).
pub fn to_doc(cfg: &SimConfig) -> ConfigDoc {
    use hmf_core::ProfileKind;
    let profile = match cfg.profile.kind() {
        ProfileKind::Maxwellian { temperature } => {
            ProfileDoc { kind: "maxwellian".into(), temperature: Some(*temperature), v0: None, path: None }
        }
        ProfileKind::TwoStream { temperature, v0 } => {
            ProfileDoc { kind: "two_stream".into(), temperature: Some(*temperature), v0: Some(*v0), path: None }
        }
        ProfileKind::Tabulated { .. } => ProfileDoc { kind: "tabulated".into(), temperature: None, v0: None, path: None },
    };
    let p = &cfg.perturbation;
    ConfigDoc {
        n_max: Some(cfg.grid.n_max() as i64),
        xi_max: Some(cfg.grid.xi_max()),
        n_xi: Some(cfg.grid.n_xi() as i64),
        m0: cfg.grid.m0() as i64,
        kernel: KernelDoc { m: cfg.kernel.m(), p: cfg.kernel.coefficients().to_vec() },
        profile,
        perturbation: Some(PerturbationDoc {
            mode: p.mode,
            envelope: p.envelope,
            s_tail: matches!(p.envelope, Envelope::Algebraic).then_some(p.tail_exponent),
            amplitude: p.amplitude,
        }),
        epsilon: Some(cfg.epsilon),
        dt: Some(cfg.dt),
        t_final: Some(cfg.t_final),
        record_every: cfg.record_every,
        s: cfg.s,
        penrose: None,
        volterra: None,
        base_dir: PathBuf::new(),
    }
}
