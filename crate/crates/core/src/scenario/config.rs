//! TOML scenario files. Matrices are row-major arrays of rows.
//!
//! ```toml
//! name = "aircraft-switched"
//!
//! [plant]
//! builtin = "aircraft"            # or an explicit list under [[plant.modes]]
//!
//! [bounds]
//! theta_lower = [[-50.0], [-50.0]]
//! theta_upper = [[50.0], [50.0]]
//! sigma_lower = [-20.0]
//! sigma_upper = [20.0]
//! omega_lower = [[0.5]]
//! omega_upper = [[1.5]]
//!
//! [[realization]]                 # one entry shared by all modes, or one per mode
//! omega = [[1.2]]
//! theta = [[-40.0], [-40.0]]
//! sigma = [1.0]
//!
//! [switching]
//! interval = 20.0
//! modes = [0, 1, 2, 3, 4, 5]
//!
//! [[command]]
//! time = 10.0
//! value = [1.0]
//!
//! [controller]
//! gamma = 1e4
//! filter = { kind = "constant", gain = 12.566370614359172 }
//! kp = "identity"
//!
//! [simulation]
//! t_final = 120.0
//! dt = 1e-4
//! ```

use serde::{Deserialize, Serialize};

use crate::controller::adaptive::FeedforwardMode;
use crate::controller::filter::{FilterDoc, FilterSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::scenario::aircraft::aircraft_models;
use crate::sim::signals::{CommandSignal, SwitchingSignal};
use crate::sim::system::LtiSubsystem;
use crate::sim::uncertainty::{MatrixTrajectory, ModeUncertainty, Sinusoid, UncertaintyBounds, UncertaintyRealization};
use crate::stability::bounds::DEFAULT_A;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub plant: PlantConfig,
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub realization: Vec<RealizationConfig>,
    pub switching: SwitchingConfig,
    #[serde(default)]
    pub command: Vec<CommandStep>,
    pub controller: ControllerSettings,
    pub simulation: SimulationSettings,
    #[serde(default, skip_serializing_if = "OutputSettings::is_empty")]
    pub output: OutputSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinPlant>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<LtiSubsystem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinPlant {
    /// The six transport-aircraft models, 162 down to 137 knots.
    Aircraft,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub theta_lower: Vec<Vec<f64>>,
    pub theta_upper: Vec<Vec<f64>>,
    pub sigma_lower: Vec<f64>,
    pub sigma_upper: Vec<f64>,
    pub omega_lower: Vec<Vec<f64>>,
    pub omega_upper: Vec<Vec<f64>>,
    #[serde(default)]
    pub d_theta: f64,
    #[serde(default)]
    pub d_sigma: f64,
}

/// True parameters for one mode (or all modes). Optional sinusoid
/// amplitudes and frequencies (rad/s) ride on the θ and σ offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationConfig {
    pub omega: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_amplitude: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_frequency: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_amplitude: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_frequency: Option<Vec<f64>>,
}

/// Either explicit `times`, or a fixed `interval` between the listed modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingConfig {
    pub modes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandStep {
    pub time: f64,
    pub value: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSettings {
    pub gamma: f64,
    pub filter: FilterDoc,
    #[serde(default = "default_kp")]
    pub kp: FeedforwardMode,
    #[serde(default = "default_a_star")]
    pub a_star: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    /// Certificate file to load instead of solving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

impl OutputSettings {
    fn is_empty(&self) -> bool {
        self.dir.is_none()
    }
}

fn default_kp() -> FeedforwardMode {
    FeedforwardMode::DcGain
}
fn default_a_star() -> f64 {
    0.5
}
fn default_a() -> f64 {
    DEFAULT_A
}
fn default_dt() -> f64 {
    1e-4
}
fn default_record_every() -> usize {
    1
}

/// Validated objects built from a [`ScenarioConfig`].
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub family: Vec<LtiSubsystem>,
    pub bounds: UncertaintyBounds,
    pub realization: UncertaintyRealization,
    pub switching: SwitchingSignal,
    pub command: CommandSignal,
    pub filter: FilterSpec,
    pub kp: Vec<Matrix>,
    pub gamma: f64,
    pub a_star: f64,
    pub a: f64,
    pub certificate_path: Option<String>,
    pub t_final: f64,
    pub dt: f64,
    pub x0: Vector,
    pub record_every: usize,
    pub output_dir: Option<String>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<Scenario> {
        let family = match (&self.plant.builtin, self.plant.modes.is_empty()) {
            (Some(BuiltinPlant::Aircraft), true) => aircraft_models(),
            (None, false) => self.plant.modes.clone(),
            (Some(_), false) => return Err(Error::Config("plant: give either `builtin` or `modes`, not both".into())),
            (None, true) => return Err(Error::Config("plant: missing `builtin` or `modes`".into())),
        };
        let n = family[0].n();
        let m = family[0].m();
        if family.iter().any(|s| s.n() != n || s.m() != m) {
            return Err(Error::Config("plant: all modes must have the same dimensions".into()));
        }
        let b = &self.bounds;
        let bounds = UncertaintyBounds::new(
            shaped(&b.theta_lower, n, m, "bounds.theta_lower")?,
            shaped(&b.theta_upper, n, m, "bounds.theta_upper")?,
            vector(&b.sigma_lower, m, "bounds.sigma_lower")?,
            vector(&b.sigma_upper, m, "bounds.sigma_upper")?,
            shaped(&b.omega_lower, m, m, "bounds.omega_lower")?,
            shaped(&b.omega_upper, m, m, "bounds.omega_upper")?,
            b.d_theta,
            b.d_sigma,
        )?;
        let realization = match self.realization.len() {
            0 => UncertaintyRealization::nominal(n, m),
            1 => UncertaintyRealization::uniform(self.realization[0].build(n, m)?),
            k if k == family.len() => UncertaintyRealization::per_mode(
                self.realization.iter().map(|r| r.build(n, m)).collect::<Result<Vec<_>>>()?,
            )?,
            k => return Err(Error::Config(format!("realization: {k} entries for {} modes", family.len()))),
        };
        realization.validate(&bounds, family.len())?;
        let switching = self.switching.build()?;
        switching.validate_modes(family.len())?;
        let command = CommandSignal::new(
            m,
            self.command
                .iter()
                .map(|c| Ok((c.time, vector(&c.value, m, "command.value")?)))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let c = &self.controller;
        let filter = c.filter.build(m)?;
        let kp = c.kp.resolve(&family)?;
        let x0 = match &self.simulation.x0 {
            Some(v) => vector(v, n, "simulation.x0")?,
            None => Vector::zeros(n),
        };
        if !(c.gamma > 0.0) {
            return Err(Error::Config(format!("controller.gamma must be positive, got {}", c.gamma)));
        }
        if !(c.a > 0.0 && c.a < c.a_star && c.a_star < 1.0) {
            return Err(Error::Config("controller: need 0 < a < a_star < 1".into()));
        }
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            family,
            bounds,
            realization,
            switching,
            command,
            filter,
            kp,
            gamma: c.gamma,
            a_star: c.a_star,
            a: c.a,
            certificate_path: c.certificate.clone(),
            t_final: self.simulation.t_final,
            dt: self.simulation.dt,
            x0,
            record_every: self.simulation.record_every.max(1),
            output_dir: self.output.dir.clone(),
        })
    }
}

impl SwitchingConfig {
    fn build(&self) -> Result<SwitchingSignal> {
        let times = match (&self.times, self.interval) {
            (Some(t), None) => t.clone(),
            (None, Some(h)) => (0..self.modes.len()).map(|k| k as f64 * h).collect(),
            _ => return Err(Error::Config("switching: give exactly one of `times` or `interval`".into())),
        };
        let dwell = match (self.dwell_time, self.modes.len()) {
            (Some(d), _) => d,
            (None, 1) => f64::INFINITY,
            (None, _) => times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min),
        };
        if self.modes.len() == 1 && times == [0.0] && dwell.is_infinite() {
            return Ok(SwitchingSignal::constant(self.modes[0]));
        }
        SwitchingSignal::new(times, self.modes.clone(), dwell)
    }
}

impl RealizationConfig {
    fn build(&self, n: usize, m: usize) -> Result<ModeUncertainty> {
        let omega = shaped(&self.omega, m, m, "realization.omega")?;
        let theta = trajectory(
            shaped(&self.theta, n, m, "realization.theta")?,
            self.theta_amplitude.as_ref().map(|a| shaped(a, n, m, "realization.theta_amplitude")).transpose()?,
            self.theta_frequency.as_ref().map(|a| shaped(a, n, m, "realization.theta_frequency")).transpose()?,
        )?;
        let col = |v: &Vec<f64>, what: &str| vector(v, m, what).map(|v| Matrix::from_column_slice(m, 1, v.as_slice()));
        let sigma = trajectory(
            col(&self.sigma, "realization.sigma")?,
            self.sigma_amplitude.as_ref().map(|a| col(a, "realization.sigma_amplitude")).transpose()?,
            self.sigma_frequency.as_ref().map(|a| col(a, "realization.sigma_frequency")).transpose()?,
        )?;
        Ok(ModeUncertainty { omega, theta, sigma })
    }
}

fn trajectory(offset: Matrix, amplitude: Option<Matrix>, frequency: Option<Matrix>) -> Result<MatrixTrajectory> {
    match (amplitude, frequency) {
        (None, None) => Ok(MatrixTrajectory::constant(offset)),
        (Some(a), Some(f)) => MatrixTrajectory::sinusoidal(
            offset.nrows(),
            offset.ncols(),
            (0..offset.len())
                .map(|k| Sinusoid { offset: offset[k], amplitude: a[k], frequency: f[k] })
                .collect(),
        ),
        _ => Err(Error::Config("realization: amplitude and frequency must be given together".into())),
    }
}

fn shaped(rows: &[Vec<f64>], r: usize, c: usize, what: &str) -> Result<Matrix> {
    let m = linalg::from_rows(rows).map_err(|e| Error::Config(format!("{what}: {e}")))?;
    if m.shape() != (r, c) {
        return Err(Error::Config(format!("{what}: expected {r}×{c}, got {}×{}", m.nrows(), m.ncols())));
    }
    Ok(m)
}

fn vector(v: &[f64], len: usize, what: &str) -> Result<Vector> {
    if v.len() != len {
        return Err(Error::Config(format!("{what}: expected {len} entries, got {}", v.len())));
    }
    Ok(Vector::from_column_slice(v))
}
