//! Short-period models of a transport aircraft at six airspeeds.
//! State `[angle of attack (deg), pitch rate (deg/s)]`, input elevator (deg).

use crate::controller::adaptive::FeedforwardMode;
use crate::controller::filter::FilterDoc;
use crate::linalg::{self, Matrix};
use crate::scenario::config::{
    BoundsConfig, BuiltinPlant, CommandStep, ControllerSettings, OutputSettings, PlantConfig, RealizationConfig,
    ScenarioConfig, SimulationSettings, SwitchingConfig,
};
use crate::sim::system::LtiSubsystem;

/// Airspeeds in knots, in the order of [`AIRCRAFT_A`] and [`AIRCRAFT_B`].
pub const AIRSPEEDS_KT: [u32; 6] = [162, 157, 152, 147, 142, 137];

pub const AIRCRAFT_A: [[[f64; 2]; 2]; 6] = [
    [[-0.5301, 0.9273], [-0.9106, -0.6871]],
    [[-0.5272, 0.9289], [-0.8557, -0.6580]],
    [[-0.5201, 0.9305], [-0.7229, -0.6279]],
    [[-0.5168, 0.9322], [-0.6618, -0.5960]],
    [[-0.5171, 0.9339], [-0.6669, -0.5637]],
    [[-0.5147, 0.9357], [-0.6219, -0.5309]],
];

pub const AIRCRAFT_B: [[f64; 2]; 6] = [
    [-0.0009, -0.0168],
    [-0.0008, -0.0154],
    [-0.0008, -0.0141],
    [-0.0007, -0.0132],
    [-0.0007, -0.0123],
    [-0.0006, -0.0115],
];

/// Model at index `i` of [`AIRSPEEDS_KT`], labelled by its airspeed. The
/// output matrix is not part of the data set and is left at zero.
pub fn aircraft_model(i: usize) -> LtiSubsystem {
    let a = Matrix::from_fn(2, 2, |r, c| AIRCRAFT_A[i][r][c]);
    let b = Matrix::from_column_slice(2, 1, &AIRCRAFT_B[i]);
    LtiSubsystem::without_output(format!("{}kt", AIRSPEEDS_KT[i]), a, b).expect("built-in aircraft data is well formed")
}

/// All six models, fastest first.
pub fn aircraft_models() -> Vec<LtiSubsystem> {
    (0..AIRSPEEDS_KT.len()).map(aircraft_model).collect()
}

/// Seconds each model is active in the demo schedule.
pub const DEMO_INTERVAL: f64 = 20.0;

/// Offset of the 1° elevator step within each interval.
pub const DEMO_STEP_OFFSET: f64 = 10.0;

/// Demo variants: the switched reference design, or one reference design
/// at 162 kt used for every true plant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoVariant {
    Switched,
    Fixed,
}

impl std::str::FromStr for DemoVariant {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "switched" => Ok(Self::Switched),
            "fixed" => Ok(Self::Fixed),
            other => Err(crate::error::Error::Config(format!("unknown variant `{other}`; expected switched or fixed"))),
        }
    }
}

impl std::fmt::Display for DemoVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Switched => "switched",
            Self::Fixed => "fixed",
        })
    }
}

fn design_bounds() -> BoundsConfig {
    BoundsConfig {
        theta_lower: vec![vec![-50.0], vec![-50.0]],
        theta_upper: vec![vec![50.0], vec![50.0]],
        sigma_lower: vec![-20.0],
        sigma_upper: vec![20.0],
        omega_lower: vec![vec![0.5]],
        omega_upper: vec![vec![1.5]],
        d_theta: 0.0,
        d_sigma: 0.0,
    }
}

/// Step to 1° at each interval midpoint, back to 0° at the interval end.
fn demo_command() -> Vec<CommandStep> {
    (0..AIRSPEEDS_KT.len())
        .flat_map(|k| {
            let start = k as f64 * DEMO_INTERVAL;
            let up = CommandStep { time: start + DEMO_STEP_OFFSET, value: vec![1.0] };
            let down = CommandStep { time: start + DEMO_INTERVAL, value: vec![0.0] };
            [up, down]
        })
        .filter(|c| c.time < AIRSPEEDS_KT.len() as f64 * DEMO_INTERVAL)
        .collect()
}

fn demo_config(name: &str, plant: PlantConfig, realization: Vec<RealizationConfig>) -> ScenarioConfig {
    let modes = AIRSPEEDS_KT.len();
    ScenarioConfig {
        name: Some(name.into()),
        plant,
        bounds: design_bounds(),
        realization,
        switching: SwitchingConfig {
            modes: (0..modes).collect(),
            times: None,
            interval: Some(DEMO_INTERVAL),
            dwell_time: None,
        },
        command: demo_command(),
        controller: ControllerSettings {
            gamma: 1e4,
            filter: FilterDoc::Constant { gain: 4.0 * std::f64::consts::PI },
            kp: FeedforwardMode::Identity,
            a_star: 0.5,
            a: crate::stability::bounds::DEFAULT_A,
            certificate: None,
        },
        simulation: SimulationSettings {
            t_final: modes as f64 * DEMO_INTERVAL,
            dt: 1e-4,
            x0: Some(vec![0.0, 0.0]),
            record_every: 10,
        },
        output: OutputSettings::default(),
    }
}

/// Six models switched every 20 s, fastest first, with `ω = 1.2`,
/// `θ = [−40; −40]`, `σ = 1` in every mode.
pub fn switched_demo_config() -> ScenarioConfig {
    demo_config(
        "aircraft-switched",
        PlantConfig { builtin: Some(BuiltinPlant::Aircraft), modes: Vec::new() },
        vec![RealizationConfig {
            omega: vec![vec![1.2]],
            theta: vec![vec![-40.0], vec![-40.0]],
            sigma: vec![1.0],
            theta_amplitude: None,
            theta_frequency: None,
            sigma_amplitude: None,
            sigma_frequency: None,
        }],
    )
}

/// Every mode uses the 162 kt model as its reference design. The true
/// plant of mode `i` is expressed through `ω_i = B₁₆₂†B_i` and
/// `θ_iᵀ = B₁₆₂†(A_i − A₁₆₂)`; the part of `A_i − A₁₆₂` outside the range
/// of `B₁₆₂` cannot be represented as matched uncertainty and is dropped.
pub fn fixed_demo_config() -> ScenarioConfig {
    let design = aircraft_model(0);
    let pinv = design.b_pinv();
    let plant_modes = (0..AIRSPEEDS_KT.len())
        .map(|i| {
            LtiSubsystem::without_output(format!("162kt-for-{}kt", AIRSPEEDS_KT[i]), design.a().clone(), design.b().clone())
                .expect("built-in aircraft data is well formed")
        })
        .collect();
    let realization = aircraft_models()
        .iter()
        .map(|sys| {
            let omega = &pinv * sys.b();
            let theta = (&pinv * (sys.a() - design.a())).transpose();
            RealizationConfig {
                omega: linalg::to_rows(&omega),
                theta: linalg::to_rows(&theta),
                sigma: vec![0.0],
                theta_amplitude: None,
                theta_frequency: None,
                sigma_amplitude: None,
                sigma_frequency: None,
            }
        })
        .collect();
    demo_config("aircraft-fixed", PlantConfig { builtin: None, modes: plant_modes }, realization)
}

pub fn demo_config_for(variant: DemoVariant) -> ScenarioConfig {
    match variant {
        DemoVariant::Switched => switched_demo_config(),
        DemoVariant::Fixed => fixed_demo_config(),
    }
}
