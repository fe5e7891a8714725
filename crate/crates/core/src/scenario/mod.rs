//! Scenario files, the built-in aircraft study, and the certify/simulate
//! pipelines behind the command-line tool.

pub mod aircraft;
pub mod config;
pub mod output;
pub mod pipeline;

pub use aircraft::{aircraft_model, aircraft_models, fixed_demo_config, switched_demo_config, DemoVariant, AIRSPEEDS_KT};
pub use config::{Scenario, ScenarioConfig};
pub use pipeline::{
    aircraft_demo, certify, obtain_certificate, simulate, sweep_gamma, Certification, DemoReport, Metrics,
    SimulationReport, SweepRow,
};
