//! Switched plant models, signals and the closed-loop simulator.

pub mod closed_loop;
pub mod integrate;
pub mod signals;
pub mod system;
pub mod trace;
pub mod uncertainty;

pub use closed_loop::{simulate_closed_loop, simulate_closed_loop_with, RunPeaks, SimulationOptions, SimulationResult, SimulationSetup};
pub use integrate::{make_time_grid, rk4_step, Rk4};
pub use signals::{CommandSignal, SwitchingSignal};
pub use system::{dc_feedforward_gain, LtiSubsystem};
pub use trace::Trace;
pub use uncertainty::{MatrixTrajectory, ModeUncertainty, Sinusoid, UncertaintyBounds, UncertaintyRealization};
