//! L1 adaptive controller: state predictor, projected adaptive laws and the
//! low-pass control law.

pub mod adaptive;
pub mod filter;
pub mod projection;

pub use adaptive::{
    adaptation_derivatives, control_input_mu, matched_input, predictor_derivative, ControllerConfig, ControllerState,
    FeedforwardMode, ProjectionSet,
};
pub use filter::{closed_loop_filter_at, closed_loop_filter_dc_check, control_filter_derivative, FilterDoc, FilterSpec};
pub use projection::{project_columns, projection, ProjectionConfig};
