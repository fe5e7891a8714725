//! L1 adaptive control for switched linear systems.

pub mod controller;
pub mod error;
pub mod linalg;
pub mod reference;
pub mod scenario;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
