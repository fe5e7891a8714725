//! Perfect-knowledge reference system in augmented form, its simulator and
//! the tracking-error blocks used by the performance analysis.

pub mod augmented;
pub mod simulate;

pub use augmented::{build_augmented, build_error_blocks, AugmentedSystem, ErrorDynamicsBlocks};
pub use simulate::{simulate_reference, simulate_reference_filter_form, ReferenceProblem, ReferenceTrace, DIVERGENCE_CEILING};
