//! The full estimator: Sklar composition of recursive predictive marginals and
//! a vine copula, plus the two-vine conditional model for supervised tasks.

mod baseline;
mod conditional;
mod config;
mod joint;

pub use baseline::DiagonalGaussian;
pub use conditional::{transform_labels, ClassPrediction, ConditionalModel, SavedModel, Task, CLASS_ANCHORS};
pub use config::{GridSpec, QbVineConfig, DEFAULT_BANDWIDTH_GRID, DEFAULT_RHO_GRID, NARROW_BANDWIDTH_GRID, WIDE_BANDWIDTH_GRID};
pub use joint::{CopulaReport, FitReport, QbVineModel, U_CLAMP};
