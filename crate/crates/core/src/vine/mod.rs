//! Simplified regular vines over KDE pair copulas.
//!
//! A `d`-dimensional copula density factorises into `d (d - 1) / 2` pair
//! copulas arranged in `d - 1` nested trees. Pair copulas of tree `m > 1` see
//! h-function transforms of their parents' inputs and ignore the values of
//! the conditioning variables.
//!
//! Orientation is fixed: for an edge with conditioned pair `(a, b)`, `a < b`,
//! the copula's first argument is the conditional of `a`.

mod copula;
mod kendall;
mod model;
mod select;
mod structure;

pub use copula::PairCopula;
pub use kendall::kendall_tau;
pub use model::{VineModel, VineOptions};
pub use select::{select_and_fit, select_structure, select_vine_bandwidth};
pub use structure::{SamplingColumn, Side, Source, VineEdge, VineStructure};
