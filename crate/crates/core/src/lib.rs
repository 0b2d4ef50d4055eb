//! Quasi-Bayesian vine density estimation.
//!
//! Each marginal is a recursive Bayesian predictive (a sequence of copula
//! updates of an initial density, one per observation). Dependence is
//! modelled by a simplified regular vine whose pair copulas are Gaussian KDEs
//! on the probit scale. Hyperparameters are tuned by the energy score.
//!
//! ```
//! use ndarray::Array2;
//! use qbvine::model::{GridSpec, QbVineConfig, QbVineModel};
//!
//! let data = Array2::from_shape_fn((60, 2), |(i, j)| ((i * 37 + j * 11) % 60) as f64 / 10.0);
//! let config = QbVineConfig {
//!     rho_grid: GridSpec::linear(0.5, 0.9, 3),
//!     bandwidth_grid: GridSpec::single(0.1),
//!     n_perms: 2,
//!     ..QbVineConfig::default()
//! };
//! let model = QbVineModel::fit(data.view(), &config).unwrap();
//! assert!(model.joint_log_density(&[3.0, 2.0]).unwrap().is_finite());
//! ```

pub mod data;
pub mod error;
pub mod marginal;
pub mod model;
pub mod numerics;
pub mod pair_copula;
pub mod rng;
pub mod scoring;
pub mod vine;

pub use error::{Error, Result};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs the code listings of the guide in `book/` as doc-tests.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/marginals.md")]
    pub mod marginals {}
    #[doc = include_str!("../../../book/src/pair-copulas.md")]
    pub mod pair_copulas {}
    #[doc = include_str!("../../../book/src/vines.md")]
    pub mod vines {}
    #[doc = include_str!("../../../book/src/joint-model.md")]
    pub mod joint_model {}
    #[doc = include_str!("../../../book/src/supervised.md")]
    pub mod supervised {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    pub mod scoring {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
}
