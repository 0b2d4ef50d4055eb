//! Univariate recursive Bayesian predictive marginals.
//!
//! Starting from an initial predictive `P0`, each observation `x^k` updates the
//! cdf and density through a mixture of the independence copula and a Gaussian
//! copula with correlation `rho`:
//!
//! ```text
//! P_k(x) = (1 - a_k) P_{k-1}(x) + a_k H_rho(P_{k-1}(x), P_{k-1}(x^k))
//! p_k(x) = p_{k-1}(x) [(1 - a_k) + a_k c_rho(P_{k-1}(x), P_{k-1}(x^k))]
//! ```
//!
//! with `a_k = (2 - 1/k) / (k + 1)`.

mod averaged;
mod initial;
mod rbp;
mod select;

pub use averaged::AveragedMarginal;
pub use initial::InitialPredictive;
pub use rbp::{alpha_weight, gaussian_copula_density, h_rho, PredictiveMarginal, V_CLAMP};
pub use select::{default_rho_grid, linspace, rho_energy_score, select_rho, RhoScoring, RhoSelection};
