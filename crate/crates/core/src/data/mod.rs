//! Tabular data handling and the synthetic Gaussian-mixture benchmark.

mod dataset;
mod gmm;

pub use dataset::{load_csv, split, write_csv, Dataset, Split, Standardization};
pub use gmm::{gmm_generate, Gmm, GmmSpec, GMM_WEIGHTS};
