use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginal::{linspace, InitialPredictive, RhoScoring};
use crate::pair_copula::CvSettings;
use crate::vine::VineOptions;

/// Equally spaced grid over `[start, stop]`, optionally on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl GridSpec {
    pub const fn linear(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count, log: false }
    }

    pub const fn log(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count, log: true }
    }

    /// A one-point grid.
    pub const fn single(value: f64) -> Self {
        Self::linear(value, value, 1)
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::param("count", "grid needs at least one value"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::param("start", "grid bounds must be finite"));
        }
        if self.log {
            if !(self.start > 0.0 && self.stop > 0.0) {
                return Err(Error::param("start", "log grid bounds must be positive"));
            }
            return Ok(linspace(self.start.ln(), self.stop.ln(), self.count)
                .into_iter()
                .map(f64::exp)
                .collect());
        }
        Ok(linspace(self.start, self.stop, self.count))
    }
}

/// Candidate `rho` values: 50 points over `[0.1, 0.99]`.
pub const DEFAULT_RHO_GRID: GridSpec = GridSpec::linear(0.1, 0.99, 50);

/// Kernel-variance candidates `[2, 4]` from the original experiment protocol.
pub const WIDE_BANDWIDTH_GRID: GridSpec = GridSpec::linear(2.0, 4.0, 50);

/// Kernel-variance candidates log-spaced over `[0.01, 1]`.
pub const NARROW_BANDWIDTH_GRID: GridSpec = GridSpec::log(0.01, 1.0, 50);

/// Default kernel-variance candidates, log-spaced over `[0.4, 1]`.
pub const DEFAULT_BANDWIDTH_GRID: GridSpec = GridSpec::log(0.4, 1.0, 50);

/// Hyperparameters and tuning protocol for [`QbVineModel::fit`](super::QbVineModel::fit).
///
/// Every field has a default, so a config file only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QbVineConfig {
    /// Initial predictive for every dimension.
    pub initial: InitialPredictive,
    /// Per-dimension override of `initial`.
    pub initial_per_dim: Option<Vec<InitialPredictive>>,
    pub rho_grid: GridSpec,
    pub n_perms: usize,
    pub bandwidth_grid: GridSpec,
    /// Bandwidth used while selecting the vine structure before the
    /// cross-validation. Defaults to the grid's median.
    pub pilot_bandwidth: Option<f64>,
    pub cv_folds: usize,
    pub energy_samples: usize,
    pub beta: f64,
    pub seed: u64,
    /// Edges with `|tau|` below this get the independence copula.
    pub truncation_tau: Option<f64>,
    pub standardize: bool,
    /// Knots of each marginal's interpolated inverse cdf.
    pub inverse_grid_size: usize,
    /// Inverse-cdf extrapolation margin in standard deviations.
    pub inverse_eta_sd: f64,
    /// Conditional models: cross-validate the feature vine's bandwidth
    /// separately instead of reusing the joint vine's.
    pub separate_feature_bandwidth: bool,
}

impl Default for QbVineConfig {
    fn default() -> Self {
        Self {
            initial: InitialPredictive::default(),
            initial_per_dim: None,
            rho_grid: DEFAULT_RHO_GRID,
            n_perms: 10,
            bandwidth_grid: DEFAULT_BANDWIDTH_GRID,
            pilot_bandwidth: None,
            cv_folds: 10,
            energy_samples: 100,
            beta: 1.0,
            seed: 0,
            truncation_tau: None,
            standardize: true,
            inverse_grid_size: 512,
            inverse_eta_sd: 3.0,
            separate_feature_bandwidth: true,
        }
    }
}

impl QbVineConfig {
    pub fn validate(&self) -> Result<()> {
        let rho = self.rho_grid.values()?;
        if let Some(bad) = rho.iter().find(|r| !(r.abs() < 1.0)) {
            return Err(Error::param("rho_grid", format!("|rho| must be below 1, got {bad}")));
        }
        let bw = self.bandwidth_grid.values()?;
        if let Some(bad) = bw.iter().chain(&self.pilot_bandwidth).find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::param("bandwidth_grid", format!("bandwidths must be positive, got {bad}")));
        }
        if self.n_perms == 0 {
            return Err(Error::param("n_perms", "need at least one permutation"));
        }
        if self.cv_folds < 2 {
            return Err(Error::param("cv_folds", "need at least 2 folds"));
        }
        if self.energy_samples < 2 {
            return Err(Error::param("energy_samples", "need at least 2 samples"));
        }
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(Error::param("beta", format!("must lie in (0, 2), got {}", self.beta)));
        }
        if self.inverse_grid_size < 2 {
            return Err(Error::param("inverse_grid_size", "need at least 2 knots"));
        }
        if !(self.inverse_eta_sd >= 0.0 && self.inverse_eta_sd.is_finite()) {
            return Err(Error::param("inverse_eta_sd", "must be non-negative"));
        }
        self.vine_options().validate()?;
        self.initial.validate()?;
        for init in self.initial_per_dim.iter().flatten() {
            init.validate()?;
        }
        Ok(())
    }

    pub fn initial_for(&self, dim: usize) -> InitialPredictive {
        self.initial_per_dim
            .as_ref()
            .and_then(|v| v.get(dim).copied())
            .unwrap_or(self.initial)
    }

    pub fn vine_options(&self) -> VineOptions {
        VineOptions { truncation_tau: self.truncation_tau }
    }

    pub fn rho_scoring(&self) -> RhoScoring {
        RhoScoring {
            n_samples: self.energy_samples,
            beta: self.beta,
            grid_size: self.inverse_grid_size,
            eta_sd: self.inverse_eta_sd,
        }
    }

    pub fn cv_settings(&self) -> CvSettings {
        CvSettings { folds: self.cv_folds, n_samples: self.energy_samples, beta: self.beta }
    }

    /// Explicit pilot bandwidth, or the median of the bandwidth grid.
    pub fn pilot(&self) -> Result<f64> {
        if let Some(b) = self.pilot_bandwidth {
            return Ok(b);
        }
        let grid = self.bandwidth_grid.values()?;
        Ok(grid[grid.len() / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = QbVineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.rho_grid.values().unwrap().len(), 50);
        let b = WIDE_BANDWIDTH_GRID.values().unwrap();
        assert_eq!((b[0], b[49]), (2.0, 4.0));
        assert_eq!(c.bandwidth_grid, DEFAULT_BANDWIDTH_GRID);
        let n = NARROW_BANDWIDTH_GRID.values().unwrap();
        assert!((n[0] - 0.01).abs() < 1e-15 && (n[49] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c: QbVineConfig = serde_json::from_str(r#"{"n_perms": 3, "seed": 9}"#).unwrap();
        assert_eq!(c.n_perms, 3);
        assert_eq!(c.cv_folds, 10);
        let c: QbVineConfig = toml::from_str("beta = 1.5\n[bandwidth_grid]\nstart = 0.1\nstop = 1\ncount = 4\n").unwrap();
        assert_eq!(c.bandwidth_grid.values().unwrap().len(), 4);
    }

    #[test]
    fn errors_name_the_key() {
        let e = serde_json::from_str::<QbVineConfig>(r#"{"rho_grid": {"start": 0.1, "stop": 0.9}}"#).unwrap_err();
        assert!(e.to_string().contains("count"), "{e}");
        let e = serde_json::from_str::<QbVineConfig>(r#"{"n_perm": 3}"#).unwrap_err();
        assert!(e.to_string().contains("n_perm"), "{e}");
        let bad = QbVineConfig { n_perms: 0, ..Default::default() };
        assert!(bad.validate().unwrap_err().to_string().contains("n_perms"));
        let bad = QbVineConfig { rho_grid: GridSpec::single(1.0), ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
