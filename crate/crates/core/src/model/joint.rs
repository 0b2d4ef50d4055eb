use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::QbVineConfig;
use crate::data::Standardization;
use crate::error::{Error, Result};
use crate::marginal::{select_rho, AveragedMarginal};
use crate::numerics::InterpolatedInverseCdf;
use crate::rng::{derive_seed, tag};
use crate::scoring::{log_predictive_report, ScoreReport};
use crate::vine::{select_and_fit, select_structure, select_vine_bandwidth, VineModel};

/// Pseudo-observations are clamped into `[U_CLAMP, 1 - U_CLAMP]`.
pub const U_CLAMP: f64 = 1e-10;

/// Tuning outcome of one fit. Contains no timings, so equal seeds give
/// byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_obs: usize,
    pub dimension: usize,
    /// Chosen `rho` per dimension.
    pub rho: Vec<f64>,
    /// Energy score at the chosen `rho`, per dimension.
    pub rho_scores: Vec<f64>,
    pub copula: Option<CopulaReport>,
}

/// Tuning outcome of the vine stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaReport {
    pub bandwidth: f64,
    /// Cross-validated energy score per candidate bandwidth; empty when the
    /// grid has a single value.
    pub bandwidth_scores: Vec<f64>,
    pub bandwidth_score: Option<f64>,
    pub pilot_bandwidth: f64,
    /// Regular-vine array of the fitted structure.
    pub structure: String,
    pub edge_taus: Vec<f64>,
    pub independence_edges: usize,
}

/// Recursive predictive marginals joined by a simplified vine copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QbVineModel {
    config: QbVineConfig,
    standardization: Option<Standardization>,
    marginals: Vec<AveragedMarginal>,
    inverse_cdfs: Vec<InterpolatedInverseCdf>,
    vine: Option<VineModel>,
    report: FitReport,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct Envelope<T> {
    pub format: String,
    pub version: u32,
    pub model: T,
}

pub(crate) const FORMAT_VERSION: u32 = 1;
const JOINT_FORMAT: &str = "qbvine-model";

pub(crate) fn to_envelope_json<T: Serialize>(format: &str, model: &T) -> Result<String> {
    serde_json::to_string(&Envelope { format: format.to_owned(), version: FORMAT_VERSION, model })
        .map_err(|e| Error::Serialization(e.to_string()))
}

pub(crate) fn from_envelope_json<T: for<'de> Deserialize<'de>>(format: &str, json: &str) -> Result<T> {
    #[derive(Deserialize)]
    struct Header {
        format: String,
        version: u32,
    }
    let header: Header = serde_json::from_str(json).map_err(|e| Error::Serialization(e.to_string()))?;
    if header.format != format {
        return Err(Error::Serialization(format!("expected a `{format}` file, found `{}`", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported {format} version {} (this build reads {FORMAT_VERSION})",
            header.version
        )));
    }
    let env: Envelope<T> = serde_json::from_str(json).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(env.model)
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn clamp_u(u: f64) -> f64 {
    u.clamp(U_CLAMP, 1.0 - U_CLAMP)
}

fn sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

pub(crate) struct MarginalFit {
    pub marginal: AveragedMarginal,
    pub inverse: InterpolatedInverseCdf,
    pub rho: f64,
    pub score: f64,
}

/// Selects `rho` and fits the averaged recursion for one column. Depends only
/// on that column, the config and the column index.
pub(crate) fn fit_marginal(column: &[f64], dim: usize, config: &QbVineConfig) -> Result<MarginalFit> {
    let seed = derive_seed(config.seed, &[tag::MARGINAL, dim as u64]);
    let initial = config.initial_for(dim);
    let grid = config.rho_grid.values()?;
    let selection = select_rho(column, initial, &grid, &config.rho_scoring(), seed).map_err(|e| match e {
        Error::Degenerate(msg) => Error::Degenerate(format!("column {}: {msg}", dim + 1)),
        other => other,
    })?;
    let marginal = AveragedMarginal::fit(column, selection.rho, initial, config.n_perms, seed)?;
    let inverse = marginal.inverse_cdf(config.inverse_eta_sd * sd(column), config.inverse_grid_size)?;
    Ok(MarginalFit { marginal, inverse, rho: selection.rho, score: selection.score })
}

/// Bandwidth tuning, structure selection and the final vine fit.
pub(crate) fn fit_copula(
    pseudo_obs: ArrayView2<f64>,
    config: &QbVineConfig,
    seed: u64,
    fixed_bandwidth: Option<f64>,
) -> Result<(VineModel, CopulaReport)> {
    let options = config.vine_options();
    let pilot = config.pilot()?;
    let grid = config.bandwidth_grid.values()?;
    let (bandwidth, bandwidth_scores, bandwidth_score) = match fixed_bandwidth {
        Some(b) => (b, Vec::new(), None),
        None if grid.len() == 1 => (grid[0], Vec::new(), None),
        None => {
            let structure = select_structure(pseudo_obs, pilot, &options)?;
            let sel = select_vine_bandwidth(
                pseudo_obs,
                &structure,
                &grid,
                &config.cv_settings(),
                &options,
                derive_seed(seed, &[tag::FOLDS]),
            )?;
            (sel.bandwidth, sel.scores, Some(sel.score))
        }
    };
    let vine = select_and_fit(pseudo_obs, bandwidth, &options)?;
    let report = CopulaReport {
        bandwidth,
        bandwidth_scores,
        bandwidth_score,
        pilot_bandwidth: pilot,
        structure: vine.structure().to_rvine_array(),
        edge_taus: vine.edge_taus().to_vec(),
        independence_edges: vine.copulas().iter().filter(|c| c.is_independence()).count(),
    };
    Ok((vine, report))
}

impl QbVineModel {
    /// Fits the marginals (in parallel over dimensions), maps the data to
    /// pseudo-observations, cross-validates the vine bandwidth and fits the
    /// vine.
    pub fn fit(data: ArrayView2<f64>, config: &QbVineConfig) -> Result<Self> {
        Self::fit_with(data, config, None)
    }

    pub(crate) fn fit_with(data: ArrayView2<f64>, config: &QbVineConfig, fixed_bandwidth: Option<f64>) -> Result<Self> {
        config.validate()?;
        let (n, d) = data.dim();
        if d == 0 {
            return Err(Error::Empty("data has no columns"));
        }
        if n < 2 {
            return Err(Error::param("data", format!("need at least 2 rows, got {n}")));
        }
        if d > 1 && n < config.cv_folds {
            return Err(Error::param("cv_folds", format!("{} folds for {n} rows", config.cv_folds)));
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(len) = config.initial_per_dim.as_ref().map(Vec::len) {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, found: len });
            }
        }
        let standardization = if config.standardize { Some(Standardization::fit(data)?) } else { None };
        let z = match &standardization {
            Some(s) => s.apply(data)?,
            None => data.to_owned(),
        };
        let columns: Vec<Vec<f64>> = z.columns().into_iter().map(|c| c.to_vec()).collect();
        let fits: Vec<MarginalFit> = columns
            .par_iter()
            .enumerate()
            .map(|(j, col)| fit_marginal(col, j, config))
            .collect::<Result<_>>()?;

        let mut model = Self {
            config: config.clone(),
            standardization,
            marginals: Vec::with_capacity(d),
            inverse_cdfs: Vec::with_capacity(d),
            vine: None,
            report: FitReport {
                n_obs: n,
                dimension: d,
                rho: fits.iter().map(|f| f.rho).collect(),
                rho_scores: fits.iter().map(|f| f.score).collect(),
                copula: None,
            },
        };
        for f in fits {
            model.marginals.push(f.marginal);
            model.inverse_cdfs.push(f.inverse);
        }
        if d > 1 {
            let u = model.pseudo_observations_standardized(z.view());
            let (vine, report) = fit_copula(u.view(), config, config.seed, fixed_bandwidth)?;
            model.vine = Some(vine);
            model.report.copula = Some(report);
        }
        Ok(model)
    }

    /// Model over a subset of dimensions with its own vine; marginals are
    /// shared with `self`.
    pub(crate) fn sub_model(&self, dims: &[usize], data: ArrayView2<f64>, seed: u64, fixed_bandwidth: Option<f64>) -> Result<Self> {
        let sub = data.select(ndarray::Axis(1), dims);
        let standardization = self.standardization.as_ref().map(|s| s.select(dims));
        let mut model = Self {
            config: self.config.clone(),
            standardization,
            marginals: dims.iter().map(|&j| self.marginals[j].clone()).collect(),
            inverse_cdfs: dims.iter().map(|&j| self.inverse_cdfs[j].clone()).collect(),
            vine: None,
            report: FitReport {
                n_obs: data.nrows(),
                dimension: dims.len(),
                rho: dims.iter().map(|&j| self.report.rho[j]).collect(),
                rho_scores: dims.iter().map(|&j| self.report.rho_scores[j]).collect(),
                copula: None,
            },
        };
        if dims.len() > 1 {
            let u = model.pseudo_observations(sub.view())?;
            let (vine, report) = fit_copula(u.view(), &self.config, seed, fixed_bandwidth)?;
            model.vine = Some(vine);
            model.report.copula = Some(report);
        }
        Ok(model)
    }

    fn pseudo_observations_standardized(&self, z: ArrayView2<f64>) -> Array2<f64> {
        let mut u = z.to_owned();
        for (j, mut col) in u.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| clamp_u(self.marginals[j].cdf(x)));
        }
        u
    }

    /// `u_ij = P_j(x_ij)`, clamped away from 0 and 1.
    pub fn pseudo_observations(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_dim(data.ncols())?;
        let z = match &self.standardization {
            Some(s) => s.apply(data)?,
            None => data.to_owned(),
        };
        Ok(self.pseudo_observations_standardized(z.view()))
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d == self.dimension() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dimension(), found: d })
        }
    }

    pub fn dimension(&self) -> usize {
        self.marginals.len()
    }

    pub fn config(&self) -> &QbVineConfig {
        &self.config
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub fn marginals(&self) -> &[AveragedMarginal] {
        &self.marginals
    }

    pub fn inverse_cdfs(&self) -> &[InterpolatedInverseCdf] {
        &self.inverse_cdfs
    }

    pub fn vine(&self) -> Option<&VineModel> {
        self.vine.as_ref()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Per-dimension marginal log densities on the original scale, and the
    /// pseudo-observations.
    fn marginal_parts(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dim(x.len())?;
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let (z, log_sd): (Vec<f64>, Vec<f64>) = match &self.standardization {
            Some(s) => (s.apply_row(x)?, s.sds.iter().map(|v| v.ln()).collect()),
            None => (x.to_vec(), vec![0.0; x.len()]),
        };
        let mut logs = Vec::with_capacity(x.len());
        let mut u = Vec::with_capacity(x.len());
        for (j, &zj) in z.iter().enumerate() {
            let (c, p) = self.marginals[j].eval(zj);
            logs.push(p.ln() - log_sd[j]);
            u.push(clamp_u(c));
        }
        Ok((logs, u))
    }

    /// `log p_j(x_j)` per dimension, on the original scale.
    pub fn marginal_log_densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.marginal_parts(x)?.0)
    }

    /// Log density of the vine copula at the pseudo-observations of `x`.
    pub fn copula_log_density(&self, x: &[f64]) -> Result<f64> {
        let (_, u) = self.marginal_parts(x)?;
        Ok(self.vine.as_ref().map_or(0.0, |v| v.log_density_unchecked(&u)))
    }

    /// `sum_j log p_j(x_j) + log c(P_1(x_1), ..., P_d(x_d))`.
    pub fn joint_log_density(&self, x: &[f64]) -> Result<f64> {
        let (logs, u) = self.marginal_parts(x)?;
        let copula = self.vine.as_ref().map_or(0.0, |v| v.log_density_unchecked(&u));
        Ok(logs.iter().sum::<f64>() + copula)
    }

    /// Product of the marginals alone, ignoring the copula.
    pub fn independent_log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.marginal_log_densities(x)?.iter().sum())
    }

    /// Row-wise [`joint_log_density`](Self::joint_log_density), in parallel.
    pub fn log_density_rows(&self, data: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_dim(data.ncols())?;
        let rows: Vec<Vec<f64>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.par_iter().map(|r| self.joint_log_density(r)).collect()
    }

    /// Log predictive score (mean negative log density) over the rows.
    pub fn lps(&self, data: ArrayView2<f64>) -> Result<ScoreReport> {
        log_predictive_report(&self.log_density_rows(data)?)
    }

    /// Draws from the vine, mapped through each marginal's inverse cdf.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Array2<f64>> {
        if count == 0 {
            return Err(Error::param("count", "must be at least 1"));
        }
        let d = self.dimension();
        let seed = derive_seed(seed, &[tag::MODEL_SAMPLE]);
        let u = match &self.vine {
            Some(v) => v.sample(count, seed)?,
            None => {
                use rand::Rng;
                let mut r = crate::rng::stream(seed, &[]);
                Array2::from_shape_fn((count, 1), |_| r.sample(rand_distr::Open01))
            }
        };
        let mut z = Array2::zeros((count, d));
        for ((i, j), &uij) in u.indexed_iter() {
            z[[i, j]] = self.inverse_cdfs[j].eval(uij)?;
        }
        match &self.standardization {
            Some(s) => s.invert(z.view()),
            None => Ok(z),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_envelope_json(JOINT_FORMAT, self)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        from_envelope_json(JOINT_FORMAT, json)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_json()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_file(path.as_ref())?)
    }
}
