use std::path::Path;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::QbVineConfig;
use super::joint::{from_envelope_json, read_file, to_envelope_json, write_file, QbVineModel};
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, tag};

/// Transformed labels sit at these anchors plus unit Gaussian noise.
pub const CLASS_ANCHORS: (f64, f64) = (-10.0, 10.0);

const CONDITIONAL_FORMAT: &str = "qbvine-conditional-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// Maps 0/1 labels to `-10 + e` / `+10 + e` with `e ~ N(0, 1)`.
pub fn transform_labels(y: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut r = rng::stream(seed, &[tag::LABELS]);
    y.iter()
        .enumerate()
        .map(|(i, &label)| {
            let anchor = if label == 0.0 {
                CLASS_ANCHORS.0
            } else if label == 1.0 {
                CLASS_ANCHORS.1
            } else {
                return Err(Error::Parse { row: i + 1, column: 1, message: format!("label {label} is not 0 or 1") });
            };
            let e: f64 = r.sample(StandardNormal);
            Ok(anchor + e)
        })
        .collect()
}

/// Class probability from the anchor-density ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrediction {
    pub prob_positive: f64,
    pub label: u8,
    /// Both anchor densities vanished; the prior rate was returned.
    pub degenerate: bool,
}

/// `d+ / (d+ + d-)` from the two anchor log densities.
pub(crate) fn anchor_prediction(log_neg: f64, log_pos: f64, q: f64) -> ClassPrediction {
    if log_neg.is_nan() || log_pos.is_nan() || (log_neg == f64::NEG_INFINITY && log_pos == f64::NEG_INFINITY) {
        let prob = 1.0 - q;
        return ClassPrediction { prob_positive: prob, label: u8::from(prob >= 0.5), degenerate: true };
    }
    let prob = 1.0 / (1.0 + (log_neg - log_pos).exp());
    ClassPrediction { prob_positive: prob, label: u8::from(prob >= 0.5), degenerate: false }
}

/// `p(y | x) = c(u_y, u_x) p_y(y) / c(u_x)`: a joint model over `(y, x)` and a
/// feature model over `x` that share the feature marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    task: Task,
    joint: QbVineModel,
    features: QbVineModel,
    /// Fraction of negatives in the training labels.
    q: Option<f64>,
}

impl ConditionalModel {
    /// Fits the joint model over `(y, x)` and a separate vine over `x`. For
    /// classification `y` must be 0/1 and is first passed through
    /// [`transform_labels`].
    pub fn fit(x: ArrayView2<f64>, y: &[f64], task: Task, config: &QbVineConfig) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        if x.ncols() == 0 {
            return Err(Error::Empty("features"));
        }
        let (target, q) = match task {
            Task::Regression => (y.to_vec(), None),
            Task::Classification => {
                let t = transform_labels(y, config.seed)?;
                let negatives = y.iter().filter(|&&v| v == 0.0).count();
                if negatives == 0 || negatives == y.len() {
                    return Err(Error::Degenerate("classification labels contain a single class".into()));
                }
                (t, Some(negatives as f64 / y.len() as f64))
            }
        };
        let ycol = Array2::from_shape_vec((y.len(), 1), target).expect("column");
        let data = concatenate(Axis(1), &[ycol.view(), x]).expect("equal row counts");
        let joint = QbVineModel::fit(data.view(), config)?;
        let dims: Vec<usize> = (1..data.ncols()).collect();
        let shared = if config.separate_feature_bandwidth {
            None
        } else {
            joint.report().copula.as_ref().map(|c| c.bandwidth)
        };
        let features = joint.sub_model(&dims, data.view(), derive_seed(config.seed, &[tag::FEATURES]), shared)?;
        Ok(Self { task, joint, features, q })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn joint(&self) -> &QbVineModel {
        &self.joint
    }

    pub fn features(&self) -> &QbVineModel {
        &self.features
    }

    /// Fraction of negative training labels (classification only).
    pub fn q(&self) -> Option<f64> {
        self.q
    }

    pub fn n_features(&self) -> usize {
        self.features.dimension()
    }

    /// `log p(y | x)`; `y` is on the transformed scale for classification.
    pub fn conditional_log_density(&self, y: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        let mut row = Vec::with_capacity(x.len() + 1);
        row.push(y);
        row.extend_from_slice(x);
        let joint_copula = self.joint.copula_log_density(&row)?;
        let log_py = self.joint.marginal_log_densities(&row)?[0];
        let feature_copula = self.features.copula_log_density(x)?;
        Ok(joint_copula + log_py - feature_copula)
    }

    /// Row-wise conditional log densities.
    pub fn conditional_log_density_rows(&self, x: ArrayView2<f64>, y: &[f64]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.par_iter()
            .zip(y.par_iter())
            .map(|(r, &yi)| self.conditional_log_density(yi, r))
            .collect()
    }

    /// Compares the conditional density at the two noise-free anchors.
    pub fn predict_class(&self, x: &[f64]) -> Result<ClassPrediction> {
        let q = self
            .q
            .ok_or_else(|| Error::param("task", "predict_class needs a classification model"))?;
        let neg = self.conditional_log_density(CLASS_ANCHORS.0, x)?;
        let pos = self.conditional_log_density(CLASS_ANCHORS.1, x)?;
        Ok(anchor_prediction(neg, pos, q))
    }

    pub fn to_json(&self) -> Result<String> {
        to_envelope_json(CONDITIONAL_FORMAT, self)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        from_envelope_json(CONDITIONAL_FORMAT, json)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_json()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_file(path.as_ref())?)
    }
}

/// Either kind of saved model, recognised by its format tag.
#[derive(Debug, Clone)]
pub enum SavedModel {
    Joint(QbVineModel),
    Conditional(ConditionalModel),
}

impl SavedModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = read_file(path.as_ref())?;
        match QbVineModel::from_json(&text) {
            Ok(m) => Ok(Self::Joint(m)),
            Err(joint_err) => ConditionalModel::from_json(&text)
                .map(Self::Conditional)
                .map_err(|_| joint_err),
        }
    }
}
