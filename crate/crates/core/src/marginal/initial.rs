use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, std_normal_cdf, std_normal_log_pdf};

/// Starting predictive distribution of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPredictive {
    Cauchy { loc: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
    UniformOverRange { lo: f64, hi: f64 },
}

impl Default for InitialPredictive {
    fn default() -> Self {
        InitialPredictive::Cauchy { loc: 0.0, scale: 1.0 }
    }
}

impl InitialPredictive {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialPredictive::Cauchy { loc, scale } if loc.is_finite() && scale > 0.0 && scale.is_finite() => Ok(()),
            InitialPredictive::Normal { mean, sd } if mean.is_finite() && sd > 0.0 && sd.is_finite() => Ok(()),
            InitialPredictive::UniformOverRange { lo, hi } if lo.is_finite() && hi.is_finite() && hi > lo => Ok(()),
            other => Err(Error::param("initial", format!("invalid parameters: {other:?}"))),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            InitialPredictive::Cauchy { loc, scale } => {
                0.5 + ((x - loc) / scale).atan() / std::f64::consts::PI
            }
            InitialPredictive::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            InitialPredictive::UniformOverRange { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// `(F(x), 1 - F(x))`, each accurate when small.
    pub(crate) fn tails(&self, x: f64) -> (f64, f64) {
        use std::f64::consts::FRAC_1_PI;
        match *self {
            InitialPredictive::Cauchy { loc, scale } => {
                let z = (x - loc) / scale;
                if z < 0.0 {
                    let lo = (-1.0 / z).atan() * FRAC_1_PI;
                    (lo, 1.0 - lo)
                } else if z > 0.0 {
                    let hi = (1.0 / z).atan() * FRAC_1_PI;
                    (1.0 - hi, hi)
                } else {
                    (0.5, 0.5)
                }
            }
            InitialPredictive::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (std_normal_cdf(z), std_normal_cdf(-z))
            }
            InitialPredictive::UniformOverRange { lo, hi } => {
                let c = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                (c, ((hi - x) / (hi - lo)).clamp(0.0, 1.0))
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match *self {
            InitialPredictive::Cauchy { loc, scale } => {
                numerics::cauchy_log_pdf(x, loc, scale).unwrap_or(f64::NEG_INFINITY)
            }
            InitialPredictive::Normal { mean, sd } => std_normal_log_pdf((x - mean) / sd) - sd.ln(),
            InitialPredictive::UniformOverRange { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Point where the cdf equals one half.
    pub fn median(&self) -> f64 {
        match *self {
            InitialPredictive::Cauchy { loc, .. } => loc,
            InitialPredictive::Normal { mean, .. } => mean,
            InitialPredictive::UniformOverRange { lo, hi } => 0.5 * (lo + hi),
        }
    }
}
