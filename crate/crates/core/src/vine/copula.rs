use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pair_copula::PairCopulaKde;

/// Pair copula attached to one vine edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCopula {
    /// Edge truncated to the independence copula.
    Independence,
    Kde(PairCopulaKde),
}

impl PairCopula {
    pub fn is_independence(&self) -> bool {
        matches!(self, Self::Independence)
    }

    pub(crate) fn log_density(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::Independence => 0.0,
            Self::Kde(c) => c.log_density_unchecked(u, v),
        }
    }

    /// `P(U <= u | V = v)`.
    pub(crate) fn h1(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::Independence => u,
            Self::Kde(c) => c.h1_unchecked(u, v),
        }
    }

    /// `P(V <= v | U = u)`.
    pub(crate) fn h2(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::Independence => v,
            Self::Kde(c) => c.h2_unchecked(u, v),
        }
    }

    pub(crate) fn h1_inverse(&self, p: f64, v: f64) -> Result<f64> {
        match self {
            Self::Independence => Ok(p),
            Self::Kde(c) => c.h1_inverse(p, v),
        }
    }

    pub(crate) fn h2_inverse(&self, p: f64, u: f64) -> Result<f64> {
        match self {
            Self::Independence => Ok(p),
            Self::Kde(c) => c.h2_inverse(p, u),
        }
    }
}
