use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::LN_SQRT_2PI;

/// Gaussian with diagonal covariance fitted by maximum likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGaussian {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn fit(data: ArrayView2<f64>) -> Result<Self> {
        let n = data.nrows();
        if n == 0 {
            return Err(Error::Empty("data"));
        }
        let mut means = Vec::new();
        let mut variances = Vec::new();
        for (j, col) in data.columns().into_iter().enumerate() {
            let m = col.sum() / n as f64;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
            if !(v > 0.0) {
                return Err(Error::Degenerate(format!("column {} is constant", j + 1)));
            }
            means.push(m);
            variances.push(v);
        }
        Ok(Self { means, variances })
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(&xi, (&m, &v))| -LN_SQRT_2PI - 0.5 * v.ln() - 0.5 * (xi - m).powi(2) / v)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matches_closed_form() {
        let g = DiagonalGaussian::fit(array![[0.0, 1.0], [2.0, 3.0]].view()).unwrap();
        assert_eq!(g.means, vec![1.0, 2.0]);
        assert_eq!(g.variances, vec![1.0, 1.0]);
        assert!((g.log_density(&[1.0, 2.0]) + 2.0 * 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!(DiagonalGaussian::fit(array![[1.0], [1.0]].view()).is_err());
    }
}
