use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerated decrease of the sampled cdf between consecutive grid points.
const MONOTONE_SLACK: f64 = 1e-9;

/// Piecewise-linear approximation of a quantile function built from a "context
/// set" of `(y, F(y))` pairs on a uniform grid.
///
/// The first knot is pinned to `(min - eta, 0)` and the last to `(max + eta, 1)`.
/// Between knots the inverse is linear in the cdf value, so a uniform draw pushed
/// through [`eval`](Self::eval) is a sample from the piecewise-linear-cdf
/// approximation of `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedInverseCdf {
    ys: Vec<f64>,
    cs: Vec<f64>,
    eta: f64,
    grid_size: usize,
}

impl InterpolatedInverseCdf {
    /// Samples `cdf` on `grid_size` equispaced interior points of
    /// `[support_min - eta, support_max + eta]`.
    ///
    /// Flat stretches of the cdf are collapsed onto their leftmost knot so the
    /// interpolation domain stays strictly increasing.
    pub fn build<F>(
        cdf: F,
        support_min: f64,
        support_max: f64,
        eta: f64,
        grid_size: usize,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        if grid_size < 2 {
            return Err(Error::param("grid_size", format!("need at least 2, got {grid_size}")));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("must be non-negative, got {eta}")));
        }
        if !(support_min.is_finite() && support_max.is_finite()) {
            return Err(Error::param("support", "bounds must be finite"));
        }
        let lo = support_min - eta;
        let hi = support_max + eta;
        if !(hi > lo) {
            return Err(Error::param("support", "extended support has zero width"));
        }

        let step = (hi - lo) / (grid_size + 1) as f64;
        let mut ys = Vec::with_capacity(grid_size + 2);
        let mut cs = Vec::with_capacity(grid_size + 2);
        ys.push(lo);
        cs.push(0.0);
        let mut prev_y = lo;
        let mut running = 0.0_f64;
        let mut last_raw = 0.0_f64;
        for i in 1..=grid_size {
            let y = lo + step * i as f64;
            let raw = cdf(y);
            if raw.is_nan() {
                return Err(Error::NonMonotoneCdf { left: prev_y, right: y, drop: f64::NAN });
            }
            if i > 1 && raw < last_raw - MONOTONE_SLACK {
                return Err(Error::NonMonotoneCdf {
                    left: prev_y,
                    right: y,
                    drop: last_raw - raw,
                });
            }
            last_raw = raw;
            prev_y = y;
            let c = raw.clamp(running, 1.0);
            running = c;
            if c > *cs.last().unwrap() {
                ys.push(y);
                cs.push(c);
            }
        }
        if *cs.last().unwrap() < 1.0 {
            ys.push(hi);
            cs.push(1.0);
        }
        Ok(Self { ys, cs, eta, grid_size })
    }

    /// Builds directly from knots. The first knot must have `c = 0`, the last
    /// `c = 1`; `y` must be strictly increasing and `c` non-decreasing. Flat
    /// stretches collapse onto their leftmost knot.
    pub fn from_knots(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::param("knots", "need at least two knots"));
        }
        if knots[0].1 != 0.0 || knots[knots.len() - 1].1 != 1.0 {
            return Err(Error::param("knots", "first c must be 0 and last c must be 1"));
        }
        let mut ys = vec![knots[0].0];
        let mut cs = vec![0.0];
        for w in knots.windows(2) {
            let ((y0, c0), (y1, c1)) = (w[0], w[1]);
            if !(y1 > y0) || !y1.is_finite() {
                return Err(Error::param("knots", "y values must be finite and strictly increasing"));
            }
            if c1 < c0 {
                return Err(Error::NonMonotoneCdf { left: y0, right: y1, drop: c0 - c1 });
            }
            if c1 > *cs.last().unwrap() {
                ys.push(y1);
                cs.push(c1);
            }
        }
        Ok(Self {
            grid_size: knots.len().saturating_sub(2),
            ys,
            cs,
            eta: 0.0,
        })
    }

    /// Inverse cdf at `c`, which must lie in `(0, 1)`.
    pub fn eval(&self, c: f64) -> Result<f64> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidProbability { value: c });
        }
        Ok(self.eval_clamped(c))
    }

    /// Inverse cdf for `c` already known to be in `[0, 1]`.
    pub(crate) fn eval_clamped(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return self.ys[0];
        }
        // first knot with c_j >= c; j >= 1 because c_0 = 0 < c
        let j = self.cs.partition_point(|&k| k < c).min(self.cs.len() - 1);
        let (c0, c1) = (self.cs[j - 1], self.cs[j]);
        let t = (c - c0) / (c1 - c0);
        self.ys[j - 1] * (1.0 - t) + self.ys[j] * t
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ys.iter().copied().zip(self.cs.iter().copied())
    }

    pub fn n_knots(&self) -> usize {
        self.ys.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Lower and upper ends of the interpolation range.
    pub fn range(&self) -> (f64, f64) {
        (self.ys[0], self.ys[self.ys.len() - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cauchy_cdf, cauchy_quantile};

    #[test]
    fn identity_cdf() {
        let inv = InterpolatedInverseCdf::build(|y| y, 0.0, 1.0, 0.0, 2).unwrap();
        assert!((inv.eval(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(inv.n_knots(), 4);
    }

    #[test]
    fn explicit_knots() {
        let inv = InterpolatedInverseCdf::from_knots(&[(0.0, 0.0), (2.0, 0.5), (4.0, 1.0)]).unwrap();
        assert_eq!(inv.eval(0.75).unwrap(), 3.0);
        assert_eq!(inv.eval(0.5).unwrap(), 2.0);
        assert_eq!(inv.eval(0.25).unwrap(), 1.0);
    }

    #[test]
    fn cauchy_quantile_approximation() {
        let inv = InterpolatedInverseCdf::build(
            |y| cauchy_cdf(y, 0.0, 1.0).unwrap(),
            -1.0,
            1.0,
            10.0,
            512,
        )
        .unwrap();
        let exact = cauchy_quantile(0.75, 0.0, 1.0).unwrap();
        assert!((inv.eval(0.75).unwrap() - exact).abs() < 0.05);
    }

    #[test]
    fn knots_are_hit_exactly() {
        let inv = InterpolatedInverseCdf::build(
            |y| crate::numerics::std_normal_cdf(y),
            -2.0,
            2.0,
            1.0,
            64,
        )
        .unwrap();
        let knots: Vec<_> = inv.knots().collect();
        for &(y, c) in &knots[1..knots.len() - 1] {
            assert_eq!(inv.eval(c).unwrap(), y);
        }
        // segment midpoint maps to the mean of its endpoints
        let ((y0, c0), (y1, c1)) = (knots[10], knots[11]);
        let mid = inv.eval(0.5 * (c0 + c1)).unwrap();
        assert!((mid - 0.5 * (y0 + y1)).abs() < 1e-12);
    }

    #[test]
    fn endpoints_and_flat_regions() {
        // cdf saturates inside the range: the flat top collapses onto the leftmost y
        let inv = InterpolatedInverseCdf::build(|y| y.clamp(0.0, 1.0), 0.0, 1.0, 1.0, 30).unwrap();
        let (lo, hi) = inv.range();
        assert_eq!(lo, -1.0);
        // leftmost grid point where the cdf reaches 1
        assert!(hi >= 1.0 && hi <= 1.0 + 3.0 / 31.0);
        let cs: Vec<f64> = inv.knots().map(|k| k.1).collect();
        assert!(cs.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(cs[0], 0.0);
        assert_eq!(*cs.last().unwrap(), 1.0);
    }

    #[test]
    fn endpoint_limits() {
        let inv = InterpolatedInverseCdf::build(crate::numerics::std_normal_cdf, -1.0, 1.0, 2.0, 16)
            .unwrap();
        let (lo, hi) = inv.range();
        assert_eq!((lo, hi), (-3.0, 3.0));
        assert!((inv.eval(1e-15).unwrap() - lo).abs() < 1e-9);
        assert!((inv.eval(1.0 - 1e-15).unwrap() - hi).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(InterpolatedInverseCdf::build(|y| y, 0.0, 1.0, 0.0, 1).is_err());
        assert!(matches!(
            InterpolatedInverseCdf::build(|y| 1.0 - y, 0.0, 1.0, 0.0, 8),
            Err(Error::NonMonotoneCdf { .. })
        ));
        let inv = InterpolatedInverseCdf::build(|y| y, 0.0, 1.0, 0.0, 4).unwrap();
        assert!(inv.eval(0.0).is_err());
        assert!(inv.eval(1.0).is_err());
        assert!(InterpolatedInverseCdf::from_knots(&[(0.0, 0.1), (1.0, 1.0)]).is_err());
    }
}
