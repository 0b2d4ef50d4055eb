use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InitialPredictive, PredictiveMarginal};
use crate::error::{Error, Result};
use crate::numerics::InterpolatedInverseCdf;
use crate::rng::{self, tag};

/// Equal-weight mixture of recursions fitted on different orderings of the
/// same data.
///
/// Member 0 always uses the data in the order given; the remaining members use
/// independent uniform permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedMarginal {
    members: Vec<PredictiveMarginal>,
}

impl AveragedMarginal {
    pub fn fit(
        data: &[f64],
        rho: f64,
        initial: InitialPredictive,
        n_perms: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_perms == 0 {
            return Err(Error::param("n_perms", "need at least one permutation"));
        }
        let members = (0..n_perms)
            .into_par_iter()
            .map(|i| {
                if i == 0 {
                    return PredictiveMarginal::fit(data, rho, initial);
                }
                let mut order = data.to_vec();
                order.shuffle(&mut rng::stream(seed, &[tag::PERMUTATION, i as u64]));
                PredictiveMarginal::fit(&order, rho, initial)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members })
    }

    pub fn from_members(members: Vec<PredictiveMarginal>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("members"));
        }
        Ok(Self { members })
    }

    /// Mixture cdf and density.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let w = 1.0 / self.members.len() as f64;
        let (c, p) = self
            .members
            .iter()
            .map(|m| m.eval(x))
            .fold((0.0, 0.0), |(c, p), (mc, mp)| (c + mc, p + mp));
        (c * w, p * w)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let w = 1.0 / self.members.len() as f64;
        self.members.iter().fold(0.0, |c, m| c + m.cdf(x)) * w
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }

    pub fn rho(&self) -> f64 {
        self.members[0].rho()
    }

    pub fn members(&self) -> &[PredictiveMarginal] {
        &self.members
    }

    /// Builds the interpolated inverse cdf over the observed range widened by `eta`.
    pub fn inverse_cdf(&self, eta: f64, grid_size: usize) -> Result<InterpolatedInverseCdf> {
        let data = self.members[0].train_seq();
        let (lo, hi) = data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        InterpolatedInverseCdf::build(|y| self.cdf(y), lo, hi, eta, grid_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Vec<f64> {
        (0..40).map(|i| ((i * 7919) % 97) as f64 / 20.0 - 2.4).collect()
    }

    #[test]
    fn single_permutation_is_plain_fit() {
        let init = InitialPredictive::default();
        let avg = AveragedMarginal::fit(&data(), 0.8, init, 1, 3).unwrap();
        let single = PredictiveMarginal::fit(&data(), 0.8, init).unwrap();
        for x in [-3.0, 0.0, 0.4, 2.2] {
            assert_eq!(avg.cdf(x), single.cdf(x));
            assert_eq!(avg.pdf(x), single.pdf(x));
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let init = InitialPredictive::default();
        let a = AveragedMarginal::fit(&data(), 0.7, init, 5, 42).unwrap();
        let b = AveragedMarginal::fit(&data(), 0.7, init, 5, 42).unwrap();
        assert_eq!(a, b);
        let mut prev = 0.0;
        for i in 0..1000 {
            let c = a.cdf(-8.0 + 16.0 * i as f64 / 999.0);
            assert!(c >= prev);
            prev = c;
        }
        assert!(AveragedMarginal::fit(&data(), 0.7, init, 0, 1).is_err());
    }
}
