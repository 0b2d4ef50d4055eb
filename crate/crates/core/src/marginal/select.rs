use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InitialPredictive, PredictiveMarginal};
use crate::error::{Error, Result};
use crate::numerics::InterpolatedInverseCdf;
use crate::rng::{self, tag};
use crate::scoring::energy_score_total_1d;

/// Sampler settings used when scoring a candidate `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoScoring {
    pub n_samples: usize,
    pub beta: f64,
    pub grid_size: usize,
    /// Extrapolation margin in units of the data's standard deviation.
    pub eta_sd: f64,
}

impl Default for RhoScoring {
    fn default() -> Self {
        Self { n_samples: 100, beta: 1.0, grid_size: 512, eta_sd: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoSelection {
    pub rho: f64,
    pub score: f64,
    /// Score of every grid value, in grid order.
    pub scores: Vec<f64>,
}

/// `count` values equally spaced over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// The default candidate grid: 50 values from 0.1 to 0.99.
pub fn default_rho_grid() -> Vec<f64> {
    linspace(0.1, 0.99, 50)
}

fn sample_sd(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

/// Energy score of samples from the recursion fitted with `rho`, scored against
/// every observation in `data`.
///
/// The uniforms driving the inverse-cdf sampler depend only on `seed`, so all
/// candidates in a grid search are compared on common random numbers.
pub fn rho_energy_score(
    data: &[f64],
    initial: InitialPredictive,
    rho: f64,
    scoring: &RhoScoring,
    seed: u64,
) -> Result<f64> {
    let model = PredictiveMarginal::fit(data, rho, initial)?;
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let eta = scoring.eta_sd * sample_sd(data);
    let inverse = InterpolatedInverseCdf::build(|y| model.cdf(y), lo, hi, eta, scoring.grid_size)?;
    let mut rng = rng::stream(seed, &[tag::RHO_SAMPLES]);
    let samples: Vec<f64> = (0..scoring.n_samples)
        .map(|_| inverse.eval_clamped(rng.sample(Open01)))
        .collect();
    Ok(energy_score_total_1d(&samples, data, scoring.beta)?.mean)
}

/// Grid search for the recursion's `rho` by minimum energy score. Ties go to the
/// smaller `rho`.
pub fn select_rho(
    data: &[f64],
    initial: InitialPredictive,
    grid: &[f64],
    scoring: &RhoScoring,
    seed: u64,
) -> Result<RhoSelection> {
    if grid.is_empty() {
        return Err(Error::Empty("rho grid"));
    }
    if let Some(bad) = grid.iter().find(|r| !(r.abs() < 1.0)) {
        return Err(Error::param("rho_grid", format!("|rho| must be below 1, got {bad}")));
    }
    if scoring.n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    if data.is_empty() {
        return Err(Error::Empty("data"));
    }
    if data.iter().all(|&x| x == data[0]) {
        return Err(Error::Degenerate("all observations are equal".into()));
    }
    let scores = grid
        .par_iter()
        .map(|&rho| rho_energy_score(data, initial, rho, scoring, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for i in 1..grid.len() {
        let (s, b) = (scores[i], scores[best]);
        if s < b || (s == b && grid[i] < grid[best]) || b.is_nan() {
            best = i;
        }
    }
    Ok(RhoSelection { rho: grid[best], score: scores[best], scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, &[99]);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    #[test]
    fn grid_helpers() {
        let g = default_rho_grid();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.1);
        assert!((g[49] - 0.99).abs() < 1e-15);
        assert_eq!(linspace(2.0, 4.0, 1), vec![2.0]);
    }

    #[test]
    fn singleton_grid_and_self_consistency() {
        let data = normals(60, 1);
        let init = InitialPredictive::default();
        let sc = RhoScoring::default();
        let sel = select_rho(&data, init, &[0.55], &sc, 9).unwrap();
        assert_eq!(sel.rho, 0.55);
        let again = rho_energy_score(&data, init, 0.55, &sc, 9).unwrap();
        assert_eq!(sel.score, again);
    }

    #[test]
    fn ties_prefer_smaller_rho() {
        let data = normals(30, 2);
        let sel = select_rho(&data, InitialPredictive::default(), &[0.6, 0.3, 0.6, 0.3], &RhoScoring::default(), 1)
            .unwrap();
        let min = sel.scores.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(sel.score, min);
        if sel.scores[1] == min {
            assert_eq!(sel.rho, 0.3);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let init = InitialPredictive::default();
        let sc = RhoScoring::default();
        assert!(select_rho(&[1.0, 2.0], init, &[], &sc, 0).is_err());
        assert!(select_rho(&[1.0, 2.0], init, &[1.0], &sc, 0).is_err());
        assert!(matches!(select_rho(&[3.0; 10], init, &[0.5], &sc, 0), Err(Error::Degenerate(_))));
        let small = RhoScoring { n_samples: 1, ..sc };
        assert!(select_rho(&[1.0, 2.0], init, &[0.5], &small, 0).is_err());
    }
}
