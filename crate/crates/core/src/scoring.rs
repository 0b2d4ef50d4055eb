//! Strictly proper scoring rules: the unbiased energy score estimator and the
//! log predictive score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-point scores together with their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mean: f64,
    pub per_point: Vec<f64>,
    pub n_points: usize,
    /// Energy exponent; `None` for the log score.
    pub beta: Option<f64>,
}

impl ScoreReport {
    fn from_points(per_point: Vec<f64>, beta: Option<f64>) -> Self {
        let n_points = per_point.len();
        let mean = per_point.iter().sum::<f64>() / n_points as f64;
        Self { mean, per_point, n_points, beta }
    }

    /// Standard error of the mean over points.
    pub fn std_error(&self) -> f64 {
        if self.n_points < 2 || !self.mean.is_finite() {
            return f64::NAN;
        }
        let var = self
            .per_point
            .iter()
            .map(|v| (v - self.mean).powi(2))
            .sum::<f64>()
            / (self.n_points - 1) as f64;
        (var / self.n_points as f64).sqrt()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(Error::param("beta", format!("must lie in (0, 2], got {beta}")))
    }
}

#[inline]
fn distance_pow(a: &[f64], b: &[f64], beta: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if beta == 1.0 {
        sq.sqrt()
    } else if beta == 2.0 {
        sq
    } else {
        sq.powf(0.5 * beta)
    }
}

fn check_samples<S: AsRef<[f64]>>(samples: &[S]) -> Result<usize> {
    if samples.len() < 2 {
        return Err(Error::param("samples", format!("need at least 2, got {}", samples.len())));
    }
    let dim = samples[0].as_ref().len();
    if let Some(bad) = samples.iter().find(|s| s.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.as_ref().len() });
    }
    Ok(dim)
}

/// `(1 / (m (m - 1))) * sum_{j != k} ||y_j - y_k||^beta`
fn pairwise_term<S: AsRef<[f64]>>(samples: &[S], beta: f64) -> f64 {
    let m = samples.len();
    let mut acc = 0.0;
    for j in 0..m {
        let yj = samples[j].as_ref();
        for yk in &samples[j + 1..] {
            acc += distance_pow(yj, yk.as_ref(), beta);
        }
    }
    2.0 * acc / (m * (m - 1)) as f64
}

fn target_term<S: AsRef<[f64]>>(samples: &[S], x: &[f64], beta: f64) -> f64 {
    let m = samples.len() as f64;
    2.0 / m * samples.iter().map(|y| distance_pow(y.as_ref(), x, beta)).sum::<f64>()
}

/// Unbiased Monte-Carlo estimate of the energy score of the sampled
/// distribution at the observation `x`:
///
/// `(2/m) sum_j ||y_j - x||^beta - 1/(m(m-1)) sum_{j != k} ||y_j - y_k||^beta`.
pub fn energy_score<S: AsRef<[f64]>>(samples: &[S], x: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let dim = check_samples(samples)?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
    }
    Ok(target_term(samples, x, beta) - pairwise_term(samples, beta))
}

/// Energy score averaged over every observation in `data`, all scored against
/// the same sample set.
pub fn energy_score_total<S, T>(samples: &[S], data: &[T], beta: f64) -> Result<ScoreReport>
where
    S: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    check_beta(beta)?;
    let dim = check_samples(samples)?;
    if data.is_empty() {
        return Err(Error::Empty("data"));
    }
    if let Some(bad) = data.iter().find(|x| x.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.as_ref().len() });
    }
    let pair = pairwise_term(samples, beta);
    let per_point = data
        .iter()
        .map(|x| target_term(samples, x.as_ref(), beta) - pair)
        .collect();
    Ok(ScoreReport::from_points(per_point, Some(beta)))
}

/// Univariate shortcut for [`energy_score_total`].
pub fn energy_score_total_1d(samples: &[f64], data: &[f64], beta: f64) -> Result<ScoreReport> {
    let s: Vec<[f64; 1]> = samples.iter().map(|&v| [v]).collect();
    let d: Vec<[f64; 1]> = data.iter().map(|&v| [v]).collect();
    energy_score_total(&s, &d, beta)
}

/// Unbiased gradient of the energy score estimator with respect to a parameter
/// vector `theta`, given each sample's Jacobian `dy_j / dtheta` (row-major,
/// `dim x n_params`).
///
/// Pairs at zero distance contribute nothing.
pub fn energy_score_gradient<S, J>(
    samples: &[S],
    jacobians: &[J],
    x: &[f64],
    beta: f64,
) -> Result<Vec<f64>>
where
    S: AsRef<[f64]>,
    J: AsRef<[f64]>,
{
    check_beta(beta)?;
    let dim = check_samples(samples)?;
    if jacobians.len() != samples.len() {
        return Err(Error::DimensionMismatch { expected: samples.len(), found: jacobians.len() });
    }
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
    }
    let n_params = jacobians[0].as_ref().len() / dim.max(1);
    if jacobians.iter().any(|j| j.as_ref().len() != dim * n_params) {
        return Err(Error::param("jacobians", "every Jacobian must be dim x n_params"));
    }

    // d ||a - b||^beta = beta ||a - b||^(beta - 2) (a - b)^T (da - db)
    let accumulate = |grad: &mut [f64], a: &[f64], b: &[f64], ja: &[f64], jb: Option<&[f64]>, w: f64| {
        let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        if sq == 0.0 {
            return;
        }
        let scale = w * beta * sq.powf(0.5 * beta - 1.0);
        for r in 0..dim {
            let diff = a[r] - b[r];
            for p in 0..n_params {
                let mut dj = ja[r * n_params + p];
                if let Some(jb) = jb {
                    dj -= jb[r * n_params + p];
                }
                grad[p] += scale * diff * dj;
            }
        }
    };

    let m = samples.len();
    let mut grad = vec![0.0; n_params];
    let w_target = 2.0 / m as f64;
    let w_pair = -2.0 / (m * (m - 1)) as f64;
    for j in 0..m {
        let (yj, jj) = (samples[j].as_ref(), jacobians[j].as_ref());
        accumulate(&mut grad, yj, x, jj, None, w_target);
        for k in j + 1..m {
            accumulate(&mut grad, yj, samples[k].as_ref(), jj, Some(jacobians[k].as_ref()), w_pair);
        }
    }
    Ok(grad)
}

/// Mean negative log density over a test set. A `-inf` log density gives `+inf`.
pub fn log_predictive_score(log_densities: &[f64]) -> f64 {
    -log_densities.iter().sum::<f64>() / log_densities.len() as f64
}

/// Per-point negative log densities with their mean.
pub fn log_predictive_report(log_densities: &[f64]) -> Result<ScoreReport> {
    if log_densities.is_empty() {
        return Err(Error::Empty("log densities"));
    }
    Ok(ScoreReport::from_points(
        log_densities.iter().map(|v| -v).collect(),
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn col(v: &[f64]) -> Vec<[f64; 1]> {
        v.iter().map(|&x| [x]).collect()
    }

    #[test]
    fn hand_computed_values() {
        assert_eq!(energy_score(&col(&[0.0, 2.0]), &[1.0], 1.0).unwrap(), 0.0);
        assert_eq!(energy_score(&col(&[1.0, 1.0]), &[1.0], 1.0).unwrap(), 0.0);
        assert_eq!(energy_score(&col(&[0.0, 0.0]), &[1.0], 1.0).unwrap(), 2.0);
        // 2-d: samples (0,0),(3,4); x = (0,0): 2/2*(0+5) - 1/2*(5+5) = 0
        let s = [[0.0, 0.0], [3.0, 4.0]];
        assert_eq!(energy_score(&s, &[0.0, 0.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(energy_score(&col(&[1.0]), &[1.0], 1.0).is_err());
        assert!(energy_score(&col(&[1.0, 2.0]), &[1.0], 0.0).is_err());
        assert!(energy_score(&col(&[1.0, 2.0]), &[1.0], 2.5).is_err());
        assert!(energy_score(&col(&[1.0, 2.0]), &[1.0, 2.0], 1.0).is_err());
        assert!(energy_score_total(&col(&[1.0, 2.0]), &Vec::<[f64; 1]>::new(), 1.0).is_err());
    }

    #[test]
    fn total_is_mean_of_points() {
        let s = col(&[0.3, -1.0, 2.2, 0.9]);
        let one = energy_score_total(&s, &col(&[0.5]), 1.0).unwrap();
        assert_eq!(one.mean, energy_score(&s, &[0.5], 1.0).unwrap());
        let dup = energy_score_total(&s, &col(&[0.5, 0.5, 3.0]), 1.0).unwrap();
        let a = energy_score(&s, &[0.5], 1.0).unwrap();
        let b = energy_score(&s, &[3.0], 1.0).unwrap();
        assert!((dup.mean - (2.0 * a + b) / 3.0).abs() < 1e-14);
        assert_eq!(dup.n_points, 3);
        assert_eq!(dup.per_point[0], a);
    }

    #[test]
    fn unbiased_for_uniform() {
        // E score for U(0,1) at x = 0.5 with beta = 1: 2 * 1/4 - 1/3 = 1/6
        let mut rng = rng::stream(11, &[]);
        let reps = 10_000;
        let mut acc = 0.0;
        for _ in 0..reps {
            let s = col(&[rng.random::<f64>(), rng.random::<f64>()]);
            acc += energy_score(&s, &[0.5], 1.0).unwrap();
        }
        assert!((acc / reps as f64 - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn minimised_at_true_location() {
        let mut rng = rng::stream(5, &[]);
        let obs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let z: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
        let obs = col(&obs);
        let scores: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0]
            .iter()
            .map(|mu| {
                let s: Vec<[f64; 1]> = z.iter().map(|v| [v + mu]).collect();
                energy_score_total(&s, &obs, 1.0).unwrap().mean
            })
            .collect();
        let best = scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(best, 2, "{scores:?}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // y_j(theta) = (theta0 + theta1 * z_j1, theta1 * z_j2 + theta0 * theta0)
        let z = [[0.3, -1.2], [1.5, 0.4], [-0.7, 0.9], [0.1, 2.0]];
        let x = [0.4, -0.3];
        let make = |t: [f64; 2]| -> Vec<[f64; 2]> {
            z.iter().map(|zj| [t[0] + t[1] * zj[0], t[1] * zj[1] + t[0] * t[0]]).collect()
        };
        for beta in [0.5, 1.0, 1.7, 2.0] {
            let theta = [0.2, 0.8];
            let jac: Vec<[f64; 4]> = z
                .iter()
                .map(|zj| [1.0, zj[0], 2.0 * theta[0], zj[1]])
                .collect();
            let g = energy_score_gradient(&make(theta), &jac, &x, beta).unwrap();
            let h = 1e-6;
            for p in 0..2 {
                let mut up = theta;
                let mut dn = theta;
                up[p] += h;
                dn[p] -= h;
                let fd = (energy_score(&make(up), &x, beta).unwrap()
                    - energy_score(&make(dn), &x, beta).unwrap())
                    / (2.0 * h);
                assert!((fd - g[p]).abs() < 1e-6, "beta {beta} p {p}: {fd} vs {}", g[p]);
            }
        }
    }

    #[test]
    fn log_score_values() {
        assert_eq!(log_predictive_score(&[0.0, 0.0]), 0.0);
        assert_eq!(log_predictive_score(&[-1.0, -1.0, -1.0]), 1.0);
        assert_eq!(log_predictive_score(&[0.0, f64::NEG_INFINITY]), f64::INFINITY);
        let r = log_predictive_report(&[-1.0, -3.0]).unwrap();
        assert_eq!(r.mean, 2.0);
        assert!(r.std_error() > 0.0);
    }

    #[test]
    fn log_score_prefers_true_density() {
        let mut rng = rng::stream(3, &[]);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let ld = |mu: f64| -> Vec<f64> {
            xs.iter()
                .map(|x| crate::numerics::std_normal_log_pdf(x - mu))
                .collect()
        };
        assert!(log_predictive_score(&ld(0.0)) < log_predictive_score(&ld(5.0)));
    }

    proptest! {
        #[test]
        fn invariant_to_sample_order(
            mut v in proptest::collection::vec(-10.0f64..10.0, 2..20),
            x in -10.0f64..10.0,
            beta in 0.1f64..2.0,
        ) {
            let a = energy_score(&col(&v), &[x], beta).unwrap();
            v.reverse();
            v.rotate_left(1);
            let b = energy_score(&col(&v), &[x], beta).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
