use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, LN_SQRT_2PI};
use crate::rng::{self, tag};

/// Mixture weights of the four-component benchmark.
pub const GMM_WEIGHTS: [f64; 4] = [0.2, 0.3, 0.1, 0.4];

const MAX_WISHART_DRAWS: usize = 20;

/// Gaussian mixture parameters. Covariances are stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

/// `Wishart(d, I)` by the Bartlett decomposition.
fn wishart_identity<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new((d - i) as f64).expect("positive degrees of freedom");
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    &a * a.transpose()
}

impl GmmSpec {
    /// Four components with weights [`GMM_WEIGHTS`], means uniform on
    /// `[-50, 50]^d` and covariances drawn from `Wishart(d, I_d)`.
    pub fn random(dimension: usize, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::param("dimension", "must be at least 1"));
        }
        let mut r = rng::stream(seed, &[tag::GMM_PARAMS]);
        let mut means = Vec::new();
        let mut covariances = Vec::new();
        for _ in 0..GMM_WEIGHTS.len() {
            means.push((0..dimension).map(|_| r.random_range(-50.0..50.0)).collect());
            let mut draws = 0;
            let sigma = loop {
                draws += 1;
                let s = wishart_identity(dimension, &mut r);
                if s.clone().cholesky().is_some() {
                    break s;
                }
                if draws == MAX_WISHART_DRAWS {
                    return Err(Error::Degenerate(format!(
                        "no positive definite Wishart draw in {MAX_WISHART_DRAWS} attempts"
                    )));
                }
            };
            covariances.push(sigma.row_iter().map(|row| row.iter().copied().collect()).collect());
        }
        Self::new(GMM_WEIGHTS.to_vec(), means, covariances)
    }

    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::Empty("mixture weights"));
        }
        if means.len() != k || covariances.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: means.len().min(covariances.len()) });
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", "must be non-negative and sum to 1"));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(Error::param("means", "dimension must be at least 1"));
        }
        for (m, s) in means.iter().zip(&covariances) {
            if m.len() != d || s.len() != d || s.iter().any(|r| r.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: m.len() });
            }
        }
        let spec = Self { weights, means, covariances };
        for c in 0..k {
            let m = spec.covariance(c);
            if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::param("covariances", format!("component {c} is not symmetric")));
            }
            if m.cholesky().is_none() {
                return Err(Error::param("covariances", format!("component {c} is not positive definite")));
            }
        }
        Ok(spec)
    }

    pub fn dimension(&self) -> usize {
        self.means[0].len()
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn covariance(&self, component: usize) -> DMatrix<f64> {
        let d = self.dimension();
        DMatrix::from_fn(d, d, |i, j| self.covariances[component][i][j])
    }
}

/// Mixture with cached Cholesky factors: sampler and exact log density.
#[derive(Debug, Clone)]
pub struct Gmm {
    spec: GmmSpec,
    factors: Vec<DMatrix<f64>>,
    log_norms: Vec<f64>,
}

impl Gmm {
    pub fn new(spec: GmmSpec) -> Result<Self> {
        let d = spec.dimension() as f64;
        let mut factors = Vec::new();
        let mut log_norms = Vec::new();
        for c in 0..spec.n_components() {
            let l = spec
                .covariance(c)
                .cholesky()
                .ok_or_else(|| Error::Degenerate(format!("component {c} is not positive definite")))?
                .unpack();
            let log_det_half: f64 = l.diagonal().iter().map(|x| x.ln()).sum();
            log_norms.push(spec.weights[c].ln() - log_det_half - d * LN_SQRT_2PI);
            factors.push(l);
        }
        Ok(Self { spec, factors, log_norms })
    }

    pub fn spec(&self) -> &GmmSpec {
        &self.spec
    }

    /// Exact mixture log density.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.spec.n_components())
            .map(|c| {
                let diff = DVector::from_iterator(x.len(), x.iter().zip(&self.spec.means[c]).map(|(a, m)| a - m));
                let y = self.factors[c]
                    .solve_lower_triangular(&diff)
                    .expect("Cholesky factor has a positive diagonal");
                self.log_norms[c] - 0.5 * y.norm_squared()
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// `n` draws and their component labels.
    pub fn sample(&self, n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let d = self.spec.dimension();
        let mut r = rng::stream(seed, &[tag::GMM_DRAWS]);
        let mut values = Array2::zeros((n, d));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let w: f64 = r.random();
            let mut acc = 0.0;
            let mut c = self.spec.n_components() - 1;
            for (k, &p) in self.spec.weights.iter().enumerate() {
                acc += p;
                if w < acc {
                    c = k;
                    break;
                }
            }
            let z = DVector::from_iterator(d, (0..d).map(|_| r.sample::<f64, _>(StandardNormal)));
            let x = &self.factors[c] * z;
            for j in 0..d {
                values[[i, j]] = self.spec.means[c][j] + x[j];
            }
            labels.push(c);
        }
        (values, labels)
    }
}

/// `n` draws from `spec` together with the exact mixture density.
pub fn gmm_generate(spec: &GmmSpec, n: usize, seed: u64) -> Result<(Dataset, Gmm)> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let gmm = Gmm::new(spec.clone())?;
    let (values, _) = gmm.sample(n, seed);
    Ok((Dataset::new(values)?, gmm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_oracle() {
        let spec = GmmSpec::new(vec![1.0], vec![vec![0.0]], vec![vec![vec![1.0]]]).unwrap();
        let gmm = Gmm::new(spec).unwrap();
        assert!((gmm.log_density(&[0.0]) + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!((gmm.log_density(&[1.5]) - (-0.918_938_533_204_672_7 - 1.125)).abs() < 1e-14);
    }

    #[test]
    fn oracle_matches_direct_formula() {
        let spec = GmmSpec::new(
            vec![0.25, 0.75],
            vec![vec![0.0, 1.0], vec![2.0, -1.0]],
            vec![vec![vec![2.0, 0.5], vec![0.5, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 3.0]]],
        )
        .unwrap();
        let gmm = Gmm::new(spec).unwrap();
        let x = [0.7, -0.2];
        let pdf = |m: [f64; 2], s: [[f64; 2]; 2]| {
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            let (a, b) = (x[0] - m[0], x[1] - m[1]);
            let q = (s[1][1] * a * a - 2.0 * s[0][1] * a * b + s[0][0] * b * b) / det;
            (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
        };
        let direct = 0.25 * pdf([0.0, 1.0], [[2.0, 0.5], [0.5, 1.0]]) + 0.75 * pdf([2.0, -1.0], [[1.0, 0.0], [0.0, 3.0]]);
        assert!((gmm.log_density(&x) - direct.ln()).abs() < 1e-13);
    }

    #[test]
    fn component_frequencies() {
        let spec = GmmSpec::random(2, 1).unwrap();
        let (_, labels) = Gmm::new(spec).unwrap().sample(100_000, 2);
        for (c, &w) in GMM_WEIGHTS.iter().enumerate() {
            let f = labels.iter().filter(|&&l| l == c).count() as f64 / 1e5;
            assert!((f - w).abs() < 0.01, "component {c}: {f}");
        }
    }

    #[test]
    fn random_spec_is_valid_and_reproducible() {
        let a = GmmSpec::random(10, 5).unwrap();
        assert_eq!(a, GmmSpec::random(10, 5).unwrap());
        assert_ne!(a, GmmSpec::random(10, 6).unwrap());
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(a.means.iter().flatten().all(|m| (-50.0..50.0).contains(m)));
        let (ds, gmm) = gmm_generate(&a, 200, 3).unwrap();
        let lps: f64 = ds.values().rows().into_iter().map(|r| -gmm.log_density(&r.to_vec())).sum::<f64>() / 200.0;
        assert!(lps.is_finite());
        let (ds2, _) = gmm_generate(&a, 200, 3).unwrap();
        assert_eq!(ds, ds2);
    }

    #[test]
    fn wishart_mean_is_d_times_identity() {
        let d = 3;
        let mut r = rng::stream(11, &[]);
        let mut sum = DMatrix::<f64>::zeros(d, d);
        for _ in 0..1000 {
            let s = wishart_identity(d, &mut r);
            assert!(s.clone().cholesky().is_some());
            assert!((&s - s.transpose()).amax() < 1e-12);
            sum += s;
        }
        let mean = sum / 1000.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { d as f64 } else { 0.0 };
                // off-diagonal entries have sd sqrt(d / 1000) ~ 0.055
                let tol = if i == j { 0.15 * d as f64 } else { 0.25 };
                assert!((mean[(i, j)] - target).abs() < tol, "({i},{j}) {}", mean[(i, j)]);
            }
        }
    }

    #[test]
    fn component_covariance_is_recovered() {
        let spec = GmmSpec::random(3, 9).unwrap();
        let gmm = Gmm::new(spec.clone()).unwrap();
        let (x, labels) = gmm.sample(100_000, 4);
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 3).collect();
        let n = rows.len() as f64;
        let mut cov = DMatrix::<f64>::zeros(3, 3);
        for &i in &rows {
            let v = DVector::from_iterator(3, (0..3).map(|j| x[[i, j]] - spec.means[3][j]));
            cov += &v * v.transpose();
        }
        cov /= n;
        let truth = spec.covariance(3);
        assert!((cov - &truth).norm() / truth.norm() < 0.1);
    }
}
