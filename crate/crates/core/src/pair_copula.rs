//! Bivariate copula density estimated by a Gaussian kernel on the probit scale.
//!
//! Copula data `(u_k, v_k)` are mapped to latent points `(s_k, t_k) =
//! (Phi^{-1}(u_k), Phi^{-1}(v_k))`. An isotropic Gaussian KDE with kernel
//! variance `b` is fitted there and divided by the standard normal latent
//! marginals:
//!
//! ```text
//! c(u, v) = (1/K) sum_k phi(s - s_k; 0, b) phi(t - t_k; 0, b) / (phi(s) phi(t))
//! ```
//!
//! The h-functions are the conditional cdfs of this density, renormalised so
//! that `h(1 | v) = 1` exactly:
//!
//! ```text
//! h1(u | v) = sum_k w_k(t) Phi((s - s_k) / sqrt(b)),   w_k(t) ∝ phi(t - t_k; 0, b)
//! ```

use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, probit, std_normal_cdf, std_normal_log_pdf, LN_SQRT_2PI};
use crate::rng::{self, tag};
use crate::scoring::energy_score_total;

/// h-function outputs are kept inside `[H_CLAMP, 1 - H_CLAMP]`.
pub const H_CLAMP: f64 = 1e-12;

/// Kernel weights below `exp(-WEIGHT_CUTOFF)` of the largest are dropped.
const WEIGHT_CUTOFF: f64 = 40.0;

const MAX_INVERSE_ITERATIONS: usize = 200;
const INVERSE_TOLERANCE: f64 = 1e-12;

fn check_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { value: p })
    }
}

/// Probit-transform Gaussian KDE pair copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCopulaKde {
    s: Vec<f64>,
    t: Vec<f64>,
    bandwidth: f64,
}

/// Conditional cdf of one latent coordinate given a fixed value of the other.
struct Conditional<'a> {
    points: &'a [f64],
    // (index, normalised weight), negligible weights dropped
    weights: Vec<(usize, f64)>,
    sd: f64,
}

impl Conditional<'_> {
    #[inline]
    fn cdf(&self, x: f64) -> f64 {
        let inv = 1.0 / self.sd;
        self.weights
            .iter()
            .map(|&(k, w)| w * std_normal_cdf((x - self.points[k]) * inv))
            .sum()
    }

    #[inline]
    fn cdf_and_density(&self, x: f64) -> (f64, f64) {
        let inv = 1.0 / self.sd;
        let (mut c, mut d) = (0.0, 0.0);
        for &(k, w) in &self.weights {
            let z = (x - self.points[k]) * inv;
            c += w * std_normal_cdf(z);
            d += w * (std_normal_log_pdf(z)).exp();
        }
        (c, d * inv)
    }

    fn support(&self) -> (f64, f64) {
        self.weights
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(k, _)| {
                (lo.min(self.points[k]), hi.max(self.points[k]))
            })
    }

    /// Latent `x` with `cdf(x) = p`: Newton steps safeguarded by bisection.
    fn solve(&self, p: f64) -> Result<f64> {
        let shift = self.sd * probit(p);
        let (smin, smax) = self.support();
        // each kernel cdf is bounded by the leftmost / rightmost one
        let (mut lo, mut hi) = (smin + shift, smax + shift);
        if lo == hi {
            return Ok(lo);
        }
        let mut x = 0.5 * (lo + hi);
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            let (c, d) = self.cdf_and_density(x);
            residual = c - p;
            if residual.abs() < INVERSE_TOLERANCE {
                return Ok(x);
            }
            if residual > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - residual / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                return Ok(x);
            }
        }
        Err(Error::NoConvergence {
            iterations: MAX_INVERSE_ITERATIONS,
            residual,
        })
    }
}

impl PairCopulaKde {
    /// Stores the probit-transformed pairs. No estimation happens at fit time.
    pub fn fit(pairs: &[(f64, f64)], bandwidth: f64) -> Result<Self> {
        let (u, v): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        Self::fit_columns(&u, &v, bandwidth)
    }

    pub fn fit_columns(u: &[f64], v: &[f64], bandwidth: f64) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
        }
        if u.is_empty() {
            return Err(Error::Empty("copula data"));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::param("bandwidth", format!("must be positive, got {bandwidth}")));
        }
        for &x in u.iter().chain(v) {
            check_unit(x)?;
        }
        Ok(Self {
            s: u.iter().map(|&x| probit(x)).collect(),
            t: v.iter().map(|&x| probit(x)).collect(),
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n_points(&self) -> usize {
        self.s.len()
    }

    /// Latent points `(Phi^{-1}(u_k), Phi^{-1}(v_k))`.
    pub fn latent_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.t.iter().copied())
    }

    fn conditional<'a>(&self, points: &'a [f64], given_points: &[f64], given: f64) -> Conditional<'a> {
        let half_inv = 0.5 / self.bandwidth;
        let expo: Vec<f64> = given_points
            .iter()
            .map(|&g| -(given - g) * (given - g) * half_inv)
            .collect();
        let max = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<(usize, f64)> = expo
            .iter()
            .enumerate()
            .filter(|(_, &e)| e >= max - WEIGHT_CUTOFF)
            .map(|(k, &e)| (k, (e - max).exp()))
            .collect();
        let total: f64 = weights.iter().map(|w| w.1).sum();
        for w in &mut weights {
            w.1 /= total;
        }
        Conditional { points, weights, sd: self.bandwidth.sqrt() }
    }

    /// Log density on the latent scale, excluding the probit Jacobian.
    fn log_kde(&self, s: f64, t: f64) -> f64 {
        let half_inv = 0.5 / self.bandwidth;
        let terms: Vec<f64> = self
            .s
            .iter()
            .zip(&self.t)
            .map(|(&sk, &tk)| -((s - sk) * (s - sk) + (t - tk) * (t - tk)) * half_inv)
            .collect();
        log_sum_exp(&terms)
            - (self.s.len() as f64).ln()
            - 2.0 * LN_SQRT_2PI
            - self.bandwidth.ln()
    }

    /// Copula log density at `(u, v)` in the open unit square.
    pub fn log_density(&self, u: f64, v: f64) -> Result<f64> {
        check_unit(u)?;
        check_unit(v)?;
        Ok(self.log_density_unchecked(u, v))
    }

    pub(crate) fn log_density_unchecked(&self, u: f64, v: f64) -> f64 {
        let (s, t) = (probit(u), probit(v));
        self.log_kde(s, t) - std_normal_log_pdf(s) - std_normal_log_pdf(t)
    }

    pub fn density(&self, u: f64, v: f64) -> Result<f64> {
        Ok(self.log_density(u, v)?.exp())
    }

    /// `P(U <= u | V = v)`.
    pub fn h1(&self, u: f64, v: f64) -> Result<f64> {
        check_unit(u)?;
        check_unit(v)?;
        Ok(self.h1_unchecked(u, v))
    }

    /// `P(V <= v | U = u)`.
    pub fn h2(&self, u: f64, v: f64) -> Result<f64> {
        check_unit(u)?;
        check_unit(v)?;
        Ok(self.h2_unchecked(u, v))
    }

    pub(crate) fn h1_unchecked(&self, u: f64, v: f64) -> f64 {
        let cond = self.conditional(&self.s, &self.t, probit(v));
        cond.cdf(probit(u)).clamp(H_CLAMP, 1.0 - H_CLAMP)
    }

    pub(crate) fn h2_unchecked(&self, u: f64, v: f64) -> f64 {
        let cond = self.conditional(&self.t, &self.s, probit(u));
        cond.cdf(probit(v)).clamp(H_CLAMP, 1.0 - H_CLAMP)
    }

    /// `u` such that `h1(u | v) = p`.
    pub fn h1_inverse(&self, p: f64, v: f64) -> Result<f64> {
        check_unit(p)?;
        check_unit(v)?;
        let cond = self.conditional(&self.s, &self.t, probit(v));
        Ok(std_normal_cdf(cond.solve(p)?).clamp(H_CLAMP, 1.0 - H_CLAMP))
    }

    /// `v` such that `h2(v | u) = p`.
    pub fn h2_inverse(&self, p: f64, u: f64) -> Result<f64> {
        check_unit(p)?;
        check_unit(u)?;
        let cond = self.conditional(&self.t, &self.s, probit(u));
        Ok(std_normal_cdf(cond.solve(p)?).clamp(H_CLAMP, 1.0 - H_CLAMP))
    }

    /// Draws `count` pairs: `u` uniform, then `v = h2^{-1}(w | u)`.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<[f64; 2]>> {
        (0..count)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                let w: f64 = rng.sample(Open01);
                Ok([u, self.h2_inverse(w, u)?])
            })
            .collect()
    }
}

/// Outcome of a bandwidth grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub bandwidth: f64,
    pub score: f64,
    /// Mean held-out energy score per grid value, in grid order.
    pub scores: Vec<f64>,
}

/// Settings shared by the cross-validated bandwidth searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSettings {
    pub folds: usize,
    pub n_samples: usize,
    pub beta: f64,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self { folds: 10, n_samples: 100, beta: 1.0 }
    }
}

/// Seeded assignment of `n` rows to `folds` folds of near-equal size.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::param("folds", format!("need at least 2, got {folds}")));
    }
    if folds > n {
        return Err(Error::param("folds", format!("{folds} folds for {n} rows")));
    }
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[tag::FOLDS]));
    let mut assignment = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        assignment[row] = pos % folds;
    }
    Ok(assignment)
}

/// Index of the smallest score; ties go to the earlier grid entry.
pub(crate) fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] || scores[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Picks the kernel variance by k-fold cross-validation: held-out pairs are
/// scored with the energy score against samples from the copula fitted on the
/// remaining folds.
pub fn select_bandwidth(
    pairs: &[(f64, f64)],
    grid: &[f64],
    cv: &CvSettings,
    seed: u64,
) -> Result<BandwidthSelection> {
    if grid.is_empty() {
        return Err(Error::Empty("bandwidth grid"));
    }
    if let Some(bad) = grid.iter().find(|b| !(**b > 0.0)) {
        return Err(Error::param("bandwidth_grid", format!("must be positive, got {bad}")));
    }
    let assignment = fold_assignment(pairs.len(), cv.folds, seed)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..cv.folds).map(move |f| (g, f)))
        .collect();
    let fold_scores = jobs
        .par_iter()
        .map(|&(g, f)| {
            let train: Vec<(f64, f64)> = pairs
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a != f)
                .map(|(p, _)| *p)
                .collect();
            let held: Vec<[f64; 2]> = pairs
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == f)
                .map(|(p, _)| [p.0, p.1])
                .collect();
            let model = PairCopulaKde::fit(&train, grid[g])?;
            let mut rng = rng::stream(seed, &[tag::CV_SAMPLES, f as u64]);
            let samples = model.sample(cv.n_samples, &mut rng)?;
            let report = energy_score_total(&samples, &held, cv.beta)?;
            Ok(report.per_point.iter().sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = pairs.len() as f64;
    let scores: Vec<f64> = (0..grid.len())
        .map(|g| fold_scores[g * cv.folds..(g + 1) * cv.folds].iter().sum::<f64>() / n)
        .collect();
    let best = argmin(&scores);
    Ok(BandwidthSelection { bandwidth: grid[best], score: scores[best], scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_pairs(n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut r = rng::stream(seed, &[]);
        (0..n).map(|_| (r.sample(Open01), r.sample(Open01))).collect()
    }

    #[test]
    fn fit_stores_latent_points() {
        let c = PairCopulaKde::fit(&[(0.5, 0.5)], 1.0).unwrap();
        assert_eq!(c.latent_points().collect::<Vec<_>>(), vec![(0.0, 0.0)]);
        let diag = [(0.2, 0.2), (0.7, 0.7), (0.9, 0.9)];
        let c = PairCopulaKde::fit(&diag, 0.5).unwrap();
        assert_eq!(c.n_points(), 3);
        assert!(c.latent_points().all(|(s, t)| s == t));
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(PairCopulaKde::fit(&[(0.0, 0.5)], 1.0).is_err());
        assert!(PairCopulaKde::fit(&[(0.5, 1.0)], 1.0).is_err());
        assert!(PairCopulaKde::fit(&[(0.5, 0.5)], 0.0).is_err());
        assert!(PairCopulaKde::fit(&[], 1.0).is_err());
    }

    #[test]
    fn single_point_at_centre() {
        let c = PairCopulaKde::fit(&[(0.5, 0.5)], 1.0).unwrap();
        assert!((c.density(0.5, 0.5).unwrap() - 1.0).abs() < 1e-14);
        for v in [0.1, 0.5, 0.8] {
            for u in [0.05, 0.3, 0.5, 0.99] {
                assert!((c.h1(u, v).unwrap() - u).abs() < 1e-12);
                assert!((c.h1_inverse(u, v).unwrap() - u).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn swapping_coordinates_mirrors_everything() {
        let pairs = uniform_pairs(50, 4);
        let swapped: Vec<_> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let c = PairCopulaKde::fit(&pairs, 0.3).unwrap();
        let m = PairCopulaKde::fit(&swapped, 0.3).unwrap();
        for (u, v) in [(0.2, 0.6), (0.9, 0.1), (0.45, 0.55)] {
            assert!((c.density(u, v).unwrap() - m.density(v, u).unwrap()).abs() < 1e-12);
            assert!((c.h1(u, v).unwrap() - m.h2(v, u).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn h_function_saturates_and_is_monotone() {
        let c = PairCopulaKde::fit(&uniform_pairs(100, 8), 0.2).unwrap();
        for v in [0.1, 0.5, 0.9] {
            assert!(c.h1(1.0 - 1e-15, v).unwrap() > 1.0 - 1e-6);
            assert!(c.h1(1e-15, v).unwrap() < 1e-6);
            let mut prev = 0.0;
            for i in 1..200 {
                let h = c.h1(i as f64 / 200.0, v).unwrap();
                assert!(h > 0.0 && h < 1.0);
                assert!(h >= prev);
                prev = h;
            }
        }
    }

    #[test]
    fn inverse_round_trip_and_monotone() {
        let c = PairCopulaKde::fit(&uniform_pairs(200, 2), 0.1).unwrap();
        for v in [0.03, 0.4, 0.97] {
            let mut prev = 0.0;
            for i in 1..50 {
                let u = i as f64 / 50.0;
                let back = c.h1_inverse(c.h1(u, v).unwrap(), v).unwrap();
                assert!((back - u).abs() < 1e-7, "u {u} v {v} back {back}");
                let p = c.h1(u, v).unwrap();
                assert!((c.h1(back, v).unwrap() - p).abs() < 1e-9);
                let inv = c.h1_inverse(u, v).unwrap();
                assert!(inv >= prev);
                prev = inv;
                let back2 = c.h2_inverse(c.h2(v, u).unwrap(), v).unwrap();
                assert!((back2 - u).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn density_is_nonnegative_on_grid() {
        let c = PairCopulaKde::fit(&uniform_pairs(80, 6), 0.05).unwrap();
        for i in 0..100 {
            for j in 0..100 {
                let d = c.density((i as f64 + 0.5) / 100.0, (j as f64 + 0.5) / 100.0).unwrap();
                assert!(d >= 0.0 && d.is_finite());
            }
        }
    }

    #[test]
    fn bandwidth_search_basics() {
        let pairs = uniform_pairs(60, 12);
        let cv = CvSettings { folds: 3, n_samples: 20, beta: 1.0 };
        let one = select_bandwidth(&pairs, &[0.4], &cv, 1).unwrap();
        assert_eq!(one.bandwidth, 0.4);
        let a = select_bandwidth(&pairs, &[0.1, 0.5, 1.0], &cv, 7).unwrap();
        let b = select_bandwidth(&pairs, &[0.1, 0.5, 1.0], &cv, 7).unwrap();
        assert_eq!(a, b);
        let too_many = CvSettings { folds: 61, ..cv };
        assert!(select_bandwidth(&pairs, &[0.4], &too_many, 1).is_err());
    }

    #[test]
    fn folds_cover_rows() {
        let a = fold_assignment(23, 5, 3).unwrap();
        let mut counts = [0; 5];
        for &f in &a {
            counts[f] += 1;
        }
        assert!(counts.iter().all(|&c| c == 4 || c == 5));
        assert_eq!(a, fold_assignment(23, 5, 3).unwrap());
        assert!(fold_assignment(3, 4, 0).is_err());
        assert!(fold_assignment(3, 1, 0).is_err());
    }

    fn gaussian_pairs(n: usize, rho: f64, seed: u64) -> Vec<(f64, f64)> {
        use rand_distr::StandardNormal;
        let mut r = rng::stream(seed, &[]);
        (0..n)
            .map(|_| {
                let a: f64 = r.sample(StandardNormal);
                let e: f64 = r.sample(StandardNormal);
                let b = rho * a + (1.0 - rho * rho).sqrt() * e;
                (std_normal_cdf(a), std_normal_cdf(b))
            })
            .collect()
    }

    fn midpoint_total(c: &PairCopulaKde, m: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let (u, v) = ((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64);
                total += c.density(u, v).unwrap();
            }
        }
        total / (m * m) as f64
    }

    /// Exact `int_0^1 c(u, v) du`: the latent KDE marginal of `t` over phi(t).
    fn u_margin(c: &PairCopulaKde, v: f64) -> f64 {
        let t = probit(v);
        let b = c.bandwidth();
        let k: f64 = c
            .latent_points()
            .map(|(_, tk)| (-(t - tk) * (t - tk) / (2.0 * b)).exp() / (2.0 * std::f64::consts::PI * b).sqrt())
            .sum();
        k / c.n_points() as f64 / crate::numerics::std_normal_pdf(t)
    }

    /// `int_0^u c(x, v) dx` by Simpson's rule on the latent scale.
    fn partial_u_integral(c: &PairCopulaKde, u: f64, v: f64) -> f64 {
        let (lo, hi) = (-12.0, probit(u));
        let m = 4000;
        let h = (hi - lo) / m as f64;
        let f = |x: f64| {
            let p = std_normal_cdf(x);
            if p <= 0.0 || p >= 1.0 {
                0.0
            } else {
                c.density(p, v).unwrap() * crate::numerics::std_normal_pdf(x)
            }
        };
        let mut acc = f(lo) + f(hi);
        for i in 1..m {
            acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn density_at_centre_with_unit_bandwidth() {
        let c = PairCopulaKde::fit(&[(0.5, 0.5)], 1.0).unwrap();
        // phi(s; 0, 1) phi(t; 0, 1) / (phi(s) phi(t)) = 1 everywhere
        for (u, v) in [(0.5, 0.5), (0.1, 0.7), (0.99, 0.02)] {
            assert!((c.density(u, v).unwrap() - 1.0).abs() < 1e-12);
            assert!((c.h1_inverse(u, v).unwrap() - u).abs() < 1e-9);
        }
    }

    #[test]
    fn independent_pairs_integrate_to_one() {
        let c = PairCopulaKde::fit(&uniform_pairs(1000, 21), 0.05).unwrap();
        let total = midpoint_total(&c, 200);
        assert!((total - 1.0).abs() < 0.02, "total {total}");
    }

    #[test]
    fn u_margins_match_closed_form_and_are_near_uniform() {
        let c = PairCopulaKde::fit(&uniform_pairs(500, 3), 1.0).unwrap();
        for v in [0.1, 0.5, 0.9] {
            let q = partial_u_integral(&c, 1.0 - 1e-15, v);
            assert!((q - u_margin(&c, v)).abs() < 1e-6, "v {v}: {q} vs {}", u_margin(&c, v));
        }
        // the variance-(1+b) latent marginal pulls the centre down at b = 1
        let centre = u_margin(&c, 0.5);
        assert!((centre - 0.5f64.sqrt()).abs() < 0.05, "centre {centre}");

        let c = PairCopulaKde::fit(&uniform_pairs(5000, 3), 0.05).unwrap();
        for i in 1..10 {
            let m = u_margin(&c, i as f64 / 10.0);
            assert!((0.9..=1.1).contains(&m), "v {}: {m}", i as f64 / 10.0);
        }
    }

    #[test]
    fn h_function_matches_quadrature() {
        let c = PairCopulaKde::fit(&gaussian_pairs(300, 0.6, 5), 0.1).unwrap();
        let spots = [
            (0.05, 0.5),
            (0.2, 0.1),
            (0.3, 0.9),
            (0.4, 0.4),
            (0.5, 0.5),
            (0.6, 0.2),
            (0.7, 0.75),
            (0.8, 0.3),
            (0.9, 0.6),
            (0.97, 0.95),
        ];
        for (u, v) in spots {
            let num = partial_u_integral(&c, u, v);
            let den = partial_u_integral(&c, 1.0 - 1e-15, v);
            let h = c.h1(u, v).unwrap();
            assert!((h - num / den).abs() < 1e-3, "({u}, {v}): {h} vs {}", num / den);
        }
    }

    fn mae_vs_gaussian(c: &PairCopulaKde, rho: f64) -> f64 {
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        let mut total = 0.0;
        for &u in &grid {
            for &v in &grid {
                let truth = crate::marginal::gaussian_copula_density(u, v, rho).unwrap();
                total += (c.density(u, v).unwrap() - truth).abs();
            }
        }
        total / 25.0
    }

    fn oracle_mae(pairs: &[(f64, f64)], rho: f64) -> f64 {
        [0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3]
            .iter()
            .map(|&b| mae_vs_gaussian(&PairCopulaKde::fit(pairs, b).unwrap(), rho))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn error_against_gaussian_copula_shrinks_with_sample_size() {
        let small = oracle_mae(&gaussian_pairs(100, 0.7, 0), 0.7);
        let large = oracle_mae(&gaussian_pairs(1000, 0.7, 0), 0.7);
        assert!(large < small, "{large} vs {small}");
        assert!(large < 0.15, "{large}");
    }

    #[test]
    fn selected_bandwidth_beats_worst_out_of_sample() {
        let grid = [0.005, 0.05, 0.2, 1.0, 3.0];
        let cv = CvSettings { folds: 10, n_samples: 100, beta: 1.0 };
        for seed in 0..5 {
            let train = gaussian_pairs(400, 0.7, 100 + seed);
            let test: Vec<[f64; 2]> = gaussian_pairs(400, 0.7, 200 + seed).iter().map(|p| [p.0, p.1]).collect();
            let sel = select_bandwidth(&train, &grid, &cv, seed).unwrap();
            let worst = grid[sel
                .scores
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0];
            let score = |b: f64| {
                let c = PairCopulaKde::fit(&train, b).unwrap();
                let s = c.sample(2000, &mut rng::stream(seed, &[99])).unwrap();
                energy_score_total(&s, &test, 1.0).unwrap().mean
            };
            assert!(score(sel.bandwidth) < score(worst), "seed {seed}: {sel:?}");
        }
    }

}
