use serde::{Deserialize, Serialize};

use super::InitialPredictive;
use crate::error::{Error, Result};
use crate::numerics::{probit, std_normal_cdf};

/// Clamp applied to the cached one-step-ahead cdf values.
pub const V_CLAMP: f64 = 1e-12;

// Smallest tail mass pushed through the probit.
const U_LO: f64 = 1e-300;

// The running cdf is carried as both tails so the probit sees the small one.
#[inline]
fn probit_of_tails(lo: f64, hi: f64) -> f64 {
    if lo <= hi {
        probit(lo.max(U_LO))
    } else {
        -probit(hi.max(U_LO))
    }
}

/// Recursion weight `alpha_k = (2 - 1/k) / (k + 1)`.
pub fn alpha_weight(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "weights are indexed from 1"));
    }
    Ok(alpha_unchecked(k))
}

#[inline]
fn alpha_unchecked(k: usize) -> f64 {
    let k = k as f64;
    (2.0 - 1.0 / k) / (k + 1.0)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::param("rho", format!("|rho| must be below 1, got {rho}")))
    }
}

fn check_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { value: p })
    }
}

/// Conditional Gaussian copula cdf
/// `Phi((Phi^{-1}(u) - rho Phi^{-1}(v)) / sqrt(1 - rho^2))`.
pub fn h_rho(u: f64, v: f64, rho: f64) -> Result<f64> {
    check_unit(u)?;
    check_unit(v)?;
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(u);
    }
    let kernel = GaussianUpdate::new(rho);
    Ok(kernel.h(probit(u), probit(v)))
}

/// Bivariate Gaussian copula density with correlation `rho`.
pub fn gaussian_copula_density(u: f64, v: f64, rho: f64) -> Result<f64> {
    check_unit(u)?;
    check_unit(v)?;
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    let kernel = GaussianUpdate::new(rho);
    Ok(kernel.density(probit(u), probit(v)))
}

/// Precomputed constants of the Gaussian copula update for one `rho`.
#[derive(Debug, Clone, Copy)]
struct GaussianUpdate {
    rho: f64,
    inv_sd: f64,
    half_inv_var: f64,
}

impl GaussianUpdate {
    fn new(rho: f64) -> Self {
        let var = 1.0 - rho * rho;
        Self {
            rho,
            inv_sd: 1.0 / var.sqrt(),
            half_inv_var: 0.5 / var,
        }
    }

    #[inline]
    fn h(&self, qu: f64, qv: f64) -> f64 {
        std_normal_cdf((qu - self.rho * qv) * self.inv_sd)
    }

    /// `(h, 1 - h)` with the smaller one computed directly.
    #[inline]
    fn h_tails(&self, qu: f64, qv: f64) -> (f64, f64) {
        let z = (qu - self.rho * qv) * self.inv_sd;
        let t = std_normal_cdf(-z.abs());
        if z <= 0.0 {
            (t, 1.0 - t)
        } else {
            (1.0 - t, t)
        }
    }

    #[inline]
    fn density(&self, qu: f64, qv: f64) -> f64 {
        let r = self.rho;
        let expo = (r * r * (qu * qu + qv * qv) - 2.0 * r * qu * qv) * self.half_inv_var;
        self.inv_sd * (-expo).exp()
    }
}

/// Univariate recursive Bayesian predictive fitted on one ordering of the data.
///
/// Stores `v_k = P^{(k-1)}(x^k)`, the predictive cdf of each observation under
/// the model updated on the observations before it. Evaluating the cdf or the
/// density at a new point replays the `n` updates, so each evaluation costs
/// `O(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "MarginalRepr", into = "MarginalRepr")]
pub struct PredictiveMarginal {
    rho: f64,
    initial: InitialPredictive,
    train_seq: Vec<f64>,
    cached_v: Vec<f64>,
    probit_v: Vec<f64>,
    alphas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MarginalRepr {
    rho: f64,
    initial: InitialPredictive,
    train_seq: Vec<f64>,
    cached_v: Vec<f64>,
}

impl From<MarginalRepr> for PredictiveMarginal {
    fn from(r: MarginalRepr) -> Self {
        Self::from_parts(r.rho, r.initial, r.train_seq, r.cached_v)
    }
}

impl From<PredictiveMarginal> for MarginalRepr {
    fn from(m: PredictiveMarginal) -> Self {
        Self {
            rho: m.rho,
            initial: m.initial,
            train_seq: m.train_seq,
            cached_v: m.cached_v,
        }
    }
}

impl PredictiveMarginal {
    fn from_parts(
        rho: f64,
        initial: InitialPredictive,
        train_seq: Vec<f64>,
        cached_v: Vec<f64>,
    ) -> Self {
        let probit_v = cached_v.iter().map(|&v| probit(v)).collect();
        let alphas = (1..=cached_v.len()).map(alpha_unchecked).collect();
        Self { rho, initial, train_seq, cached_v, probit_v, alphas }
    }

    /// Fits the recursion on `observations` in the given order.
    pub fn fit(observations: &[f64], rho: f64, initial: InitialPredictive) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Empty("observations"));
        }
        if let Some(index) = observations.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        check_rho(rho)?;
        initial.validate()?;

        let n = observations.len();
        let mut model = Self::from_parts(rho, initial, Vec::with_capacity(n), Vec::with_capacity(n));
        model.alphas = (1..=n).map(alpha_unchecked).collect();
        for &x in observations {
            let v = model.cdf(x).clamp(V_CLAMP, 1.0 - V_CLAMP);
            model.train_seq.push(x);
            model.cached_v.push(v);
            model.probit_v.push(probit(v));
        }
        Ok(model)
    }

    /// Predictive cdf and density after all `n` updates.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let mut p = self.initial.pdf(x);
        let steps = self.cached_v.len();
        if self.rho == 0.0 || steps == 0 {
            return (self.initial.cdf(x), p);
        }
        let (mut lo, mut hi) = self.initial.tails(x);
        let kernel = GaussianUpdate::new(self.rho);
        for k in 0..steps {
            let a = self.alphas[k];
            let qu = probit_of_tails(lo, hi);
            let qv = self.probit_v[k];
            let (h, hc) = kernel.h_tails(qu, qv);
            let c = kernel.density(qu, qv);
            lo += a * (h - lo);
            hi += a * (hc - hi);
            p *= 1.0 + a * (c - 1.0);
        }
        (lo, p)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let steps = self.cached_v.len();
        if self.rho == 0.0 || steps == 0 {
            return self.initial.cdf(x);
        }
        let (mut lo, mut hi) = self.initial.tails(x);
        let kernel = GaussianUpdate::new(self.rho);
        for k in 0..steps {
            let (h, hc) = kernel.h_tails(probit_of_tails(lo, hi), self.probit_v[k]);
            lo += self.alphas[k] * (h - lo);
            hi += self.alphas[k] * (hc - hi);
        }
        lo
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn initial(&self) -> &InitialPredictive {
        &self.initial
    }

    pub fn train_seq(&self) -> &[f64] {
        &self.train_seq
    }

    pub fn cached_v(&self) -> &[f64] {
        &self.cached_v
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn n_obs(&self) -> usize {
        self.train_seq.len()
    }
}
