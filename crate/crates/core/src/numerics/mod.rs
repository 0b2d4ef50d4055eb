//! Distribution primitives and the interpolated inverse-cdf sampler.

mod cauchy;
mod interp;
mod normal;

pub use cauchy::{cauchy_cdf, cauchy_log_pdf, cauchy_pdf, cauchy_quantile};
pub use interp::InterpolatedInverseCdf;
pub use normal::{
    std_normal_cdf, std_normal_log_pdf, std_normal_pdf, std_normal_quantile, LN_SQRT_2PI,
};
pub(crate) use normal::probit;

/// Numerically stable `ln(sum(exp(values)))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let v = [0.1, -2.0, 3.5];
        let direct = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
