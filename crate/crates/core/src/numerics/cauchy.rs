use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::param("scale", format!("must be positive, got {scale}")))
    }
}

pub fn cauchy_cdf(x: f64, loc: f64, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    Ok(0.5 + ((x - loc) / scale).atan() / PI)
}

pub fn cauchy_pdf(x: f64, loc: f64, scale: f64) -> Result<f64> {
    Ok(cauchy_log_pdf(x, loc, scale)?.exp())
}

pub fn cauchy_log_pdf(x: f64, loc: f64, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    let z = (x - loc) / scale;
    Ok(-(PI * scale).ln() - z.mul_add(z, 1.0).ln())
}

pub fn cauchy_quantile(p: f64, loc: f64, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability { value: p });
    }
    Ok(loc + scale * (PI * (p - 0.5)).tan())
}
