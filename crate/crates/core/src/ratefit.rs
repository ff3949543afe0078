//! Log-log rate fitting for convergence studies.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    /// Fitted exponent: err ~ C * eps^slope.
    pub slope: f64,
    /// ln C.
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub rms: f64,
    /// Rough 1-sigma width on the slope (0 when only two points).
    pub slope_stderr: f64,
    /// Residual per point, same order as the input.
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of ln(err) against ln(eps).
///
/// All errors must be strictly positive; degenerate inputs are rejected
/// rather than producing NaN slopes.
pub fn fit_rate(eps: &[f64], err: &[f64]) -> Result<RateFit> {
    if eps.len() != err.len() {
        return Err(Error::Config(format!(
            "rate fit needs matching lengths, got {} and {}",
            eps.len(),
            err.len()
        )));
    }
    if eps.len() < 2 {
        return Err(Error::Config(
            "rate fit needs at least two (eps, err) pairs".into(),
        ));
    }
    for (&e, &v) in eps.iter().zip(err) {
        if !(e > 0.0) || !(v > 0.0) || !e.is_finite() || !v.is_finite() {
            return Err(Error::Domain(format!(
                "rate fit requires positive finite data, got ({e}, {v})"
            )));
        }
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx <= 0.0 {
        return Err(Error::Config("rate fit needs at least two distinct eps".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let slope_stderr = if xs.len() > 2 {
        let dof = n - 2.0;
        (residuals.iter().map(|r| r * r).sum::<f64>() / dof / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        slope,
        intercept,
        rms,
        slope_stderr,
        residuals,
    })
}

/// Fit with the largest-eps outlier rule. A coarse point that sits off the
/// asymptotic branch drags a global least-squares fit, so the test is made
/// against a fit through the remaining points: drop the coarsest point when
/// its log-residual against that reduced fit exceeds max(3 x reduced RMS,
/// 0.15). Returns the fit and a mask of the points actually used.
pub fn fit_rate_robust(eps: &[f64], err: &[f64]) -> Result<(RateFit, Vec<bool>)> {
    let fit = fit_rate(eps, err)?;
    let mut used = vec![true; eps.len()];
    if eps.len() < 4 {
        return Ok((fit, used));
    }
    // index of the largest eps
    let (imax, _) = eps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let mut e2 = Vec::new();
    let mut v2 = Vec::new();
    for i in 0..eps.len() {
        if i != imax {
            e2.push(eps[i]);
            v2.push(err[i]);
        }
    }
    let reduced = fit_rate(&e2, &v2)?;
    let predicted = reduced.intercept + reduced.slope * eps[imax].ln();
    let residual = (err[imax].ln() - predicted).abs();
    if residual > (3.0 * reduced.rms).max(0.15) {
        used[imax] = false;
        return Ok((reduced, used));
    }
    Ok((fit, used))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_laws() {
        let eps = [0.4f64, 0.2, 0.1, 0.05];
        let err: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(1.5)).collect();
        let fit = fit_rate(&eps, &err).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0_f64.ln()).abs() < 1e-12);
        assert!(fit.rms < 1e-13);
    }

    #[test]
    fn drops_a_saturated_coarse_point() {
        let eps = [0.8f64, 0.4, 0.2, 0.1, 0.05];
        let mut err: Vec<f64> = eps.iter().map(|e| e.powi(2)).collect();
        err[0] = 3.0; // coarse point off the asymptotic branch
        let (fit, used) = fit_rate_robust(&eps, &err).unwrap();
        assert!(!used[0]);
        assert!(used[1..].iter().all(|&u| u));
        assert!((fit.slope - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(fit_rate(&[0.1], &[1.0]).is_err());
        assert!(fit_rate(&[0.1, 0.1], &[1.0, 2.0]).is_err());
        assert!(fit_rate(&[0.1, 0.2], &[0.0, 1.0]).is_err());
    }
}
