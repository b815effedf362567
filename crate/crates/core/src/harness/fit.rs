use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares power law `error ≈ e^{intercept} · n^{−exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub horizons: Vec<f64>,
    pub errors: Vec<f64>,
    pub error_se: Vec<f64>,
    pub fitted_exponent: f64,
    pub fitted_intercept: f64,
    pub r_squared: f64,
}

/// Fits `log error = c − k·log n` by ordinary least squares; the exponent is `k`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let se = vec![0.0; points.len()];
    fit_rate_with_se(points, &se)
}

pub fn fit_rate_with_se(points: &[(f64, f64)], se: &[f64]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::domain("a rate fit needs at least 3 horizons"));
    }
    if se.len() != points.len() {
        return Err(Error::domain("one standard error per horizon is required"));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::domain("horizons must be strictly increasing"));
        }
    }
    if let Some((n, e)) = points.iter().find(|(n, e)| !(*e > 0.0 && e.is_finite() && *n > 0.0)) {
        return Err(Error::domain(format!(
            "rate fit needs positive finite values, got error {e} at n = {n}"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(RateFit {
        horizons: points.iter().map(|p| p.0).collect(),
        errors: points.iter().map(|p| p.1).collect(),
        error_se: se.to_vec(),
        fitted_exponent: -slope,
        fitted_intercept: intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [1e3f64, 1e4, 1e5]
            .iter()
            .map(|n| (*n, 2.5 * n.powf(-1.0 / 3.0)))
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.fitted_exponent - 1.0 / 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.fitted_intercept - 2.5f64.ln()).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [1e3f64, 1e4, 1e5].iter().map(|n| (*n, n.powf(-0.5))).collect();
        assert!((fit_rate(&pts).unwrap().fitted_exponent - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_outlier_moves_exponent_little() {
        let ns = [1e3f64, 3e3, 1e4, 3e4, 1e5, 3e5, 1e6];
        for k in 0..ns.len() {
            let pts: Vec<(f64, f64)> = ns
                .iter()
                .enumerate()
                .map(|(i, n)| (*n, n.powf(-1.0 / 3.0) * if i == k { 1.1 } else { 1.0 }))
                .collect();
            let e = fit_rate(&pts).unwrap().fitted_exponent;
            assert!((e - 1.0 / 3.0).abs() <= 0.03, "outlier at {k}: {e}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (1.0, 0.5), (3.0, 0.1)]).is_err());
    }
}
