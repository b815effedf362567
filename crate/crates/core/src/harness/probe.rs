use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{GradientOracle, OracleQuery};
use crate::rng::{RngStream, StreamRng};

pub const PROBE_BATCHES: usize = 32;
pub const MIN_PROBE_REPS: usize = 1000;

/// Monte Carlo estimate of an oracle's bias and variance at one `(x, δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub delta: f64,
    pub bias_est: f64,
    pub bias_se: f64,
    pub var_est: f64,
    pub var_se: f64,
    pub replications: usize,
}

/// `bias_est = ‖mean G − ∇f(x)‖_*`, `var_est = mean ‖G − mean G‖_*²`, with
/// batch-means standard errors over 32 batches. Batches run in parallel on
/// streams derived from one draw of `rng`.
pub fn probe_bias_variance<O: GradientOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    delta: f64,
    reps: usize,
    rng: &mut StreamRng,
) -> Result<ProbeResult> {
    if reps < MIN_PROBE_REPS {
        return Err(Error::domain(format!(
            "probe needs at least {MIN_PROBE_REPS} replications, got {reps}"
        )));
    }
    let query = OracleQuery::new(x.to_vec(), delta)?;
    let root = RngStream::new(rng.random::<u64>(), 0x7072_6f62);
    let d = oracle.dim();
    let dual = oracle.norm().dual();
    let per = reps / PROBE_BATCHES;
    let extra = reps % PROBE_BATCHES;
    let sizes: Vec<usize> = (0..PROBE_BATCHES).map(|b| per + usize::from(b < extra)).collect();

    let draws = |b: usize| -> Result<Vec<Vec<f64>>> {
        let mut r = root.derive(b as u64).rng();
        (0..sizes[b])
            .map(|_| oracle.query(&query, &mut r).map(|resp| resp.g))
            .collect()
    };

    // First pass: per-batch sums of G.
    let sums: Vec<Vec<f64>> = (0..PROBE_BATCHES)
        .into_par_iter()
        .map(|b| {
            let gs = draws(b)?;
            let mut s = vec![0.0; d];
            for g in &gs {
                for (si, gi) in s.iter_mut().zip(g) {
                    *si += gi;
                }
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; d];
    for s in &sums {
        for (m, si) in mean.iter_mut().zip(s) {
            *m += si;
        }
    }
    for m in &mut mean {
        *m /= reps as f64;
    }

    // Second pass regenerates the same draws to accumulate squared deviations.
    let dev: Vec<f64> = (0..PROBE_BATCHES)
        .into_par_iter()
        .map(|b| {
            let gs = draws(b)?;
            let mut acc = 0.0;
            let mut diff = vec![0.0; d];
            for g in &gs {
                for ((di, gi), m) in diff.iter_mut().zip(g).zip(&mean) {
                    *di = gi - m;
                }
                let n = dual.eval(&diff);
                acc += n * n;
            }
            Ok(acc / sizes[b] as f64)
        })
        .collect::<Result<_>>()?;

    let grad = oracle.objective().grad(x);
    let bias: Vec<f64> = mean.iter().zip(&grad).map(|(m, g)| m - g).collect();
    let bias_est = dual.eval(&bias);

    let nb = PROBE_BATCHES as f64;
    let batch_means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&sizes)
        .map(|(s, k)| s.iter().map(|v| v / *k as f64).collect())
        .collect();
    let coord_se: Vec<f64> = (0..d)
        .map(|i| {
            let col: Vec<f64> = batch_means.iter().map(|bm| bm[i]).collect();
            batch_se(&col, nb)
        })
        .collect();
    let bias_se = dual.eval(&coord_se);
    let var_est = dev.iter().zip(&sizes).map(|(v, k)| v * *k as f64).sum::<f64>() / reps as f64;
    let var_se = batch_se(&dev, nb);
    Ok(ProbeResult {
        delta,
        bias_est,
        bias_se,
        var_est,
        var_se,
        replications: reps,
    })
}

fn batch_se(values: &[f64], nb: f64) -> f64 {
    let m = values.iter().sum::<f64>() / nb;
    let s2 = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (nb - 1.0);
    (s2 / nb).sqrt()
}

/// Least-squares slope of `log y` against `log δ`.
pub fn log_log_slope(deltas: &[f64], ys: &[f64]) -> Result<f64> {
    if deltas.len() != ys.len() || deltas.len() < 2 {
        return Err(Error::domain("slope needs at least two matching points"));
    }
    if deltas.iter().chain(ys).any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::domain("slope needs positive values"));
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
