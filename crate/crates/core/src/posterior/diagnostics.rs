use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::DrawStore;

/// Fewest draws accepted by the diagnostics.
pub const MIN_DRAWS: usize = 100;

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, v)
}

/// Integrated autocorrelation time by Geyer's initial positive sequence:
/// autocorrelations are summed in adjacent pairs until the first pair sum
/// that is not positive.
pub fn autocorrelation_time(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Data(format!("{n} draws, need at least 2")));
    }
    let (m, v) = mean_var(x);
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Data("degenerate chain".into()));
    }
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let rho = |k: usize| -> f64 { d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * v) };
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = rho(k) + rho(k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    Ok(tau)
}

/// Effective sample size n / tau, clamped to (0, n].
pub fn effective_sample_size(x: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let tau = autocorrelation_time(x)?;
    Ok((n / tau.max(f64::MIN_POSITIVE)).min(n))
}

/// Monte Carlo standard error of the sample mean.
pub fn mc_standard_error(x: &[f64]) -> Result<f64> {
    let (_, v) = mean_var(x);
    Ok((v / effective_sample_size(x)?).sqrt())
}

/// Standard error of the mean from about sqrt(n) non-overlapping batches.
pub fn batch_means_se(x: &[f64]) -> f64 {
    let n = x.len();
    let size = ((n as f64).sqrt() as usize).max(1);
    let batches = n / size;
    if batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let (_, v) = mean_var(&means);
    (v * batches as f64 / (batches as f64 - 1.0) / batches as f64).sqrt()
}

/// Geweke's convergence score: the first 10% of the chain against the last
/// 50%, each mean's variance from its own effective sample size.
pub fn geweke_z(x: &[f64]) -> Result<f64> {
    if x.len() < MIN_DRAWS {
        return Err(Error::Data(format!("{} draws, need at least {MIN_DRAWS}", x.len())));
    }
    let n = x.len();
    let a = &x[..n / 10];
    let b = &x[n - n / 2..];
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let se2 = va / effective_sample_size(a)? + vb / effective_sample_size(b)?;
    let z = (ma - mb) / se2.sqrt();
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Data("degenerate chain".into()))
    }
}

/// Keeps at most `max_points` evenly spaced draws.
pub fn thin_trace(x: &[f64], max_points: usize) -> Vec<f64> {
    if max_points == 0 || x.len() <= max_points {
        return x.to_vec();
    }
    let step = x.len().div_ceil(max_points);
    x.iter().step_by(step).copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDiagnostic {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ess: f64,
    pub geweke_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_draws: usize,
    pub parameters: Vec<ParameterDiagnostic>,
}

/// ESS and Geweke z for every stored column. Columns that never move (for
/// example the variance of an empty effect group) are skipped.
pub fn diagnostics(store: &DrawStore) -> Result<Diagnostics> {
    let n = store.n_draws();
    if n < MIN_DRAWS {
        return Err(Error::Data(format!("{n} draws, need at least {MIN_DRAWS}")));
    }
    let mut parameters = Vec::new();
    for (c, name) in store.header().columns.iter().enumerate() {
        let x = store.column(c);
        let (mean, var) = mean_var(&x);
        if var == 0.0 {
            continue;
        }
        parameters.push(ParameterDiagnostic {
            name: name.clone(),
            mean,
            sd: (var * n as f64 / (n - 1) as f64).sqrt(),
            ess: effective_sample_size(&x)?,
            geweke_z: geweke_z(&x)?,
        });
    }
    Ok(Diagnostics { n_draws: n, parameters })
}
