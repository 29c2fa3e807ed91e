//! Summaries of retained draws: country effects, densities, volatility
//! paths and convergence diagnostics.

pub mod diagnostics;
pub mod effects;
pub mod export;
pub mod volatility;

use crate::error::{Error, Result};
use crate::sampler::DrawStore;

pub use diagnostics::{diagnostics, effective_sample_size, geweke_z, mc_standard_error, Diagnostics};
pub use effects::{country_effect, country_effects, kernel_density, CountryEffectSummary, DensityGrid};
pub use volatility::{marginal_variance, volatility_path, Aggregate, PlugIn, VarianceEstimates, VolatilityPath};

/// Stacks the draws of several chains of the same run.
pub fn pool_chains(stores: &[DrawStore]) -> Result<DrawStore> {
    let first = stores.first().ok_or_else(|| Error::Data("no chains given".into()))?;
    let mut pooled = DrawStore::new(first.header().clone());
    for s in stores {
        let (a, b) = (s.header(), first.header());
        if a.columns != b.columns || a.config_hash != b.config_hash {
            return Err(Error::Data("chains come from different runs".into()));
        }
        for r in s.rows() {
            pooled.push_row(r);
        }
    }
    if !first.header().random_effects {
        let n = stores.len() as f64;
        let avg = |pick: fn(&DrawStore) -> Option<&Vec<Vec<f64>>>| -> Option<Vec<Vec<f64>>> {
            let mut acc = pick(first)?.clone();
            for s in &stores[1..] {
                for (a, b) in acc.iter_mut().flatten().zip(pick(s)?.iter().flatten()) {
                    *a += b;
                }
            }
            acc.iter_mut().flatten().for_each(|v| *v /= n);
            Some(acc)
        };
        let psi = avg(|s| s.header().psi_mean.as_ref());
        let zeta = avg(|s| s.header().zeta_mean.as_ref());
        let h = pooled.header_mut();
        h.psi_mean = psi;
        h.zeta_mean = zeta;
    }
    Ok(pooled)
}

/// Rescales every draw so the geometric means of the hourly and country
/// multipliers are 1, moving the removed scale into sigma². Cell variances
/// sigma² / (lambda_h chi_g) are unchanged; only the split between the
/// factors, which the likelihood does not pin down, is fixed for reporting.
pub fn normalize_scales(store: &DrawStore) -> DrawStore {
    let h = store.header().clone();
    let lam: Vec<usize> = (0..h.periods).map(|k| h.lambda_col(k)).collect();
    let chi: Vec<usize> = (0..h.countries.len()).map(|g| h.chi_col(g)).collect();
    let s2 = h.sigma2_col();
    let geo = |row: &[f64], cols: &[usize]| -> f64 {
        (cols.iter().map(|&c| row[c].ln()).sum::<f64>() / cols.len() as f64).exp()
    };
    let mut out = DrawStore::new(h);
    for row in store.rows() {
        let mut r = row.to_vec();
        let (a, b) = (geo(row, &lam), geo(row, &chi));
        lam.iter().for_each(|&c| r[c] /= a);
        chi.iter().for_each(|&c| r[c] /= b);
        r[s2] /= a * b;
        out.push_row(&r);
    }
    out
}
