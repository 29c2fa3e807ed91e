use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::DrawStore;

/// Probabilities of the boxplot quantiles.
pub const BOX_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];
pub const GRID_POINTS: usize = 512;

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Kernel density estimate on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityGrid {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }
}

/// Gaussian-kernel density with Silverman's rule-of-thumb bandwidth,
/// evaluated on `points` grid points spanning mean ± 4 sd, widened where
/// needed so every kernel's ±4 bandwidth support is covered.
pub fn kernel_density(draws: &[f64], points: usize) -> Result<DensityGrid> {
    let n = draws.len();
    if n < 2 || points < 2 {
        return Err(Error::Data("density needs at least 2 draws and 2 grid points".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::Data("degenerate chain".into()));
    }
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bw = 0.9 * spread * (n as f64).powf(-0.2);
    let lo = (mean - 4.0 * sd).min(sorted[0] - 4.0 * bw);
    let hi = (mean + 4.0 * sd).max(sorted[n - 1] + 4.0 * bw);
    let step = (hi - lo) / (points - 1) as f64;
    let x: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let norm = 1.0 / (n as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let density = x
        .iter()
        .map(|&g| {
            // only draws within 8 bandwidths contribute measurably
            let a = sorted.partition_point(|&v| v < g - 8.0 * bw);
            let b = sorted.partition_point(|&v| v <= g + 8.0 * bw);
            sorted[a..b]
                .iter()
                .map(|&v| {
                    let u = (g - v) / bw;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(DensityGrid { bandwidth: bw, x, density })
}

/// Posterior of one country's overall coefficient: the common coefficient
/// plus that country's random effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryEffectSummary {
    pub coefficient: String,
    pub country: String,
    pub draws: Vec<f64>,
    /// At [`BOX_PROBS`].
    pub quantiles: [f64; 5],
    pub mean: f64,
    pub density: DensityGrid,
}

/// Draws of gamma_l + zeta_{g,l} for the coefficient labelled `coefficient`
/// and country index `g`.
pub fn country_effect_draws(store: &DrawStore, coefficient: &str, g: usize) -> Result<Vec<f64>> {
    let h = store.header();
    let l = h
        .coefficients
        .iter()
        .position(|c| c == coefficient)
        .ok_or_else(|| Error::Index(format!("unknown coefficient '{coefficient}'")))?;
    if g >= h.countries.len() {
        return Err(Error::Index(format!("country index {g} out of range")));
    }
    let zc = h
        .zeta_col(g, l)
        .ok_or_else(|| Error::Data("country random-effect draws were not stored".into()))?;
    let gc = h.gamma_col(l);
    Ok(store.rows().map(|r| r[gc] + r[zc]).collect())
}

pub fn summarize_draws(coefficient: &str, country: &str, draws: Vec<f64>) -> Result<CountryEffectSummary> {
    if draws.is_empty() {
        return Err(Error::Data("no draws".into()));
    }
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = BOX_PROBS.map(|p| quantile_sorted(&sorted, p));
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let density = kernel_density(&draws, GRID_POINTS)?;
    Ok(CountryEffectSummary {
        coefficient: coefficient.into(),
        country: country.into(),
        draws,
        quantiles,
        mean,
        density,
    })
}

pub fn country_effect(store: &DrawStore, coefficient: &str, g: usize) -> Result<CountryEffectSummary> {
    let draws = country_effect_draws(store, coefficient, g)?;
    summarize_draws(coefficient, &store.header().countries[g], draws)
}

/// Summaries for every country, in country order.
pub fn country_effects(store: &DrawStore, coefficient: &str) -> Result<Vec<CountryEffectSummary>> {
    (0..store.header().countries.len())
        .map(|g| country_effect(store, coefficient, g))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.25), 2.0);
        assert!((quantile_sorted(&s, 0.05) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn density_integrates_to_one_and_peaks_near_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..5000).map(|_| 3.0 + 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let d = kernel_density(&x, GRID_POINTS).unwrap();
        assert_eq!(d.x.len(), 512);
        assert!((d.integral() - 1.0).abs() < 1e-3);
        let imax = (0..512).max_by(|&a, &b| d.density[a].total_cmp(&d.density[b])).unwrap();
        assert!((d.x[imax] - 3.0).abs() < 0.3);
        assert!(d.x[0] <= 3.0 - 8.0 + 0.5 && d.x[511] >= 3.0 + 8.0 - 0.5);
    }

    #[test]
    fn heavy_tailed_draws_still_integrate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..4000)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                a / b.abs().max(0.05)
            })
            .collect();
        let d = kernel_density(&x, GRID_POINTS).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-3, "{}", d.integral());
    }

    #[test]
    fn summary_quantiles_are_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..1000).map(|_| rng.random::<f64>().powi(3)).collect();
        let s = summarize_draws("gas", "DE", x).unwrap();
        assert!(s.quantiles.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.quantiles[1] <= s.quantiles[2] && s.quantiles[2] <= s.quantiles[3]);
    }
}
