use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::PanelDataset;
use crate::design::DesignBuilder;
use crate::error::{Error, Result};
use crate::sampler::{DrawStore, EffectScales};

use super::effects::quantile_sorted;

/// Marginal variance of one observation with the random effects integrated
/// out: sigma²_gh + z'(Q+R)z for diagonal Q and R given as vectors.
pub fn marginal_variance(z: &[f64], cell_variance: f64, q: &[f64], r: &[f64]) -> Result<f64> {
    if z.len() != q.len() || z.len() != r.len() {
        return Err(Error::Index("regressor and covariance lengths differ".into()));
    }
    let v = cell_variance + z.iter().zip(q.iter().zip(r)).map(|(x, (a, b))| x * x * (a + b)).sum::<f64>();
    if v.is_finite() && cell_variance.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric("non-finite marginal variance".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    /// One value per period of each day.
    Hourly,
    /// Mean over the periods of each day.
    Daily,
}

/// Point estimate used to plug posterior draws into the variance formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlugIn {
    #[default]
    Mean,
    Median,
}

fn point(x: &mut [f64], how: PlugIn) -> f64 {
    match how {
        PlugIn::Mean => x.iter().sum::<f64>() / x.len() as f64,
        PlugIn::Median => {
            x.sort_by(f64::total_cmp);
            quantile_sorted(x, 0.5)
        }
    }
}

/// Point estimates of the variance components entering the volatility path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimates {
    /// sigma² / (lambda_h chi_g), indexed [country][period].
    pub cell: Vec<Vec<f64>>,
    pub q: EffectScales,
    pub r: EffectScales,
}

impl VarianceEstimates {
    pub fn from_store(store: &DrawStore, how: PlugIn) -> Result<Self> {
        let h = store.header();
        if store.n_draws() == 0 {
            return Err(Error::Data("no draws".into()));
        }
        let (g_n, h_n) = (h.countries.len(), h.periods);
        let s2 = store.column(h.sigma2_col());
        let lambda: Vec<Vec<f64>> = (0..h_n).map(|k| store.column(h.lambda_col(k))).collect();
        let chi: Vec<Vec<f64>> = (0..g_n).map(|g| store.column(h.chi_col(g))).collect();
        let cell = (0..g_n)
            .map(|g| {
                (0..h_n)
                    .map(|k| {
                        let mut v: Vec<f64> = (0..s2.len()).map(|i| s2[i] / (lambda[k][i] * chi[g][i])).collect();
                        point(&mut v, how)
                    })
                    .collect()
            })
            .collect();
        let scale = |name: &str| -> Result<f64> { Ok(point(&mut store.column_by_name(name)?, how)) };
        let q = EffectScales {
            mu: scale("q_mu")?,
            alpha: scale("q_alpha")?,
            beta: scale("q_beta")?,
        };
        let r = EffectScales {
            mu: scale("r_mu")?,
            alpha: scale("r_alpha")?,
            beta: scale("r_beta")?,
        };
        Ok(VarianceEstimates { cell, q, r })
    }
}

/// Estimated variance path of one country over the estimation days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityPath {
    pub country: String,
    pub aggregate: Aggregate,
    pub dates: Vec<NaiveDate>,
    /// One row per day: H values (hourly) or one value (daily).
    pub values: Vec<Vec<f64>>,
}

impl VolatilityPath {
    /// Day index of the largest value (daily mean for hourly paths).
    pub fn peak_day(&self) -> usize {
        let day = |r: &Vec<f64>| r.iter().sum::<f64>() / r.len() as f64;
        (0..self.values.len())
            .max_by(|&a, &b| day(&self.values[a]).total_cmp(&day(&self.values[b])))
            .unwrap_or(0)
    }
}

/// Path for country `g` from explicit variance estimates.
pub fn volatility_path_with(
    est: &VarianceEstimates,
    data: &PanelDataset,
    g: usize,
    aggregate: Aggregate,
) -> Result<VolatilityPath> {
    if g >= data.countries.len() || g >= est.cell.len() {
        return Err(Error::Index(format!("country index {g} out of range")));
    }
    let layout = data.spec.layout();
    let q = est.q.diagonal(&layout);
    let r = est.r.diagonal(&layout);
    let design = DesignBuilder::new(data);
    let h_n = data.periods_per_day();
    let mut z = vec![0.0; layout.len()];
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for t in data.estimation_days() {
        let mut day = Vec::with_capacity(h_n);
        for h in 0..h_n {
            design.fill(g, t, h, &mut z);
            let v = marginal_variance(&z, est.cell[g][h], &q, &r)?;
            if !(v > 0.0) {
                return Err(Error::Numeric(format!("non-positive variance on day {t}")));
            }
            day.push(v);
        }
        values.push(match aggregate {
            Aggregate::Hourly => day,
            Aggregate::Daily => vec![day.iter().sum::<f64>() / h_n as f64],
        });
        dates.push(data.date(t));
    }
    Ok(VolatilityPath {
        country: data.countries[g].name.clone(),
        aggregate,
        dates,
        values,
    })
}

/// Plug-in path for country `g` using posterior point estimates.
pub fn volatility_path(
    store: &DrawStore,
    data: &PanelDataset,
    g: usize,
    aggregate: Aggregate,
    how: PlugIn,
) -> Result<VolatilityPath> {
    check_compatible(store, data)?;
    let est = VarianceEstimates::from_store(store, how)?;
    volatility_path_with(&est, data, g, aggregate)
}

pub(crate) fn check_compatible(store: &DrawStore, data: &PanelDataset) -> Result<()> {
    let h = store.header();
    let layout = data.spec.layout();
    let labels: Vec<&str> = layout.labels().collect();
    if h.countries != data.spec.countries || h.periods != data.periods_per_day() || h.coefficients != labels {
        return Err(Error::Data("draws and dataset describe different models".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_variance_examples() {
        let z = [1.0, 0.0, 0.0];
        assert_eq!(marginal_variance(&z, 2.0, &[0.0; 3], &[0.0; 3]).unwrap(), 2.0);
        assert_eq!(marginal_variance(&z, 2.0, &[0.5, 9.0, 9.0], &[0.25, 9.0, 9.0]).unwrap(), 2.75);
        assert!(marginal_variance(&z, f64::NAN, &[0.0; 3], &[0.0; 3]).is_err());
        assert!(marginal_variance(&z, 1.0, &[0.0; 2], &[0.0; 3]).is_err());
        // grows with |z|
        let a = marginal_variance(&[1.0, 1.0, 1.0], 1.0, &[0.1; 3], &[0.1; 3]).unwrap();
        let b = marginal_variance(&[1.0, 2.0, 2.0], 1.0, &[0.1; 3], &[0.1; 3]).unwrap();
        assert!(b > a);
    }
}
