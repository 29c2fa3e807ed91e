#![allow(dead_code)]

use chrono::NaiveDate;
use prumidas::config::{Covariate, ModelSpec};
use prumidas::data::{CountryPanel, PanelDataset, Standardization};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn spec(countries: usize, periods: usize, ar_lags: Vec<usize>, daily_ar: bool) -> ModelSpec {
    ModelSpec {
        countries: (0..countries).map(|g| format!("C{g}")).collect(),
        freq_mismatch: periods,
        ar_lags,
        daily_ar,
        covariates: vec![Covariate::high("x"), Covariate::low("f")],
    }
}

/// A panel of iid normal series that bypasses ingestion; covariates are
/// treated as already standardized.
pub fn random_panel<R: Rng + ?Sized>(spec: &ModelSpec, days: usize, rng: &mut R) -> PanelDataset {
    let h = spec.freq_mismatch;
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    let countries = spec
        .countries
        .iter()
        .map(|name| CountryPanel {
            name: name.clone(),
            price: (0..days * h).map(|_| 10.0 + 3.0 * normal()).collect(),
            high: (0..spec.n_high()).map(|_| (0..days * h).map(|_| normal()).collect()).collect(),
            low: (0..spec.n_low()).map(|_| (0..days).map(|_| normal()).collect()).collect(),
            scaling: vec![Standardization { mean: 0.0, sd: 1.0 }; spec.covariates.len()],
            raw_hours: days * h,
        })
        .collect();
    let ds = PanelDataset {
        presample_days: spec.presample_days(),
        spec: spec.clone(),
        start: day(2021, 1, 1),
        n_days: days,
        countries,
        notes: Vec::new(),
    };
    ds.validate().unwrap();
    ds
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor n - 1.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}
