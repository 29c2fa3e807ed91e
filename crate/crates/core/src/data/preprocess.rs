use chrono::NaiveDate;

use super::{mean_sd, CountryPanel, DailyTable, HourlyTable, PanelDataset, Standardization};
use crate::config::{DateFilter, Frequency, ModelSpec};
use crate::error::{Error, Result};

/// Centers and scales `x` in place to sample mean 0 and sample sd 1.
pub fn standardize(name: &str, x: &mut [f64]) -> Result<Standardization> {
    if x.len() < 2 {
        return Err(Error::Data(format!("{name}: too few values to standardize")));
    }
    let (mean, sd) = mean_sd(x);
    if !(sd.is_finite() && sd > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::Data(format!("{name}: zero variance, cannot standardize")));
    }
    for v in x.iter_mut() {
        *v = (*v - mean) / sd;
    }
    Ok(Standardization { mean, sd })
}

/// Aligns the country tables on a common calendar and applies the
/// preprocessing rules:
///
/// * only whole days inside `filter` are kept, identical for all countries;
/// * daily covariates are lagged one day, so day t carries the settlement
///   published on day t-1;
/// * every covariate is standardized per country over the window;
/// * prices stay in levels.
///
/// `spec.countries` must list the tables' countries in order.
pub fn align_and_preprocess(
    hourly: &[HourlyTable],
    daily: &DailyTable,
    spec: &ModelSpec,
    filter: &DateFilter,
) -> Result<PanelDataset> {
    spec.validate()?;
    let h = spec.freq_mismatch;
    let names: Vec<&str> = hourly.iter().map(|t| t.country.as_str()).collect();
    if names != spec.countries.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Data(format!(
            "hourly tables {names:?} do not match model countries {:?}",
            spec.countries
        )));
    }

    let mut window: Option<(NaiveDate, usize)> = None;
    for t in hourly {
        if t.periods_per_day != h {
            return Err(Error::Data(format!(
                "{}: {} periods per day, model expects {h}",
                t.country, t.periods_per_day
            )));
        }
        let days = t.complete_days();
        let (Some(&first), Some(&last)) = (days.first(), days.last()) else {
            return Err(Error::Data(format!("{}: no complete day", t.country)));
        };
        if filter.from.is_some_and(|f| f < first) || filter.to.is_some_and(|to| to > last) {
            return Err(Error::Data(format!(
                "{}: data {first}..{last} do not cover the requested window",
                t.country
            )));
        }
        let kept: Vec<NaiveDate> = days.into_iter().filter(|d| filter.contains(*d)).collect();
        let w = (
            *kept
                .first()
                .ok_or_else(|| Error::Data(format!("{}: window is empty", t.country)))?,
            kept.len(),
        );
        match window {
            None => window = Some(w),
            Some(prev) if prev != w => {
                return Err(Error::Data(format!(
                    "country length mismatch: {} covers {} days from {}, expected {} from {}",
                    t.country, w.1, w.0, prev.1, prev.0
                )))
            }
            _ => {}
        }
    }
    let (start, n_days) =
        window.ok_or_else(|| Error::Data("no hourly tables supplied".into()))?;
    let presample_days = spec.presample_days();
    if n_days <= presample_days {
        return Err(Error::Data(format!(
            "insufficient presample history: {n_days} days, lags need {presample_days} plus at least one estimation day"
        )));
    }

    // Daily covariates: value for day t is the settlement of day t-1.
    let low_specs: Vec<_> = spec
        .covariates
        .iter()
        .filter(|c| c.frequency == Frequency::Low)
        .collect();
    let mut low_raw = Vec::with_capacity(low_specs.len());
    for c in &low_specs {
        let col = daily
            .column(&c.name)
            .ok_or_else(|| Error::Data(format!("daily table lacks column '{}'", c.name)))?;
        let mut series = Vec::with_capacity(n_days);
        for t in 0..n_days {
            let day = start + chrono::Duration::days(t as i64 - 1);
            let i = daily.index_of(day).ok_or_else(|| {
                Error::Data(format!(
                    "daily table must cover {}..{} (window plus one leading day)",
                    start.pred_opt().expect("date"),
                    start + chrono::Duration::days(n_days as i64 - 2)
                ))
            })?;
            series.push(col[i]);
        }
        low_raw.push(series);
    }

    let mut countries = Vec::with_capacity(hourly.len());
    for t in hourly {
        let first = t.timestamps[0].date();
        let offset = (start - first).num_days() as usize * h;
        let rows = offset..offset + n_days * h;
        let mut scaling = Vec::new();
        let mut high = Vec::new();
        for c in spec.covariates.iter().filter(|c| c.frequency == Frequency::High) {
            let col = t.column(&c.name).ok_or_else(|| {
                Error::Data(format!("{}: hourly table lacks column '{}'", t.country, c.name))
            })?;
            let mut x = col[rows.clone()].to_vec();
            scaling.push(standardize(&format!("{}/{}", t.country, c.name), &mut x)?);
            high.push(x);
        }
        let mut low = Vec::new();
        for (c, raw) in low_specs.iter().zip(&low_raw) {
            let mut x = raw.clone();
            scaling.push(standardize(&format!("{}/{}", t.country, c.name), &mut x)?);
            low.push(x);
        }
        countries.push(CountryPanel {
            name: t.country.clone(),
            price: t.price[rows].to_vec(),
            high,
            low,
            scaling,
            raw_hours: t.len(),
        });
    }

    let notes = vec![
        "daily covariates interpolated over weekends/holidays, then lagged one day".to_string(),
        "every covariate standardized per country over the window (sample sd, n-1); \
         low-frequency series over their daily values"
            .to_string(),
        "solar forecasts standardized like other covariates, structural zeros included".to_string(),
        "prices kept in levels".to_string(),
    ];
    let ds = PanelDataset {
        spec: spec.clone(),
        start,
        n_days,
        presample_days,
        countries,
        notes,
    };
    ds.validate()?;
    Ok(ds)
}
