//! Input ingestion, preprocessing and the estimation-ready panel.

mod export;
mod ingest;
mod preprocess;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::{Frequency, ModelSpec};
use crate::error::{Error, Result};

pub use export::{read_dataset, write_dataset, DatasetManifest, MANIFEST_FILE};
pub use ingest::{
    fill_linear, ingest_daily, ingest_hourly, parse_daily, parse_hourly, ClockRepair, DailyTable,
    HourlyTable,
};
pub use preprocess::{align_and_preprocess, standardize};

/// Location and scale removed from a covariate series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

/// One country's aligned series over the estimation window.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryPanel {
    pub name: String,
    /// Dependent variable in levels, `n_days * H` values.
    pub price: Vec<f64>,
    /// Standardized high-frequency covariates, each `n_days * H` values.
    pub high: Vec<Vec<f64>>,
    /// Standardized low-frequency covariates, each `n_days` values, already
    /// shifted so that day t carries the day t-1 settlement.
    pub low: Vec<Vec<f64>>,
    /// Per covariate, in spec order.
    pub scaling: Vec<Standardization>,
    /// Hourly rows available before trimming to whole days.
    pub raw_hours: usize,
}

/// Estimation-ready panel: every country shares the same calendar of
/// `n_days` whole days starting at `start`; the first `presample_days`
/// feed lags only.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    pub spec: ModelSpec,
    pub start: NaiveDate,
    pub n_days: usize,
    pub presample_days: usize,
    pub countries: Vec<CountryPanel>,
    pub notes: Vec<String>,
}

impl PanelDataset {
    /// Checks shapes against the model.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let h = self.spec.freq_mismatch;
        if self.countries.len() != self.spec.n_countries() {
            return Err(Error::Data(format!(
                "{} country panels for {} countries",
                self.countries.len(),
                self.spec.n_countries()
            )));
        }
        if self.presample_days < self.spec.presample_days() {
            return Err(Error::Data("presample shorter than the longest lag".into()));
        }
        if self.n_days < self.presample_days {
            return Err(Error::Data("fewer days than the presample".into()));
        }
        let (nh, nl) = (self.spec.n_high(), self.spec.n_low());
        for (c, name) in self.countries.iter().zip(&self.spec.countries) {
            let ok = &c.name == name
                && c.price.len() == self.n_days * h
                && c.high.len() == nh
                && c.high.iter().all(|x| x.len() == self.n_days * h)
                && c.low.len() == nl
                && c.low.iter().all(|x| x.len() == self.n_days)
                && c.scaling.len() == nh + nl;
            if !ok {
                return Err(Error::Data(format!("country {} has inconsistent shapes", c.name)));
            }
        }
        Ok(())
    }

    pub fn periods_per_day(&self) -> usize {
        self.spec.freq_mismatch
    }

    /// High-frequency length T (whole days only).
    pub fn n_hours(&self) -> usize {
        self.n_days * self.spec.freq_mismatch
    }

    pub fn estimation_days(&self) -> std::ops::Range<usize> {
        self.presample_days..self.n_days
    }

    /// Observations per (country, hour) cell.
    pub fn obs_per_cell(&self) -> usize {
        self.n_days - self.presample_days
    }

    pub fn n_obs(&self) -> usize {
        self.spec.n_countries() * self.obs_per_cell() * self.spec.freq_mismatch
    }

    pub fn date(&self, t: usize) -> NaiveDate {
        self.start + chrono::Duration::days(t as i64)
    }

    /// Value of covariate `j` (spec order) for country `g` at day `t`,
    /// period `h`, before any lag is applied.
    pub fn covariate(&self, g: usize, j: usize, t: usize, h: usize) -> f64 {
        let c = &self.countries[g];
        let nh = self.spec.n_high();
        match self.spec.covariates[j].frequency {
            Frequency::High => c.high[j][t * self.spec.freq_mismatch + h],
            Frequency::Low => c.low[j - nh][t],
        }
    }
}

/// Sample mean and standard deviation (n - 1 denominator).
pub(crate) fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}
