//! Regressor vectors z_{g,t+h} and daily blocks Z_{g,t}.
//!
//! Nothing is stored densely: rows are rebuilt from the column-major panel
//! on demand. Layout follows [`crate::config::CoefficientLayout`].

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::config::Frequency;
use crate::data::PanelDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct CovTerm {
    /// Index into the country's `high` or `low` vectors.
    slot: usize,
    frequency: Frequency,
    lags: usize,
}

/// Builds regressors for one dataset.
#[derive(Debug, Clone)]
pub struct DesignBuilder<'a> {
    data: &'a PanelDataset,
    periods: usize,
    ar_lags: Vec<usize>,
    terms: Vec<CovTerm>,
    dim: usize,
}

/// Position of one estimation observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationIndex {
    pub g: usize,
    /// Day index within the dataset (presample days included in the count).
    pub t: usize,
    pub h: usize,
    /// Flat position among estimation observations, country-major.
    pub offset: usize,
}

/// The H x L block of regressors for one (country, day), with its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBlock {
    pub g: usize,
    pub t: usize,
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl<'a> DesignBuilder<'a> {
    pub fn new(data: &'a PanelDataset) -> Self {
        let spec = &data.spec;
        let mut n_high = 0;
        let mut n_low = 0;
        let terms = spec
            .covariates
            .iter()
            .map(|c| {
                let slot = match c.frequency {
                    Frequency::High => {
                        n_high += 1;
                        n_high - 1
                    }
                    Frequency::Low => {
                        n_low += 1;
                        n_low - 1
                    }
                };
                CovTerm {
                    slot,
                    frequency: c.frequency,
                    lags: c.lags,
                }
            })
            .collect();
        DesignBuilder {
            data,
            periods: spec.freq_mismatch,
            ar_lags: spec.ar_lags.clone(),
            terms,
            dim: spec.coefficient_dim(),
        }
    }

    pub fn data(&self) -> &'a PanelDataset {
        self.data
    }

    /// L, the regressor length.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when every lag of (t, h) lies inside the panel.
    pub fn has_history(&self, t: usize, h: usize) -> bool {
        let hf = t * self.periods + h;
        let ar_ok = self.ar_lags.last().is_none_or(|&a| a <= hf);
        ar_ok
            && self.terms.iter().all(|c| match c.frequency {
                Frequency::High => c.lags <= hf,
                Frequency::Low => c.lags <= t,
            })
    }

    /// Writes z_{g,t+h} into `out` without bounds checks on the lag history.
    #[inline]
    pub fn fill(&self, g: usize, t: usize, h: usize, out: &mut [f64]) {
        self.fill_with_prices(&self.data.countries[g].price, g, t, h, out)
    }

    /// As [`DesignBuilder::fill`] with autoregressive terms read from
    /// `price` instead of the dataset, for simulating targets in place.
    #[inline]
    pub fn fill_with_prices(&self, price: &[f64], g: usize, t: usize, h: usize, out: &mut [f64]) {
        let c = &self.data.countries[g];
        let hf = t * self.periods + h;
        out[0] = 1.0;
        let mut k = 1;
        for &a in &self.ar_lags {
            out[k] = price[hf - a];
            k += 1;
        }
        for term in &self.terms {
            match term.frequency {
                Frequency::High => {
                    let x = &c.high[term.slot];
                    for b in 0..=term.lags {
                        out[k] = x[hf - b];
                        k += 1;
                    }
                }
                Frequency::Low => {
                    let x = &c.low[term.slot];
                    for b in 0..=term.lags {
                        out[k] = x[t - b];
                        k += 1;
                    }
                }
            }
        }
    }

    /// z_{g,t+h}: intercept, y at each AR lag, then each covariate at
    /// x_{gj, t+h_j-bH_j} for b = 0..=B_j.
    pub fn regressor(&self, g: usize, t: usize, h: usize) -> Result<Vec<f64>> {
        self.check(g, t, h)?;
        let mut z = vec![0.0; self.dim];
        self.fill(g, t, h, &mut z);
        Ok(z)
    }

    #[inline]
    pub fn target(&self, g: usize, t: usize, h: usize) -> f64 {
        self.data.countries[g].price[t * self.periods + h]
    }

    fn check(&self, g: usize, t: usize, h: usize) -> Result<()> {
        if g >= self.data.countries.len() || t >= self.data.n_days || h >= self.periods {
            return Err(Error::Index(format!("observation (g={g}, t={t}, h={h})")));
        }
        if !self.has_history(t, h) {
            return Err(Error::Data(format!(
                "insufficient history for (g={g}, t={t}, h={h})"
            )));
        }
        Ok(())
    }

    pub fn block(&self, g: usize, t: usize) -> Result<DesignBlock> {
        self.check(g, t, 0)?;
        let h = self.periods;
        let mut z = DMatrix::zeros(h, self.dim);
        let mut row = vec![0.0; self.dim];
        let mut y = DVector::zeros(h);
        for hh in 0..h {
            self.fill(g, t, hh, &mut row);
            z.row_mut(hh).copy_from_slice(&row);
            y[hh] = self.target(g, t, hh);
        }
        Ok(DesignBlock { g, t, z, y })
    }

    /// Blocks for every (country, estimation day), country-major.
    pub fn blocks(&self) -> impl Iterator<Item = DesignBlock> + '_ {
        let days = self.data.estimation_days();
        (0..self.data.countries.len()).flat_map(move |g| {
            days.clone()
                .map(move |t| self.block(g, t).expect("estimation days have history"))
        })
    }

    /// Enumerates estimation observations in flat order.
    pub fn observations(&self) -> impl Iterator<Item = ObservationIndex> + '_ {
        let days = self.data.estimation_days();
        let h = self.periods;
        let per_country = self.data.obs_per_cell() * h;
        (0..self.data.countries.len()).flat_map(move |g| {
            days.clone().flat_map(move |t| {
                (0..h).map(move |hh| ObservationIndex {
                    g,
                    t,
                    h: hh,
                    offset: g * per_country + (t - days.start) * h + hh,
                })
            })
        })
    }
}

/// Free-function form of [`DesignBuilder::regressor`].
pub fn build_regressor(data: &PanelDataset, g: usize, t: usize, h: usize) -> Result<Vec<f64>> {
    DesignBuilder::new(data).regressor(g, t, h)
}

impl DesignBlock {
    /// Z(gamma + zeta_g) + diag(Z psi'), where `psi` is H x L with row h
    /// holding the hourly effects of period h.
    pub fn fitted(&self, gamma: &DVector<f64>, zeta_g: &DVector<f64>, psi: &DMatrix<f64>) -> DVector<f64> {
        let common = &self.z * (gamma + zeta_g);
        let hourly = (&self.z * psi.transpose()).diagonal();
        common + hourly
    }

    /// Debug dump: one row per period, columns `period,y,z0..z{L-1}`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let mut header = vec!["period".to_string(), "y".to_string()];
        header.extend((0..self.z.ncols()).map(|l| format!("z{l}")));
        w.write_record(&header)
            .map_err(|e| Error::Data(e.to_string()))?;
        for h in 0..self.z.nrows() {
            let mut row = vec![h.to_string(), self.y[h].to_string()];
            row.extend(self.z.row(h).iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
