use serde::{Deserialize, Serialize};

use crate::config::{CoefficientLayout, EffectGroup};
use crate::error::{Error, Result};

/// One variance per effect group: intercept, AR lags, covariate slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectScales {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl EffectScales {
    pub fn splat(v: f64) -> Self {
        EffectScales {
            mu: v,
            alpha: v,
            beta: v,
        }
    }

    pub fn get(&self, group: EffectGroup) -> f64 {
        match group {
            EffectGroup::Mu => self.mu,
            EffectGroup::Alpha => self.alpha,
            EffectGroup::Beta => self.beta,
        }
    }

    pub fn get_mut(&mut self, group: EffectGroup) -> &mut f64 {
        match group {
            EffectGroup::Mu => &mut self.mu,
            EffectGroup::Alpha => &mut self.alpha,
            EffectGroup::Beta => &mut self.beta,
        }
    }

    /// Expands to an L-vector following the coefficient layout.
    pub fn diagonal(&self, layout: &CoefficientLayout) -> Vec<f64> {
        (0..layout.len()).map(|l| self.get(layout.group(l))).collect()
    }

    fn values(&self) -> [f64; 3] {
        [self.mu, self.alpha, self.beta]
    }
}

/// Diagonals of Q (hourly effects) and R (country effects).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectCovariances {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl EffectCovariances {
    pub fn new(q: &EffectScales, r: &EffectScales, layout: &CoefficientLayout) -> Self {
        EffectCovariances {
            q: q.diagonal(layout),
            r: r.diagonal(layout),
        }
    }

    /// Diagonal of Q + R.
    pub fn total(&self) -> Vec<f64> {
        self.q.iter().zip(&self.r).map(|(a, b)| a + b).collect()
    }
}

/// A full parameter vector of the hierarchical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterState {
    /// Common coefficients, layout order.
    pub gamma: Vec<f64>,
    /// Hourly random effects, one row of length L per period.
    pub psi: Vec<Vec<f64>>,
    /// Country random effects, one row of length L per country.
    pub zeta: Vec<Vec<f64>>,
    pub sigma2: f64,
    /// Hourly variance multipliers.
    pub lambda: Vec<f64>,
    /// Country variance multipliers.
    pub chi: Vec<f64>,
    pub q: EffectScales,
    pub r: EffectScales,
}

impl ParameterState {
    pub fn zeros(n_countries: usize, periods: usize, dim: usize) -> Self {
        ParameterState {
            gamma: vec![0.0; dim],
            psi: vec![vec![0.0; dim]; periods],
            zeta: vec![vec![0.0; dim]; n_countries],
            sigma2: 1.0,
            lambda: vec![1.0; periods],
            chi: vec![1.0; n_countries],
            q: EffectScales::splat(1.0),
            r: EffectScales::splat(1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Error variance of cell (g, h): sigma² / (lambda_h chi_g).
    pub fn cell_variance(&self, g: usize, h: usize) -> f64 {
        self.sigma2 / (self.lambda[h] * self.chi[g])
    }

    /// gamma + psi_h + zeta_g.
    pub fn coefficients(&self, g: usize, h: usize) -> Vec<f64> {
        self.gamma
            .iter()
            .zip(&self.psi[h])
            .zip(&self.zeta[g])
            .map(|((a, b), c)| a + b + c)
            .collect()
    }

    pub fn covariances(&self, layout: &CoefficientLayout) -> EffectCovariances {
        EffectCovariances::new(&self.q, &self.r, layout)
    }

    pub fn check_shape(&self, n_countries: usize, periods: usize, dim: usize) -> Result<()> {
        let ok = self.gamma.len() == dim
            && self.psi.len() == periods
            && self.psi.iter().all(|r| r.len() == dim)
            && self.zeta.len() == n_countries
            && self.zeta.iter().all(|r| r.len() == dim)
            && self.lambda.len() == periods
            && self.chi.len() == n_countries;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "parameter state does not match G={n_countries}, H={periods}, L={dim}"
            )))
        }
    }

    /// Every variance component strictly positive and every value finite.
    pub fn check_valid(&self) -> Result<()> {
        let finite = self
            .gamma
            .iter()
            .chain(self.psi.iter().flatten())
            .chain(self.zeta.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Numeric("non-finite coefficient".into()));
        }
        let positive = std::iter::once(self.sigma2)
            .chain(self.lambda.iter().copied())
            .chain(self.chi.iter().copied())
            .chain(self.q.values())
            .chain(self.r.values())
            .all(|v| v.is_finite() && v > 0.0);
        if !positive {
            return Err(Error::Numeric("variance component not strictly positive".into()));
        }
        Ok(())
    }
}
