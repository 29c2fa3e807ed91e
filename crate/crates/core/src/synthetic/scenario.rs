use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::{Frequency, ModelSpec};
use crate::error::{Error, Result};
use crate::sampler::{EffectScales, ParameterState};

/// Stationary AR(1) for one raw covariate: x = level + scale * u with
/// u_t = ar * u_{t-1} + sqrt(1 - ar²) * e_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateProcess {
    pub name: String,
    pub ar: f64,
    #[serde(default)]
    pub level: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Multiplies the raw daily values of one low-frequency covariate dated
/// `from..=to`. Through the one-day publication lag the shock reaches the
/// panel on delivery days `from + 1 ..= to + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockEpisode {
    pub covariate: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub multiplier: f64,
}

/// How a ground truth is generated when none is given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruthConfig {
    pub intercept: f64,
    /// Sum of the common autoregressive coefficients, split evenly.
    pub ar_total: f64,
    /// Common slopes are drawn N(0, slope_scale²) unless `slopes` is given.
    pub slope_scale: f64,
    /// Common slopes in layout order, one per covariate coefficient.
    pub slopes: Option<Vec<f64>>,
    pub sigma2: f64,
    /// lambda and chi are exp(N(0, spread²)).
    pub multiplier_spread: f64,
    /// Variances of the hourly random effects by group.
    pub q: EffectScales,
    /// Variances of the country random effects by group.
    pub r: EffectScales,
    /// Subtract the across-period and across-country means of the drawn
    /// random effects.
    pub center_effects: bool,
    /// Use this state verbatim.
    pub state: Option<ParameterState>,
}

impl Default for TruthConfig {
    fn default() -> Self {
        TruthConfig {
            intercept: 5.0,
            ar_total: 0.5,
            slope_scale: 1.0,
            slopes: None,
            sigma2: 1.0,
            multiplier_spread: 0.2,
            q: EffectScales {
                mu: 0.5,
                alpha: 0.002,
                beta: 0.05,
            },
            r: EffectScales {
                mu: 0.5,
                alpha: 0.002,
                beta: 0.05,
            },
            center_effects: false,
            state: None,
        }
    }
}

/// Everything needed to simulate a synthetic panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    pub start: NaiveDate,
    /// Emitted days per country.
    pub days: usize,
    /// Days simulated before `start` and discarded, so the series start
    /// away from their initial values.
    #[serde(default = "default_warmup")]
    pub warmup_days: usize,
    #[serde(default)]
    pub seed: u64,
    /// Covariates without an entry use AR(1) with 0.7 (hourly) or 0.95
    /// (daily), level 0 and scale 1.
    #[serde(default)]
    pub processes: Vec<CovariateProcess>,
    #[serde(default)]
    pub shock: Option<ShockEpisode>,
    #[serde(default)]
    pub truth: TruthConfig,
}

fn default_warmup() -> usize {
    14
}

impl ScenarioConfig {
    pub fn new(model: ModelSpec, start: NaiveDate, days: usize, seed: u64) -> Self {
        ScenarioConfig {
            model,
            start,
            days,
            warmup_days: default_warmup(),
            seed,
            processes: Vec::new(),
            shock: None,
            truth: TruthConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: ScenarioConfig = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Process of covariate `name`, falling back to the default AR(1).
    pub fn process(&self, name: &str) -> CovariateProcess {
        if let Some(p) = self.processes.iter().find(|p| p.name == name) {
            return p.clone();
        }
        let high = self
            .model
            .covariates
            .iter()
            .find(|c| c.name == name)
            .is_some_and(|c| c.frequency == Frequency::High);
        CovariateProcess {
            name: name.into(),
            ar: if high { 0.7 } else { 0.95 },
            level: 0.0,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let h = self.model.freq_mismatch;
        if 1440 % h != 0 {
            return Err(Error::Config(format!(
                "freq_mismatch {h} does not divide a day into whole minutes"
            )));
        }
        if self.days <= self.model.presample_days() {
            return Err(Error::Config(format!(
                "{} days leave no estimation sample after {} presample days",
                self.days,
                self.model.presample_days()
            )));
        }
        for p in &self.processes {
            if self.model.covariate_index(&p.name).is_none() {
                return Err(Error::Config(format!("process for unknown covariate '{}'", p.name)));
            }
            if !(p.ar.abs() < 1.0 && p.scale > 0.0 && p.level.is_finite()) {
                return Err(Error::Config(format!(
                    "process '{}' needs |ar| < 1 and positive scale",
                    p.name
                )));
            }
        }
        if let Some(s) = &self.shock {
            let ok = self
                .model
                .covariates
                .iter()
                .any(|c| c.name == s.covariate && c.frequency == Frequency::Low);
            if !ok {
                return Err(Error::Config(format!(
                    "shock covariate '{}' is not a daily covariate of the model",
                    s.covariate
                )));
            }
            if s.from > s.to || !s.multiplier.is_finite() {
                return Err(Error::Config("shock needs from <= to and a finite multiplier".into()));
            }
        }
        let t = &self.truth;
        if !(t.sigma2 > 0.0 && t.multiplier_spread >= 0.0) {
            return Err(Error::Config("truth needs positive sigma2".into()));
        }
        if let Some(s) = &t.slopes {
            let n = self.model.layout().count(crate::config::EffectGroup::Beta);
            if s.len() != n {
                return Err(Error::Config(format!("truth lists {} slopes, layout has {n}", s.len())));
            }
        }
        Ok(())
    }
}
