//! Model specification, prior hyperparameters and sampler settings.
//!
//! Everything here is immutable once validated. The mixed-frequency index
//! arithmetic (lag multipliers, hour offsets, coefficient layout) lives on
//! [`ModelSpec`] so that the design builder and the sampler read the same
//! table.

use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Current version of the configuration file schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Sampling frequency of a covariate relative to the dependent variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    /// Observed every period of the dependent variable (hourly).
    High,
    /// Observed once per block of `freq_mismatch` periods (daily).
    Low,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub frequency: Frequency,
    /// Maximum lag order, in units of the covariate's own frequency.
    #[serde(default)]
    pub lags: usize,
}

impl Covariate {
    pub fn high(name: &str) -> Self {
        Covariate {
            name: name.to_string(),
            frequency: Frequency::High,
            lags: 0,
        }
    }

    pub fn low(name: &str) -> Self {
        Covariate {
            name: name.to_string(),
            frequency: Frequency::Low,
            lags: 0,
        }
    }
}

/// Panel dimensions, lag structure and covariate frequencies.
///
/// Covariates are indexed from zero here; all high-frequency covariates must
/// precede the low-frequency ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Country identifiers. Left empty in a config file, it is filled from
    /// the data at fit time.
    #[serde(default)]
    pub countries: Vec<String>,
    /// Number of high-frequency periods per low-frequency period (H).
    pub freq_mismatch: usize,
    /// Autoregressive lags in high-frequency units, ascending.
    pub ar_lags: Vec<usize>,
    /// Require every autoregressive lag to be a whole number of days.
    #[serde(default)]
    pub daily_ar: bool,
    pub covariates: Vec<Covariate>,
}

impl ModelSpec {
    /// The electricity specification: 24 hours per day, prices lagged one,
    /// two and seven days, hourly demand/wind/solar forecasts and daily
    /// CO2/coal/gas prices, all contemporaneous.
    pub fn electricity(countries: &[&str]) -> Self {
        ModelSpec {
            countries: countries.iter().map(|c| c.to_string()).collect(),
            freq_mismatch: 24,
            ar_lags: vec![24, 48, 168],
            daily_ar: true,
            covariates: vec![
                Covariate::high("demand_fc"),
                Covariate::high("wind_fc"),
                Covariate::high("solar_fc"),
                Covariate::low("co2"),
                Covariate::low("coal"),
                Covariate::low("gas"),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.countries.is_empty() {
            return Err(Error::Config("at least one country is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.countries {
            if !seen.insert(c) {
                return Err(Error::Config(format!("duplicate country '{c}'")));
            }
        }
        if self.freq_mismatch == 0 {
            return Err(Error::Config("freq_mismatch must be positive".into()));
        }
        if self.ar_lags.contains(&0) {
            return Err(Error::Config("autoregressive lags must be positive".into()));
        }
        if self.ar_lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "autoregressive lags must be strictly increasing".into(),
            ));
        }
        if self.daily_ar {
            if let Some(a) = self.ar_lags.iter().find(|&&a| a % self.freq_mismatch != 0) {
                return Err(Error::Config(format!(
                    "lag {a} is not a multiple of freq_mismatch {}",
                    self.freq_mismatch
                )));
            }
        }
        let mut names = std::collections::HashSet::new();
        let mut low_seen = false;
        for c in &self.covariates {
            if c.name.is_empty() || c.name.contains(',') {
                return Err(Error::Config(format!("invalid covariate name '{}'", c.name)));
            }
            if !names.insert(&c.name) {
                return Err(Error::Config(format!("duplicate covariate '{}'", c.name)));
            }
            match c.frequency {
                Frequency::Low => low_seen = true,
                Frequency::High if low_seen => {
                    return Err(Error::Config(format!(
                        "high-frequency covariate '{}' listed after a low-frequency one",
                        c.name
                    )))
                }
                Frequency::High => {}
            }
        }
        Ok(())
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    /// Number of high-frequency covariates (Ñ).
    pub fn n_high(&self) -> usize {
        self.covariates
            .iter()
            .filter(|c| c.frequency == Frequency::High)
            .count()
    }

    pub fn n_low(&self) -> usize {
        self.covariates.len() - self.n_high()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    fn check_covariate(&self, j: usize) -> Result<&Covariate> {
        self.covariates.get(j).ok_or_else(|| {
            Error::Index(format!(
                "covariate {j} (model has {} covariates)",
                self.covariates.len()
            ))
        })
    }

    /// Step, in high-frequency periods, between successive lags of covariate `j`.
    pub fn lag_multiplier(&self, j: usize) -> Result<usize> {
        Ok(match self.check_covariate(j)?.frequency {
            Frequency::High => 1,
            Frequency::Low => self.freq_mismatch,
        })
    }

    /// Hour offset at which covariate `j` enters the equation for period `h`.
    pub fn frequency_mismatch(&self, j: usize, h: usize) -> Result<usize> {
        let cov = self.check_covariate(j)?;
        if h >= self.freq_mismatch {
            return Err(Error::Index(format!(
                "hour offset {h} (freq_mismatch is {})",
                self.freq_mismatch
            )));
        }
        Ok(match cov.frequency {
            Frequency::High => h,
            Frequency::Low => 0,
        })
    }

    /// Length L of the regressor vector: intercept, AR lags, covariate lags.
    pub fn coefficient_dim(&self) -> usize {
        1 + self.ar_lags.len() + self.covariates.iter().map(|c| 1 + c.lags).sum::<usize>()
    }

    /// Whole low-frequency periods needed before the first estimation block
    /// so that every lag is observed.
    pub fn presample_days(&self) -> usize {
        let h = self.freq_mismatch;
        let ar = self.ar_lags.last().map_or(0, |&a| a.div_ceil(h));
        let cov = self
            .covariates
            .iter()
            .map(|c| match c.frequency {
                Frequency::High => c.lags.div_ceil(h),
                Frequency::Low => c.lags,
            })
            .max()
            .unwrap_or(0);
        ar.max(cov)
    }

    pub fn layout(&self) -> CoefficientLayout {
        CoefficientLayout::new(self)
    }

    pub fn country_index(&self, name: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == name)
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariates.iter().position(|c| c.name == name)
    }
}

/// Which variance scale governs a coefficient's random effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectGroup {
    Mu,
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Intercept,
    Autoregressive { lag: usize },
    Covariate { index: usize, lag: usize },
}

impl Term {
    pub fn group(&self) -> EffectGroup {
        match self {
            Term::Intercept => EffectGroup::Mu,
            Term::Autoregressive { .. } => EffectGroup::Alpha,
            Term::Covariate { .. } => EffectGroup::Beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coefficient {
    pub label: String,
    pub term: Term,
}

/// Frozen ordering of the L coefficients shared by gamma, every psi row,
/// every zeta row, and the diagonals of Q and R:
/// intercept, AR lags ascending, then covariates in config order with
/// their lags ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientLayout {
    entries: Vec<Coefficient>,
}

impl CoefficientLayout {
    fn new(spec: &ModelSpec) -> Self {
        let mut entries = vec![Coefficient {
            label: "mu".into(),
            term: Term::Intercept,
        }];
        for &lag in &spec.ar_lags {
            entries.push(Coefficient {
                label: format!("ar{lag}"),
                term: Term::Autoregressive { lag },
            });
        }
        for (index, cov) in spec.covariates.iter().enumerate() {
            for lag in 0..=cov.lags {
                let label = if lag == 0 {
                    cov.name.clone()
                } else {
                    format!("{}_l{lag}", cov.name)
                };
                entries.push(Coefficient {
                    label,
                    term: Term::Covariate { index, lag },
                });
            }
        }
        CoefficientLayout { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Coefficient] {
        &self.entries
    }

    pub fn group(&self, l: usize) -> EffectGroup {
        self.entries[l].term.group()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|c| c.label.as_str())
    }

    /// Position of covariate `j` at lag `b`.
    pub fn covariate_position(&self, j: usize, b: usize) -> Option<usize> {
        self.entries
            .iter()
            .position(|c| c.term == Term::Covariate { index: j, lag: b })
    }

    pub fn count(&self, group: EffectGroup) -> usize {
        self.entries.iter().filter(|c| c.term.group() == group).count()
    }
}

/// Prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    /// Prior standard deviation of the common intercept.
    pub s0: f64,
    /// Prior standard deviation of the common slopes and AR coefficients.
    pub r0: f64,
    /// Inverse-gamma shape of the random-effect variances q and r.
    pub n0: f64,
    /// Inverse-gamma rate of the random-effect variances q and r.
    pub m0: f64,
    /// Shape and rate of the common variance prior.
    pub v1: f64,
    pub w1: f64,
    /// Shape and rate of the hourly multiplier prior.
    pub v2: f64,
    pub w2: f64,
    /// Shape and rate of the country multiplier prior.
    pub v3: f64,
    pub w3: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            s0: 10.0,
            r0: 10.0,
            n0: 0.1,
            m0: 0.1,
            v1: 0.1,
            w1: 0.1,
            v2: 0.1,
            w2: 0.1,
            v3: 0.1,
            w3: 0.1,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("s0", self.s0),
            ("r0", self.r0),
            ("n0", self.n0),
            ("m0", self.m0),
            ("v1", self.v1),
            ("w1", self.w1),
            ("v2", self.v2),
            ("w2", self.w2),
            ("v3", self.v3),
            ("w3", self.w3),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "prior hyperparameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Prior variances of gamma in layout order: s0² for the intercept, r0²
    /// for everything else.
    pub fn gamma_prior_variances(&self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|l| if l == 0 { self.s0 * self.s0 } else { self.r0 * self.r0 })
            .collect()
    }
}

/// How the common coefficients are drawn in the first Gibbs block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaStep {
    /// Random effects integrated out exactly: gamma is drawn from its
    /// marginal given the variance components, then psi and zeta given gamma.
    Collapsed,
    /// Random effects integrated out observation by observation, treating
    /// the marginal errors as independent with variance
    /// sigma²_gh + z'(Q+R)z.
    Diagonal,
    /// No marginalization: gamma drawn given the current psi and zeta.
    Conditional,
}

/// Prior family of the hourly and country variance multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierPrior {
    /// lambda_h ~ IG(v2, w2), chi_g ~ IG(v3, w3); full conditionals are GIG.
    InverseGamma,
    /// lambda_h ~ Gamma(v2, w2), chi_g ~ Gamma(v3, w3) (shape, rate);
    /// conjugate, kept for cross-checking.
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub retained: usize,
    pub thin: usize,
    pub seed: u64,
    pub store_random_effects: bool,
    pub gamma_step: GammaStep,
    pub multiplier_prior: MultiplierPrior,
    /// Scale of the seed-dependent jitter applied to the starting values;
    /// zero starts every chain at the least-squares point.
    pub init_jitter: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in: 3000,
            retained: 10_000,
            thin: 1,
            seed: 0,
            store_random_effects: true,
            gamma_step: GammaStep::Collapsed,
            multiplier_prior: MultiplierPrior::InverseGamma,
            init_jitter: 0.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.retained == 0 {
            return Err(Error::Config("retained must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be positive".into()));
        }
        if self.retained < self.thin {
            return Err(Error::Config(format!(
                "retained ({}) smaller than thin ({}) stores no draws",
                self.retained, self.thin
            )));
        }
        if !(self.init_jitter.is_finite() && self.init_jitter >= 0.0) {
            return Err(Error::Config("init_jitter must be non-negative".into()));
        }
        Ok(())
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.retained
    }

    pub fn stored_draws(&self) -> usize {
        self.retained / self.thin
    }
}

/// Inclusive calendar window applied before preprocessing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<NaiveDate>,
}

impl DateFilter {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from.is_none_or(|f| d >= f) && self.to.is_none_or(|t| d <= t)
    }
}

/// Contents of a model configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub data: DateFilter,
}

impl FitConfig {
    pub fn new(model: ModelSpec) -> Self {
        FitConfig {
            schema_version: SCHEMA_VERSION,
            model,
            priors: PriorConfig::default(),
            sampler: SamplerConfig::default(),
            data: DateFilter::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: FitConfig = toml::from_str(s)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Validates everything except the country list, which may still be
    /// waiting to be filled from data.
    pub fn validate_settings(&self) -> Result<()> {
        self.priors.validate()?;
        self.sampler.validate()?;
        let mut probe = self.model.clone();
        if probe.countries.is_empty() {
            probe.countries.push("_".into());
        }
        probe.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_settings()?;
        self.model.validate()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::High => f.write_str("high"),
            Frequency::Low => f.write_str("low"),
        }
    }
}
