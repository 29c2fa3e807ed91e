//! Joint-distribution ("getting it right") test of the sampler.
//!
//! Two simulators target the prior of the parameters. The marginal one
//! draws parameters from the prior directly. The successive one alternates
//! a Gibbs sweep given the data with a fresh draw of the data given the
//! parameters; its stationary law is the joint of parameters and data, so
//! its parameter marginal is again the prior. Any error in a conditional
//! update shows up as a difference in the moments of test functions.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::simulate::{draw_from_prior, simulate_targets};
use crate::config::{Covariate, GammaStep, ModelSpec, MultiplierPrior, PriorConfig, SamplerConfig};
use crate::data::{CountryPanel, PanelDataset, Standardization};
use crate::error::Result;
use crate::posterior::diagnostics::batch_means_se;
use crate::sampler::{GibbsSampler, ParameterState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeConfig {
    pub n_countries: usize,
    pub periods: usize,
    /// Days in the panel, the first being presample.
    pub days: usize,
    pub priors: PriorConfig,
    pub gamma_step: GammaStep,
    pub multiplier_prior: MultiplierPrior,
    pub marginal_draws: usize,
    pub successive_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// 1 for the correct sampler; other values corrupt the common-variance
    /// update.
    pub sigma2_rate_factor: f64,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        GewekeConfig {
            n_countries: 2,
            periods: 2,
            days: 30,
            priors: Self::tame_priors(),
            gamma_step: GammaStep::Collapsed,
            multiplier_prior: MultiplierPrior::InverseGamma,
            marginal_draws: 100_000,
            successive_iterations: 200_000,
            burn_in: 1_000,
            seed: 1,
            sigma2_rate_factor: 1.0,
        }
    }
}

impl GewekeConfig {
    /// Priors with finite moments so the moment comparison is meaningful.
    pub fn tame_priors() -> PriorConfig {
        PriorConfig {
            s0: 1.0,
            r0: 0.3,
            n0: 5.0,
            m0: 0.2,
            v1: 5.0,
            w1: 4.0,
            v2: 5.0,
            w2: 4.0,
            v3: 5.0,
            w3: 4.0,
        }
    }

    /// Intercept, the same period one day back, one hourly and one daily
    /// covariate.
    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            countries: (0..self.n_countries).map(|g| format!("C{g}")).collect(),
            freq_mismatch: self.periods,
            ar_lags: vec![self.periods],
            daily_ar: true,
            covariates: vec![Covariate::high("x"), Covariate::low("f")],
        }
    }

    /// Fixed covariates and presample targets; estimation targets are
    /// placeholders to be simulated.
    pub fn panel<R: Rng + ?Sized>(&self, rng: &mut R) -> PanelDataset {
        let spec = self.spec();
        let h = self.periods;
        let n = self.days;
        let mut normal = || rng.sample::<f64, _>(StandardNormal);
        let low: Vec<f64> = (0..n).map(|_| normal()).collect();
        let countries = (0..self.n_countries)
            .map(|g| CountryPanel {
                name: format!("C{g}"),
                price: (0..n * h).map(|_| normal()).collect(),
                high: vec![(0..n * h).map(|_| normal()).collect()],
                low: vec![low.clone()],
                scaling: vec![Standardization { mean: 0.0, sd: 1.0 }; 2],
                raw_hours: n * h,
            })
            .collect();
        PanelDataset {
            presample_days: spec.presample_days(),
            spec,
            start: NaiveDate::from_ymd_opt(2020, 1, 1).expect("date"),
            n_days: n,
            countries,
            notes: Vec::new(),
        }
    }
}

/// Names of the test functions, in report order.
pub fn test_function_names(dim: usize) -> Vec<String> {
    let mut v: Vec<String> = (0..dim).map(|l| format!("gamma{l}")).collect();
    v.extend((0..dim).map(|l| format!("gamma{l}^2")));
    v.extend(["log sigma2", "log lambda0", "log lambda1", "log chi0", "log chi1"].map(String::from));
    v.extend(["log q_mu", "log q_alpha", "log q_beta", "log r_mu", "log r_alpha", "log r_beta"].map(String::from));
    v.push("log composite00".into());
    v
}

/// The test functions evaluated at one state (requires two periods and two
/// countries or more).
pub fn test_functions(s: &ParameterState) -> Vec<f64> {
    let mut v = s.gamma.clone();
    v.extend(s.gamma.iter().map(|x| x * x));
    v.extend([s.sigma2.ln(), s.lambda[0].ln(), s.lambda[1].ln(), s.chi[0].ln(), s.chi[1].ln()]);
    v.extend([s.q.mu, s.q.alpha, s.q.beta, s.r.mu, s.r.alpha, s.r.beta].map(f64::ln));
    v.push(s.cell_variance(0, 0).ln());
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeRow {
    pub name: String,
    pub marginal_mean: f64,
    pub successive_mean: f64,
    pub marginal_se: f64,
    pub successive_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeReport {
    pub rows: Vec<GewekeRow>,
}

impl GewekeReport {
    /// Share of test functions with |z| below `bound`.
    pub fn fraction_within(&self, bound: f64) -> f64 {
        self.rows.iter().filter(|r| r.z.abs() < bound).count() as f64 / self.rows.len() as f64
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
}

/// Runs both simulators and compares every test function.
pub fn geweke_test(cfg: &GewekeConfig) -> Result<GewekeReport> {
    let spec = cfg.spec();
    let sampler_cfg = SamplerConfig {
        gamma_step: cfg.gamma_step,
        multiplier_prior: cfg.multiplier_prior,
        ..SamplerConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut marginal: Vec<Vec<f64>> = Vec::with_capacity(cfg.marginal_draws);
    for _ in 0..cfg.marginal_draws {
        let s = draw_from_prior(&spec, &cfg.priors, cfg.multiplier_prior, &mut rng)?;
        marginal.push(test_functions(&s));
    }

    let mut data = cfg.panel(&mut rng);
    let mut state = draw_from_prior(&spec, &cfg.priors, cfg.multiplier_prior, &mut rng)?;
    simulate_targets(&mut data, &state, &mut rng)?;
    let mut successive: Vec<Vec<f64>> = Vec::with_capacity(cfg.successive_iterations);
    for i in 0..cfg.burn_in + cfg.successive_iterations {
        {
            let sampler = GibbsSampler::new(&data, &cfg.priors, &sampler_cfg)?.with_sigma2_rate_factor(cfg.sigma2_rate_factor);
            sampler.sweep(&mut state, &mut rng)?;
        }
        simulate_targets(&mut data, &state, &mut rng)?;
        if i >= cfg.burn_in {
            successive.push(test_functions(&state));
        }
    }

    let names = test_function_names(spec.coefficient_dim());
    let rows = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let a: Vec<f64> = marginal.iter().map(|r| r[k]).collect();
            let b: Vec<f64> = successive.iter().map(|r| r[k]).collect();
            let (ma, va) = mean_var(&a);
            let (mb, _) = mean_var(&b);
            let se_a = (va / a.len() as f64).sqrt();
            let se_b = batch_means_se(&b);
            GewekeRow {
                name,
                marginal_mean: ma,
                successive_mean: mb,
                marginal_se: se_a,
                successive_se: se_b,
                z: (ma - mb) / (se_a * se_a + se_b * se_b).sqrt(),
            }
        })
        .collect();
    Ok(GewekeReport { rows })
}
