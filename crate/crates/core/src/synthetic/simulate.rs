use std::path::Path;

use chrono::{Duration, NaiveDate};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scenario::ScenarioConfig;
use crate::config::{DateFilter, EffectGroup, Frequency, ModelSpec, MultiplierPrior, PriorConfig, Term};
use crate::data::{align_and_preprocess, ingest_daily, ingest_hourly, DailyTable, HourlyTable, PanelDataset};
use crate::design::DesignBuilder;
use crate::error::{Error, Result};
use crate::sampler::{EffectScales, InverseGamma, ParameterState};

/// Largest absolute simulated price before the path counts as diverged.
const DIVERGENCE_BOUND: f64 = 1e12;

/// A parameter state used as ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParameters {
    pub state: ParameterState,
}

impl TrueParameters {
    pub fn new(state: ParameterState) -> Self {
        TrueParameters { state }
    }

    /// sigma² / (lambda_h chi_g).
    pub fn composite_variance(&self, g: usize, h: usize) -> f64 {
        self.state.cell_variance(g, h)
    }

    /// Spectral radius of the companion matrix of country `g`'s common plus
    /// country autoregressive coefficients. With daily lags the recursion is
    /// taken in day steps.
    pub fn ar_spectral_radius(&self, spec: &ModelSpec, g: usize) -> f64 {
        let layout = spec.layout();
        let step = if spec.daily_ar { spec.freq_mismatch } else { 1 };
        let lags: Vec<(usize, f64)> = layout
            .entries()
            .iter()
            .enumerate()
            .filter_map(|(l, c)| match c.term {
                Term::Autoregressive { lag } => Some((lag / step, self.state.gamma[l] + self.state.zeta[g][l])),
                _ => None,
            })
            .collect();
        let Some(order) = lags.iter().map(|&(k, _)| k).max() else {
            return 0.0;
        };
        let mut m = DMatrix::zeros(order, order);
        for &(k, v) in &lags {
            m[(0, k - 1)] = v;
        }
        for i in 1..order {
            m[(i, i - 1)] = 1.0;
        }
        m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Logs a warning for every country whose autoregression is explosive
    /// and returns their names.
    pub fn check_stationarity(&self, spec: &ModelSpec) -> Vec<String> {
        (0..spec.countries.len())
            .filter_map(|g| {
                let rho = self.ar_spectral_radius(spec, g);
                (rho >= 1.0).then(|| {
                    log::warn!(
                        "truth for {} is not stationary (spectral radius {rho:.3})",
                        spec.countries[g]
                    );
                    spec.countries[g].clone()
                })
            })
            .collect()
    }

    /// Draws a truth from the scenario's truth settings.
    pub fn from_scenario<R: Rng + ?Sized>(sc: &ScenarioConfig, rng: &mut R) -> Result<Self> {
        let t = &sc.truth;
        let spec = &sc.model;
        let (g_n, h_n) = (spec.countries.len(), spec.freq_mismatch);
        let layout = spec.layout();
        let dim = layout.len();
        if let Some(s) = &t.state {
            s.check_shape(g_n, h_n, dim)?;
            s.check_valid()?;
            return Ok(TrueParameters::new(s.clone()));
        }
        let mut normal = |sd: f64| sd * rng.sample::<f64, _>(StandardNormal);
        let mut state = ParameterState::zeros(g_n, h_n, dim);
        let n_ar = layout.count(EffectGroup::Alpha).max(1) as f64;
        let mut slopes = t.slopes.clone().unwrap_or_default().into_iter();
        for l in 0..dim {
            state.gamma[l] = match layout.group(l) {
                EffectGroup::Mu => t.intercept,
                EffectGroup::Alpha => t.ar_total / n_ar,
                EffectGroup::Beta => match slopes.next() {
                    Some(v) => v,
                    None => normal(t.slope_scale),
                },
            };
        }
        let q = t.q.diagonal(&layout);
        let r = t.r.diagonal(&layout);
        for row in state.psi.iter_mut() {
            for (v, s2) in row.iter_mut().zip(&q) {
                *v = normal(s2.sqrt());
            }
        }
        for row in state.zeta.iter_mut() {
            for (v, s2) in row.iter_mut().zip(&r) {
                *v = normal(s2.sqrt());
            }
        }
        if t.center_effects {
            center_rows(&mut state.psi);
            center_rows(&mut state.zeta);
        }
        state.sigma2 = t.sigma2;
        for v in state.lambda.iter_mut().chain(state.chi.iter_mut()) {
            *v = normal(t.multiplier_spread).exp();
        }
        state.q = t.q;
        state.r = t.r;
        Ok(TrueParameters::new(state))
    }
}

fn center_rows(rows: &mut [Vec<f64>]) {
    let n = rows.len() as f64;
    if rows.is_empty() {
        return;
    }
    for l in 0..rows[0].len() {
        let m = rows.iter().map(|r| r[l]).sum::<f64>() / n;
        for r in rows.iter_mut() {
            r[l] -= m;
        }
    }
}

/// Draws a full parameter state from the prior. Variances of empty effect
/// groups are left at 1, matching the sampler, which never updates them.
pub fn draw_from_prior<R: Rng + ?Sized>(
    spec: &ModelSpec,
    priors: &PriorConfig,
    multiplier_prior: MultiplierPrior,
    rng: &mut R,
) -> Result<ParameterState> {
    let layout = spec.layout();
    let (g_n, h_n, dim) = (spec.countries.len(), spec.freq_mismatch, layout.len());
    let mut s = ParameterState::zeros(g_n, h_n, dim);
    for (v, var) in s.gamma.iter_mut().zip(priors.gamma_prior_variances(dim)) {
        *v = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    let ig = InverseGamma::new(priors.n0, priors.m0)?;
    for group in [EffectGroup::Mu, EffectGroup::Alpha, EffectGroup::Beta] {
        if layout.count(group) > 0 {
            *s.q.get_mut(group) = ig.sample(rng);
            *s.r.get_mut(group) = ig.sample(rng);
        }
    }
    let q = s.q.diagonal(&layout);
    let r = s.r.diagonal(&layout);
    for row in s.psi.iter_mut() {
        for (v, var) in row.iter_mut().zip(&q) {
            *v = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
    }
    for row in s.zeta.iter_mut() {
        for (v, var) in row.iter_mut().zip(&r) {
            *v = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
    }
    s.sigma2 = InverseGamma::new(priors.v1, priors.w1)?.sample(rng);
    let mut multiplier = |shape: f64, rate: f64| -> Result<f64> {
        Ok(match multiplier_prior {
            MultiplierPrior::InverseGamma => InverseGamma::new(shape, rate)?.sample(rng),
            MultiplierPrior::Gamma => Gamma::new(shape, 1.0 / rate)
                .map_err(|e| Error::Numeric(e.to_string()))?
                .sample(rng),
        })
    };
    for v in s.lambda.iter_mut() {
        *v = multiplier(priors.v2, priors.w2)?;
    }
    for v in s.chi.iter_mut() {
        *v = multiplier(priors.v3, priors.w3)?;
    }
    Ok(s)
}

/// Redraws the targets of days `from..n_days` given `state`, in time order so
/// autoregressive terms see the new values. Days before `from` are kept.
/// Regressors must have full history from `from` on.
pub fn simulate_targets_from<R: Rng + ?Sized>(
    data: &mut PanelDataset,
    state: &ParameterState,
    from: usize,
    rng: &mut R,
) -> Result<()> {
    let h_n = data.periods_per_day();
    let new: Vec<Vec<f64>> = {
        let design = DesignBuilder::new(data);
        let dim = design.dim();
        let mut z = vec![0.0; dim];
        let mut out = Vec::with_capacity(data.countries.len());
        for g in 0..data.countries.len() {
            let coefs: Vec<Vec<f64>> = (0..h_n).map(|h| state.coefficients(g, h)).collect();
            let sd: Vec<f64> = (0..h_n).map(|h| state.cell_variance(g, h).sqrt()).collect();
            let mut price = data.countries[g].price.clone();
            for t in from..data.n_days {
                for h in 0..h_n {
                    let mean = if design.has_history(t, h) {
                        design.fill_with_prices(&price, g, t, h, &mut z);
                        z.iter().zip(&coefs[h]).map(|(a, b)| a * b).sum::<f64>()
                    } else {
                        coefs[h][0]
                    };
                    let y = mean + sd[h] * rng.sample::<f64, _>(StandardNormal);
                    if !(y.abs() < DIVERGENCE_BOUND) {
                        return Err(Error::Numeric(format!(
                            "simulated path of {} diverged on day {t}, period {h}",
                            data.countries[g].name
                        )));
                    }
                    price[t * h_n + h] = y;
                }
            }
            out.push(price);
        }
        out
    };
    for (c, p) in data.countries.iter_mut().zip(new) {
        c.price = p;
    }
    Ok(())
}

/// Redraws every estimation-day target given `state`.
pub fn simulate_targets<R: Rng + ?Sized>(data: &mut PanelDataset, state: &ParameterState, rng: &mut R) -> Result<()> {
    let from = data.presample_days;
    simulate_targets_from(data, state, from, rng)
}

/// A simulated panel with the raw tables it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanel {
    pub scenario: ScenarioConfig,
    pub truth: TrueParameters,
    pub dataset: PanelDataset,
    pub hourly: Vec<HourlyTable>,
    pub daily: DailyTable,
}

pub const DAILY_FILE: &str = "daily.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const SCENARIO_FILE: &str = "scenario.toml";

pub fn hourly_file(country: &str) -> String {
    format!("hourly_{country}.csv")
}

#[derive(Serialize)]
struct TruthManifest<'a> {
    seed: u64,
    countries: &'a [String],
    coefficients: Vec<&'a str>,
    truth: &'a TrueParameters,
    /// sigma² / (lambda_h chi_g), indexed [country][period].
    composite_variance: Vec<Vec<f64>>,
}

impl SyntheticPanel {
    /// Writes `hourly_<country>.csv`, `daily.csv`, `truth.json` and
    /// `scenario.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &self.hourly {
            t.write_csv(&dir.join(hourly_file(&t.country)))?;
        }
        self.daily.write_csv(&dir.join(DAILY_FILE))?;
        let spec = &self.scenario.model;
        let layout = spec.layout();
        let manifest = TruthManifest {
            seed: self.scenario.seed,
            countries: &spec.countries,
            coefficients: layout.labels().collect(),
            truth: &self.truth,
            composite_variance: (0..spec.countries.len())
                .map(|g| (0..spec.freq_mismatch).map(|h| self.truth.composite_variance(g, h)).collect())
                .collect(),
        };
        let p = dir.join(TRUTH_FILE);
        std::fs::write(&p, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&p, e))?;
        let p = dir.join(SCENARIO_FILE);
        std::fs::write(&p, self.scenario.to_toml_string()?).map_err(|e| Error::io(&p, e))
    }
}

/// Ingests the CSVs written by [`SyntheticPanel::write`] through the
/// regular data path.
pub fn ingest_synthetic(dir: &Path, spec: &ModelSpec, filter: &DateFilter) -> Result<PanelDataset> {
    let high: Vec<String> = spec.covariates.iter().filter(|c| c.frequency == Frequency::High).map(|c| c.name.clone()).collect();
    let low: Vec<String> = spec.covariates.iter().filter(|c| c.frequency == Frequency::Low).map(|c| c.name.clone()).collect();
    let hourly = spec
        .countries
        .iter()
        .map(|c| ingest_hourly(&dir.join(hourly_file(c)), c, spec.freq_mismatch, &high))
        .collect::<Result<Vec<_>>>()?;
    let daily = ingest_daily(&dir.join(DAILY_FILE), &low)?;
    align_and_preprocess(&hourly, &daily, spec, filter)
}

fn ar1<R: Rng + ?Sized>(n: usize, ar: f64, rng: &mut R) -> Vec<f64> {
    let s = (1.0 - ar * ar).sqrt();
    let mut u: f64 = rng.sample(StandardNormal);
    (0..n)
        .map(|_| {
            let v = u;
            u = ar * u + s * rng.sample::<f64, _>(StandardNormal);
            v
        })
        .collect()
}

/// Simulates the scenario with a truth drawn from its truth settings.
pub fn simulate_scenario(sc: &ScenarioConfig) -> Result<SyntheticPanel> {
    sc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let truth = TrueParameters::from_scenario(sc, &mut rng)?;
    generate_panel(sc, &truth, &mut rng)
}

/// Simulates raw covariates, standardizes them exactly as ingestion would,
/// then runs the model forward for the targets.
pub fn generate_panel<R: Rng + ?Sized>(sc: &ScenarioConfig, truth: &TrueParameters, rng: &mut R) -> Result<SyntheticPanel> {
    sc.validate()?;
    let spec = &sc.model;
    let (g_n, h_n) = (spec.countries.len(), spec.freq_mismatch);
    truth.state.check_shape(g_n, h_n, spec.coefficient_dim())?;
    truth.state.check_valid()?;
    truth.check_stationarity(spec);

    let warm = sc.warmup_days;
    let all_days = warm + sc.days;
    let first_day = sc.start - Duration::days(warm as i64);
    let minutes = (1440 / h_n) as i64;

    // Raw daily series from the day before the first warm-up day through
    // the last emitted day.
    let low_specs: Vec<_> = spec.covariates.iter().filter(|c| c.frequency == Frequency::Low).collect();
    let high_specs: Vec<_> = spec.covariates.iter().filter(|c| c.frequency == Frequency::High).collect();
    let daily_dates: Vec<NaiveDate> = (0..=all_days).map(|d| first_day - Duration::days(1) + Duration::days(d as i64)).collect();
    let mut daily_raw = Vec::new();
    for c in &low_specs {
        let p = sc.process(&c.name);
        let mut x: Vec<f64> = ar1(all_days + 1, p.ar, rng).into_iter().map(|u| p.level + p.scale * u).collect();
        if let Some(s) = sc.shock.as_ref().filter(|s| s.covariate == c.name) {
            for (v, d) in x.iter_mut().zip(&daily_dates) {
                if (s.from..=s.to).contains(d) {
                    *v *= s.multiplier;
                }
            }
        }
        daily_raw.push(x);
    }
    let mut high_raw = Vec::new();
    for _ in 0..g_n {
        let mut per = Vec::new();
        for c in &high_specs {
            let p = sc.process(&c.name);
            per.push(ar1(all_days * h_n, p.ar, rng).into_iter().map(|u| p.level + p.scale * u).collect::<Vec<f64>>());
        }
        high_raw.push(per);
    }

    // Emitted tables, prices filled in after simulation.
    let skip = warm * h_n;
    let mut hourly: Vec<HourlyTable> = (0..g_n)
        .map(|g| HourlyTable {
            country: spec.countries[g].clone(),
            periods_per_day: h_n,
            timestamps: (0..sc.days * h_n)
                .map(|i| sc.start.and_hms_opt(0, 0, 0).expect("midnight") + Duration::minutes(minutes * i as i64))
                .collect(),
            price: vec![0.0; sc.days * h_n],
            columns: high_specs.iter().map(|c| c.name.clone()).collect(),
            values: high_raw[g].iter().map(|x| x[skip..].to_vec()).collect(),
            repairs: Vec::new(),
        })
        .collect();
    let daily = DailyTable {
        dates: daily_dates[warm..].to_vec(),
        columns: low_specs.iter().map(|c| c.name.clone()).collect(),
        values: daily_raw.iter().map(|x| x[warm..].to_vec()).collect(),
        filled: 0,
    };
    let shell = align_and_preprocess(&hourly, &daily, spec, &DateFilter::default())?;

    // Extended panel over warm-up and emitted days with the emitted
    // window's standardization.
    let mut ext = PanelDataset {
        spec: spec.clone(),
        start: first_day,
        n_days: all_days,
        presample_days: spec.presample_days(),
        countries: shell.countries.clone(),
        notes: Vec::new(),
    };
    for (g, c) in ext.countries.iter_mut().enumerate() {
        c.price = vec![0.0; all_days * h_n];
        let scal = c.scaling.clone();
        c.high = high_raw[g]
            .iter()
            .zip(&scal)
            .map(|(x, s)| x.iter().map(|v| (v - s.mean) / s.sd).collect())
            .collect();
        c.low = daily_raw
            .iter()
            .zip(&scal[high_specs.len()..])
            .map(|(x, s)| x[..all_days].iter().map(|v| (v - s.mean) / s.sd).collect())
            .collect();
    }
    simulate_targets_from(&mut ext, &truth.state, 0, rng)?;

    for (t, c) in hourly.iter_mut().zip(&ext.countries) {
        t.price = c.price[skip..].to_vec();
    }
    let dataset = align_and_preprocess(&hourly, &daily, spec, &DateFilter::default())?;
    Ok(SyntheticPanel {
        scenario: sc.clone(),
        truth: truth.clone(),
        dataset,
        hourly,
        daily,
    })
}

/// A truth whose random effects are all zero and whose cell variances are
/// sigma² = `sigma2` with unit multipliers.
pub fn flat_truth(spec: &ModelSpec, gamma: Vec<f64>, sigma2: f64) -> TrueParameters {
    let mut s = ParameterState::zeros(spec.countries.len(), spec.freq_mismatch, spec.coefficient_dim());
    s.gamma = gamma;
    s.sigma2 = sigma2;
    s.q = EffectScales::splat(1.0);
    s.r = EffectScales::splat(1.0);
    TrueParameters::new(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Covariate;

    fn spec() -> ModelSpec {
        ModelSpec {
            countries: vec!["A".into(), "B".into()],
            freq_mismatch: 4,
            ar_lags: vec![4, 8],
            daily_ar: true,
            covariates: vec![Covariate::high("solar"), Covariate::low("gas")],
        }
    }

    #[test]
    fn stationarity_radius() {
        let s = spec();
        let mut t = flat_truth(&s, vec![0.0, 0.5, 0.3, 0.0, 0.0], 1.0);
        assert!(t.ar_spectral_radius(&s, 0) < 1.0);
        assert!(t.check_stationarity(&s).is_empty());
        t.state.gamma[1] = 1.2;
        assert!(t.ar_spectral_radius(&s, 1) > 1.0);
        assert_eq!(t.check_stationarity(&s).len(), 2);
    }

    #[test]
    fn generated_panel_matches_its_recursion() {
        let s = spec();
        let sc = ScenarioConfig::new(s.clone(), NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), 40, 3);
        let p = simulate_scenario(&sc).unwrap();
        let ds = &p.dataset;
        assert_eq!(ds.n_days, 40);
        assert_eq!(ds.presample_days, 2);
        // standardized covariates
        for c in &ds.countries {
            let m: f64 = c.high[0].iter().sum::<f64>() / c.high[0].len() as f64;
            assert!(m.abs() < 1e-10);
        }
        // residuals scaled by the true cell sd look standard normal
        let design = DesignBuilder::new(ds);
        let st = &p.truth.state;
        let mut ss = 0.0;
        let mut n = 0.0;
        for o in design.observations() {
            let z = design.regressor(o.g, o.t, o.h).unwrap();
            let fit: f64 = z.iter().zip(st.coefficients(o.g, o.h)).map(|(a, b)| a * b).sum();
            let e = (design.target(o.g, o.t, o.h) - fit) / st.cell_variance(o.g, o.h).sqrt();
            ss += e * e;
            n += 1.0;
        }
        assert!((ss / n - 1.0).abs() < 0.2, "{}", ss / n);
    }
}
