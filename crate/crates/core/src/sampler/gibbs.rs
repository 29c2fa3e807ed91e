use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use super::gig::{Gig, InverseGamma};
use super::linalg::{cholesky_jittered, sample_canonical, sample_factored};
use super::state::{EffectScales, ParameterState};
use crate::config::{CoefficientLayout, EffectGroup, GammaStep, MultiplierPrior, PriorConfig, SamplerConfig};
use crate::data::PanelDataset;
use crate::design::DesignBuilder;
use crate::error::{Error, Result};

/// Variance draws below this are clamped.
pub const VARIANCE_FLOOR: f64 = 1e-12;

const GROUPS: [EffectGroup; 3] = [EffectGroup::Mu, EffectGroup::Alpha, EffectGroup::Beta];

/// Per (country, period) sufficient statistics of the data: Σ z z', Σ z y
/// and Σ y² over estimation days. Error weights are constant within a
/// cell, so every coefficient conditional is assembled from these.
#[derive(Debug, Clone)]
pub struct CellStats {
    periods: usize,
    count: usize,
    gram: Vec<DMatrix<f64>>,
    xy: Vec<DVector<f64>>,
    yy: Vec<f64>,
}

impl CellStats {
    pub fn compute(design: &DesignBuilder<'_>) -> Self {
        let data = design.data();
        let periods = data.periods_per_day();
        let dim = design.dim();
        let days = data.estimation_days();
        let per_country: Vec<Vec<(DMatrix<f64>, DVector<f64>, f64)>> = (0..data.countries.len())
            .into_par_iter()
            .map(|g| {
                let mut cells = vec![(DMatrix::zeros(dim, dim), DVector::zeros(dim), 0.0); periods];
                let mut z = DVector::zeros(dim);
                for t in days.clone() {
                    for (h, cell) in cells.iter_mut().enumerate() {
                        design.fill(g, t, h, z.as_mut_slice());
                        let y = design.target(g, t, h);
                        cell.0.ger(1.0, &z, &z, 1.0);
                        cell.1.axpy(y, &z, 1.0);
                        cell.2 += y * y;
                    }
                }
                cells
            })
            .collect();
        let mut gram = Vec::new();
        let mut xy = Vec::new();
        let mut yy = Vec::new();
        for (s, v, q) in per_country.into_iter().flatten() {
            gram.push(s);
            xy.push(v);
            yy.push(q);
        }
        CellStats {
            periods,
            count: days.len(),
            gram,
            xy,
            yy,
        }
    }

    pub fn gram(&self, g: usize, h: usize) -> &DMatrix<f64> {
        &self.gram[g * self.periods + h]
    }

    pub fn cross(&self, g: usize, h: usize) -> &DVector<f64> {
        &self.xy[g * self.periods + h]
    }

    pub fn sum_sq(&self, g: usize, h: usize) -> f64 {
        self.yy[g * self.periods + h]
    }

    /// Observations per cell.
    pub fn count(&self) -> usize {
        self.count
    }
}

/// The precision system of (gamma, psi, zeta) given the variance
/// components, with zero-variance random-effect coordinates removed.
struct JointSystem {
    /// Full index (block * L + l) of each retained random-effect coordinate;
    /// blocks are psi_0..psi_{H-1}, then zeta_0..zeta_{G-1}.
    active: Vec<usize>,
    chol_u: Cholesky<f64, Dyn>,
    lam_ug: DMatrix<f64>,
    b_u: DVector<f64>,
    lam_gg: DMatrix<f64>,
    b_g: DVector<f64>,
}

/// Gibbs sampler for one dataset.
pub struct GibbsSampler<'a> {
    design: DesignBuilder<'a>,
    layout: CoefficientLayout,
    priors: PriorConfig,
    step: GammaStep,
    multiplier_prior: MultiplierPrior,
    stats: CellStats,
    gamma_prior_precision: Vec<f64>,
    sigma2_rate_factor: f64,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(data: &'a PanelDataset, priors: &PriorConfig, sampler: &SamplerConfig) -> Result<Self> {
        data.validate()?;
        priors.validate()?;
        let design = DesignBuilder::new(data);
        let layout = data.spec.layout();
        let stats = CellStats::compute(&design);
        let gamma_prior_precision = priors
            .gamma_prior_variances(layout.len())
            .into_iter()
            .map(|v| 1.0 / v)
            .collect();
        Ok(GibbsSampler {
            design,
            layout,
            priors: *priors,
            step: sampler.gamma_step,
            multiplier_prior: sampler.multiplier_prior,
            stats,
            gamma_prior_precision,
            sigma2_rate_factor: 1.0,
        })
    }

    /// Scales the rate of the common-variance update. Anything other than
    /// 1 makes the sampler wrong; exists so the correctness test can show it
    /// detects a broken conditional.
    #[doc(hidden)]
    pub fn with_sigma2_rate_factor(mut self, factor: f64) -> Self {
        self.sigma2_rate_factor = factor;
        self
    }

    pub fn data(&self) -> &'a PanelDataset {
        self.design.data()
    }

    pub fn layout(&self) -> &CoefficientLayout {
        &self.layout
    }

    pub fn stats(&self) -> &CellStats {
        &self.stats
    }

    pub fn n_countries(&self) -> usize {
        self.data().countries.len()
    }

    pub fn periods(&self) -> usize {
        self.data().periods_per_day()
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Starting point: pooled least squares for gamma, zero random effects,
    /// the pooled residual variance, unit multipliers and scales. A positive
    /// `jitter` perturbs every component multiplicatively.
    pub fn initial_state<R: Rng + ?Sized>(&self, jitter: f64, rng: &mut R) -> Result<ParameterState> {
        let (g_n, h_n, dim) = (self.n_countries(), self.periods(), self.dim());
        let mut state = ParameterState::zeros(g_n, h_n, dim);
        let mut gram = DMatrix::zeros(dim, dim);
        let mut cross = DVector::zeros(dim);
        for g in 0..g_n {
            for h in 0..h_n {
                gram += self.stats.gram(g, h);
                cross += self.stats.cross(g, h);
            }
        }
        let ridge = 1e-8 * (gram.trace() / dim as f64).max(1.0);
        for l in 0..dim {
            gram[(l, l)] += ridge;
        }
        if let Some(chol) = gram.cholesky() {
            state.gamma = chol.solve(&cross).iter().copied().collect();
        }
        let n = (g_n * h_n * self.stats.count()) as f64;
        let rss: f64 = self.residual_sums(&state).iter().flatten().sum();
        if n > 0.0 && rss.is_finite() && rss > 0.0 {
            state.sigma2 = rss / n;
        }
        if jitter > 0.0 {
            let mut noise = || jitter * rng.sample::<f64, _>(StandardNormal);
            for v in &mut state.gamma {
                *v += (v.abs() + 1.0) * noise();
            }
            state.sigma2 *= noise().exp();
            for v in state.lambda.iter_mut().chain(state.chi.iter_mut()) {
                *v *= noise().exp();
            }
            for g in GROUPS {
                *state.q.get_mut(g) *= noise().exp();
                *state.r.get_mut(g) *= noise().exp();
            }
        }
        state.check_valid()?;
        Ok(state)
    }

    fn weight(&self, state: &ParameterState, g: usize, h: usize) -> f64 {
        state.lambda[h] * state.chi[g] / state.sigma2
    }

    fn assemble(&self, state: &ParameterState) -> Result<JointSystem> {
        let (g_n, h_n, dim) = (self.n_countries(), self.periods(), self.dim());
        let q = state.q.diagonal(&self.layout);
        let r = state.r.diagonal(&self.layout);
        let nb = h_n + g_n;
        let full = nb * dim;

        let mut lam_gg = DMatrix::from_diagonal(&DVector::from_column_slice(&self.gamma_prior_precision));
        let mut b_g = DVector::zeros(dim);
        let mut lam_uu = DMatrix::zeros(full, full);
        let mut lam_ug = DMatrix::zeros(full, dim);
        let mut b_u = DVector::zeros(full);

        for g in 0..g_n {
            let zb = (h_n + g) * dim;
            for h in 0..h_n {
                let pb = h * dim;
                let w = self.weight(state, g, h);
                let s = self.stats.gram(g, h) * w;
                let c = self.stats.cross(g, h) * w;
                lam_gg += &s;
                b_g += &c;
                for (blk, other) in [(pb, zb), (zb, pb)] {
                    let mut v = lam_uu.view_mut((blk, blk), (dim, dim));
                    v += &s;
                    let mut v = lam_uu.view_mut((blk, other), (dim, dim));
                    v += &s;
                    let mut v = lam_ug.view_mut((blk, 0), (dim, dim));
                    v += &s;
                    let mut v = b_u.rows_mut(blk, dim);
                    v += &c;
                }
            }
        }
        let mut active = Vec::with_capacity(full);
        for k in 0..nb {
            let var = if k < h_n { &q } else { &r };
            for l in 0..dim {
                if var[l] > 0.0 {
                    let i = k * dim + l;
                    lam_uu[(i, i)] += 1.0 / var[l];
                    active.push(i);
                }
            }
        }
        let (lam_uu, lam_ug, b_u) = if active.len() == full {
            (lam_uu, lam_ug, b_u)
        } else {
            (
                lam_uu.select_rows(&active).select_columns(&active),
                lam_ug.select_rows(&active),
                b_u.select_rows(&active),
            )
        };
        let chol_u = cholesky_jittered(lam_uu, "random effects precision")?;
        Ok(JointSystem {
            active,
            chol_u,
            lam_ug,
            b_u,
            lam_gg,
            b_g,
        })
    }

    fn gamma_collapsed<R: Rng + ?Sized>(&self, sys: &JointSystem, rng: &mut R) -> Result<DVector<f64>> {
        if sys.active.is_empty() {
            return sample_canonical(sys.lam_gg.clone(), &sys.b_g, rng, "gamma");
        }
        let l = sys.chol_u.l_dirty();
        let k = l
            .solve_lower_triangular(&sys.lam_ug)
            .ok_or_else(|| Error::Numeric("gamma: singular random effects factor".into()))?;
        let c = l
            .solve_lower_triangular(&sys.b_u)
            .ok_or_else(|| Error::Numeric("gamma: singular random effects factor".into()))?;
        let mut prec = &sys.lam_gg - k.tr_mul(&k);
        prec = (&prec + prec.transpose()) * 0.5;
        let b = &sys.b_g - k.tr_mul(&c);
        sample_canonical(prec, &b, rng, "gamma")
    }

    fn gamma_conditional<R: Rng + ?Sized>(
        &self,
        state: &ParameterState,
        sys: &JointSystem,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        let mut b = sys.b_g.clone();
        for g in 0..self.n_countries() {
            for h in 0..self.periods() {
                let w = self.weight(state, g, h);
                let re = DVector::from_iterator(
                    self.dim(),
                    state.psi[h].iter().zip(&state.zeta[g]).map(|(a, c)| a + c),
                );
                b -= self.stats.gram(g, h) * re * w;
            }
        }
        sample_canonical(sys.lam_gg.clone(), &b, rng, "gamma")
    }

    /// Each observation's marginal error, random effects integrated out, is
    /// treated as independent with variance sigma²_gh + z'(Q+R)z.
    fn gamma_diagonal<R: Rng + ?Sized>(&self, state: &ParameterState, rng: &mut R) -> Result<DVector<f64>> {
        let dim = self.dim();
        let total = state.covariances(&self.layout).total();
        let days = self.data().estimation_days();
        let periods = self.periods();
        let parts: Vec<(DMatrix<f64>, DVector<f64>)> = (0..self.n_countries())
            .into_par_iter()
            .map(|g| {
                let mut prec = DMatrix::zeros(dim, dim);
                let mut b = DVector::zeros(dim);
                let mut z = DVector::zeros(dim);
                for t in days.clone() {
                    for h in 0..periods {
                        self.design.fill(g, t, h, z.as_mut_slice());
                        let extra: f64 = z.iter().zip(&total).map(|(v, d)| v * v * d).sum();
                        let w = 1.0 / (state.cell_variance(g, h) + extra);
                        prec.ger(w, &z, &z, 1.0);
                        b.axpy(w * self.design.target(g, t, h), &z, 1.0);
                    }
                }
                (prec, b)
            })
            .collect();
        let mut prec = DMatrix::from_diagonal(&DVector::from_column_slice(&self.gamma_prior_precision));
        let mut b = DVector::zeros(dim);
        for (p, v) in parts {
            prec += p;
            b += v;
        }
        sample_canonical(prec, &b, rng, "gamma")
    }

    fn gamma_with<R: Rng + ?Sized>(
        &self,
        state: &ParameterState,
        sys: &JointSystem,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let v = match self.step {
            GammaStep::Collapsed => self.gamma_collapsed(sys, rng)?,
            GammaStep::Conditional => self.gamma_conditional(state, sys, rng)?,
            GammaStep::Diagonal => self.gamma_diagonal(state, rng)?,
        };
        Ok(v.iter().copied().collect())
    }

    fn effects_with<R: Rng + ?Sized>(
        &self,
        gamma: &[f64],
        sys: &JointSystem,
        rng: &mut R,
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let dim = self.dim();
        let h_n = self.periods();
        let mut psi = vec![vec![0.0; dim]; h_n];
        let mut zeta = vec![vec![0.0; dim]; self.n_countries()];
        if sys.active.is_empty() {
            return Ok((psi, zeta));
        }
        let b = &sys.b_u - &sys.lam_ug * DVector::from_column_slice(gamma);
        let u = sample_factored(&sys.chol_u, &b, rng, "random effects")?;
        for (&i, &v) in sys.active.iter().zip(u.iter()) {
            let (k, l) = (i / dim, i % dim);
            if k < h_n {
                psi[k][l] = v;
            } else {
                zeta[k - h_n][l] = v;
            }
        }
        Ok((psi, zeta))
    }

    /// Draws gamma given the variance components, by the configured step.
    pub fn draw_gamma<R: Rng + ?Sized>(&self, state: &ParameterState, rng: &mut R) -> Result<Vec<f64>> {
        let sys = self.assemble(state)?;
        self.gamma_with(state, &sys, rng)
    }

    /// Draws (psi, zeta) jointly given gamma and the variance components.
    pub fn draw_random_effects<R: Rng + ?Sized>(
        &self,
        state: &ParameterState,
        rng: &mut R,
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let sys = self.assemble(state)?;
        self.effects_with(&state.gamma, &sys, rng)
    }

    /// Residual sums of squares per cell, indexed [country][period].
    pub fn residual_sums(&self, state: &ParameterState) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let periods = self.periods();
        let days = self.data().estimation_days();
        (0..self.n_countries())
            .into_par_iter()
            .map(|g| {
                let coefs: Vec<Vec<f64>> = (0..periods).map(|h| state.coefficients(g, h)).collect();
                let mut z = vec![0.0; dim];
                let mut rss = vec![0.0; periods];
                for t in days.clone() {
                    for h in 0..periods {
                        self.design.fill(g, t, h, &mut z);
                        let fit: f64 = z.iter().zip(&coefs[h]).map(|(a, b)| a * b).sum();
                        let e = self.design.target(g, t, h) - fit;
                        rss[h] += e * e;
                    }
                }
                rss
            })
            .collect()
    }

    fn sigma2_with<R: Rng + ?Sized>(&self, state: &ParameterState, rss: &[Vec<f64>], rng: &mut R) -> Result<f64> {
        let mut n = 0.0;
        let mut ss = 0.0;
        for (g, row) in rss.iter().enumerate() {
            for (h, &v) in row.iter().enumerate() {
                ss += state.lambda[h] * state.chi[g] * v;
                n += self.stats.count() as f64;
            }
        }
        let shape = self.priors.v1 + 0.5 * n;
        let rate = (self.priors.w1 + 0.5 * ss) * self.sigma2_rate_factor;
        Ok(floor("sigma2", InverseGamma::new(shape, rate)?.sample(rng)))
    }

    /// Draws the common error variance given everything else.
    pub fn draw_sigma2<R: Rng + ?Sized>(&self, state: &ParameterState, rng: &mut R) -> Result<f64> {
        let rss = self.residual_sums(state);
        self.sigma2_with(state, &rss, rng)
    }

    fn multiplier<R: Rng + ?Sized>(&self, n: f64, c: f64, v: f64, w: f64, rng: &mut R) -> Result<f64> {
        let x = match self.multiplier_prior {
            MultiplierPrior::InverseGamma => Gig::new(0.5 * n - v, 2.0 * c, 2.0 * w)?.sample(rng),
            MultiplierPrior::Gamma => Gamma::new(v + 0.5 * n, 1.0 / (w + c))
                .map_err(|e| Error::Numeric(e.to_string()))?
                .sample(rng),
        };
        Ok(x)
    }

    fn multipliers_with<R: Rng + ?Sized>(
        &self,
        state: &ParameterState,
        rss: &[Vec<f64>],
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (g_n, h_n) = (self.n_countries(), self.periods());
        let cnt = self.stats.count() as f64;
        let two_s2 = 2.0 * state.sigma2;
        let mut lambda = Vec::with_capacity(h_n);
        for h in 0..h_n {
            let c: f64 = (0..g_n).map(|g| state.chi[g] * rss[g][h]).sum::<f64>() / two_s2;
            let x = self.multiplier(g_n as f64 * cnt, c, self.priors.v2, self.priors.w2, rng)?;
            lambda.push(floor("lambda", x));
        }
        let mut chi = Vec::with_capacity(g_n);
        for g in 0..g_n {
            let c: f64 = (0..h_n).map(|h| lambda[h] * rss[g][h]).sum::<f64>() / two_s2;
            let x = self.multiplier(h_n as f64 * cnt, c, self.priors.v3, self.priors.w3, rng)?;
            chi.push(floor("chi", x));
        }
        Ok((lambda, chi))
    }

    /// Draws the hourly multipliers, then the country multipliers given the
    /// new hourly ones.
    pub fn draw_multipliers<R: Rng + ?Sized>(
        &self,
        state: &ParameterState,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let rss = self.residual_sums(state);
        self.multipliers_with(state, &rss, rng)
    }

    /// Draws the group variances of the hourly and country random effects.
    /// A group with no coefficients keeps its current value.
    pub fn draw_effect_scales<R: Rng + ?Sized>(
        &self,
        state: &ParameterState,
        rng: &mut R,
    ) -> Result<(EffectScales, EffectScales)> {
        let mut q = state.q;
        let mut r = state.r;
        for group in GROUPS {
            let members: Vec<usize> = (0..self.dim()).filter(|&l| self.layout.group(l) == group).collect();
            if members.is_empty() {
                continue;
            }
            for (target, rows) in [(&mut q, &state.psi), (&mut r, &state.zeta)] {
                let ss: f64 = rows.iter().flat_map(|row| members.iter().map(move |&l| row[l] * row[l])).sum();
                let k = (rows.len() * members.len()) as f64;
                let ig = InverseGamma::new(self.priors.n0 + 0.5 * k, self.priors.m0 + 0.5 * ss)?;
                *target.get_mut(group) = floor("random effect variance", ig.sample(rng));
            }
        }
        Ok((q, r))
    }

    /// One full sweep: gamma, then (psi, zeta), then sigma², the hourly and
    /// country multipliers, and last the random-effect variances.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut ParameterState, rng: &mut R) -> Result<()> {
        let sys = self.assemble(state)?;
        state.gamma = self.gamma_with(state, &sys, rng)?;
        let (psi, zeta) = self.effects_with(&state.gamma, &sys, rng)?;
        state.psi = psi;
        state.zeta = zeta;
        let rss = self.residual_sums(state);
        state.sigma2 = self.sigma2_with(state, &rss, rng)?;
        let (lambda, chi) = self.multipliers_with(state, &rss, rng)?;
        state.lambda = lambda;
        state.chi = chi;
        let (q, r) = self.draw_effect_scales(state, rng)?;
        state.q = q;
        state.r = r;
        state.check_valid()
    }
}

fn floor(what: &str, x: f64) -> f64 {
    if x < VARIANCE_FLOOR {
        log::warn!("{what} draw {x:e} clamped to {VARIANCE_FLOOR:e}");
        VARIANCE_FLOOR
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Covariate, ModelSpec};
    use crate::data::{CountryPanel, Standardization};
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn panel(g_n: usize, days: usize, seed: u64) -> PanelDataset {
        let h_n = 2;
        let spec = ModelSpec {
            countries: (0..g_n).map(|g| format!("C{g}")).collect(),
            freq_mismatch: h_n,
            ar_lags: vec![2],
            daily_ar: true,
            covariates: vec![Covariate::high("w"), Covariate::low("g")],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n = || rng.sample::<f64, _>(StandardNormal);
        let countries = (0..g_n)
            .map(|g| {
                let high: Vec<f64> = (0..days * h_n).map(|_| n()).collect();
                let low: Vec<f64> = (0..days).map(|_| n()).collect();
                let mut price = vec![0.0; days * h_n];
                for i in 0..days * h_n {
                    let lag = if i >= 2 { price[i - 2] } else { 0.0 };
                    price[i] = 1.0 + g as f64 + 0.5 * lag + 0.8 * high[i] - 0.4 * low[i / h_n] + 0.3 * n();
                }
                CountryPanel {
                    name: format!("C{g}"),
                    price,
                    high: vec![high],
                    low: vec![low],
                    scaling: vec![Standardization { mean: 0.0, sd: 1.0 }; 2],
                    raw_hours: days * h_n,
                }
            })
            .collect();
        PanelDataset {
            spec,
            start: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            n_days: days,
            presample_days: 1,
            countries,
            notes: vec![],
        }
    }

    #[test]
    fn cell_stats_match_direct_sums() {
        let ds = panel(2, 12, 1);
        let design = DesignBuilder::new(&ds);
        let stats = CellStats::compute(&design);
        assert_eq!(stats.count(), 11);
        let mut s = DMatrix::zeros(4, 4);
        let mut c = DVector::zeros(4);
        for t in 1..12 {
            let z = DVector::from_vec(design.regressor(1, t, 1).unwrap());
            s += &z * z.transpose();
            c += &z * design.target(1, t, 1);
        }
        assert!((stats.gram(1, 1) - s).amax() < 1e-12);
        assert!((stats.cross(1, 1) - c).amax() < 1e-12);
    }

    #[test]
    fn residual_sums_at_zero_coefficients_are_target_sums_of_squares() {
        let ds = panel(1, 8, 2);
        let s = GibbsSampler::new(&ds, &PriorConfig::default(), &SamplerConfig::default()).unwrap();
        let state = ParameterState::zeros(1, 2, 4);
        let rss0 = s.residual_sums(&state);
        let total: f64 = ds.countries[0].price[2..].iter().map(|y| y * y).sum();
        assert!((rss0[0].iter().sum::<f64>() - total).abs() < 1e-9);
        let rss_cells: f64 = (0..2).map(|h| s.stats().sum_sq(0, h)).sum();
        assert!((rss_cells - total).abs() < 1e-9);
    }

    #[test]
    fn sweeps_stay_valid_for_every_step() {
        let ds = panel(3, 40, 3);
        for step in [GammaStep::Collapsed, GammaStep::Conditional, GammaStep::Diagonal] {
            for mp in [MultiplierPrior::InverseGamma, MultiplierPrior::Gamma] {
                let cfg = SamplerConfig {
                    gamma_step: step,
                    multiplier_prior: mp,
                    ..SamplerConfig::default()
                };
                let s = GibbsSampler::new(&ds, &PriorConfig::default(), &cfg).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(4);
                let mut state = s.initial_state(0.1, &mut rng).unwrap();
                for _ in 0..50 {
                    s.sweep(&mut state, &mut rng).unwrap();
                }
                state.check_valid().unwrap();
            }
        }
    }

    #[test]
    fn ols_start_recovers_pooled_fit() {
        let ds = panel(1, 400, 5);
        let s = GibbsSampler::new(&ds, &PriorConfig::default(), &SamplerConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let st = s.initial_state(0.0, &mut rng).unwrap();
        assert!((st.gamma[1] - 0.5).abs() < 0.05, "{:?}", st.gamma);
        assert!((st.gamma[2] - 0.8).abs() < 0.05, "{:?}", st.gamma);
        assert!((st.gamma[3] + 0.4).abs() < 0.05, "{:?}", st.gamma);
    }

    #[test]
    fn collapsed_and_conditional_agree_without_random_effects() {
        // with effects pinned at zero variance both steps reduce to the
        // same conjugate regression
        let ds = panel(2, 30, 6);
        let mut state = ParameterState::zeros(2, 2, 4);
        state.q = EffectScales::splat(0.0);
        state.r = EffectScales::splat(0.0);
        state.sigma2 = 0.09;
        let mk = |step| {
            let cfg = SamplerConfig {
                gamma_step: step,
                ..SamplerConfig::default()
            };
            GibbsSampler::new(&ds, &PriorConfig::default(), &cfg).unwrap()
        };
        let a = mk(GammaStep::Collapsed);
        let b = mk(GammaStep::Conditional);
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let ga = a.draw_gamma(&state, &mut r1).unwrap();
        let gb = b.draw_gamma(&state, &mut r2).unwrap();
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-9);
        }
        let (psi, zeta) = a.draw_random_effects(&state, &mut r1).unwrap();
        assert!(psi.iter().chain(&zeta).flatten().all(|&v| v == 0.0));
    }
}
