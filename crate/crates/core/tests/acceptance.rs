//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset: `cargo test --release --test acceptance -- 3 5`.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use prumidas::config::{
    Covariate, DateFilter, GammaStep, ModelSpec, PriorConfig, SamplerConfig,
};
use prumidas::data::{
    align_and_preprocess, parse_daily, parse_hourly, read_dataset, write_dataset, DailyTable, HourlyTable,
};
use prumidas::design::DesignBuilder;
use prumidas::posterior::effects::quantile_sorted;
use prumidas::posterior::export::{
    sidecar_path, write_boxplot_csv, write_density_csv, write_volatility_csv, TableMeta, BOXPLOT_COLUMNS,
    DAILY_VOLATILITY_COLUMNS, DENSITY_COLUMNS,
};
use prumidas::posterior::{country_effects, marginal_variance, volatility_path, Aggregate, PlugIn};
use prumidas::sampler::{chain_rng, run_chain, DrawStore, GibbsSampler, Gig, ParameterState};
use prumidas::synthetic::{
    conjugate_oracle, geweke_test, ingest_synthetic, simulate_scenario, simulate_targets, CovariateProcess,
    GewekeConfig, ScenarioConfig, ShockEpisode,
};
use prumidas::FitConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{day, mean, random_panel, spec};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1. Block and scalar forms of the mean agree; marginal variance matches
//    simulation.
fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g_n = rng.random_range(1..=3);
        let h = rng.random_range(2..=5);
        let daily = rng.random_bool(0.5);
        let lags = if daily { vec![h, 2 * h] } else { vec![1, h + 1] };
        let mut sp = spec(g_n, h, lags, daily);
        sp.covariates[0].lags = rng.random_range(0..=2);
        sp.covariates[1].lags = rng.random_range(0..=1);
        let days = sp.presample_days() + rng.random_range(2..=6);
        let data = random_panel(&sp, days, &mut rng);
        let design = DesignBuilder::new(&data);
        let dim = design.dim();
        let mut normal = || rng.sample::<f64, _>(StandardNormal);
        let gamma = DVector::from_fn(dim, |_, _| normal());
        let zeta: Vec<DVector<f64>> = (0..g_n).map(|_| DVector::from_fn(dim, |_, _| normal())).collect();
        let psi = DMatrix::from_fn(h, dim, |_, _| normal());
        for blk in design.blocks() {
            let fitted = blk.fitted(&gamma, &zeta[blk.g], &psi);
            for hh in 0..h {
                let z = design.regressor(blk.g, blk.t, hh).map_err(err)?;
                let coef = &gamma + &zeta[blk.g] + psi.row(hh).transpose();
                let scalar: f64 = z.iter().zip(coef.iter()).map(|(a, b)| a * b).sum();
                let scale: f64 = z.iter().zip(coef.iter()).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1e-300);
                worst = worst.max((fitted[hh] - scalar).abs() / scale);
                ensure(blk.y[hh] == design.target(blk.g, blk.t, hh), || "block target mismatch".into())?;
            }
        }
    }
    ensure(worst <= 1e-10, || format!("block/scalar relative gap {worst:e}"))?;

    let n = 1_000_000;
    let mut worst_var: f64 = 0.0;
    for _ in 0..20 {
        let l = rng.random_range(2..=8);
        let z: Vec<f64> = (0..l).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let q: Vec<f64> = (0..l).map(|_| rng.random_range(0.01..1.0)).collect();
        let r: Vec<f64> = (0..l).map(|_| rng.random_range(0.01..1.0)).collect();
        let s2 = rng.random_range(0.1..3.0);
        let exact = marginal_variance(&z, s2, &q, &r).map_err(err)?;
        let (sq, sr, se) = (
            q.iter().map(|v| v.sqrt()).collect::<Vec<_>>(),
            r.iter().map(|v| v.sqrt()).collect::<Vec<_>>(),
            s2.sqrt(),
        );
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let mut v = se * rng.sample::<f64, _>(StandardNormal);
            for k in 0..l {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                v += z[k] * (sq[k] * a + sr[k] * b);
            }
            acc += v;
            acc2 += v * v;
        }
        let m = acc / n as f64;
        let mc = (acc2 - n as f64 * m * m) / (n as f64 - 1.0);
        worst_var = worst_var.max((mc - exact).abs() / exact);
    }
    ensure(worst_var < 0.01, || format!("marginal variance off by {:.3}%", 100.0 * worst_var))?;
    Ok(format!(
        "100 panels, max relative gap {worst:.1e}; 20 variance tuples, max Monte Carlo error {:.3}%",
        100.0 * worst_var
    ))
}

// 2. With no random effects and known cell variances the common
//    coefficients have a closed-form posterior.
fn conjugate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let sp = spec(2, 3, vec![3], true);
    let mut data = random_panel(&sp, 40, &mut rng);
    let dim = sp.coefficient_dim();
    let mut state = ParameterState::zeros(2, 3, dim);
    state.gamma = vec![2.0, 0.4, 0.7, -0.5];
    state.sigma2 = 0.8;
    state.lambda = vec![1.0, 0.5, 2.0];
    state.chi = vec![1.5, 0.7];
    simulate_targets(&mut data, &state, &mut rng).map_err(err)?;
    state.q = prumidas::sampler::EffectScales::splat(0.0);
    state.r = prumidas::sampler::EffectScales::splat(0.0);
    let priors = PriorConfig {
        s0: 3.0,
        r0: 0.5,
        ..PriorConfig::default()
    };
    let cells: Vec<Vec<f64>> = (0..2).map(|g| (0..3).map(|h| state.cell_variance(g, h)).collect()).collect();
    let (m, c) = conjugate_oracle(&data, &cells, &priors).map_err(err)?;

    let n = 50_000;
    let mut lines = Vec::new();
    for step in [GammaStep::Collapsed, GammaStep::Diagonal, GammaStep::Conditional] {
        let cfg = SamplerConfig {
            gamma_step: step,
            ..SamplerConfig::default()
        };
        let sampler = GibbsSampler::new(&data, &priors, &cfg).map_err(err)?;
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| sampler.draw_gamma(&state, &mut rng))
            .collect::<prumidas::Result<_>>()
            .map_err(err)?;
        let emp_mean: Vec<f64> = (0..dim).map(|l| mean(&draws.iter().map(|d| d[l]).collect::<Vec<_>>())).collect();
        let mut worst: f64 = 0.0;
        for l in 0..dim {
            let se = (c[(l, l)] / n as f64).sqrt();
            worst = worst.max((emp_mean[l] - m[l]).abs() / se);
            for k in 0..=l {
                let prods: Vec<f64> = draws
                    .iter()
                    .map(|d| (d[l] - emp_mean[l]) * (d[k] - emp_mean[k]))
                    .collect();
                let cov = prods.iter().sum::<f64>() / (n as f64 - 1.0);
                let se = (common::variance(&prods) / n as f64).sqrt();
                worst = worst.max((cov - c[(l, k)]).abs() / se);
            }
        }
        ensure(worst < 3.0, || format!("{step:?}: {worst:.2} standard errors from the oracle"))?;
        lines.push(format!("{step:?} {worst:.2}"));
    }
    Ok(format!("50k draws, largest gap in Monte Carlo SEs: {}", lines.join(", ")))
}

// 3. Joint-distribution test of the full sweep and a mutation run.
fn joint_distribution() -> Outcome {
    let cfg = GewekeConfig::default();
    let report = geweke_test(&cfg).map_err(err)?;
    let frac = report.fraction_within(4.0);
    let bad: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.z.abs() >= 4.0)
        .map(|r| format!("{} z={:.2}", r.name, r.z))
        .collect();
    ensure(frac >= 0.95, || format!("only {:.0}% of |z| < 4: {}", 100.0 * frac, bad.join(", ")))?;
    let mutated = geweke_test(&GewekeConfig {
        sigma2_rate_factor: 0.5,
        ..cfg.clone()
    })
    .map_err(err)?;
    ensure(mutated.max_abs_z() > 4.0, || {
        format!("mutation not detected, max |z| {:.2}", mutated.max_abs_z())
    })?;
    Ok(format!(
        "{} test functions, {:.0}% within |z|<4 (max {:.2}); mutation max |z| {:.1}",
        report.rows.len(),
        100.0 * frac,
        report.max_abs_z(),
        mutated.max_abs_z()
    ))
}

struct Recovery {
    gamma_within_3sd: bool,
    worst_gamma_sd: f64,
    covered: usize,
    components: usize,
    worst_composite: f64,
}

fn recovery_run(seed: u64) -> Result<Recovery, String> {
    let model = ModelSpec {
        countries: vec!["A".into(), "B".into(), "C".into()],
        freq_mismatch: 6,
        ar_lags: vec![6, 12],
        daily_ar: true,
        covariates: vec![Covariate::high("x"), Covariate::low("f")],
    };
    let days = 150 + model.presample_days();
    let sc = ScenarioConfig::new(model.clone(), day(2021, 3, 1), days, seed);
    let panel = simulate_scenario(&sc).map_err(err)?;
    let mut cfg = FitConfig::new(model.clone());
    cfg.sampler.burn_in = 1000;
    cfg.sampler.retained = 4000;
    cfg.sampler.seed = seed;
    cfg.sampler.store_random_effects = false;
    let store = run_chain(&panel.dataset, &cfg, 0).map_err(err)?;
    let h = store.header();
    let truth = &panel.truth.state;
    let mut within = true;
    let mut worst_sd: f64 = 0.0;
    let mut covered = 0;
    for (l, &t) in truth.gamma.iter().enumerate() {
        let mut x = store.column(h.gamma_col(l));
        let m = mean(&x);
        let sd = common::variance(&x).sqrt();
        let dev = (m - t).abs() / sd;
        worst_sd = worst_sd.max(dev);
        within &= dev <= 3.0;
        x.sort_by(f64::total_cmp);
        if quantile_sorted(&x, 0.05) <= t && t <= quantile_sorted(&x, 0.95) {
            covered += 1;
        }
    }
    let s2 = store.column(h.sigma2_col());
    let mut worst_comp: f64 = 0.0;
    for g in 0..3 {
        let chi = store.column(h.chi_col(g));
        for hh in 0..6 {
            let lam = store.column(h.lambda_col(hh));
            let post: f64 = mean(&(0..s2.len()).map(|i| s2[i] / (lam[i] * chi[i])).collect::<Vec<_>>());
            let t = panel.truth.composite_variance(g, hh);
            worst_comp = worst_comp.max((post - t).abs() / t);
        }
    }
    Ok(Recovery {
        gamma_within_3sd: within,
        worst_gamma_sd: worst_sd,
        covered,
        components: truth.gamma.len(),
        worst_composite: worst_comp,
    })
}

// 4. Parameter recovery on simulated panels.
fn recovery() -> Outcome {
    let runs: Vec<Recovery> = (0..20).map(recovery_run).collect::<Result<_, _>>()?;
    let first = &runs[0];
    ensure(first.gamma_within_3sd, || {
        format!("posterior mean {:.2} sd from truth", first.worst_gamma_sd)
    })?;
    let covered: usize = runs.iter().map(|r| r.covered).sum();
    let total: usize = runs.iter().map(|r| r.components).sum();
    let coverage = covered as f64 / total as f64;
    ensure(coverage >= 0.7, || format!("90% intervals cover {:.0}%", 100.0 * coverage))?;
    ensure(first.worst_composite <= 0.15, || {
        format!("composite variance off by {:.1}%", 100.0 * first.worst_composite)
    })?;
    let seeds_within = runs.iter().filter(|r| r.gamma_within_3sd).count();
    let seeds_composite = runs.iter().filter(|r| r.worst_composite <= 0.15).count();
    Ok(format!(
        "instance: max {:.2} sd, composite max error {:.1}%; 20 seeds: coverage {:.0}%, \
         {seeds_within}/20 within 3 sd, {seeds_composite}/20 composite within 15%",
        first.worst_gamma_sd,
        100.0 * first.worst_composite,
        100.0 * coverage
    ))
}

/// Log density of GIG(p, a, b) in log-x coordinates, Jacobian included.
fn gig_log_density_u(p: f64, a: f64, b: f64, u: f64) -> f64 {
    p * u - 0.5 * (a * u.exp() + b * (-u).exp())
}

/// Trapezoid CDF table and first two moments by quadrature in log-x.
struct Quadrature {
    u: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    var: f64,
}

fn gig_quadrature(p: f64, a: f64, b: f64) -> Quadrature {
    let mode = ((p + (p * p + a * b).sqrt()) / a).ln();
    let top = gig_log_density_u(p + 2.0, a, b, mode).max(gig_log_density_u(p, a, b, mode));
    let mut lo = mode;
    while gig_log_density_u(p, a, b, lo) - top > -80.0 || gig_log_density_u(p + 2.0, a, b, lo) - top > -80.0 {
        lo -= 0.25;
    }
    let mut hi = mode;
    while gig_log_density_u(p, a, b, hi) - top > -80.0 || gig_log_density_u(p + 2.0, a, b, hi) - top > -80.0 {
        hi += 0.25;
    }
    let n = 2_000_000;
    let step = (hi - lo) / n as f64;
    let u: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    let f: Vec<f64> = u.iter().map(|&v| (gig_log_density_u(p, a, b, v) - top).exp()).collect();
    let mut cdf = vec![0.0; n + 1];
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 1..=n {
        let w = 0.5 * step;
        cdf[i] = cdf[i - 1] + w * (f[i - 1] + f[i]);
        let (x0, x1) = (u[i - 1].exp(), u[i].exp());
        m0 += w * (f[i - 1] + f[i]);
        m1 += w * (f[i - 1] * x0 + f[i] * x1);
        m2 += w * (f[i - 1] * x0 * x0 + f[i] * x1 * x1);
    }
    let total = cdf[n];
    cdf.iter_mut().for_each(|c| *c /= total);
    let mean = m1 / m0;
    Quadrature {
        u,
        cdf,
        mean,
        var: m2 / m0 - mean * mean,
    }
}

impl Quadrature {
    fn at(&self, x: f64) -> f64 {
        let v = x.ln();
        let (lo, hi) = (self.u[0], *self.u.last().unwrap());
        if v <= lo {
            return 0.0;
        }
        if v >= hi {
            return 1.0;
        }
        let pos = (v - lo) / (hi - lo) * (self.u.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }
}

/// Asymptotic Kolmogorov p-value with the Stephens correction.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

// 5. GIG sampler against numerical integration.
fn gig() -> Outcome {
    let triples = [
        (-3.0, 2.0, 8.0),
        (-2.0, 1.0, 1.0),
        (-1.0, 0.5, 3.0),
        (-0.5, 4.0, 0.25),
        (0.0, 1.0, 1.0),
        (0.5, 0.1, 0.1),
        (1.0, 3.0, 0.5),
        (1.5, 20.0, 20.0),
        (2.0, 0.5, 2.0),
        (3.0, 1.0, 6.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut min_p: f64 = 1.0;
    let mut worst_moment: f64 = 0.0;
    for &(p, a, b) in &triples {
        let dist = Gig::new(p, a, b).map_err(err)?;
        let quad = gig_quadrature(p, a, b);
        let mut ks: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
        ks.sort_by(f64::total_cmp);
        let n = ks.len() as f64;
        let d = ks
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = quad.at(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        let pv = ks_p_value(d, ks.len());
        ensure(pv > 0.01, || format!("GIG({p}, {a}, {b}): KS p-value {pv:.4}"))?;
        min_p = min_p.min(pv);
        let big: Vec<f64> = (0..2_000_000).map(|_| dist.sample(&mut rng)).collect();
        let m = mean(&big);
        let v = common::variance(&big);
        let em = (m - quad.mean).abs() / quad.mean;
        let ev = (v - quad.var).abs() / quad.var;
        ensure(em < 0.01 && ev < 0.01, || {
            format!("GIG({p}, {a}, {b}): mean error {:.2}%, variance error {:.2}%", 100.0 * em, 100.0 * ev)
        })?;
        worst_moment = worst_moment.max(em).max(ev);
    }
    Ok(format!(
        "10 triples, p from -3 to 3: smallest KS p-value {min_p:.3}, largest moment error {:.2}%",
        100.0 * worst_moment
    ))
}

// 6. Sweep throughput at full electricity-panel scale.
fn throughput() -> Outcome {
    let countries: Vec<String> = (0..9).map(|g| format!("K{g}")).collect();
    let names: Vec<&str> = countries.iter().map(String::as_str).collect();
    let model = ModelSpec::electricity(&names);
    let days = 1765 + model.presample_days();
    let mut sc = ScenarioConfig::new(model.clone(), day(2018, 1, 1), days, 6);
    sc.truth.ar_total = 0.4;
    let panel = simulate_scenario(&sc).map_err(err)?;
    let data = &panel.dataset;
    ensure(data.estimation_days().len() == 1765 && model.coefficient_dim() == 10, || {
        "unexpected panel dimensions".into()
    })?;
    let t0 = Instant::now();
    let cfg = SamplerConfig::default();
    let sampler = GibbsSampler::new(data, &PriorConfig::default(), &cfg).map_err(err)?;
    let mut rng = chain_rng(6, 0);
    let mut state = sampler.initial_state(0.0, &mut rng).map_err(err)?;
    let setup = t0.elapsed();
    for _ in 0..100 {
        sampler.sweep(&mut state, &mut rng).map_err(err)?;
    }
    let total = t0.elapsed();
    ensure(total < Duration::from_secs(300), || format!("100 sweeps took {:.0}s", total.as_secs_f64()))?;
    let per = (total - setup).as_secs_f64() / 100.0;
    Ok(format!(
        "{} observations, rayon pool of {}: setup {:.1}s, {:.0} ms per sweep, 100 sweeps in {:.1}s \
         (13,000 sweeps would take about {:.1} min)",
        data.n_obs(),
        rayon::current_num_threads(),
        setup.as_secs_f64(),
        1e3 * per,
        total.as_secs_f64(),
        13_000.0 * per / 60.0
    ))
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

// 7. Preprocessing rules on hand-checked inputs and exact round trips.
fn preprocessing() -> Outcome {
    let hourly_text = |days: &[(&str, Vec<u32>)]| {
        let mut s = String::from("timestamp,price,wind\n");
        let mut k = 0.0;
        for (date, hours) in days {
            for h in hours {
                s.push_str(&format!("{date}T{h:02}:00,{k},{}\n", 2.0 * k));
                k += 1.0;
            }
        }
        s
    };
    let parse = |text: String| parse_hourly(text.as_bytes(), Path::new("t.csv"), "DE", 24, &cols(&["wind"]));

    let mut oct: Vec<u32> = (0..24).collect();
    oct.insert(3, 2);
    let t = parse(hourly_text(&[("2022-10-30", oct)])).map_err(err)?;
    let expect: Vec<f64> = (0..25).filter(|&k| k != 3).map(f64::from).collect();
    ensure(t.price == expect, || format!("autumn repair gave {:?}", &t.price[..5]))?;

    let mar: Vec<u32> = (0..24).filter(|&h| h != 2).collect();
    let t = parse(hourly_text(&[("2022-03-27", mar)])).map_err(err)?;
    let mut expect: Vec<f64> = (0..23).map(f64::from).collect();
    expect.insert(2, 1.5);
    ensure(t.price == expect && t.len() == 24, || format!("spring repair gave {:?}", &t.price[..4]))?;

    let clean = hourly_text(&[("2022-05-01", (0..24).collect())]);
    let t = parse(clean).map_err(err)?;
    ensure(t.price == (0..24).map(f64::from).collect::<Vec<_>>() && t.repairs.is_empty(), || {
        "clean day changed".into()
    })?;

    let d = parse_daily("date,gas\n2023-01-06,10\n2023-01-09,13\n".as_bytes(), Path::new("d.csv"), &cols(&["gas"]))
        .map_err(err)?;
    ensure(d.values[0] == vec![10.0, 11.0, 12.0, 13.0], || format!("weekend fill gave {:?}", d.values[0]))?;
    ensure(
        parse_daily("date,gas\n2023-01-06,\n2023-01-07,7\n".as_bytes(), Path::new("d.csv"), &cols(&["gas"])).is_err(),
        || "leading gap accepted".into(),
    )?;

    // One-day shift: day 2 carries g1, day 3 carries g2, all standardized.
    let sp = ModelSpec {
        countries: vec!["A".into()],
        freq_mismatch: 2,
        ar_lags: vec![2],
        daily_ar: true,
        covariates: vec![Covariate::high("wind"), Covariate::low("gas")],
    };
    let ts = (0..6)
        .map(|i| (day(2022, 1, 2) + chrono::Duration::days(i / 2)).and_hms_opt(12 * (i % 2) as u32, 0, 0).unwrap())
        .collect();
    let hourly = HourlyTable {
        country: "A".into(),
        periods_per_day: 2,
        timestamps: ts,
        price: vec![40.0, 41.0, 42.0, 43.0, 44.0, 45.0],
        columns: cols(&["wind"]),
        values: vec![vec![1.0, 4.0, 2.0, 8.0, 5.0, 7.0]],
        repairs: vec![],
    };
    let raw = [3.0, 7.0, 20.0, 99.0];
    let daily = DailyTable {
        dates: (0..4).map(|i| day(2022, 1, 1) + chrono::Duration::days(i)).collect(),
        columns: cols(&["gas"]),
        values: vec![raw.to_vec()],
        filled: 0,
    };
    let ds = align_and_preprocess(std::slice::from_ref(&hourly), &daily, &sp, &DateFilter::default()).map_err(err)?;
    let m = (3.0 + 7.0 + 20.0) / 3.0;
    let sd = (((3.0f64 - m).powi(2) + (7.0f64 - m).powi(2) + (20.0f64 - m).powi(2)) / 2.0).sqrt();
    let expect: Vec<f64> = [3.0, 7.0, 20.0].iter().map(|g| (g - m) / sd).collect();
    ensure(ds.countries[0].low[0] == expect, || format!("shifted gas {:?}", ds.countries[0].low[0]))?;
    ensure(ds.countries[0].price == hourly.price, || "prices were transformed".into())?;
    let w = &ds.countries[0].high[0];
    let wm = mean(w);
    let wsd = common::variance(w).sqrt();
    ensure(wm.abs() < 1e-10 && (wsd - 1.0).abs() < 1e-10, || format!("wind mean {wm}, sd {wsd}"))?;

    // Round trips.
    let dir = tempfile::tempdir().map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let sp = spec(2, 4, vec![4, 8], true);
    let data = random_panel(&sp, 12, &mut rng);
    write_dataset(&data, dir.path()).map_err(err)?;
    let back = read_dataset(dir.path()).map_err(err)?;
    ensure(back == data, || "dataset round trip differs".into())?;
    let mut cfg = FitConfig::new(sp.clone());
    cfg.sampler.burn_in = 5;
    cfg.sampler.retained = 20;
    let store = run_chain(&data, &cfg, 0).map_err(err)?;
    let stem = dir.path().join("draws");
    store.write(&stem).map_err(err)?;
    let back = DrawStore::read(&stem).map_err(err)?;
    ensure(back == store, || "draw table round trip differs".into())?;
    Ok("clock changes, weekend fill, one-day shift, standardization exact; dataset and draws round-trip bit-exactly".into())
}

fn header_of(path: &Path) -> Result<Vec<String>, String> {
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    Ok(r.headers().map_err(err)?.iter().map(String::from).collect())
}

fn check_table(path: &Path, columns: &[&str], rows: usize, hash: &str) -> Result<(), String> {
    ensure(header_of(path)? == cols(columns), || format!("{}: wrong columns", path.display()))?;
    let n = csv::Reader::from_path(path).map_err(err)?.records().count();
    ensure(n == rows, || format!("{}: {n} rows, expected {rows}", path.display()))?;
    let meta: TableMeta =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(path)).map_err(err)?).map_err(err)?;
    ensure(meta.rows == rows && meta.config_hash == hash && meta.columns == cols(columns), || {
        format!("{}: sidecar disagrees with table", path.display())
    })
}

// 8. Simulate, fit, and export the plotting tables.
fn pipeline() -> Outcome {
    let model = ModelSpec {
        countries: vec!["DE".into(), "FR".into(), "IT".into()],
        freq_mismatch: 24,
        ar_lags: vec![24, 48],
        daily_ar: true,
        covariates: vec![Covariate::high("wind_fc"), Covariate::low("gas")],
    };
    let mut sc = ScenarioConfig::new(model.clone(), day(2022, 1, 3), 90, 8);
    sc.processes.push(CovariateProcess {
        name: "gas".into(),
        ar: 0.95,
        level: 30.0,
        scale: 3.0,
    });
    let shock = ShockEpisode {
        covariate: "gas".into(),
        from: day(2022, 2, 10),
        to: day(2022, 2, 20),
        multiplier: 4.0,
    };
    sc.shock = Some(shock.clone());
    sc.truth.intercept = 0.5;
    sc.truth.q.beta = 0.2;

    let dir = tempfile::tempdir().map_err(err)?;
    let raw = dir.path().join("raw");
    simulate_scenario(&sc).map_err(err)?.write(&raw).map_err(err)?;
    let data = ingest_synthetic(&raw, &model, &DateFilter::default()).map_err(err)?;
    let mut cfg = FitConfig::new(model.clone());
    cfg.sampler.burn_in = 500;
    cfg.sampler.retained = 1000;
    cfg.sampler.seed = 8;
    let store = run_chain(&data, &cfg, 0).map_err(err)?;
    let hash = cfg.hash();
    ensure(store.header().config_hash == hash, || "draws lack the config hash".into())?;

    let summaries = country_effects(&store, "gas").map_err(err)?;
    let out = dir.path().join("out");
    std::fs::create_dir_all(&out).map_err(err)?;
    let bpath = out.join("effects_gas_boxplot.csv");
    let dpath = out.join("effects_gas_density.csv");
    write_boxplot_csv(&bpath, &summaries, &hash).map_err(err)?;
    write_density_csv(&dpath, &summaries, &hash).map_err(err)?;
    check_table(&bpath, &BOXPLOT_COLUMNS, 3, &hash)?;
    check_table(&dpath, &DENSITY_COLUMNS, 3 * 512, &hash)?;
    for s in &summaries {
        let q = s.quantiles;
        ensure(q.windows(2).all(|w| w[0] <= w[1]), || format!("{}: quantiles not ordered", s.country))?;
        let mass = s.density.integral();
        ensure((mass - 1.0).abs() < 0.01, || format!("{}: density integrates to {mass:.4}", s.country))?;
    }

    let paths = (0..3)
        .map(|g| volatility_path(&store, &data, g, Aggregate::Daily, PlugIn::Mean))
        .collect::<prumidas::Result<Vec<_>>>()
        .map_err(err)?;
    let vpath = out.join("volatility_daily.csv");
    write_volatility_csv(&vpath, &paths, &hash).map_err(err)?;
    let n_days = data.estimation_days().len();
    check_table(&vpath, &DAILY_VOLATILITY_COLUMNS, 3 * n_days, &hash)?;
    // The shock reaches the panel one day after the settlement dates.
    let window = shock.from.succ_opt().unwrap()..=shock.to.succ_opt().unwrap();
    let mut peaks = Vec::new();
    for p in &paths {
        let peak = p.dates[p.peak_day()];
        ensure(window.contains(&peak), || {
            format!("{}: volatility peaks on {peak}, outside {}..{}", p.country, window.start(), window.end())
        })?;
        peaks.push(format!("{} {peak}", p.country));
    }
    Ok(format!(
        "boxplot, density and volatility tables validate; peaks {} inside {}..{}",
        peaks.join(", "),
        window.start(),
        window.end()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 8] = [
        ("stacked-form and marginal-variance identities", identities, 60),
        ("conjugate posterior oracle", conjugate, 120),
        ("joint-distribution test with mutation", joint_distribution, 600),
        ("parameter recovery over 20 seeds", recovery, 900),
        ("GIG sampler against quadrature", gig, 60),
        ("full-size panel sweep throughput", throughput, 300),
        ("preprocessing conformance and round trips", preprocessing, 60),
        ("simulate-fit-export pipeline", pipeline, 600),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = run();
        let secs = t0.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(detail) if secs > *budget as f64 => Err(format!("{detail}; over the {budget}s budget")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {k}. {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {k}. {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
