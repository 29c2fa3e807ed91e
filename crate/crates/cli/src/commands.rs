use std::path::{Path, PathBuf};
use std::time::Instant;

use prumidas::config::{FitConfig, Term};
use prumidas::data::{align_and_preprocess, ingest_daily, ingest_hourly, read_dataset, write_dataset, MANIFEST_FILE};
use prumidas::posterior::export::{
    write_boxplot_csv, write_density_csv, write_diagnostics_csv, write_summary_csv, write_volatility_csv,
};
use prumidas::posterior::{country_effects, diagnostics, normalize_scales, pool_chains, volatility_path, Aggregate, PlugIn};
use prumidas::sampler::{chain_header, run_chain_into, DrawStore, DrawWriter};
use prumidas::synthetic::{hourly_file, simulate_scenario, ScenarioConfig, DAILY_FILE, SCENARIO_FILE, TRUTH_FILE};
use prumidas::{Error, Result};
use rayon::prelude::*;

use crate::manifest::{io_err, RunManifest};
use crate::{AggregateArg, EffectsArgs, FitArgs, PlugInArg, RunArgs, SimulateArgs, SummarizeArgs, VolatilityArgs};

pub const THREADS_VAR: &str = "PRUMIDAS_THREADS";
pub const RUN_CONFIG: &str = "config.toml";
pub const RUN_MANIFEST: &str = "manifest.json";
pub const PANEL_DIR: &str = "panel";

/// Sizes the global thread pool from `PRUMIDAS_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut manifest = RunManifest::start("simulate");
    let mut sc = ScenarioConfig::load(&a.scenario)?;
    manifest.input(&a.scenario)?;
    if let Some(seed) = a.seed {
        sc.seed = seed;
    }
    manifest.seed = Some(sc.seed);
    let panel = simulate_scenario(&sc)?;
    create_dir(&a.out)?;
    panel.write(&a.out)?;
    let mut files: Vec<String> = sc.model.countries.iter().map(|c| hourly_file(c)).collect();
    files.extend([DAILY_FILE, TRUTH_FILE, SCENARIO_FILE].map(String::from));
    for f in files {
        manifest.output(&a.out.join(f), RUN_MANIFEST)?;
    }
    log::info!(
        "simulated {} countries x {} days into {}",
        sc.model.countries.len(),
        sc.days,
        a.out.display()
    );
    manifest.finish(&a.out.join(RUN_MANIFEST))
}

/// (country, hourly file) pairs in model order, plus the daily file.
fn resolve_inputs(a: &FitArgs, cfg: &FitConfig) -> Result<(Vec<(String, PathBuf)>, PathBuf)> {
    let mut given: Vec<(String, PathBuf)> = a
        .hourly
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(c, p)| (c.to_string(), PathBuf::from(p)))
                .ok_or_else(|| Error::Config(format!("--hourly expects COUNTRY=PATH, got '{s}'")))
        })
        .collect::<Result<_>>()?;
    let daily = match (&a.data, &a.daily) {
        (Some(dir), _) => {
            if cfg.model.countries.is_empty() {
                let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
                for e in entries {
                    let e = e.map_err(|e| io_err(dir, e))?;
                    let name = e.file_name().to_string_lossy().into_owned();
                    if let Some(c) = name.strip_prefix("hourly_").and_then(|n| n.strip_suffix(".csv")) {
                        given.push((c.to_string(), e.path()));
                    }
                }
                given.sort();
            } else {
                given = cfg.model.countries.iter().map(|c| (c.clone(), dir.join(hourly_file(c)))).collect();
            }
            dir.join(DAILY_FILE)
        }
        (None, Some(d)) => d.clone(),
        (None, None) => return Err(Error::Config("give --data DIR, or --hourly and --daily".into())),
    };
    if given.is_empty() {
        return Err(Error::Config("no hourly input files".into()));
    }
    if !cfg.model.countries.is_empty() {
        let mut ordered = Vec::new();
        for c in &cfg.model.countries {
            let p = given
                .iter()
                .find(|(n, _)| n == c)
                .ok_or_else(|| Error::Config(format!("no hourly file for country '{c}'")))?;
            ordered.push(p.clone());
        }
        if ordered.len() != given.len() {
            return Err(Error::Config("hourly files given for countries outside the model".into()));
        }
        given = ordered;
    }
    Ok((given, daily))
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let mut manifest = RunManifest::start("fit");
    let mut cfg = FitConfig::load(&a.config)?;
    manifest.input(&a.config)?;
    if a.from.is_some() {
        cfg.data.from = a.from;
    }
    if a.to.is_some() {
        cfg.data.to = a.to;
    }
    let s = &mut cfg.sampler;
    s.seed = a.seed.unwrap_or(s.seed);
    s.burn_in = a.burn_in.unwrap_or(s.burn_in);
    s.retained = a.retained.unwrap_or(s.retained);
    s.thin = a.thin.unwrap_or(s.thin);
    if a.no_random_effects {
        s.store_random_effects = false;
    }
    if a.chains == 0 {
        return Err(Error::Config("--chains must be at least 1".into()));
    }
    cfg.validate_settings()?;

    let (hourly_paths, daily_path) = resolve_inputs(a, &cfg)?;
    if cfg.model.countries.is_empty() {
        cfg.model.countries = hourly_paths.iter().map(|(c, _)| c.clone()).collect();
    }
    cfg.validate()?;
    let high: Vec<String> = cfg.model.covariates.iter().take(cfg.model.n_high()).map(|c| c.name.clone()).collect();
    let low: Vec<String> = cfg.model.covariates.iter().skip(cfg.model.n_high()).map(|c| c.name.clone()).collect();
    let mut tables = Vec::new();
    for (c, p) in &hourly_paths {
        tables.push(ingest_hourly(p, c, cfg.model.freq_mismatch, &high)?);
        manifest.input(p)?;
    }
    let daily = ingest_daily(&daily_path, &low)?;
    manifest.input(&daily_path)?;
    let data = align_and_preprocess(&tables, &daily, &cfg.model, &cfg.data)?;
    for n in &data.notes {
        log::info!("{n}");
    }
    log::info!(
        "{} countries, {} estimation days from {}, {} observations",
        data.countries.len(),
        data.estimation_days().len(),
        data.date(data.presample_days),
        data.n_obs()
    );

    let hash = cfg.hash();
    manifest.config_hash = Some(hash.clone());
    manifest.seed = Some(cfg.sampler.seed);
    create_dir(&a.out)?;
    let cpath = a.out.join(RUN_CONFIG);
    std::fs::write(&cpath, cfg.to_toml_string()?).map_err(|e| io_err(&cpath, e))?;
    manifest.output(&cpath, RUN_MANIFEST)?;
    let pdir = a.out.join(PANEL_DIR);
    let dm = write_dataset(&data, &pdir)?;
    manifest.output(&pdir.join(MANIFEST_FILE), RUN_MANIFEST)?;
    for c in &dm.countries {
        manifest.output(&pdir.join(&c.file), RUN_MANIFEST)?;
    }

    let started = Instant::now();
    let stems: Vec<PathBuf> = (0..a.chains).map(|c| a.out.join(format!("chain_{c}"))).collect();
    stems
        .par_iter()
        .enumerate()
        .map(|(c, stem)| -> Result<()> {
            let t0 = Instant::now();
            let mut w = DrawWriter::create(stem, &chain_header(&data, &cfg, c as u64))?;
            let mut next = 1;
            run_chain_into(&data, &cfg, c as u64, &mut w, &mut |done, total| {
                if done * 10 >= next * total {
                    log::info!("chain {c}: {done}/{total} sweeps");
                    next += 1;
                }
            })?;
            let secs = t0.elapsed().as_secs_f64();
            log::info!(
                "chain {c}: {:.1}s, {:.2} ms per sweep",
                secs,
                1e3 * secs / cfg.sampler.total_sweeps() as f64
            );
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    for stem in &stems {
        manifest.output(&stem.with_extension("csv"), RUN_MANIFEST)?;
    }
    log::info!(
        "{} chain(s) done in {:.1}s; draws in {}",
        a.chains,
        started.elapsed().as_secs_f64(),
        a.out.display()
    );
    manifest.finish(&a.out.join(RUN_MANIFEST))
}

struct Run {
    config: FitConfig,
    chains: Vec<DrawStore>,
}

/// Reads the configuration and every `chain_<k>` table of a run directory.
fn load_run(dir: &Path, manifest: &mut RunManifest) -> Result<Run> {
    let cpath = dir.join(RUN_CONFIG);
    let config = FitConfig::load(&cpath)?;
    manifest.input(&cpath)?;
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut ids = Vec::new();
    for e in entries {
        let name = e.map_err(|e| io_err(dir, e))?.file_name().to_string_lossy().into_owned();
        if let Some(k) = name.strip_prefix("chain_").and_then(|n| n.strip_suffix(".json")) {
            if let Ok(k) = k.parse::<usize>() {
                ids.push(k);
            }
        }
    }
    ids.sort_unstable();
    if ids.is_empty() {
        return Err(Error::Config(format!("{}: no draw tables", dir.display())));
    }
    let mut chains = Vec::new();
    for k in ids {
        let stem = dir.join(format!("chain_{k}"));
        chains.push(DrawStore::read(&stem)?);
        manifest.input(&stem.with_extension("csv"))?;
        manifest.input(&stem.with_extension("json"))?;
    }
    if chains.iter().any(|s| s.header().config_hash != config.hash()) {
        return Err(Error::Data(format!("{}: draws do not match {RUN_CONFIG}", dir.display())));
    }
    manifest.config_hash = Some(config.hash());
    manifest.seed = Some(config.sampler.seed);
    Ok(Run { config, chains })
}

fn out_dir(a: &RunArgs) -> Result<PathBuf> {
    let dir = a.out.clone().unwrap_or_else(|| a.run.clone());
    create_dir(&dir)?;
    Ok(dir)
}

fn manifest_name(stem: &str) -> String {
    format!("{stem}.manifest.json")
}

pub fn summarize(a: &SummarizeArgs) -> Result<()> {
    let mut manifest = RunManifest::start("summarize");
    let run = load_run(&a.run.run, &mut manifest)?;
    let mut pooled = pool_chains(&run.chains)?;
    if a.normalize_scales {
        pooled = normalize_scales(&pooled);
    }
    let dir = out_dir(&a.run)?;
    let name = manifest_name("summary");
    let path = dir.join("summary.csv");
    write_summary_csv(&path, &pooled, &run.config.hash())?;
    manifest.output(&path, &name)?;
    log::info!("{} draws summarized into {}", pooled.n_draws(), path.display());
    manifest.finish(&dir.join(name))
}

pub fn effects(a: &EffectsArgs) -> Result<()> {
    let mut manifest = RunManifest::start("effects");
    let run = load_run(&a.run.run, &mut manifest)?;
    let spec = &run.config.model;
    let j = spec
        .covariate_index(&a.covariate)
        .ok_or_else(|| Error::Config(format!("unknown covariate '{}'", a.covariate)))?;
    let layout = spec.layout();
    let label = layout
        .entries()
        .iter()
        .find(|e| e.term == Term::Covariate { index: j, lag: a.lag })
        .map(|e| e.label.clone())
        .ok_or_else(|| Error::Config(format!("covariate '{}' has no lag {}", a.covariate, a.lag)))?;
    let pooled = pool_chains(&run.chains)?;
    let summaries = country_effects(&pooled, &label)?;
    let dir = out_dir(&a.run)?;
    let name = manifest_name(&format!("effects_{label}"));
    let hash = run.config.hash();
    let bpath = dir.join(format!("effects_{label}_boxplot.csv"));
    write_boxplot_csv(&bpath, &summaries, &hash)?;
    manifest.output(&bpath, &name)?;
    let dpath = dir.join(format!("effects_{label}_density.csv"));
    write_density_csv(&dpath, &summaries, &hash)?;
    manifest.output(&dpath, &name)?;
    for s in &summaries {
        log::info!("{label} {}: median {:.4}, mean {:.4}", s.country, s.quantiles[2], s.mean);
    }
    manifest.finish(&dir.join(name))
}

pub fn volatility(a: &VolatilityArgs) -> Result<()> {
    let mut manifest = RunManifest::start("volatility");
    let run = load_run(&a.run.run, &mut manifest)?;
    let pdir = a.run.run.join(PANEL_DIR);
    let data = read_dataset(&pdir)?;
    manifest.input(&pdir.join(MANIFEST_FILE))?;
    let (aggregate, tag) = match a.aggregate {
        AggregateArg::Daily => (Aggregate::Daily, "daily"),
        AggregateArg::Hourly => (Aggregate::Hourly, "hourly"),
    };
    let how = match a.plug_in {
        PlugInArg::Mean => PlugIn::Mean,
        PlugInArg::Median => PlugIn::Median,
    };
    let pooled = pool_chains(&run.chains)?;
    let paths = (0..data.countries.len())
        .map(|g| volatility_path(&pooled, &data, g, aggregate, how))
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(&a.run)?;
    let name = manifest_name(&format!("volatility_{tag}"));
    let path = dir.join(format!("volatility_{tag}.csv"));
    write_volatility_csv(&path, &paths, &run.config.hash())?;
    manifest.output(&path, &name)?;
    for p in &paths {
        log::info!("{}: peak on {}", p.country, p.dates[p.peak_day()]);
    }
    manifest.finish(&dir.join(name))
}

pub fn diagnose(a: &RunArgs) -> Result<()> {
    let mut manifest = RunManifest::start("diagnose");
    let run = load_run(&a.run, &mut manifest)?;
    let dir = out_dir(a)?;
    let name = manifest_name("diagnostics");
    for store in &run.chains {
        let chain = store.header().chain;
        let d = diagnostics(store)?;
        let path = dir.join(format!("diagnostics_chain{chain}.csv"));
        write_diagnostics_csv(&path, &d, &run.config.hash())?;
        manifest.output(&path, &name)?;
        for p in d.parameters.iter().filter(|p| p.name.starts_with("gamma.")) {
            log::info!("chain {chain} {}: ess {:.0}, geweke z {:+.2}", p.name, p.ess, p.geweke_z);
        }
    }
    manifest.finish(&dir.join(name))
}
