//! CSV tables for plotting, each with a JSON sidecar (`<file>.json`) that
//! documents the columns and carries the configuration hash of the run.
//!
//! | table | columns |
//! |---|---|
//! | boxplot | `covariate,country,q05,q25,q50,q75,q95` |
//! | density | `covariate,country,x,density` (512 rows per pair) |
//! | volatility, daily | `date,country,variance` |
//! | volatility, hourly | `date,country,p0,...,p{H-1}` |
//! | diagnostics | `parameter,mean,sd,ess,geweke_z` |
//! | summary | `parameter,mean,sd,q05,q50,q95` |
//!
//! Volatility is exported as a variance; take the square root for a
//! standard deviation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::diagnostics::Diagnostics;
use super::effects::{quantile_sorted, CountryEffectSummary};
use super::volatility::{Aggregate, VolatilityPath};
use crate::error::{Error, Result};
use crate::sampler::DrawStore;

pub const BOXPLOT_COLUMNS: [&str; 7] = ["covariate", "country", "q05", "q25", "q50", "q75", "q95"];
pub const DENSITY_COLUMNS: [&str; 4] = ["covariate", "country", "x", "density"];
pub const DAILY_VOLATILITY_COLUMNS: [&str; 3] = ["date", "country", "variance"];
pub const DIAGNOSTIC_COLUMNS: [&str; 5] = ["parameter", "mean", "sd", "ess", "geweke_z"];
pub const SUMMARY_COLUMNS: [&str; 6] = ["parameter", "mean", "sd", "q05", "q50", "q95"];

/// Contents of a table's JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub table: String,
    pub columns: Vec<String>,
    pub config_hash: String,
    pub rows: usize,
    pub description: String,
    pub version: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

fn write_table(
    path: &Path,
    table: &str,
    description: &str,
    columns: &[String],
    rows: impl Iterator<Item = Vec<String>>,
    config_hash: &str,
) -> Result<TableMeta> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(columns).map_err(|e| csv_err(path, e))?;
    let mut n = 0;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let meta = TableMeta {
        table: table.into(),
        columns: columns.to_vec(),
        config_hash: config_hash.into(),
        rows: n,
        description: description.into(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let side = sidecar_path(path);
    std::fs::write(&side, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&side, e))?;
    Ok(meta)
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn write_boxplot_csv(path: &Path, summaries: &[CountryEffectSummary], config_hash: &str) -> Result<TableMeta> {
    let rows = summaries.iter().map(|s| {
        let mut r = vec![s.coefficient.clone(), s.country.clone()];
        r.extend(s.quantiles.iter().map(|q| q.to_string()));
        r
    });
    write_table(
        path,
        "boxplot",
        "posterior quantiles of common coefficient plus country effect",
        &owned(&BOXPLOT_COLUMNS),
        rows,
        config_hash,
    )
}

pub fn write_density_csv(path: &Path, summaries: &[CountryEffectSummary], config_hash: &str) -> Result<TableMeta> {
    let rows = summaries.iter().flat_map(|s| {
        s.density.x.iter().zip(&s.density.density).map(move |(x, d)| {
            vec![s.coefficient.clone(), s.country.clone(), x.to_string(), d.to_string()]
        })
    });
    write_table(
        path,
        "density",
        "Gaussian kernel density, Silverman bandwidth, 512-point grid",
        &owned(&DENSITY_COLUMNS),
        rows,
        config_hash,
    )
}

pub fn write_volatility_csv(path: &Path, paths: &[VolatilityPath], config_hash: &str) -> Result<TableMeta> {
    let aggregate = paths.first().map_or(Aggregate::Daily, |p| p.aggregate);
    if paths.iter().any(|p| p.aggregate != aggregate) {
        return Err(Error::Data("volatility paths mix aggregates".into()));
    }
    let columns = match aggregate {
        Aggregate::Daily => owned(&DAILY_VOLATILITY_COLUMNS),
        Aggregate::Hourly => {
            let periods = paths.first().and_then(|p| p.values.first()).map_or(0, Vec::len);
            let mut c = owned(&["date", "country"]);
            c.extend((0..periods).map(|h| format!("p{h}")));
            c
        }
    };
    let rows = paths.iter().flat_map(|p| {
        p.dates.iter().zip(&p.values).map(move |(d, v)| {
            let mut r = vec![d.format("%Y-%m-%d").to_string(), p.country.clone()];
            r.extend(v.iter().map(|x| x.to_string()));
            r
        })
    });
    write_table(
        path,
        "volatility",
        "plug-in marginal error variance per estimation day (square root gives standard deviation)",
        &columns,
        rows,
        config_hash,
    )
}

pub fn write_diagnostics_csv(path: &Path, diag: &Diagnostics, config_hash: &str) -> Result<TableMeta> {
    let rows = diag.parameters.iter().map(|p| {
        vec![
            p.name.clone(),
            p.mean.to_string(),
            p.sd.to_string(),
            p.ess.to_string(),
            p.geweke_z.to_string(),
        ]
    });
    write_table(
        path,
        "diagnostics",
        "effective sample size and Geweke z (first 10% vs last 50%)",
        &owned(&DIAGNOSTIC_COLUMNS),
        rows,
        config_hash,
    )
}

/// Posterior mean, standard deviation and 5/50/95% quantiles of every
/// column of a draw table.
pub fn write_summary_csv(path: &Path, store: &DrawStore, config_hash: &str) -> Result<TableMeta> {
    if store.n_draws() < 2 {
        return Err(Error::Data(format!("{} draws, need at least 2", store.n_draws())));
    }
    let rows = store.header().columns.iter().enumerate().map(|(i, name)| {
        let mut x = store.column(i);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        x.sort_by(f64::total_cmp);
        vec![
            name.clone(),
            mean.to_string(),
            sd.to_string(),
            quantile_sorted(&x, 0.05).to_string(),
            quantile_sorted(&x, 0.5).to_string(),
            quantile_sorted(&x, 0.95).to_string(),
        ]
    });
    write_table(
        path,
        "summary",
        "posterior moments and quantiles of every stored parameter",
        &owned(&SUMMARY_COLUMNS),
        rows,
        config_hash,
    )
}
