//! Canonical on-disk form of a [`PanelDataset`]: one CSV per country plus a
//! JSON manifest. Values are written in shortest round-trip notation, so
//! reading an export back reproduces the dataset bit for bit.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CountryPanel, PanelDataset, Standardization};
use crate::config::{Frequency, ModelSpec};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "panel.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryEntry {
    pub name: String,
    pub file: String,
    pub raw_hours: usize,
    pub scaling: Vec<NamedScaling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedScaling {
    pub covariate: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: ModelSpec,
    pub spec_hash: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n_days: usize,
    pub presample_days: usize,
    pub countries: Vec<CountryEntry>,
    pub notes: Vec<String>,
}

pub fn spec_hash(spec: &ModelSpec) -> String {
    let json = serde_json::to_vec(spec).expect("spec serializes");
    hex::encode(Sha256::digest(&json))
}

fn country_file(name: &str) -> String {
    format!("panel_{name}.csv")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `panel_<country>.csv` files and `panel.json` into `dir`.
///
/// Each CSV row is one (day, period); low-frequency values repeat across
/// the periods of a day.
pub fn write_dataset(ds: &PanelDataset, dir: &Path) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let spec = &ds.spec;
    let h = spec.freq_mismatch;
    let mut entries = Vec::new();
    for c in &ds.countries {
        let file = country_file(&c.name);
        let path = dir.join(&file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let mut header = vec!["date".to_string(), "period".to_string(), "price".to_string()];
        header.extend(spec.covariates.iter().map(|c| c.name.clone()));
        w.write_record(&header).map_err(|e| csv_err(&path, e))?;
        for t in 0..ds.n_days {
            let date = ds.date(t).format("%Y-%m-%d").to_string();
            for hh in 0..h {
                let i = t * h + hh;
                let mut row = vec![date.clone(), hh.to_string(), c.price[i].to_string()];
                row.extend(c.high.iter().map(|x| x[i].to_string()));
                row.extend(c.low.iter().map(|x| x[t].to_string()));
                w.write_record(&row).map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        entries.push(CountryEntry {
            name: c.name.clone(),
            file,
            raw_hours: c.raw_hours,
            scaling: spec
                .covariates
                .iter()
                .zip(&c.scaling)
                .map(|(cov, s)| NamedScaling {
                    covariate: cov.name.clone(),
                    mean: s.mean,
                    sd: s.sd,
                })
                .collect(),
        });
    }
    let manifest = DatasetManifest {
        spec: spec.clone(),
        spec_hash: spec_hash(spec),
        start: ds.start,
        end: ds.date(ds.n_days - 1),
        n_days: ds.n_days,
        presample_days: ds.presample_days,
        countries: entries,
        notes: ds.notes.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads a dataset written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<PanelDataset> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let m: DatasetManifest = serde_json::from_str(&text)?;
    if spec_hash(&m.spec) != m.spec_hash {
        return Err(Error::Data(format!("{}: spec hash mismatch", mpath.display())));
    }
    let spec = m.spec;
    let h = spec.freq_mismatch;
    let nh = spec.n_high();
    let nl = spec.n_low();
    let mut countries = Vec::new();
    for entry in &m.countries {
        let path: PathBuf = dir.join(&entry.file);
        let mut rdr = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let mut price = Vec::with_capacity(m.n_days * h);
        let mut high = vec![Vec::with_capacity(m.n_days * h); nh];
        let mut low = vec![Vec::with_capacity(m.n_days); nl];
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(&path, e))?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: k + 2,
                    message: format!("bad value '{}'", &rec[i]),
                })
            };
            price.push(parse(2)?);
            for (j, cov) in spec.covariates.iter().enumerate() {
                let v = parse(3 + j)?;
                match cov.frequency {
                    Frequency::High => high[j].push(v),
                    Frequency::Low if k % h == 0 => low[j - nh].push(v),
                    Frequency::Low => {}
                }
            }
        }
        countries.push(CountryPanel {
            name: entry.name.clone(),
            price,
            high,
            low,
            scaling: entry
                .scaling
                .iter()
                .map(|s| Standardization {
                    mean: s.mean,
                    sd: s.sd,
                })
                .collect(),
            raw_hours: entry.raw_hours,
        });
    }
    let ds = PanelDataset {
        spec,
        start: m.start,
        n_days: m.n_days,
        presample_days: m.presample_days,
        countries,
        notes: m.notes,
    };
    ds.validate()?;
    Ok(ds)
}
