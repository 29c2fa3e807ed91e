//! Retained draws of one chain, in memory or streamed to CSV with a JSON
//! header alongside.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::state::{EffectScales, ParameterState};
use crate::error::{Error, Result};

pub const STORE_VERSION: u32 = 1;

/// Column names and run metadata of a draw table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawHeader {
    pub format_version: u32,
    pub columns: Vec<String>,
    pub coefficients: Vec<String>,
    pub countries: Vec<String>,
    pub periods: usize,
    pub chain: u64,
    pub seed: u64,
    pub config_hash: String,
    pub burn_in: usize,
    pub thin: usize,
    pub n_draws: usize,
    /// Whether psi and zeta columns are present.
    pub random_effects: bool,
    /// Posterior means of psi and zeta, kept when their draws are not.
    pub psi_mean: Option<Vec<Vec<f64>>>,
    pub zeta_mean: Option<Vec<Vec<f64>>>,
}

impl DrawHeader {
    pub fn new(coefficients: Vec<String>, countries: Vec<String>, periods: usize, random_effects: bool) -> Self {
        let mut columns: Vec<String> = coefficients.iter().map(|c| format!("gamma.{c}")).collect();
        columns.push("sigma2".into());
        columns.extend((0..periods).map(|h| format!("lambda.{h}")));
        columns.extend(countries.iter().map(|c| format!("chi.{c}")));
        for prefix in ["q", "r"] {
            for g in ["mu", "alpha", "beta"] {
                columns.push(format!("{prefix}_{g}"));
            }
        }
        if random_effects {
            for h in 0..periods {
                columns.extend(coefficients.iter().map(|c| format!("psi.{h}.{c}")));
            }
            for country in &countries {
                columns.extend(coefficients.iter().map(|c| format!("zeta.{country}.{c}")));
            }
        }
        DrawHeader {
            format_version: STORE_VERSION,
            columns,
            coefficients,
            countries,
            periods,
            chain: 0,
            seed: 0,
            config_hash: String::new(),
            burn_in: 0,
            thin: 1,
            n_draws: 0,
            random_effects,
            psi_mean: None,
            zeta_mean: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Index(format!("no column '{name}' in draws")))
    }

    pub fn gamma_col(&self, l: usize) -> usize {
        l
    }

    pub fn sigma2_col(&self) -> usize {
        self.dim()
    }

    pub fn lambda_col(&self, h: usize) -> usize {
        self.dim() + 1 + h
    }

    pub fn chi_col(&self, g: usize) -> usize {
        self.dim() + 1 + self.periods + g
    }

    /// First of the six q/r columns.
    fn scales_col(&self) -> usize {
        self.dim() + 1 + self.periods + self.countries.len()
    }

    pub fn psi_col(&self, h: usize, l: usize) -> Option<usize> {
        self.random_effects.then(|| self.scales_col() + 6 + h * self.dim() + l)
    }

    pub fn zeta_col(&self, g: usize, l: usize) -> Option<usize> {
        self.random_effects
            .then(|| self.scales_col() + 6 + (self.periods + g) * self.dim() + l)
    }

    /// Flattens a state into one row of this table.
    pub fn encode(&self, s: &ParameterState) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.n_columns());
        row.extend(&s.gamma);
        row.push(s.sigma2);
        row.extend(&s.lambda);
        row.extend(&s.chi);
        row.extend([s.q.mu, s.q.alpha, s.q.beta, s.r.mu, s.r.alpha, s.r.beta]);
        if self.random_effects {
            row.extend(s.psi.iter().flatten());
            row.extend(s.zeta.iter().flatten());
        }
        row
    }

    /// Rebuilds a state from a row. Without stored random effects, psi and
    /// zeta are the recorded posterior means, or zero if none were kept.
    pub fn decode(&self, row: &[f64]) -> ParameterState {
        let (dim, h_n, g_n) = (self.dim(), self.periods, self.countries.len());
        let sc = self.scales_col();
        let chunk = |start: usize, n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|k| row[start + k * dim..start + (k + 1) * dim].to_vec()).collect()
        };
        let (psi, zeta) = if self.random_effects {
            (chunk(sc + 6, h_n), chunk(sc + 6 + h_n * dim, g_n))
        } else {
            (
                self.psi_mean.clone().unwrap_or_else(|| vec![vec![0.0; dim]; h_n]),
                self.zeta_mean.clone().unwrap_or_else(|| vec![vec![0.0; dim]; g_n]),
            )
        };
        ParameterState {
            gamma: row[..dim].to_vec(),
            psi,
            zeta,
            sigma2: row[dim],
            lambda: row[dim + 1..dim + 1 + h_n].to_vec(),
            chi: row[dim + 1 + h_n..sc].to_vec(),
            q: EffectScales {
                mu: row[sc],
                alpha: row[sc + 1],
                beta: row[sc + 2],
            },
            r: EffectScales {
                mu: row[sc + 3],
                alpha: row[sc + 4],
                beta: row[sc + 5],
            },
        }
    }
}

/// Destination for retained draws.
pub trait DrawSink {
    fn push(&mut self, row: &[f64]) -> Result<()>;
    fn finish(&mut self, header: &DrawHeader) -> Result<()>;
}

/// Retained draws held in memory, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    header: DrawHeader,
    values: Vec<f64>,
}

fn csv_path(stem: &Path) -> PathBuf {
    stem.with_extension("csv")
}

fn json_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

impl DrawStore {
    pub fn new(header: DrawHeader) -> Self {
        DrawStore { header, values: Vec::new() }
    }

    pub fn header(&self) -> &DrawHeader {
        &self.header
    }

    pub fn n_draws(&self) -> usize {
        self.values.len() / self.header.n_columns().max(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.header.n_columns();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.header.n_columns().max(1))
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.column(self.header.column_index(name)?))
    }

    pub fn state(&self, i: usize) -> ParameterState {
        self.header.decode(self.row(i))
    }

    pub fn push_state(&mut self, s: &ParameterState) {
        let row = self.header.encode(s);
        self.values.extend(row);
        self.header.n_draws = self.n_draws();
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.header.n_columns(), "row length");
        self.values.extend_from_slice(row);
        self.header.n_draws = self.n_draws();
    }

    pub fn header_mut(&mut self) -> &mut DrawHeader {
        &mut self.header
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        let mut w = DrawWriter::create(stem, &self.header)?;
        for r in self.rows() {
            w.push(r)?;
        }
        w.finish(&self.header)
    }

    /// Reads a table written by [`DrawStore::write`] or [`DrawWriter`].
    pub fn read(stem: &Path) -> Result<Self> {
        let jpath = json_path(stem);
        let text = std::fs::read_to_string(&jpath).map_err(|e| Error::io(&jpath, e))?;
        let header: DrawHeader = serde_json::from_str(&text)?;
        if header.format_version != STORE_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported draw format version {}",
                jpath.display(),
                header.format_version
            )));
        }
        let cpath = csv_path(stem);
        let file = File::open(&cpath).map_err(|e| Error::io(&cpath, e))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Data(format!("{}: empty draw file", cpath.display())))?
            .map_err(|e| Error::io(&cpath, e))?;
        if first.split(',').ne(header.columns.iter().map(String::as_str)) {
            return Err(Error::Data(format!("{}: header does not match metadata", cpath.display())));
        }
        let n = header.n_columns();
        let mut values = Vec::with_capacity(header.n_draws * n);
        for (k, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(&cpath, e))?;
            let before = values.len();
            for field in line.split(',') {
                values.push(field.parse::<f64>().map_err(|_| Error::Parse {
                    path: cpath.clone(),
                    line: k + 2,
                    message: format!("bad value '{field}'"),
                })?);
            }
            if values.len() - before != n {
                return Err(Error::Parse {
                    path: cpath.clone(),
                    line: k + 2,
                    message: format!("expected {n} fields"),
                });
            }
        }
        let store = DrawStore { header, values };
        if store.n_draws() != store.header.n_draws {
            return Err(Error::Data(format!(
                "{}: {} draws, metadata says {}",
                cpath.display(),
                store.n_draws(),
                store.header.n_draws
            )));
        }
        Ok(store)
    }
}

impl DrawSink for DrawStore {
    fn push(&mut self, row: &[f64]) -> Result<()> {
        self.values.extend_from_slice(row);
        Ok(())
    }

    fn finish(&mut self, header: &DrawHeader) -> Result<()> {
        self.header = header.clone();
        self.header.n_draws = self.n_draws();
        Ok(())
    }
}

/// Streams draws to `<stem>.csv`; the header JSON is written on finish.
pub struct DrawWriter {
    out: BufWriter<File>,
    stem: PathBuf,
    rows: usize,
    line: String,
}

impl DrawWriter {
    pub fn create(stem: &Path, header: &DrawHeader) -> Result<Self> {
        let cpath = csv_path(stem);
        let file = File::create(&cpath).map_err(|e| Error::io(&cpath, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.columns.join(",")).map_err(|e| Error::io(&cpath, e))?;
        Ok(DrawWriter {
            out,
            stem: stem.to_path_buf(),
            rows: 0,
            line: String::new(),
        })
    }
}

impl DrawSink for DrawWriter {
    fn push(&mut self, row: &[f64]) -> Result<()> {
        use std::fmt::Write as _;
        self.line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                self.line.push(',');
            }
            // Debug formatting is shortest round-trip and switches to
            // exponent notation for extreme magnitudes
            write!(self.line, "{v:?}").expect("string write");
        }
        self.line.push('\n');
        self.rows += 1;
        self.out
            .write_all(self.line.as_bytes())
            .map_err(|e| Error::io(csv_path(&self.stem), e))
    }

    fn finish(&mut self, header: &DrawHeader) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(csv_path(&self.stem), e))?;
        let mut h = header.clone();
        h.n_draws = self.rows;
        let jpath = json_path(&self.stem);
        std::fs::write(&jpath, serde_json::to_string_pretty(&h)?).map_err(|e| Error::io(&jpath, e))
    }
}
