use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};

/// Hourly observations for one country on a local-time grid.
///
/// After ingestion every complete day holds exactly `periods_per_day` rows;
/// only the final day may be shorter, and it is never used for estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyTable {
    pub country: String,
    pub periods_per_day: usize,
    pub timestamps: Vec<NaiveDateTime>,
    pub price: Vec<f64>,
    /// Names of the forecast columns, in file order.
    pub columns: Vec<String>,
    /// One vector per entry of `columns`.
    pub values: Vec<Vec<f64>>,
    pub repairs: Vec<ClockRepair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockRepair {
    /// A repeated local hour was dropped.
    DroppedDuplicate { date: NaiveDate, slot: usize },
    /// A skipped local hour was filled by linear interpolation.
    FilledGap { date: NaiveDate, slot: usize },
}

impl HourlyTable {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Calendar days carrying a full set of periods, in order.
    pub fn complete_days(&self) -> Vec<NaiveDate> {
        let h = self.periods_per_day;
        self.timestamps
            .chunks(h)
            .filter(|c| c.len() == h)
            .map(|c| c[0].date())
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i].as_slice())
    }

    /// Writes the table in the ingestion format.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut header = vec!["timestamp".to_string(), "price".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(|e| csv_io(path, e))?;
        for (i, ts) in self.timestamps.iter().enumerate() {
            let mut row = vec![ts.format("%Y-%m-%dT%H:%M").to_string(), self.price[i].to_string()];
            row.extend(self.values.iter().map(|c| c[i].to_string()));
            w.write_record(&row).map_err(|e| csv_io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Daily prices, one row per calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyTable {
    pub dates: Vec<NaiveDate>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Number of cells filled by interpolation.
    pub filled: usize,
}

impl DailyTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let first = *self.dates.first()?;
        let offset = (date - first).num_days();
        (offset >= 0 && (offset as usize) < self.dates.len()).then_some(offset as usize)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut header = vec!["date".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(|e| csv_io(path, e))?;
        for (i, d) in self.dates.iter().enumerate() {
            let mut row = vec![d.format("%Y-%m-%d").to_string()];
            row.extend(self.values.iter().map(|c| c[i].to_string()));
            w.write_record(&row).map_err(|e| csv_io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_local());
    }
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn parse_value(s: &str) -> std::result::Result<f64, ()> {
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(()),
    }
}

/// Fills NaN runs by linear interpolation between the nearest finite
/// neighbours. Returns the number of filled cells, or the index of a NaN
/// that has no anchor on one side.
pub fn fill_linear(values: &mut [f64]) -> std::result::Result<usize, usize> {
    let mut filled = 0;
    let mut last: Option<usize> = None;
    let mut i = 0;
    while i < values.len() {
        if values[i].is_nan() {
            let start = i;
            while i < values.len() && values[i].is_nan() {
                i += 1;
            }
            let Some(left) = last else { return Err(start) };
            if i == values.len() {
                return Err(start);
            }
            let (x0, x1) = (values[left], values[i]);
            let span = (i - left) as f64;
            for (k, v) in values.iter_mut().enumerate().take(i).skip(start) {
                *v = x0 + (x1 - x0) * (k - left) as f64 / span;
                filled += 1;
            }
        }
        last = Some(i);
        i += 1;
    }
    Ok(filled)
}

struct RawRow {
    line: usize,
    ts: NaiveDateTime,
    slot: usize,
    values: Vec<f64>,
}

/// Reads an hourly CSV with header `timestamp,price,<columns...>`.
pub fn ingest_hourly(
    path: &Path,
    country: &str,
    periods_per_day: usize,
    columns: &[String],
) -> Result<HourlyTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_hourly(file, path, country, periods_per_day, columns)
}

pub fn parse_hourly<R: Read>(
    reader: R,
    path: &Path,
    country: &str,
    periods_per_day: usize,
    columns: &[String],
) -> Result<HourlyTable> {
    let h = periods_per_day;
    if h == 0 || 1440 % h != 0 {
        return Err(Error::Config(format!(
            "{h} periods per day do not divide a 24-hour clock"
        )));
    }
    let minutes_per_slot = 1440 / h;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut expected = vec!["timestamp".to_string(), "price".to_string()];
    expected.extend(columns.iter().cloned());
    if header != expected {
        return Err(parse_err(
            1,
            format!("expected header '{}', found '{}'", expected.join(","), header.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let ts = parse_timestamp(&rec[0])
            .ok_or_else(|| parse_err(line, format!("bad timestamp '{}'", &rec[0])))?;
        let minute = ts.hour() as usize * 60 + ts.minute() as usize;
        if !minute.is_multiple_of(minutes_per_slot) || ts.second() != 0 {
            return Err(parse_err(
                line,
                format!("timestamp {ts} is not on the {h}-period grid"),
            ));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(parse_value)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err(line, "malformed numeric field".into()))?;
        rows.push(RawRow {
            line,
            ts,
            slot: minute / minutes_per_slot,
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }

    // Group by calendar day, repairing clock-change days.
    let mut out: Vec<(NaiveDateTime, Vec<f64>)> = Vec::with_capacity(rows.len());
    let mut repairs = Vec::new();
    let mut start = 0;
    let mut prev_date: Option<NaiveDate> = None;
    while start < rows.len() {
        let date = rows[start].ts.date();
        if let Some(p) = prev_date {
            if p.succ_opt() != Some(date) {
                return Err(parse_err(
                    rows[start].line,
                    format!("day {date} does not follow {p}"),
                ));
            }
        }
        let mut end = start;
        while end < rows.len() && rows[end].ts.date() == date {
            end += 1;
        }
        let day = &rows[start..end];
        let is_last = end == rows.len();
        let mut slots: Vec<&RawRow> = day.iter().collect();
        // A last day that still reaches the final slot lost an inner hour to
        // the clock change rather than being cut short.
        let reaches_end = day.last().is_some_and(|r| r.slot == h - 1);

        if day.len() == h + 1 {
            let dup = (1..slots.len())
                .find(|&i| slots[i].slot == slots[i - 1].slot)
                .ok_or_else(|| {
                    parse_err(
                        day[0].line,
                        format!("day {date} has {} rows but no repeated hour", h + 1),
                    )
                })?;
            repairs.push(ClockRepair::DroppedDuplicate {
                date,
                slot: slots[dup].slot,
            });
            slots.remove(dup);
        }
        for w in slots.windows(2) {
            if w[1].slot <= w[0].slot {
                return Err(parse_err(
                    w[1].line,
                    format!("timestamps not increasing at {}", w[1].ts),
                ));
            }
        }

        if slots.len() == h {
            for r in &slots {
                out.push((r.ts, r.values.clone()));
            }
        } else if slots.len() == h - 1 && h > 1 && (!is_last || reaches_end) {
            let missing = (0..h)
                .find(|s| !slots.iter().any(|r| r.slot == *s))
                .expect("one slot missing");
            repairs.push(ClockRepair::FilledGap {
                date,
                slot: missing,
            });
            let width = slots[0].values.len();
            let mut it = slots.iter().peekable();
            for s in 0..h {
                if s == missing {
                    let ts = date
                        .and_hms_opt(0, 0, 0)
                        .expect("midnight")
                        + chrono::Duration::minutes((s * minutes_per_slot) as i64);
                    out.push((ts, vec![f64::NAN; width]));
                } else {
                    let r = it.next().expect("slot present");
                    out.push((r.ts, r.values.clone()));
                }
            }
        } else if is_last && slots.len() < h {
            // Trailing partial day: kept, never estimated on.
            for r in &slots {
                out.push((r.ts, r.values.clone()));
            }
        } else {
            return Err(parse_err(
                day[0].line,
                format!(
                    "day {date} has {} rows; expected {} (or {}/{} on clock changes)",
                    day.len(),
                    h,
                    h.saturating_sub(1),
                    h + 1
                ),
            ));
        }
        prev_date = Some(date);
        start = end;
    }

    let n_cols = columns.len() + 1;
    let mut series: Vec<Vec<f64>> = (0..n_cols)
        .map(|c| out.iter().map(|(_, v)| v[c]).collect())
        .collect();
    for (c, s) in series.iter_mut().enumerate() {
        fill_linear(s).map_err(|i| {
            let name = if c == 0 { "price" } else { &columns[c - 1] };
            Error::Data(format!(
                "{}: missing {name} at {} cannot be interpolated (no neighbour on one side)",
                path.display(),
                out[i].0
            ))
        })?;
    }
    let price = series.remove(0);
    Ok(HourlyTable {
        country: country.to_string(),
        periods_per_day: h,
        timestamps: out.into_iter().map(|(t, _)| t).collect(),
        price,
        columns: columns.to_vec(),
        values: series,
        repairs,
    })
}

/// Reads a daily CSV with header `date,<columns...>`; weekend and holiday
/// gaps, whether absent rows or empty cells, are linearly interpolated.
pub fn ingest_daily(path: &Path, columns: &[String]) -> Result<DailyTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_daily(file, path, columns)
}

pub fn parse_daily<R: Read>(reader: R, path: &Path, columns: &[String]) -> Result<DailyTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut expected = vec!["date".to_string()];
    expected.extend(columns.iter().cloned());
    if header != expected {
        return Err(parse_err(
            1,
            format!("expected header '{}', found '{}'", expected.join(","), header.join(",")),
        ));
    }

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); columns.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| parse_err(line, format!("bad date '{}'", &rec[0])))?;
        if let Some(&last) = dates.last() {
            if date <= last {
                return Err(parse_err(line, format!("date {date} not after {last}")));
            }
            // Absent calendar days become empty rows.
            let mut d = last.succ_opt().expect("date in range");
            while d < date {
                dates.push(d);
                for v in values.iter_mut() {
                    v.push(f64::NAN);
                }
                d = d.succ_opt().expect("date in range");
            }
        }
        dates.push(date);
        for (c, field) in rec.iter().skip(1).enumerate() {
            let v = parse_value(field)
                .map_err(|_| parse_err(line, format!("malformed value '{field}'")))?;
            values[c].push(v);
        }
    }
    if dates.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }
    let mut filled = 0;
    for (c, v) in values.iter_mut().enumerate() {
        filled += fill_linear(v).map_err(|i| {
            Error::Data(format!(
                "{}: {} missing on {} with no observation on one side",
                path.display(),
                columns[c],
                dates[i]
            ))
        })?;
    }
    Ok(DailyTable {
        dates,
        columns: columns.to_vec(),
        values,
        filled,
    })
}
