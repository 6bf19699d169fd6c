//! Loading and calendar alignment of daily price panels and monthly PE series.
//!
//! ## Price panel CSV (wide)
//!
//! ```text
//! date,Auto,Bankex,...,Sensex
//! 2006-01-02,4123.5,5310.25,...,9390.14
//! ```
//!
//! Dates are ISO `YYYY-MM-DD` and must be strictly increasing. Values use `.`
//! as decimal separator and no thousands separators. A blank cell (or `NA`,
//! `N/A`, `NaN`, `null`) is a missing observation.
//!
//! ## PE CSV
//!
//! ```text
//! month,pe
//! 2006-01,18.6
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::MonthKey;

/// What to do with a trading date that has a missing or non-positive cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingCellAction {
    /// Drop the whole row so every entity stays on one trading calendar.
    DropDate,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestPolicy {
    pub missing_cell_action: MissingCellAction,
    /// Months with fewer trading days than this are excluded from analysis.
    pub min_days_per_month: usize,
    pub benchmark_name: Option<String>,
}

impl Default for IngestPolicy {
    fn default() -> Self {
        IngestPolicy {
            missing_cell_action: MissingCellAction::DropDate,
            min_days_per_month: 15,
            benchmark_name: None,
        }
    }
}

impl IngestPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.min_days_per_month < 2 {
            return Err(Error::InvalidConfig(format!(
                "min_days_per_month must be at least 2, got {}",
                self.min_days_per_month
            )));
        }
        Ok(())
    }
}

/// Aligned daily closing levels, one column per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    entities: Vec<String>,
    dates: Vec<NaiveDate>,
    values: Array2<f64>,
}

impl PricePanel {
    /// Builds a panel, checking shape, date ordering and positivity.
    pub fn new(entities: Vec<String>, dates: Vec<NaiveDate>, values: Array2<f64>) -> Result<Self> {
        let context = "price panel";
        if values.dim() != (dates.len(), entities.len()) {
            return Err(Error::InvalidConfig(format!(
                "panel shape {:?} does not match {} dates x {} entities",
                values.dim(),
                dates.len(),
                entities.len()
            )));
        }
        check_entities(&entities, context)?;
        if dates.is_empty() {
            return Err(Error::EmptyPanel(context.to_string()));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::parse(
                context,
                0,
                format!("dates not strictly increasing at {}", w[1]),
            ));
        }
        for ((t, i), &v) in values.indexed_iter() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositivePrice {
                    context: context.to_string(),
                    line: t as u64 + 2,
                    entity: entities[i].clone(),
                    value: v,
                });
            }
        }
        Ok(PricePanel {
            entities,
            dates,
            values,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// `T x N` matrix of closing levels.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn column(&self, entity: usize) -> ArrayView1<'_, f64> {
        self.values.column(entity)
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entities.iter().position(|e| e == name)
    }

    /// Writes the wide CSV format, values at 12 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Write(e.to_string());
        let mut header = Vec::with_capacity(self.entities.len() + 1);
        header.push("date".to_string());
        header.extend(self.entities.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for (t, date) in self.dates.iter().enumerate() {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(date.format("%Y-%m-%d").to_string());
            rec.extend(
                self.values
                    .row(t)
                    .iter()
                    .map(|&v| format_significant(v, 12)),
            );
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Write(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to an in-memory buffer cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn check_entities(entities: &[String], context: &str) -> Result<()> {
    if entities.is_empty() {
        return Err(Error::parse(context, 1, "no entity columns"));
    }
    let mut seen = HashSet::new();
    for e in entities {
        if e.is_empty() {
            return Err(Error::parse(context, 1, "empty entity name"));
        }
        if !seen.insert(e.as_str()) {
            return Err(Error::parse(context, 1, format!("duplicate entity '{e}'")));
        }
    }
    Ok(())
}

/// Formats `x` in plain decimal notation with `digits` significant digits,
/// trailing zeros removed.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".to_string()
        } else {
            x.to_string()
        };
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i64 = exp.parse().expect("integer exponent");
    let mantissa_digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let n = mantissa_digits.len() as i64;
    let point = exp + 1;
    let mut out = String::new();
    if x < 0.0 {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&mantissa_digits);
    } else if point >= n {
        out.push_str(&mantissa_digits);
        out.extend(std::iter::repeat_n('0', (point - n) as usize));
    } else {
        out.push_str(&mantissa_digits[..point as usize]);
        out.push('.');
        out.push_str(&mantissa_digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty()
        || ["na", "n/a", "nan", "null"]
            .iter()
            .any(|m| cell.eq_ignore_ascii_case(m))
}

fn csv_error(context: &str, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        _ => err.to_string(),
    };
    Error::parse(context, line, message)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a wide price CSV from disk.
pub fn load_price_panel(path: impl AsRef<Path>, policy: &IngestPolicy) -> Result<PricePanel> {
    let path = path.as_ref();
    let file = open(path)?;
    read_price_panel(file, policy, &path.display().to_string())
}

/// Parses a wide price CSV; `context` names the source in error messages.
pub fn read_price_panel<R: Read>(
    reader: R,
    policy: &IngestPolicy,
    context: &str,
) -> Result<PricePanel> {
    policy.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(context, e))?.clone();
    match header.get(0) {
        Some(h) if h.eq_ignore_ascii_case("date") => {}
        _ => {
            return Err(Error::parse(
                context,
                1,
                "first header column must be 'date'",
            ))
        }
    }
    let entities: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    check_entities(&entities, context)?;
    if let Some(b) = &policy.benchmark_name {
        if !entities.iter().any(|e| e == b) {
            return Err(Error::InvalidConfig(format!(
                "benchmark '{b}' is not a column of {context}"
            )));
        }
    }

    let n = entities.len();
    let mut dates = Vec::new();
    let mut flat = Vec::new();
    let mut row = Vec::with_capacity(n);
    let mut last_date: Option<NaiveDate> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(context, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| Error::parse(context, line, format!("invalid date '{}'", &rec[0])))?;
        if let Some(prev) = last_date {
            if date <= prev {
                return Err(Error::parse(
                    context,
                    line,
                    format!("date {date} is not after {prev}"),
                ));
            }
        }
        last_date = Some(date);

        row.clear();
        let mut keep = true;
        for (i, cell) in rec.iter().skip(1).enumerate() {
            if is_missing(cell) {
                if policy.missing_cell_action == MissingCellAction::Fail {
                    return Err(Error::MissingPrice {
                        context: context.to_string(),
                        line,
                        entity: entities[i].clone(),
                    });
                }
                keep = false;
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(context, line, format!("invalid number '{cell}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(
                    context,
                    line,
                    format!("non-finite value '{cell}'"),
                ));
            }
            if v <= 0.0 {
                if policy.missing_cell_action == MissingCellAction::Fail {
                    return Err(Error::NonPositivePrice {
                        context: context.to_string(),
                        line,
                        entity: entities[i].clone(),
                        value: v,
                    });
                }
                keep = false;
                continue;
            }
            row.push(v);
        }
        if keep {
            dates.push(date);
            flat.extend_from_slice(&row);
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyPanel(context.to_string()));
    }
    let values = Array2::from_shape_vec((dates.len(), n), flat)
        .expect("row lengths checked by the csv reader");
    Ok(PricePanel {
        entities,
        dates,
        values,
    })
}

/// Monthly PE observations for the benchmark index, sorted by month.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeSeries {
    months: Vec<MonthKey>,
    values: Vec<f64>,
}

impl PeSeries {
    /// Sorts the observations; rejects duplicate months and non-positive values.
    pub fn new(mut entries: Vec<(MonthKey, f64)>) -> Result<Self> {
        Self::from_entries(&mut entries, "PE series")
    }

    fn from_entries(entries: &mut [(MonthKey, f64)], context: &str) -> Result<Self> {
        entries.sort_by_key(|(m, _)| *m);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateMonth {
                context: context.to_string(),
                month: w[0].0.to_string(),
            });
        }
        if let Some((m, v)) = entries.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositivePe {
                context: context.to_string(),
                month: m.to_string(),
                value: *v,
            });
        }
        Ok(PeSeries {
            months: entries.iter().map(|(m, _)| *m).collect(),
            values: entries.iter().map(|(_, v)| *v).collect(),
        })
    }

    pub fn months(&self) -> &[MonthKey] {
        &self.months
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn get(&self, month: MonthKey) -> Option<f64> {
        self.months
            .binary_search(&month)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (MonthKey, f64)> + '_ {
        self.months.iter().copied().zip(self.values.iter().copied())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Write(e.to_string());
        w.write_record(["month", "pe"]).map_err(io)?;
        for (m, v) in self.iter() {
            w.write_record([m.to_string(), format_significant(v, 12)])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Write(e.to_string()))?;
        Ok(())
    }
}

pub fn load_pe_series(path: impl AsRef<Path>) -> Result<PeSeries> {
    let path = path.as_ref();
    let file = open(path)?;
    read_pe_series(file, &path.display().to_string())
}

pub fn read_pe_series<R: Read>(reader: R, context: &str) -> Result<PeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(context, e))?.clone();
    let ok = header.len() == 2
        && header[0].eq_ignore_ascii_case("month")
        && header[1].eq_ignore_ascii_case("pe");
    if !ok {
        return Err(Error::parse(context, 1, "header must be 'month,pe'"));
    }
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(context, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let month: MonthKey = rec[0]
            .parse()
            .map_err(|e| Error::parse(context, line, format!("{e}")))?;
        let pe: f64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(context, line, format!("invalid PE '{}'", &rec[1])))?;
        entries.push((month, pe));
    }
    PeSeries::from_entries(&mut entries, context)
}

/// A calendar month's contiguous block of row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonthWindow {
    pub month: MonthKey,
    pub range: Range<usize>,
    /// False when the month has fewer than `min_days_per_month` rows.
    pub valid: bool,
}

impl MonthWindow {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// Splits sorted dates into calendar-month windows.
///
/// Works on any date axis: pass `PricePanel::dates` or `ReturnPanel::dates`
/// (returns are dated by their later day, so the latter is what the
/// analysis windows use).
pub fn month_windows(dates: &[NaiveDate], policy: &IngestPolicy) -> Vec<MonthWindow> {
    let mut out: Vec<MonthWindow> = Vec::new();
    let mut start = 0;
    for t in 1..=dates.len() {
        let boundary = t == dates.len() || MonthKey::of(dates[t]) != MonthKey::of(dates[start]);
        if boundary {
            out.push(MonthWindow {
                month: MonthKey::of(dates[start]),
                range: start..t,
                valid: t - start >= policy.min_days_per_month,
            });
            start = t;
        }
    }
    out
}
