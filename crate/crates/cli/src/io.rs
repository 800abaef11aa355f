//! CSV readers and writers for every file the pipeline touches.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use ecomplexity_core::data::{Exclusion, ProductKind, Series, TradeRecord, TradeTable};
use ecomplexity_core::linalg::Matrix;
use ecomplexity_core::rca::IncidenceMatrix;
use ecomplexity_core::ScoreVector;

use crate::error::CliError;
use crate::fmt::num;

pub const TRADE_HEADER: [&str; 4] = ["year", "country", "product", "value"];
pub const SERIES_HEADER: [&str; 3] = ["country", "year", "value"];
pub const KIND_HEADER: [&str; 2] = ["product", "kind"];
pub const EXCLUSION_HEADER: [&str; 2] = ["country", "period_start"];

/// Line numbers are 1-based and count the header.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("malformed row")]
    MalformedRow(usize),
    #[error("negative value")]
    NegativeValue(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("expected header `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::MalformedRow(l) | ParseError::NegativeValue(l) => Some(*l),
            ParseError::BadHeader { .. } => Some(1),
            ParseError::EmptyInput => None,
        }
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

/// Checks the header and hands each data row to `row` with its line number.
/// Returns the number of data rows.
fn read_rows<R: Read>(
    r: R,
    header: &[&str],
    mut row: impl FnMut(usize, &csv::StringRecord) -> Result<(), ParseError>,
) -> Result<usize, ParseError> {
    let mut rdr = reader(r);
    let mut records = rdr.records();
    let first = match records.next() {
        None => return Err(ParseError::EmptyInput),
        Some(Err(_)) => return Err(ParseError::MalformedRow(1)),
        Some(Ok(rec)) => rec,
    };
    if first.iter().collect::<Vec<_>>() != header {
        return Err(ParseError::BadHeader {
            expected: header.join(","),
            found: first.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut n = 0;
    for rec in records {
        let rec = rec.map_err(|e| {
            ParseError::MalformedRow(e.position().map_or(0, |p| p.line() as usize))
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            return Err(ParseError::MalformedRow(line));
        }
        row(line, &rec)?;
        n += 1;
    }
    Ok(n)
}

fn number(field: &str, line: usize) -> Result<f64, ParseError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::MalformedRow(line)),
    }
}

fn year(field: &str, line: usize) -> Result<i32, ParseError> {
    field.parse().map_err(|_| ParseError::MalformedRow(line))
}

/// `year,country,product,value`. Duplicate keys are summed; the second
/// value is the number of rows folded into an earlier one.
pub fn parse_trade_csv<R: Read>(r: R, source: &str) -> Result<(TradeTable, usize), ParseError> {
    let mut records = Vec::new();
    let n = read_rows(r, &TRADE_HEADER, |line, rec| {
        let value = number(&rec[3], line)?;
        if value < 0.0 {
            return Err(ParseError::NegativeValue(line));
        }
        let record = TradeRecord::new(year(&rec[0], line)?, &rec[1], &rec[2], value)
            .map_err(|_| ParseError::MalformedRow(line))?;
        records.push(record);
        Ok(())
    })?;
    if n == 0 {
        return Err(ParseError::EmptyInput);
    }
    Ok(TradeTable::aggregate(records, source))
}

pub fn write_trade_csv<W: Write>(table: &TradeTable, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRADE_HEADER)?;
    for r in table.records() {
        out.write_record([r.year.to_string(), r.country.clone(), r.product.clone(), num(r.value)])?;
    }
    out.flush()?;
    Ok(())
}

/// `country,year,value`.
pub fn parse_series<R: Read>(r: R) -> Result<Series, ParseError> {
    let mut series = Series::new();
    read_rows(r, &SERIES_HEADER, |line, rec| {
        if rec[0].is_empty() {
            return Err(ParseError::MalformedRow(line));
        }
        let key = (rec[0].to_string(), year(&rec[1], line)?);
        if series.insert(key, number(&rec[2], line)?).is_some() {
            return Err(ParseError::MalformedRow(line));
        }
        Ok(())
    })?;
    Ok(series)
}

/// `product,kind` with kind `good` or `service`.
pub fn parse_kinds<R: Read>(r: R) -> Result<BTreeMap<String, ProductKind>, ParseError> {
    let mut kinds = BTreeMap::new();
    read_rows(r, &KIND_HEADER, |line, rec| {
        let kind = ProductKind::parse(&rec[1]).ok_or(ParseError::MalformedRow(line))?;
        kinds.insert(rec[0].to_string(), kind);
        Ok(())
    })?;
    Ok(kinds)
}

/// One country code per line; blank lines and `#` comments are skipped.
pub fn parse_allow_list<R: Read>(mut r: R) -> Result<BTreeSet<String>, ParseError> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|_| ParseError::MalformedRow(0))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// `country,period_start`; an empty period excludes the country entirely.
pub fn parse_exclusions<R: Read>(r: R) -> Result<Vec<Exclusion>, ParseError> {
    let mut out = Vec::new();
    read_rows(r, &EXCLUSION_HEADER, |line, rec| {
        let period_start = if rec[1].is_empty() { None } else { Some(year(&rec[1], line)?) };
        out.push(Exclusion {
            country: rec[0].to_string(),
            period_start,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Labeled 0/1 matrix: header `country,<products...>`, one row per country.
pub fn parse_incidence<R: Read>(r: R) -> Result<IncidenceMatrix, ParseError> {
    let mut rdr = reader(r);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(ParseError::EmptyInput),
        Some(rec) => rec.map_err(|_| ParseError::MalformedRow(1))?,
    };
    if header.len() < 2 || &header[0] != "country" {
        return Err(ParseError::BadHeader {
            expected: "country,<product codes>".into(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let products: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut countries = Vec::new();
    let mut bits = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| ParseError::MalformedRow(e.position().map_or(0, |p| p.line() as usize)))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != products.len() + 1 {
            return Err(ParseError::MalformedRow(line));
        }
        countries.push(rec[0].to_string());
        for f in rec.iter().skip(1) {
            bits.push(match f {
                "0" => 0,
                "1" => 1,
                _ => return Err(ParseError::MalformedRow(line)),
            });
        }
    }
    if countries.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let n = products.len();
    IncidenceMatrix::new(countries, products, vec![ProductKind::Good; n], bits)
        .map_err(|_| ParseError::MalformedRow(1))
}

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

/// `label,value`, highest value first, ties by label.
pub fn scores_csv(scores: &ScoreVector) -> Vec<u8> {
    let mut out = String::from("label,value\n");
    for (label, v) in scores.sorted_desc() {
        out.push_str(&format!("{},{}\n", csv_field(label), num(v)));
    }
    out.into_bytes()
}

pub fn parse_scores<R: Read>(r: R) -> Result<Vec<(String, f64)>, ParseError> {
    let mut out = Vec::new();
    read_rows(r, &["label", "value"], |line, rec| {
        out.push((rec[0].to_string(), number(&rec[1], line)?));
        Ok(())
    })?;
    Ok(out)
}

pub fn matrix_csv(countries: &[String], products: &[String], values: &Matrix) -> Vec<u8> {
    let mut out = String::from("country");
    for p in products {
        out.push(',');
        out.push_str(&csv_field(p));
    }
    out.push('\n');
    for (i, c) in countries.iter().enumerate() {
        out.push_str(&csv_field(c));
        for v in values.row(i) {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn incidence_csv(m: &IncidenceMatrix) -> Vec<u8> {
    let mut out = String::from("country");
    for p in m.products() {
        out.push(',');
        out.push_str(&csv_field(p));
    }
    out.push('\n');
    for (i, c) in m.countries().iter().enumerate() {
        out.push_str(&csv_field(c));
        for b in m.row(i) {
            out.push(',');
            out.push(if *b == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Quotes a field only when CSV requires it.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
