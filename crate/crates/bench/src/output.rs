//! CSV tables for trial records and success curves.
//!
//! Reals are written with 12 significant digits (like C's `%.12g`), so equal
//! inputs give byte-identical files.

use std::io::{Read, Write};
use std::path::Path;

use stg_core::metrics::{CurvePoint, TrialRecord};

use crate::error::{BenchError, Result};

pub const RECORD_HEADER: [&str; 11] =
    ["method", "sweep_x", "N", "D", "K", "sigma", "seed", "recovered", "tpr", "fdr", "l2_error"];
pub const CURVE_HEADER: [&str; 6] = ["method", "sweep_x", "success_rate", "ci_low", "ci_high", "trials"];

/// Shortest rendering of `v` rounded to 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Csv(e.to_string())
}

pub fn write_records<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.method.clone(),
            fmt_num(r.sweep_x),
            r.n.to_string(),
            r.d.to_string(),
            r.k.to_string(),
            fmt_num(r.sigma),
            r.seed.to_string(),
            r.recovered.to_string(),
            fmt_num(r.tpr),
            fmt_num(r.fdr),
            fmt_num(r.l2_error),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn write_curves<W: Write>(out: W, curves: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER).map_err(csv_err)?;
    for c in curves {
        w.write_record([
            c.method.clone(),
            fmt_num(c.x),
            fmt_num(c.success_rate),
            fmt_num(c.ci_low),
            fmt_num(c.ci_high),
            c.trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| BenchError::io(path, e))
}

pub fn emit_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    write_records(std::io::BufWriter::new(create(path)?), records)
}

pub fn emit_curves(path: &Path, curves: &[CurvePoint]) -> Result<()> {
    write_curves(std::io::BufWriter::new(create(path)?), curves)
}

fn rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let found = r.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(BenchError::Csv(format!("unexpected header {:?}", found.iter().collect::<Vec<_>>())));
    }
    r.records().map(|row| row.map_err(csv_err)).collect()
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    row[i]
        .parse()
        .map_err(|_| BenchError::Csv(format!("bad {name} value `{}` on line {}", &row[i], line(row))))
}

fn line(row: &csv::StringRecord) -> u64 {
    row.position().map_or(0, |p| p.line())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    rows(input, &RECORD_HEADER)?
        .iter()
        .map(|row| {
            Ok(TrialRecord {
                method: row[0].to_string(),
                sweep_x: field(row, 1, "sweep_x")?,
                n: field(row, 2, "N")?,
                d: field(row, 3, "D")?,
                k: field(row, 4, "K")?,
                sigma: field(row, 5, "sigma")?,
                seed: field(row, 6, "seed")?,
                recovered: field(row, 7, "recovered")?,
                tpr: field(row, 8, "tpr")?,
                fdr: field(row, 9, "fdr")?,
                l2_error: field(row, 10, "l2_error")?,
            })
        })
        .collect()
}

pub fn read_curves<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
    rows(input, &CURVE_HEADER)?
        .iter()
        .map(|row| {
            Ok(CurvePoint {
                method: row[0].to_string(),
                x: field(row, 1, "sweep_x")?,
                success_rate: field(row, 2, "success_rate")?,
                ci_low: field(row, 3, "ci_low")?,
                ci_high: field(row, 4, "ci_high")?,
                trials: field(row, 5, "trials")?,
            })
        })
        .collect()
}
