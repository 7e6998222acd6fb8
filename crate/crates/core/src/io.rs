//! Reading and writing measures, point lists and regions.
//!
//! Measures and points are CSV (`x_1,...,x_n[,weight]`, optional header,
//! `#` comments); regions and reports are JSON. A measure file ending in
//! `.json` is read as `{"atoms":[{"point":[...],"weight":w}, ...]}`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, RegionSet};
use crate::measure::DiscreteMeasure;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), line, message: message.into() }
}

/// Numeric rows of a CSV text, each with its 1-based line number. A first
/// row that does not parse is treated as a header.
pub fn parse_rows(text: &str, path: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut first = true;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push((line, v)),
            Err(_) if first => {}
            Err(_) => {
                let bad = rec.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                return Err(parse_err(path, line, format!("not a number: {bad:?}")));
            }
        }
        first = false;
    }
    Ok(rows)
}

fn check_width(rows: &[(usize, Vec<f64>)], path: &str, extra: usize) -> Result<usize> {
    let Some((_, r0)) = rows.first() else {
        return Err(parse_err(path, 0, "no data rows"));
    };
    let width = r0.len();
    if width < 2 + extra {
        return Err(parse_err(path, rows[0].0, format!("expected at least {} columns", 2 + extra)));
    }
    for (line, r) in rows {
        if r.len() != width {
            return Err(parse_err(path, *line, format!("expected {width} columns, found {}", r.len())));
        }
        if let Some(v) = r.iter().find(|v| !v.is_finite()) {
            return Err(parse_err(path, *line, format!("non-finite value {v}")));
        }
    }
    Ok(width - extra)
}

pub fn parse_points_csv(text: &str, path: &str) -> Result<PointSet<f64>> {
    let rows = parse_rows(text, path)?;
    let dim = check_width(&rows, path, 0)?;
    let mut pts = PointSet::with_capacity(dim, rows.len());
    for (_, r) in &rows {
        pts.push(r)?;
    }
    Ok(pts)
}

pub fn parse_measure_csv(text: &str, path: &str) -> Result<DiscreteMeasure<f64>> {
    let rows = parse_rows(text, path)?;
    let dim = check_width(&rows, path, 1)?;
    let mut pts = PointSet::with_capacity(dim, rows.len());
    let mut w = Vec::with_capacity(rows.len());
    for (line, r) in &rows {
        if r[dim] < 0.0 {
            return Err(parse_err(path, *line, "negative weight"));
        }
        pts.push(&r[..dim])?;
        w.push(r[dim]);
    }
    DiscreteMeasure::new(pts, w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub point: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub atoms: Vec<AtomRecord>,
}

impl MeasureFile {
    pub fn from_measure(mu: &DiscreteMeasure<f64>) -> Self {
        Self {
            atoms: mu.iter().map(|(p, w)| AtomRecord { point: p.to_vec(), weight: w }).collect(),
        }
    }

    pub fn into_measure(self) -> Result<DiscreteMeasure<f64>> {
        let dim = self.atoms.first().map_or(0, |a| a.point.len());
        if dim == 0 {
            return Err(Error::InvalidParameter("measure has no atoms".into()));
        }
        let mut pts = PointSet::with_capacity(dim, self.atoms.len());
        let mut w = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            pts.push(&a.point)?;
            w.push(a.weight);
        }
        DiscreteMeasure::new(pts, w)
    }
}

fn json_err(path: &str, e: serde_json::Error) -> Error {
    parse_err(path, e.line(), e.to_string())
}

pub fn parse_measure_json(text: &str, path: &str) -> Result<DiscreteMeasure<f64>> {
    let file: MeasureFile = serde_json::from_str(text).map_err(|e| json_err(path, e))?;
    file.into_measure()
}

pub fn parse_region_json(text: &str, path: &str) -> Result<RegionSet<f64>> {
    let set: RegionSet<f64> = serde_json::from_str(text).map_err(|e| json_err(path, e))?;
    set.validate()?;
    Ok(set)
}

/// Reads a file, or standard input when `path` is `-`.
pub fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| io_err(path, e))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure<f64>> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    if is_json(path) {
        parse_measure_json(&text, &name)
    } else {
        parse_measure_csv(&text, &name)
    }
}

pub fn read_points(path: &Path) -> Result<PointSet<f64>> {
    parse_points_csv(&read_text(path)?, &path.display().to_string())
}

pub fn read_region(path: &Path) -> Result<RegionSet<f64>> {
    parse_region_json(&read_text(path)?, &path.display().to_string())
}

/// Formats a float so that it parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

pub fn measure_csv(mu: &DiscreteMeasure<f64>) -> String {
    let mut s = String::new();
    for (p, w) in mu.iter() {
        for v in p {
            s.push_str(&fmt_f64(*v));
            s.push(',');
        }
        s.push_str(&fmt_f64(w));
        s.push('\n');
    }
    s
}

/// Rows `x_1,...,x_n[,extra...]`.
pub fn table_csv<'a>(rows: impl IntoIterator<Item = (&'a [f64], Vec<f64>)>) -> String {
    let mut s = String::new();
    for (p, extra) in rows {
        let cells: Vec<String> = p.iter().chain(&extra).map(|v| fmt_f64(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn points_csv(pts: &PointSet<f64>) -> String {
    table_csv(pts.iter().map(|p| (p, Vec::new())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}
