//! File formats shared by the library and the command-line driver:
//! CSV payloads for fields, trajectory ensembles, band structures and
//! plain numeric tables, plus the JSON run manifest. Floats are written
//! with 17 significant digits so every emitted file re-ingests to the
//! exact same bit pattern.

use crate::quantum::BandStructure;
use crate::stochastic::TrajectoryEnsemble;
use num_complex::Complex64;
use std::io::{BufRead, BufReader, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} columns, got {got}")]
    ColumnCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {value:?} is not a number")]
    BadNumber { line: usize, value: String },
    #[error("line {line}: path index {value:?} is not an integer")]
    BadPathIndex { line: usize, value: String },
    #[error("file has no data rows")]
    Empty,
    #[error("line {line}: unexpected header {header:?}")]
    BadHeader { line: usize, header: String },
}

/// 17-significant-digit decimal form; round-trips any finite f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sampled complex field as `x,re,im` rows.
pub fn write_field_csv<W: Write>(
    mut w: W,
    points: &[f64],
    values: &[Complex64],
) -> Result<(), ExportError> {
    writeln!(w, "x,re,im")?;
    for (x, v) in points.iter().zip(values) {
        writeln!(
            w,
            "{},{},{}",
            format_float(*x),
            format_float(v.re),
            format_float(v.im)
        )?;
    }
    Ok(())
}

pub fn read_field_csv<R: Read>(r: R) -> Result<Vec<(f64, Complex64)>, ExportError> {
    let mut rows = Vec::new();
    for (line, cols) in CsvLines::new(r, "x,re,im")? {
        let cols = cols?;
        let [x, re, im] = parse_columns::<3>(line, &cols)?;
        rows.push((x, Complex64::new(re, im)));
    }
    if rows.is_empty() {
        return Err(ExportError::Empty);
    }
    Ok(rows)
}

/// Trajectory ensemble as `path,time,position` rows, path-major.
pub fn write_ensemble_csv<W: Write>(
    mut w: W,
    ensemble: &TrajectoryEnsemble,
) -> Result<(), ExportError> {
    writeln!(w, "path,time,position")?;
    for (p, path) in ensemble.positions().iter().enumerate() {
        for (t, x) in ensemble.times().iter().zip(path) {
            writeln!(w, "{p},{},{}", format_float(*t), format_float(*x))?;
        }
    }
    Ok(())
}

/// Ensemble CSV rows, in file order.
pub fn read_ensemble_csv<R: Read>(r: R) -> Result<Vec<(usize, f64, f64)>, ExportError> {
    let mut rows = Vec::new();
    for (line, cols) in CsvLines::new(r, "path,time,position")? {
        let cols = cols?;
        if cols.len() != 3 {
            return Err(ExportError::ColumnCount {
                line,
                expected: 3,
                got: cols.len(),
            });
        }
        let path: usize = cols[0].parse().map_err(|_| ExportError::BadPathIndex {
            line,
            value: cols[0].clone(),
        })?;
        let time = parse_number(line, &cols[1])?;
        let position = parse_number(line, &cols[2])?;
        rows.push((path, time, position));
    }
    if rows.is_empty() {
        return Err(ExportError::Empty);
    }
    Ok(rows)
}

/// Band structure as `q,band_0,…,band_{n-1}` rows.
pub fn write_bands_csv<W: Write>(mut w: W, bands: &BandStructure) -> Result<(), ExportError> {
    let n = bands.n_bands();
    let header: Vec<String> = std::iter::once("q".to_string())
        .chain((0..n).map(|i| format!("band_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (q, row) in bands.q_values().iter().zip(bands.bands()) {
        let cells: Vec<String> = std::iter::once(format_float(*q))
            .chain(row.iter().map(|&e| format_float(e)))
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Band CSV back as (q, energies) rows.
pub fn read_bands_csv<R: Read>(r: R) -> Result<Vec<(f64, Vec<f64>)>, ExportError> {
    let mut reader = BufReader::new(r);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let header = header.trim_end();
    if !header.starts_with("q,band_0") {
        return Err(ExportError::BadHeader {
            line: 1,
            header: header.to_string(),
        });
    }
    let expected = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line_result) in reader.lines().enumerate() {
        let line_no = i + 2;
        let line = line_result?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != expected {
            return Err(ExportError::ColumnCount {
                line: line_no,
                expected,
                got: cols.len(),
            });
        }
        let mut nums = cols.iter().map(|c| parse_number(line_no, c));
        let q = nums.next().unwrap()?;
        let energies = nums.collect::<Result<Vec<f64>, _>>()?;
        rows.push((q, energies));
    }
    if rows.is_empty() {
        return Err(ExportError::Empty);
    }
    Ok(rows)
}

/// Generic numeric table with a caller-supplied header.
pub fn write_table_csv<W: Write>(
    mut w: W,
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<(), ExportError> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Run manifest echoing the fully resolved configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

pub fn write_manifest_json<W: Write>(w: W, manifest: &RunManifest) -> Result<(), ExportError> {
    serde_json::to_writer_pretty(w, manifest).map_err(std::io::Error::from)?;
    Ok(())
}

pub fn read_manifest_json<R: Read>(r: R) -> Result<RunManifest, ExportError> {
    let manifest = serde_json::from_reader(r).map_err(std::io::Error::from)?;
    Ok(manifest)
}

struct CsvLines<R: Read> {
    lines: std::iter::Enumerate<std::io::Lines<BufReader<R>>>,
}

impl<R: Read> CsvLines<R> {
    fn new(r: R, expected_header: &str) -> Result<Self, ExportError> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        if header.trim_end() != expected_header {
            return Err(ExportError::BadHeader {
                line: 1,
                header: header.trim_end().to_string(),
            });
        }
        Ok(Self {
            lines: reader.lines().enumerate(),
        })
    }
}

impl<R: Read> Iterator for CsvLines<R> {
    type Item = (usize, Result<Vec<String>, ExportError>);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (i, line) = self.lines.next()?;
            let line_no = i + 2;
            match line {
                Err(e) => return Some((line_no, Err(e.into()))),
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => {
                    let cols = l.split(',').map(|s| s.to_string()).collect();
                    return Some((line_no, Ok(cols)));
                }
            }
        }
    }
}

fn parse_number(line: usize, raw: &str) -> Result<f64, ExportError> {
    raw.trim().parse::<f64>().map_err(|_| ExportError::BadNumber {
        line,
        value: raw.to_string(),
    })
}

fn parse_columns<const N: usize>(line: usize, cols: &[String]) -> Result<[f64; N], ExportError> {
    if cols.len() != N {
        return Err(ExportError::ColumnCount {
            line,
            expected: N,
            got: cols.len(),
        });
    }
    let mut out = [0.0; N];
    for (slot, raw) in out.iter_mut().zip(cols) {
        *slot = parse_number(line, raw)?;
    }
    Ok(out)
}
