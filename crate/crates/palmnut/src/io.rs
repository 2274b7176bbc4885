//! Portable file formats: raw float64 vector files with a JSON header line,
//! convergence-trace CSVs, and 16-bit PGM image export.
//!
//! All formats are byte-order-explicit (vector payloads little-endian, PGM
//! samples big-endian per the format), so files parse identically on any
//! platform. Vector files round-trip bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{SolverTrace, TraceRow};
use crate::vector::{ComplexVector, RealVector};

/// Payload of a vector file.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorData {
    Real(RealVector),
    Complex(ComplexVector),
}

/// A vector file: one UTF-8 JSON header line, then `n` (rvec) or `2n` (cvec,
/// interleaved re/im) little-endian IEEE-754 float64 values.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub width: usize,
    pub height: usize,
    pub data: VectorData,
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(rename = "type")]
    kind: String,
    n: usize,
    w: usize,
    h: usize,
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn write_header_and_payload(path: &Path, kind: &str, n: usize, w: usize, h: usize, payload: impl Iterator<Item = f64>) -> Result<()> {
    if n == 0 || w * h != n {
        return Err(Error::InvalidInput(format!(
            "vector file needs n = w*h >= 1 (n = {n}, w = {w}, h = {h})"
        )));
    }
    let header = Header {
        kind: kind.to_string(),
        n,
        w,
        h,
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &header)
        .map_err(|e| Error::InvalidInput(format!("header serialization failed: {e}")))?;
    out.write_all(b"\n")?;
    for v in payload {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a real vector (`.rvec`): payload is `n` float64 values.
pub fn write_real_vector(path: impl AsRef<Path>, v: &RealVector, width: usize, height: usize) -> Result<()> {
    write_header_and_payload(
        path.as_ref(),
        "rvec",
        v.len(),
        width,
        height,
        v.values.iter().copied(),
    )
}

/// Writes a complex vector (`.cvec`): payload is `2n` float64 values,
/// interleaved re, im per element.
pub fn write_complex_vector(path: impl AsRef<Path>, v: &ComplexVector, width: usize, height: usize) -> Result<()> {
    let interleaved = v
        .re
        .iter()
        .zip(&v.im)
        .flat_map(|(&r, &i)| [r, i]);
    write_header_and_payload(path.as_ref(), "cvec", v.len(), width, height, interleaved)
}

/// Reads a vector file written by [`write_real_vector`] or
/// [`write_complex_vector`], bit-exactly.
pub fn read_vector(path: impl AsRef<Path>) -> Result<VectorFile> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let mut header_line = String::new();
    reader.read_line(&mut header_line)?;
    let header: Header = serde_json::from_str(header_line.trim_end())
        .map_err(|e| malformed(path, format!("bad header: {e}")))?;
    if header.n == 0 {
        return Err(malformed(path, "header declares n = 0"));
    }
    if header.w * header.h != header.n {
        return Err(malformed(
            path,
            format!(
                "header dimensions inconsistent: n = {} but w*h = {}",
                header.n,
                header.w * header.h
            ),
        ));
    }
    let doubles = match header.kind.as_str() {
        "rvec" => header.n,
        "cvec" => 2 * header.n,
        other => return Err(malformed(path, format!("unknown type {other:?}"))),
    };
    let mut payload = vec![0u8; 8 * doubles];
    reader
        .read_exact(&mut payload)
        .map_err(|_| malformed(path, "truncated payload"))?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(malformed(path, "trailing bytes after payload"));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = match header.kind.as_str() {
        "rvec" => VectorData::Real(RealVector { values }),
        _ => {
            let mut re = Vec::with_capacity(header.n);
            let mut im = Vec::with_capacity(header.n);
            for pair in values.chunks_exact(2) {
                re.push(pair[0]);
                im.push(pair[1]);
            }
            VectorData::Complex(ComplexVector { re, im })
        }
    };
    Ok(VectorFile {
        width: header.w,
        height: header.h,
        data,
    })
}

const TRACE_HEADER: &str = "iter,seconds,objective,nrmse";

fn format_row(row: &TraceRow) -> String {
    match row.nrmse {
        Some(n) => format!("{},{},{},{}", row.iter, row.seconds, row.objective, n),
        None => format!("{},{},{},", row.iter, row.seconds, row.objective),
    }
}

/// Writes a convergence trace as CSV with header `iter,seconds,objective,nrmse`
/// (nrmse column blank when not recorded).
pub fn write_trace_csv(path: impl AsRef<Path>, trace: &SolverTrace) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "{TRACE_HEADER}")?;
    for row in &trace.rows {
        writeln!(out, "{}", format_row(row))?;
    }
    out.flush()?;
    Ok(())
}

/// Combined trace for several solver variants, with a leading variant column.
pub fn write_ablation_csv(path: impl AsRef<Path>, variants: &[(String, SolverTrace)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "variant,{TRACE_HEADER}")?;
    for (name, trace) in variants {
        for row in &trace.rows {
            writeln!(out, "{},{}", name, format_row(row))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_row(path: &Path, line: &str) -> Result<TraceRow> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 {
        return Err(malformed(path, format!("expected 4 fields, got {line:?}")));
    }
    let parse_f = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| malformed(path, format!("bad {what}: {s:?}")))
    };
    Ok(TraceRow {
        iter: fields[0]
            .parse()
            .map_err(|_| malformed(path, format!("bad iter: {:?}", fields[0])))?,
        seconds: parse_f(fields[1], "seconds")?,
        objective: parse_f(fields[2], "objective")?,
        nrmse: if fields[3].is_empty() {
            None
        } else {
            Some(parse_f(fields[3], "nrmse")?)
        },
    })
}

/// Parses a trace CSV, enforcing strictly increasing iteration numbers.
pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<SolverTrace> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == TRACE_HEADER => {}
        _ => return Err(malformed(path, "missing trace header")),
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row = parse_row(path, &line)?;
        if let Some(prev) = rows.last() {
            let prev: &TraceRow = prev;
            if row.iter <= prev.iter {
                return Err(malformed(path, "iterations not strictly increasing"));
            }
        }
        rows.push(row);
    }
    Ok(SolverTrace { rows })
}

/// Parses a combined ablation CSV into per-variant traces (in first-seen
/// variant order).
pub fn read_ablation_csv(path: impl AsRef<Path>) -> Result<Vec<(String, SolverTrace)>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == format!("variant,{TRACE_HEADER}") => {}
        _ => return Err(malformed(path, "missing ablation header")),
    }
    let mut variants: Vec<(String, SolverTrace)> = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let Some((name, rest)) = line.split_once(',') else {
            return Err(malformed(path, format!("bad row {line:?}")));
        };
        let row = parse_row(path, rest)?;
        match variants.iter_mut().find(|(n, _)| n == name) {
            Some((_, trace)) => trace.rows.push(row),
            None => variants.push((
                name.to_string(),
                SolverTrace {
                    rows: vec![row],
                },
            )),
        }
    }
    Ok(variants)
}

/// Exports a real image as binary PGM (P5) with 16-bit big-endian samples,
/// min-max scaled; a constant image maps to mid-gray 32768.
pub fn export_pgm(values: &RealVector, width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    if width * height != values.len() {
        return Err(Error::DimensionMismatch {
            context: "export_pgm",
            expected: width * height,
            got: values.len(),
        });
    }
    let min = values.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write!(out, "P5\n{width} {height}\n65535\n")?;
    for &v in &values.values {
        let sample: u16 = if max > min {
            ((v - min) / (max - min) * 65535.0).round().clamp(0.0, 65535.0) as u16
        } else {
            32768
        };
        out.write_all(&sample.to_be_bytes())?;
    }
    out.flush()?;
    Ok(())
}
