//! File formats: plot-ready CSV tables, JSON reports, complex sweep CSVs
//! and oscilloscope waveforms (little-endian f32 with a JSON sidecar).

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{ensure, Error, Result};
use crate::tdo::WaveformRecord;

/// Decimal point, no grouping; exponent form when |x| < 1e-3 or |x| > 1e6.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a != 0.0 && !(1e-3..=1e6).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Writes a header row and numeric rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    ensure(rows.iter().all(|r| r.len() == header.len()), || "row width differs from header".into())?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&x| format_number(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV with a header row; returns the header and columns.
pub fn read_csv_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        ensure(rec.len() == header.len(), || format!("row {} has {} fields, expected {}", line + 2, rec.len(), header.len()))?;
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {} column '{}': '{field}' is not a number", line + 2, header[k])))?;
            cols[k].push(v);
        }
    }
    Ok((header, cols))
}

/// Complex sweep: frequency [Hz], real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSweep {
    pub freq: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Reads a three-column (f, Re, Im) CSV.
pub fn read_complex_csv(path: &Path) -> Result<ComplexSweep> {
    let (header, mut cols) = read_csv_columns(path)?;
    ensure(cols.len() == 3, || format!("expected columns f, re, im; found {header:?}"))?;
    let im = cols.pop().unwrap();
    let re = cols.pop().unwrap();
    let freq = cols.pop().unwrap();
    Ok(ComplexSweep { freq, re, im })
}

pub fn write_complex_csv(path: &Path, s: &ComplexSweep) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..s.freq.len()).map(|k| vec![s.freq[k], s.re[k], s.im[k]]).collect();
    write_csv(path, &["f_hz", "re", "im"], &rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSidecar {
    pub sample_rate_hz: f64,
    /// Volts per stored unit.
    pub scale: f64,
    pub samples: usize,
}

/// `trace.bin` → `trace.bin.json`.
pub fn sidecar_path(bin: &Path) -> PathBuf {
    let mut s = bin.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Stores samples / `scale` as little-endian f32 plus the sidecar.
pub fn write_waveform(bin: &Path, w: &WaveformRecord, scale: f64) -> Result<()> {
    w.validate()?;
    ensure(scale > 0.0, || "scale must be positive".into())?;
    let mut out = BufWriter::new(File::create(bin)?);
    for &x in &w.samples {
        out.write_all(&((x / scale) as f32).to_le_bytes())?;
    }
    out.flush()?;
    let meta = WaveformSidecar { sample_rate_hz: w.sample_rate, scale, samples: w.samples.len() };
    write_json(&sidecar_path(bin), &meta)
}

pub fn read_waveform(bin: &Path) -> Result<WaveformRecord> {
    let meta: WaveformSidecar = serde_json::from_reader(File::open(sidecar_path(bin))?)?;
    let mut bytes = Vec::new();
    File::open(bin)?.read_to_end(&mut bytes)?;
    ensure(bytes.len() % 4 == 0, || format!("{} bytes is not a whole number of f32 samples", bytes.len()))?;
    ensure(bytes.len() / 4 == meta.samples, || {
        format!("sidecar declares {} samples, file holds {}", meta.samples, bytes.len() / 4)
    })?;
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64 * meta.scale)
        .collect();
    let w = WaveformRecord { samples, sample_rate: meta.sample_rate_hz };
    w.validate()?;
    Ok(w)
}

/// Two-column CSV (t [s], v [V]) on a uniform grid.
pub fn read_waveform_csv(path: &Path) -> Result<WaveformRecord> {
    let (_, cols) = read_csv_columns(path)?;
    ensure(cols.len() == 2, || "expected columns t, v".into())?;
    let t = &cols[0];
    ensure(t.len() >= 2, || "need at least two samples".into())?;
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    ensure(dt > 0.0, || "time axis must increase".into())?;
    let uniform = t.windows(2).all(|w| ((w[1] - w[0]) / dt - 1.0).abs() < 1e-6);
    ensure(uniform, || "time axis is not uniformly sampled".into())?;
    let w = WaveformRecord { samples: cols[1].clone(), sample_rate: 1.0 / dt };
    w.validate()?;
    Ok(w)
}
