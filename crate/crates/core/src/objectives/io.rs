//! Dataset persistence.
//!
//! CSV: header `label,f1,...,fd`, then one sample per line.
//! Binary (little-endian): magic `CCDS`, `u32` version, `u64` rows,
//! `u64` feature width, `u64` class count, then each row as `1 + d` doubles
//! (label first, then features).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CCDS";
const VERSION: u32 = 1;

pub fn write_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["label".to_string()];
    header.extend((1..=ds.d_in()).map(|k| format!("f{k}")));
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec = vec![ds.label(i).to_string()];
        rec.extend(ds.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV dataset. The class count is `max(label) + 1` unless
/// `classes` is given.
pub fn read_csv(path: &Path, classes: Option<usize>) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for rec in r.records() {
        let rec = rec?;
        let label: usize = rec.get(0).unwrap_or("").trim().parse().map_err(|e| Error::Parse(format!("bad label: {e}")))?;
        let row: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad feature `{v}`: {e}"))))
            .collect::<Result<_>>()?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse("ragged rows".into()));
        }
        labels.push(label);
        features.extend(row);
    }
    let c = classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    Dataset::new(features, labels, width.unwrap_or(0), c)
}

pub fn to_bytes(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + ds.len() * (ds.d_in() + 1) * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [ds.len() as u64, ds.d_in() as u64, ds.classes() as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..ds.len() {
        out.extend_from_slice(&(ds.label(i) as f64).to_le_bytes());
        for v in ds.row(i) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Dataset> {
    let err = |m: &str| Error::Parse(format!("binary dataset: {m}"));
    if bytes.len() < 32 || &bytes[..4] != MAGIC {
        return Err(err("bad magic"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
    if u32::from_le_bytes(bytes[4..8].try_into().unwrap()) != VERSION {
        return Err(err("unsupported version"));
    }
    let (rows, d, classes) = (u64_at(8), u64_at(16), u64_at(24));
    let body = &bytes[32..];
    if body.len() != rows * (d + 1) * 8 {
        return Err(err("length mismatch"));
    }
    let vals: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut labels = Vec::with_capacity(rows);
    let mut features = Vec::with_capacity(rows * d);
    for row in vals.chunks_exact(d + 1) {
        if row[0] < 0.0 || row[0].fract() != 0.0 {
            return Err(err("non-integral label"));
        }
        labels.push(row[0] as usize);
        features.extend_from_slice(&row[1..]);
    }
    Dataset::new(features, labels, d, classes)
}

pub fn write_binary(path: &Path, ds: &Dataset) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&to_bytes(ds))?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<Dataset> {
    from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_synthetic_classification;

    #[test]
    fn csv_and_binary_round_trip() {
        let ds = make_synthetic_classification(3, 2, 4, 2.0, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_csv(&p, &ds).unwrap();
        assert_eq!(read_csv(&p, Some(3)).unwrap(), ds);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("label,f1,f2\n"));

        let p = dir.path().join("d.bin");
        write_binary(&p, &ds).unwrap();
        assert_eq!(read_binary(&p).unwrap(), ds);
        assert!(from_bytes(b"nope").is_err());
    }
}
