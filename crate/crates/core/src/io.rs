//! Plain CSV matrix files: one row per line, comma separated decimal floats.
//! Values are written with 17 significant digits so a write/read cycle is
//! exact for every finite `f64`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const IO_ROUNDTRIP_TOL: f64 = 1e-15;

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = values.len();
        for token in line.split(',') {
            let token = token.trim();
            let value: f64 = token.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid number {token:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value {token:?}"),
                });
            }
            values.push(value);
        }
        let width = values.len() - start;
        match cols {
            None => cols = Some(width),
            Some(expected) if expected != width => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("ragged row: expected {expected} columns, found {width}"),
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }
    match cols {
        Some(c) if rows > 0 => Ok(DMatrix::from_row_slice(rows, c, &values)),
        _ => Err(Error::EmptyMatrix),
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn format_matrix<W: Write>(out: &mut W, matrix: &DMatrix<f64>) -> std::io::Result<()> {
    for row in matrix.row_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{v:.16e}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_matrix(path: impl AsRef<Path>, matrix: &DMatrix<f64>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    format_matrix(&mut out, matrix)?;
    out.flush()?;
    Ok(())
}
