//! FemField files: a `level=<ℓ>` header line followed by nodal values in
//! lexicographic order, either one per line (CSV) or as little-endian `f64`.

use std::io::{BufRead, Write};

use nalgebra::DVector;

use super::{FemField, FemGrid};
use crate::error::{Error, Result};

fn header(field: &FemField) -> String {
    format!("level={}\n", field.grid().level())
}

fn parse_header(line: &str) -> Result<FemGrid> {
    let level = line
        .trim()
        .strip_prefix("level=")
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| Error::Config(format!("bad field header {line:?}")))?;
    FemGrid::new(level)
}

pub fn write_csv(field: &FemField, mut out: impl Write) -> Result<()> {
    out.write_all(header(field).as_bytes())?;
    for v in field.values().iter() {
        writeln!(out, "{v:.17e}")?;
    }
    Ok(())
}

pub fn read_csv(input: impl BufRead) -> Result<FemField> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::Config("empty field file".into()))??;
    let grid = parse_header(&first)?;
    let mut values = Vec::with_capacity(grid.n_nodes());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(line.trim().parse::<f64>().map_err(|e| Error::Config(format!("{line:?}: {e}")))?);
    }
    FemField::new(grid, DVector::from_vec(values))
}

pub fn write_binary(field: &FemField, mut out: impl Write) -> Result<()> {
    out.write_all(header(field).as_bytes())?;
    for v in field.values().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(mut input: impl BufRead) -> Result<FemField> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let grid = parse_header(&first)?;
    let mut buf = vec![0u8; 8 * grid.n_nodes()];
    input.read_exact(&mut buf)?;
    let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    FemField::new(grid, DVector::from_iterator(grid.n_nodes(), values))
}
