//! PND CSV: optional `# key = value` metadata lines, then `j,k,p` with one
//! row per cell.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pnd::matrix::PndMatrix;

#[derive(Debug, Serialize, Deserialize)]
struct Cell {
    j: usize,
    k: usize,
    p: f64,
}

/// Writes every cell, zeros included, preceded by the metadata block.
pub fn write_pnd_csv<W: Write>(p: &PndMatrix, meta: &[(String, String)], mut writer: W) -> Result<()> {
    for (k, v) in meta {
        writeln!(writer, "# {k} = {v}").map_err(|e| invalid(e.to_string()))?;
    }
    let mut w = csv::Writer::from_writer(writer);
    for j in 0..p.dim() {
        for k in 0..p.dim() {
            w.serialize(Cell { j, k, p: p.get(j, k) }).map_err(|e| invalid(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| invalid(e.to_string()))
}

/// Reads a normalized PND and its metadata.
pub fn read_pnd_csv<R: Read>(reader: R) -> Result<(PndMatrix, Vec<(String, String)>)> {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(reader).lines() {
        let line = line.map_err(|e| invalid(e.to_string()))?;
        match line.trim_start().strip_prefix('#') {
            Some(rest) => {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let cells: Vec<Cell> = rdr
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| invalid(format!("malformed PND CSV: {e}")))?;
    let n_max = cells.iter().map(|c| c.j.max(c.k)).max().ok_or_else(|| invalid("PND file has no cells"))?;
    let d = n_max + 1;
    if cells.len() != d * d {
        return Err(invalid(format!("PND file has {} cells, expected {}", cells.len(), d * d)));
    }
    let mut p = vec![f64::NAN; d * d];
    for c in &cells {
        let slot = &mut p[c.j * d + c.k];
        if !slot.is_nan() {
            return Err(invalid(format!("duplicate PND cell ({}, {})", c.j, c.k)));
        }
        *slot = c.p;
    }
    Ok((PndMatrix::new(n_max, p)?, meta))
}
