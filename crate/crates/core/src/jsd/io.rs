//! CSV formats for joint spectral amplitudes (`omega_s,omega_i,re,im`) and
//! filter profiles (`omega,t`).

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::jsd::filter::{FilterProfile, TransmittanceKind};
use crate::jsd::grid::{Axis, JsdGrid, GRID_TOL};

#[derive(Debug, Serialize, Deserialize)]
struct JsdRow {
    omega_s: f64,
    omega_i: f64,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FilterRow {
    omega: f64,
    t: f64,
}

fn csv_err(e: csv::Error) -> crate::Error {
    invalid(format!("malformed CSV: {e}"))
}

/// Sorted distinct values, merging those closer than the grid tolerance.
fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let span = v.last().copied().unwrap_or(0.0) - v.first().copied().unwrap_or(0.0);
    let tol = GRID_TOL * span.abs().max(1e-300);
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if out.last().is_none_or(|l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

fn index_of(axis: &[f64], x: f64) -> Option<usize> {
    let i = axis.partition_point(|v| *v < x);
    let step = axis[1] - axis[0];
    [i.saturating_sub(1), i]
        .into_iter()
        .filter(|&k| k < axis.len())
        .find(|&k| (axis[k] - x).abs() <= GRID_TOL * step)
}

/// Reads a complete rectangular lattice in any row order and normalizes it.
pub fn read_jsd_csv<R: Read>(reader: R) -> Result<JsdGrid> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let rows: Vec<JsdRow> = rdr.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)?;
    if rows.is_empty() {
        return Err(invalid("JSD file has no rows"));
    }
    let xs = distinct(rows.iter().map(|r| r.omega_s).collect());
    let ys = distinct(rows.iter().map(|r| r.omega_i).collect());
    if xs.len() < 2 || ys.len() < 2 {
        return Err(invalid("JSD lattice needs at least two points per axis"));
    }
    if rows.len() != xs.len() * ys.len() {
        return Err(invalid(format!(
            "JSD lattice is incomplete: {} rows for a {}x{} grid",
            rows.len(),
            xs.len(),
            ys.len()
        )));
    }
    let mut seen = vec![false; rows.len()];
    let mut values = DMatrix::from_element(xs.len(), ys.len(), Complex64::new(0.0, 0.0));
    for row in &rows {
        let (Some(r), Some(c)) = (index_of(&xs, row.omega_s), index_of(&ys, row.omega_i)) else {
            return Err(invalid("JSD row does not lie on the lattice"));
        };
        let flat = r * ys.len() + c;
        if seen[flat] {
            return Err(invalid(format!("duplicate JSD point ({}, {})", row.omega_s, row.omega_i)));
        }
        seen[flat] = true;
        values[(r, c)] = Complex64::new(row.re, row.im);
    }
    JsdGrid::new(Axis::new(xs)?, Axis::new(ys)?, values)
}

/// Writes the normalized amplitudes `f(ω_s, ω_i)` row by row.
pub fn write_jsd_csv<W: Write>(jsd: &JsdGrid, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (r, x) in jsd.axis_s().values().iter().enumerate() {
        for (c, y) in jsd.axis_i().values().iter().enumerate() {
            let v = jsd.value(r, c);
            w.serialize(JsdRow { omega_s: *x, omega_i: *y, re: v.re, im: v.im }).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| invalid(e.to_string()))
}

/// Reads filter samples that must lie on `axis`.
pub fn read_filter_csv<R: Read>(reader: R, axis: &Axis, kind: TransmittanceKind) -> Result<FilterProfile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<FilterRow> = rdr.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)?;
    rows.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let file_axis = Axis::new(rows.iter().map(|r| r.omega).collect())?;
    if !file_axis.matches(axis) {
        return Err(invalid("filter samples do not match the JSD axis"));
    }
    FilterProfile::from_samples(axis.clone(), rows.into_iter().map(|r| r.t).collect(), kind)
}

pub fn write_filter_csv<W: Write>(filter: &FilterProfile, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (x, t) in filter.axis().values().iter().zip(filter.transmission()) {
        w.serialize(FilterRow { omega: *x, t: *t }).map_err(csv_err)?;
    }
    w.flush().map_err(|e| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsd_roundtrip() {
        let f = JsdGrid::gaussian(1.5, 0.3, 0.4, 12, 9, None).unwrap();
        let mut buf = Vec::new();
        write_jsd_csv(&f, &mut buf).unwrap();
        let g = read_jsd_csv(buf.as_slice()).unwrap();
        assert_eq!(g.shape(), (12, 9));
        for (a, b) in f.weighted().iter().zip(g.weighted().iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn shuffled_rows_are_accepted() {
        let text = "omega_s,omega_i,re,im\n1,1,1,0\n0,0,1,0\n0,1,1,0\n1,0,1,0\n";
        let g = read_jsd_csv(text.as_bytes()).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_lattice_is_rejected() {
        let text = "omega_s,omega_i,re,im\n0,0,1,0\n0,1,1,0\n1,0,1,0\n";
        assert!(read_jsd_csv(text.as_bytes()).is_err());
        let dup = "omega_s,omega_i,re,im\n0,0,1,0\n0,0,1,0\n1,0,1,0\n1,1,1,0\n";
        assert!(read_jsd_csv(dup.as_bytes()).is_err());
        assert!(read_jsd_csv("omega_s,omega_i,re\n0,0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn filter_roundtrip() {
        let ax = Axis::linspace(-1.0, 1.0, 5).unwrap();
        let f = FilterProfile::gauss(ax.clone(), 0.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_filter_csv(&f, &mut buf).unwrap();
        let g = read_filter_csv(buf.as_slice(), &ax, TransmittanceKind::Amplitude).unwrap();
        assert_eq!(f, g);
    }
}
