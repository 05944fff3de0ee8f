use std::fmt;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Tolerance on `Σ P = 1` for a normalized matrix.
pub const SUM_TOL: f64 = 1e-10;

/// Which side of the pair a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Signal,
    Idler,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::Signal => Mode::Idler,
            Mode::Idler => Mode::Signal,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Signal => "s",
            Mode::Idler => "i",
        })
    }
}

/// Truncated photon-number distribution `P_jk = P(|j, k⟩_{s,i})`.
///
/// Row `j` is the signal photon number and column `k` the idler photon
/// number, `0 ≤ j, k ≤ n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PndMatrix {
    n_max: usize,
    p: Vec<f64>,
    subnormalized: bool,
}

impl PndMatrix {
    /// A normalized matrix from row-major cells.
    pub fn new(n_max: usize, cells: Vec<f64>) -> Result<Self> {
        let m = Self::build(n_max, cells, false)?;
        let total = m.total();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(invalid(format!("PND sums to {total}, expected 1")));
        }
        Ok(m)
    }

    /// A matrix with `Σ P ≤ 1`, used for truncated or partial pieces.
    pub fn subnormalized(n_max: usize, cells: Vec<f64>) -> Result<Self> {
        let m = Self::build(n_max, cells, true)?;
        let total = m.total();
        if total > 1.0 + SUM_TOL {
            return Err(invalid(format!("PND sums to {total}, more than 1")));
        }
        Ok(m)
    }

    /// A normalized matrix whose `P_00` is set to the complement of all
    /// other cells.
    pub fn with_vacuum_complement(n_max: usize, mut cells: Vec<f64>) -> Result<Self> {
        if cells.len() != (n_max + 1).pow(2) {
            return Err(invalid("cell count does not match n_max"));
        }
        let rest: f64 = cells[1..].iter().sum();
        if rest > 1.0 {
            return Err(invalid(format!(
                "non-vacuum probabilities sum to {rest}, cannot normalize"
            )));
        }
        cells[0] = 1.0 - rest;
        Self::new(n_max, cells)
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self> {
        Self::new(N - 1, rows.iter().flatten().copied().collect())
    }

    fn build(n_max: usize, cells: Vec<f64>, subnormalized: bool) -> Result<Self> {
        let d = n_max + 1;
        if cells.len() != d * d {
            return Err(invalid(format!(
                "expected {} cells for n_max = {n_max}, got {}",
                d * d,
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!("PND cell {bad} is negative or non-finite")));
        }
        Ok(Self { n_max, p: cells, subnormalized })
    }

    pub(crate) fn from_dmatrix(m: &DMatrix<f64>, subnormalized: bool) -> Result<Self> {
        let n_max = m.nrows() - 1;
        let cells = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].max(0.0))
            .collect();
        let built = Self::build(n_max, cells, subnormalized)?;
        if subnormalized {
            Ok(built)
        } else {
            Self::new(n_max, built.p)
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.p)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.p[j * self.dim() + k]
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn require_normalized(&self) -> Result<()> {
        let total = self.total();
        if self.subnormalized && (total - 1.0).abs() > SUM_TOL {
            return Err(invalid(format!(
                "operation requires a normalized PND, this one sums to {total}"
            )));
        }
        Ok(())
    }

    /// Row (signal) or column (idler) sums.
    pub fn marginal(&self, mode: Mode) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| match mode {
                        Mode::Signal => self.get(a, b),
                        Mode::Idler => self.get(b, a),
                    })
                    .sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> PndMatrix {
        let d = self.dim();
        let p = (0..d * d).map(|i| self.get(i % d, i / d)).collect();
        PndMatrix { n_max: self.n_max, p, subnormalized: self.subnormalized }
    }
}

impl fmt::Display for PndMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|k| format!("{:.6e}", self.get(j, k))).collect();
            writeln!(f, "{}", row.join("  "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_of_diagonal_equal_diagonal() {
        let p = PndMatrix::from_rows([[0.9, 0.0, 0.0], [0.0, 0.09, 0.0], [0.0, 0.0, 0.01]]).unwrap();
        assert_eq!(p.marginal(Mode::Signal), vec![0.9, 0.09, 0.01]);
        assert_eq!(p.marginal(Mode::Idler), vec![0.9, 0.09, 0.01]);
    }

    #[test]
    fn single_idler_photon_marginals() {
        let p = PndMatrix::from_rows([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p.marginal(Mode::Signal), vec![1.0, 0.0, 0.0]);
        assert_eq!(p.marginal(Mode::Idler), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(PndMatrix::new(1, vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(PndMatrix::new(1, vec![0.5, 0.5, 0.1]).is_err());
        assert!(PndMatrix::new(1, vec![0.5, 0.5, 0.1, 0.1]).is_err());
        assert!(PndMatrix::subnormalized(1, vec![0.5, 0.3, 0.1, 0.0]).is_ok());
    }

    #[test]
    fn vacuum_complement_normalizes() {
        let p = PndMatrix::with_vacuum_complement(1, vec![0.0, 0.1, 0.2, 0.3]).unwrap();
        assert!((p.get(0, 0) - 0.4).abs() < 1e-15);
        assert!(PndMatrix::with_vacuum_complement(1, vec![0.0, 0.6, 0.6, 0.0]).is_err());
    }
}
