use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Relative tolerance on the spacing of a uniform axis.
pub const GRID_TOL: f64 = 1e-9;

/// Tolerance on the normalization integral of a grid handed in as already
/// normalized.
pub const NORM_TOL: f64 = 1e-12;

/// A uniform 1-D frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    values: Vec<f64>,
    step: f64,
}

impl Axis {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("axis needs at least two points"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("axis contains non-finite values"));
        }
        let n = values.len();
        let step = (values[n - 1] - values[0]) / (n - 1) as f64;
        if step <= 0.0 {
            return Err(invalid("axis must be strictly increasing"));
        }
        let worst = values
            .windows(2)
            .map(|w| ((w[1] - w[0]) - step).abs())
            .fold(0.0, f64::max);
        if worst > GRID_TOL * step {
            return Err(invalid(format!(
                "axis is not uniform: spacing deviates by {:.3e} relative",
                worst / step
            )));
        }
        Ok(Self { values, step })
    }

    /// `n` points evenly spaced on `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("axis needs at least two points"));
        }
        let h = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|k| lo + k as f64 * h).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn matches(&self, other: &Axis) -> bool {
        self.len() == other.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).abs() <= GRID_TOL * self.step)
    }
}

/// Discretized, normalized joint spectral amplitude `f(ω_s, ω_i)`.
///
/// Rows index the signal axis and columns the idler axis. The grid keeps the
/// amplitudes pre-multiplied by `sqrt(step_s * step_i)`, so every integral over
/// the grid becomes a plain sum and `Σ|a|² = 1`.
#[derive(Debug, Clone)]
pub struct JsdGrid {
    weighted: DMatrix<Complex64>,
    axis_s: Axis,
    axis_i: Axis,
}

impl JsdGrid {
    /// Builds a grid from raw amplitudes, normalizing by explicit division.
    pub fn new(axis_s: Axis, axis_i: Axis, values: DMatrix<Complex64>) -> Result<Self> {
        Self::check_shape(&axis_s, &axis_i, &values)?;
        let cell = axis_s.step() * axis_i.step();
        let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
        if !norm.is_finite() || norm <= 0.0 {
            return Err(invalid("joint spectral amplitude has zero or non-finite norm"));
        }
        let scale = (cell / norm).sqrt();
        Ok(Self {
            weighted: values.map(|v| v * scale),
            axis_s,
            axis_i,
        })
    }

    /// Accepts amplitudes that must already satisfy `∬|f|² = 1`.
    pub fn from_normalized(axis_s: Axis, axis_i: Axis, values: DMatrix<Complex64>) -> Result<Self> {
        Self::check_shape(&axis_s, &axis_i, &values)?;
        let cell = axis_s.step() * axis_i.step();
        let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!(
                "joint spectral amplitude is not normalized (integral = {norm})"
            )));
        }
        let root = cell.sqrt();
        Ok(Self {
            weighted: values.map(|v| v * root),
            axis_s,
            axis_i,
        })
    }

    /// Builds a grid from a real function of `(ω_s, ω_i)`.
    pub fn from_fn(axis_s: Axis, axis_i: Axis, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let values = DMatrix::from_fn(axis_s.len(), axis_i.len(), |r, c| {
            f(axis_s.values()[r], axis_i.values()[c])
        });
        Self::new(axis_s, axis_i, values)
    }

    /// Correlated two-dimensional Gaussian.
    ///
    /// `sigma_plus` and `sigma_minus` are the standard deviations of `|f|²`
    /// along the axis rotated by `theta` from the signal axis and along its
    /// perpendicular. The grid spans six marginal standard deviations on each
    /// side unless explicit half-extents are given.
    pub fn gaussian(
        sigma_plus: f64,
        sigma_minus: f64,
        theta: f64,
        n_s: usize,
        n_i: usize,
        extent: Option<(f64, f64)>,
    ) -> Result<Self> {
        if !(sigma_plus > 0.0 && sigma_minus > 0.0) {
            return Err(invalid("gaussian widths must be positive"));
        }
        let (sn, cs) = theta.sin_cos();
        let (ext_s, ext_i) = extent.unwrap_or_else(|| {
            let var_s = sigma_plus.powi(2) * cs * cs + sigma_minus.powi(2) * sn * sn;
            let var_i = sigma_plus.powi(2) * sn * sn + sigma_minus.powi(2) * cs * cs;
            (6.0 * var_s.sqrt(), 6.0 * var_i.sqrt())
        });
        if !(ext_s > 0.0 && ext_i > 0.0) {
            return Err(invalid("gaussian extent must be positive"));
        }
        let axis_s = Axis::linspace(-ext_s, ext_s, n_s)?;
        let axis_i = Axis::linspace(-ext_i, ext_i, n_i)?;
        Self::from_fn(axis_s, axis_i, |x, y| {
            let u = x * cs + y * sn;
            let v = -x * sn + y * cs;
            let e = -u * u / (4.0 * sigma_plus * sigma_plus) - v * v / (4.0 * sigma_minus * sigma_minus);
            Complex64::new(e.exp(), 0.0)
        })
    }

    fn check_shape(axis_s: &Axis, axis_i: &Axis, values: &DMatrix<Complex64>) -> Result<()> {
        if values.nrows() != axis_s.len() || values.ncols() != axis_i.len() {
            return Err(invalid(format!(
                "amplitude grid is {}x{} but axes have {} and {} points",
                values.nrows(),
                values.ncols(),
                axis_s.len(),
                axis_i.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("amplitude grid contains non-finite values"));
        }
        Ok(())
    }

    pub(crate) fn from_weighted(axis_s: Axis, axis_i: Axis, weighted: DMatrix<Complex64>) -> Self {
        Self { weighted, axis_s, axis_i }
    }

    pub fn axis_s(&self) -> &Axis {
        &self.axis_s
    }

    pub fn axis_i(&self) -> &Axis {
        &self.axis_i
    }

    pub fn step_s(&self) -> f64 {
        self.axis_s.step()
    }

    pub fn step_i(&self) -> f64 {
        self.axis_i.step()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.weighted.shape()
    }

    /// Amplitude `f(ω_s[r], ω_i[c])`.
    pub fn value(&self, r: usize, c: usize) -> Complex64 {
        self.weighted[(r, c)] / (self.step_s() * self.step_i()).sqrt()
    }

    /// Amplitudes multiplied by the square root of the cell area.
    pub fn weighted(&self) -> &DMatrix<Complex64> {
        &self.weighted
    }

    /// `∬|f|²` evaluated on the grid.
    pub fn norm(&self) -> f64 {
        self.weighted.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_real(&self) -> bool {
        self.weighted.iter().all(|v| v.im == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_uniform_axis() {
        assert!(Axis::new(vec![0.0, 1.0, 2.5]).is_err());
        assert!(Axis::new(vec![0.0]).is_err());
        assert!(Axis::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn normalizes_on_construction() {
        let g = JsdGrid::gaussian(2.0, 0.5, 0.3, 40, 50, None).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
        let ds = g.step_s();
        let di = g.step_i();
        let direct: f64 = (0..40)
            .flat_map(|r| (0..50).map(move |c| (r, c)))
            .map(|(r, c)| g.value(r, c).norm_sqr() * ds * di)
            .sum();
        assert!((direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_normalized_rejects_unnormalized() {
        let ax = Axis::linspace(0.0, 1.0, 3).unwrap();
        let vals = DMatrix::from_element(3, 3, Complex64::new(5.0, 0.0));
        assert!(JsdGrid::from_normalized(ax.clone(), ax, vals).is_err());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let ax = Axis::linspace(0.0, 1.0, 3).unwrap();
        let vals = DMatrix::from_element(3, 4, Complex64::new(1.0, 0.0));
        assert!(JsdGrid::new(ax.clone(), ax, vals).is_err());
    }
}
