//! Effective Schmidt mode number of a joint spectral amplitude.
//!
//! Two independent routes: the singular values of the grid, and the
//! closed-form quadruple integral `∬∬ f*(x1,y1) f*(x2,y2) f(x1,y2) f(x2,y1)`,
//! which equals `1/K` and is contracted here as `tr((A A†)²)` in O(n³).

use nalgebra::DMatrix;

use crate::jsd::grid::{JsdGrid, NORM_TOL};
use crate::error::{invalid, Result};
use crate::jsd::overlap::gram_rows;

fn check_normalized(jsd: &JsdGrid) -> Result<()> {
    let n = jsd.norm();
    if (n - 1.0).abs() > NORM_TOL * 1e3 {
        return Err(invalid(format!("grid is not normalized (integral = {n})")));
    }
    Ok(())
}

/// `1/K` from the Gram-matrix contraction of the quadruple integral.
pub fn inverse_schmidt_number(jsd: &JsdGrid) -> Result<f64> {
    check_normalized(jsd)?;
    let g = gram_rows(jsd.weighted());
    Ok(g.iter().map(|z| z.norm_sqr()).sum())
}

/// `K` from the closed-form quadruple integral.
pub fn schmidt_number_analytic(jsd: &JsdGrid) -> Result<f64> {
    Ok(1.0 / inverse_schmidt_number(jsd)?)
}

/// Schmidt coefficients `|c_k|` (singular values of the weighted grid),
/// sorted in decreasing order.
pub fn schmidt_coefficients(jsd: &JsdGrid) -> Result<Vec<f64>> {
    check_normalized(jsd)?;
    let mut sv: Vec<f64> = if jsd.is_real() {
        let re: DMatrix<f64> = jsd.weighted().map(|z| z.re);
        re.singular_values().iter().copied().collect()
    } else {
        jsd.weighted().clone().singular_values().iter().copied().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// `K = (Σ_k |c_k|⁴)⁻¹` from a singular value decomposition.
pub fn schmidt_number_svd(jsd: &JsdGrid) -> Result<f64> {
    let c = schmidt_coefficients(jsd)?;
    let s4: f64 = c.iter().map(|v| v.powi(4)).sum();
    Ok(1.0 / s4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsd::grid::Axis;
    use num_complex::Complex64;

    fn hermite_like(n: usize) -> (Axis, Vec<f64>, Vec<f64>) {
        let ax = Axis::linspace(-6.0, 6.0, n).unwrap();
        let g0: Vec<f64> = ax.values().iter().map(|x| (-x * x / 2.0).exp()).collect();
        let g1: Vec<f64> = ax.values().iter().map(|x| x * (-x * x / 2.0).exp()).collect();
        (ax, g0, g1)
    }

    #[test]
    fn separable_grid_has_single_mode() {
        let (ax, g0, _) = hermite_like(64);
        let vals = DMatrix::from_fn(64, 64, |r, c| Complex64::new(g0[r] * g0[c] * 0.7, g0[r] * g0[c] * 0.2));
        let jsd = JsdGrid::new(ax.clone(), ax, vals).unwrap();
        assert!((schmidt_number_svd(&jsd).unwrap() - 1.0).abs() < 1e-9);
        assert!((schmidt_number_analytic(&jsd).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_equal_orthogonal_terms_give_two_modes() {
        // g0 (even) and g1 (odd) are orthogonal on a symmetric grid
        let (ax, g0, g1) = hermite_like(80);
        let n0 = g0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n1 = g1.iter().map(|v| v * v).sum::<f64>().sqrt();
        let vals = DMatrix::from_fn(80, 80, |r, c| {
            Complex64::new(g0[r] * g0[c] / (n0 * n0) + g1[r] * g1[c] / (n1 * n1), 0.0)
        });
        let jsd = JsdGrid::new(ax.clone(), ax, vals).unwrap();
        assert!((schmidt_number_svd(&jsd).unwrap() - 2.0).abs() < 1e-9);
        assert!((schmidt_number_analytic(&jsd).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn coefficients_are_normalized() {
        let jsd = JsdGrid::gaussian(3.0, 0.6, 0.7, 48, 40, None).unwrap();
        let c = schmidt_coefficients(&jsd).unwrap();
        let s2: f64 = c.iter().map(|v| v * v).sum();
        assert!((s2 - 1.0).abs() < 1e-10);
        assert!(c.windows(2).all(|w| w[0] >= w[1]));
    }
}
