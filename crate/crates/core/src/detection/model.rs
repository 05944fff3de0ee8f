use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};

use crate::error::{invalid, Result};
use crate::pnd::PndMatrix;

/// Tolerance on the total of an outcome distribution.
pub const PROB_TOL: f64 = 1e-10;

/// One mode's detection arm: a beam splitter with a click detector on each
/// output, preceded by an attenuator.
///
/// `t` is the beam-splitter transmittance; the `t` detector sits on the
/// transmitted port and the `r` detector on the reflected port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorPair {
    pub t: f64,
    pub eta_t: f64,
    pub eta_r: f64,
    pub d_t: f64,
    pub d_r: f64,
    pub gamma: f64,
}

impl DetectorPair {
    pub fn new(t: f64, eta_t: f64, eta_r: f64, d_t: f64, d_r: f64) -> Result<Self> {
        Self { t, eta_t, eta_r, d_t, d_r, gamma: 1.0 }.validated()
    }

    /// A single detector on the mode, modelled as `T = 1` with a dead
    /// reflected arm.
    pub fn single(eta: f64, d: f64) -> Result<Self> {
        Self::new(1.0, eta, 0.0, d, 0.0)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self { gamma, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("T", self.t)?;
        unit("eta_t", self.eta_t)?;
        unit("eta_r", self.eta_r)?;
        unit("gamma", self.gamma)?;
        for (name, d) in [("d_t", self.d_t), ("d_r", self.d_r)] {
            if !(0.0..1.0).contains(&d) {
                return Err(invalid(format!("{name} = {d} outside [0, 1)")));
            }
        }
        Ok(self)
    }

    pub fn r(&self) -> f64 {
        1.0 - self.t
    }

    /// `N · M(T, γη_t, γη_r)`: photon number → noisy click outcome.
    pub fn response(&self, n_max: usize) -> DMatrix<f64> {
        let m = conversion_matrix(self.t, self.gamma * self.eta_t, self.gamma * self.eta_r, n_max);
        let n = noise_matrix(self.d_t, self.d_r);
        DMatrix::from_fn(4, 4, |r, c| n[(r, c)]) * m
    }
}

/// Photon number → click outcome for a beam splitter and two detectors.
///
/// Rows are the outcomes `(XX, XO, OX, OO)` of the `(t, r)` detectors, where
/// `X` is no click and `O` a click; column `n` holds the outcome
/// distribution for `n` incident photons.
pub fn conversion_matrix(t: f64, eta_t: f64, eta_r: f64, n_max: usize) -> DMatrix<f64> {
    let r = 1.0 - t;
    // per-photon probabilities of not triggering a given detector
    let miss_both = t * (1.0 - eta_t) + r * (1.0 - eta_r);
    let miss_t = 1.0 - t * eta_t;
    let miss_r = 1.0 - r * eta_r;
    DMatrix::from_fn(4, n_max + 1, |row, n| {
        let n = n as i32;
        let xx = miss_both.powi(n);
        match row {
            0 => xx,
            1 => miss_t.powi(n) - xx,
            2 => miss_r.powi(n) - xx,
            _ => 1.0 - miss_t.powi(n) - miss_r.powi(n) + xx,
        }
        .max(0.0)
    })
}

fn noise_factor(d: f64) -> Matrix2<f64> {
    Matrix2::new(1.0 - d, 0.0, d, 1.0)
}

/// Independent noise clicks on the `t` and `r` detectors.
pub fn noise_matrix(d_t: f64, d_r: f64) -> Matrix4<f64> {
    let k = noise_factor(d_t).kronecker(&noise_factor(d_r));
    Matrix4::from_fn(|r, c| k[(r, c)])
}

/// Exact inverse of [`noise_matrix`]; fails when either `d` is 1.
pub fn noise_matrix_inverse(d_t: f64, d_r: f64) -> Result<Matrix4<f64>> {
    let inv = |d: f64| {
        if !(0.0..1.0).contains(&d) {
            return Err(invalid(format!("noise probability {d} is not invertible")));
        }
        Ok(Matrix2::new(1.0 / (1.0 - d), 0.0, -d / (1.0 - d), 1.0))
    };
    let k = inv(d_t)?.kronecker(&inv(d_r)?);
    Ok(Matrix4::from_fn(|r, c| k[(r, c)]))
}

/// Outcome probabilities of a single mode, `(XX, XO, OX, OO)`.
pub fn single_mode_probs(pv: &[f64], det: &DetectorPair) -> Result<[f64; 4]> {
    let total: f64 = pv.iter().sum();
    if (total - 1.0).abs() > PROB_TOL || pv.iter().any(|p| *p < 0.0) {
        return Err(invalid("photon-number vector must be a normalized distribution"));
    }
    let w = det.response(pv.len() - 1) * DVector::from_column_slice(pv);
    Ok([w[0], w[1], w[2], w[3]])
}

/// Probabilities of the 16 click statuses `D1 D2 D3 D4`, row-major from
/// `XXXX` to `OOOO`; the row is the signal outcome and the column the idler
/// outcome.
pub fn bipartite_probs(p: &PndMatrix, det_s: &DetectorPair, det_i: &DetectorPair) -> Result<[f64; 16]> {
    p.require_normalized()?;
    let n = p.n_max();
    let w = det_s.response(n) * p.to_dmatrix() * det_i.response(n).transpose();
    let mut out = [0.0; 16];
    for (k, v) in out.iter_mut().enumerate() {
        *v = w[(k / 4, k % 4)];
    }
    Ok(out)
}

/// Index of the status where every detector clicks.
pub const ALL_CLICK: usize = 15;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_columns() {
        let m = conversion_matrix(0.5, 1.0, 1.0, 2);
        let col = |n: usize| [m[(0, n)], m[(1, n)], m[(2, n)], m[(3, n)]];
        assert_eq!(col(0), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(col(1), [0.0, 0.5, 0.5, 0.0]);
        let c2 = col(2);
        for (a, b) in c2.iter().zip([0.0, 0.25, 0.25, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn conversion_matches_two_photon_closed_form() {
        let (t, et, er) = (0.37, 0.61, 0.44);
        let r = 1.0 - t;
        let m = conversion_matrix(t, et, er, 2);
        let xo = r * r * (1.0 - (1.0 - er).powi(2)) + 2.0 * t * r * (1.0 - et) * er;
        let ox = t * t * (1.0 - (1.0 - et).powi(2)) + 2.0 * t * r * et * (1.0 - er);
        let oo = 2.0 * t * r * et * er;
        assert!((m[(1, 2)] - xo).abs() < 1e-15);
        assert!((m[(2, 2)] - ox).abs() < 1e-15);
        assert!((m[(3, 2)] - oo).abs() < 1e-15);
        assert!((m[(1, 1)] - r * er).abs() < 1e-15);
        assert!((m[(2, 1)] - t * et).abs() < 1e-15);
    }

    #[test]
    fn noise_matrix_entries_and_inverse() {
        assert_eq!(noise_matrix(0.0, 0.0), Matrix4::identity());
        let n = noise_matrix(0.1, 0.1);
        let col: Vec<f64> = (0..4).map(|r| n[(r, 0)]).collect();
        for (a, b) in col.iter().zip([0.81, 0.09, 0.09, 0.01]) {
            assert!((a - b).abs() < 1e-15);
        }
        let n = noise_matrix(0.13, 0.02);
        let prod = n * noise_matrix_inverse(0.13, 0.02).unwrap();
        assert!((prod - Matrix4::identity()).abs().max() < 1e-12);
        assert!(noise_matrix_inverse(1.0, 0.0).is_err());
    }

    #[test]
    fn single_mode_examples() {
        let det = DetectorPair::new(0.5, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(single_mode_probs(&[1.0, 0.0, 0.0], &det).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(single_mode_probs(&[0.0, 1.0, 0.0], &det).unwrap(), [0.0, 0.5, 0.5, 0.0]);
        let blocked = det.with_gamma(0.0).unwrap();
        assert_eq!(single_mode_probs(&[0.2, 0.5, 0.3], &blocked).unwrap(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn vacuum_never_clicks_without_noise() {
        let p = PndMatrix::from_rows([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        let det = DetectorPair::new(0.5, 0.6, 0.7, 0.0, 0.0).unwrap();
        let w = bipartite_probs(&p, &det, &det).unwrap();
        assert_eq!(w[0], 1.0);
        assert!(w[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DetectorPair::new(1.1, 0.5, 0.5, 0.0, 0.0).is_err());
        assert!(DetectorPair::new(0.5, 0.5, 0.5, 1.0, 0.0).is_err());
        assert!(DetectorPair::single(0.5, 0.0).unwrap().with_gamma(2.0).is_err());
    }
}
