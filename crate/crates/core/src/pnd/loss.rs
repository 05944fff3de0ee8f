use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::pnd::matrix::PndMatrix;

/// Binomial loss with transmittance `T`; also used for attenuators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    transmittance: f64,
}

impl LossChannel {
    pub fn new(transmittance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(invalid(format!("transmittance {transmittance} outside [0, 1]")));
        }
        Ok(Self { transmittance })
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    /// Upper-triangular `L_nm = C(m, n) Tⁿ (1-T)^(m-n)` for `m ≥ n`.
    pub fn matrix(&self, n_max: usize) -> DMatrix<f64> {
        let t = self.transmittance;
        let d = n_max + 1;
        DMatrix::from_fn(d, d, |n, m| {
            if m < n {
                0.0
            } else {
                binomial(m, n) * t.powi(n as i32) * (1.0 - t).powi((m - n) as i32)
            }
        })
    }
}

pub(crate) fn binomial(m: usize, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (m - k) as f64 / (k + 1) as f64)
}

pub fn loss_matrix(channel: LossChannel, n_max: usize) -> DMatrix<f64> {
    channel.matrix(n_max)
}

/// `P_out = L(T) · P_in` for a single-mode distribution.
pub fn apply_loss_single(pv: &[f64], transmittance: f64) -> Result<Vec<f64>> {
    let l = LossChannel::new(transmittance)?.matrix(pv.len() - 1);
    let out = l * nalgebra::DVector::from_column_slice(pv);
    Ok(out.iter().copied().collect())
}

/// `Q = L_s(T_s) · P · L_iᵀ(T_i)`.
pub fn apply_loss_bipartite(p: &PndMatrix, t_s: f64, t_i: f64) -> Result<PndMatrix> {
    let n = p.n_max();
    let ls = LossChannel::new(t_s)?.matrix(n);
    let li = LossChannel::new(t_i)?.matrix(n);
    let q = ls * p.to_dmatrix() * li.transpose();
    PndMatrix::from_dmatrix(&q, p.is_subnormalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_transmittance_matrix() {
        let l = LossChannel::new(0.5).unwrap().matrix(2);
        let expected = [[1.0, 0.5, 0.25], [0.0, 0.5, 0.5], [0.0, 0.0, 0.25]];
        for (n, row) in expected.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                assert!((l[(n, m)] - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unit_and_zero_transmittance() {
        let id = LossChannel::new(1.0).unwrap().matrix(3);
        assert_eq!(id, DMatrix::identity(4, 4));
        let zero = LossChannel::new(0.0).unwrap().matrix(3);
        for m in 0..4 {
            assert_eq!(zero[(0, m)], 1.0);
            for n in 1..4 {
                assert_eq!(zero[(n, m)], 0.0);
            }
        }
    }

    #[test]
    fn columns_sum_to_one() {
        let l = LossChannel::new(0.37).unwrap().matrix(5);
        for m in 0..6 {
            let s: f64 = (0..6).map(|n| l[(n, m)]).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(LossChannel::new(1.01).is_err());
        assert!(LossChannel::new(-0.1).is_err());
    }

    #[test]
    fn unit_loss_leaves_pnd_unchanged() {
        let p = PndMatrix::from_rows([[0.97, 0.01, 0.0], [0.005, 0.01, 0.001], [0.0, 0.001, 0.003]]).unwrap();
        let q = apply_loss_bipartite(&p, 1.0, 1.0).unwrap();
        for (a, b) in p.cells().iter().zip(q.cells()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
