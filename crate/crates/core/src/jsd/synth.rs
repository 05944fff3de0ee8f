use crate::error::{invalid, Result};
use crate::jsd::filter::FilterProfile;
use crate::jsd::grid::JsdGrid;
use crate::jsd::segment::{segment, Segmentation};
use crate::pnd::PndMatrix;

/// Pair-generation strength `|ξ|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpGain {
    xi_sq: f64,
}

impl PumpGain {
    /// Truncation at two pairs needs `|ξ|⁶` to be negligible, hence the
    /// upper limit of 0.1.
    pub fn new(xi_sq: f64) -> Result<Self> {
        if !(xi_sq > 0.0 && xi_sq < 0.1) {
            return Err(invalid(format!("|xi|^2 = {xi_sq} outside (0, 0.1)")));
        }
        Ok(Self { xi_sq })
    }

    pub fn xi_sq(&self) -> f64 {
        self.xi_sq
    }
}

/// Filtered PND up to two pairs from a precomputed segmentation.
pub fn pnd_from_segmentation(seg: &Segmentation, gain: PumpGain) -> Result<PndMatrix> {
    let x1 = gain.xi_sq;
    let x2 = x1 * x1;
    let [q1, q2, q3, q4] = seg.q;
    let [k1, k2, k3, _] = seg.kappa;
    let same = |q: f64, k: f64| q * q * (1.0 + 1.0 / k) / 2.0;

    let mut p = vec![0.0; 9];
    p[1] = x1 * q2 + x2 * q2 * q4 * (1.0 + seg.ox24);
    p[2] = x2 * same(q2, k2);
    p[3] = x1 * q1 + x2 * q1 * q4 * (1.0 + seg.oy14);
    p[4] = x1 * q3 + x2 * (q1 * q2 + q3 * q4 + 2.0 * (q1 * q2 * q3 * q4).sqrt() * seg.oc.re);
    p[5] = x2 * q2 * q3 * (1.0 + seg.oy23);
    p[6] = x2 * same(q1, k1);
    p[7] = x2 * q1 * q3 * (1.0 + seg.ox13);
    p[8] = x2 * same(q3, k3);
    // P_00, including its q4² (1 + 1/κ4) / 2 part, follows from normalization
    PndMatrix::with_vacuum_complement(2, p)
}

/// Segments `jsd` with the two filters and builds the PND up to two pairs.
pub fn synthesize_pnd(
    jsd: &JsdGrid,
    filt_s: &FilterProfile,
    filt_i: &FilterProfile,
    gain: PumpGain,
) -> Result<PndMatrix> {
    let seg = segment(jsd, filt_s, filt_i)?;
    pnd_from_segmentation(&seg, gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsd::schmidt::schmidt_number_analytic;

    #[test]
    fn gain_range() {
        assert!(PumpGain::new(0.0).is_err());
        assert!(PumpGain::new(0.1).is_err());
        assert!(PumpGain::new(1e-3).is_ok());
    }

    #[test]
    fn all_pass_gives_diagonal_pnd() {
        let f = JsdGrid::gaussian(2.0, 0.4, 0.6, 64, 64, None).unwrap();
        let k = schmidt_number_analytic(&f).unwrap();
        let xi = 1e-3;
        let p = synthesize_pnd(
            &f,
            &FilterProfile::all_pass(f.axis_s().clone()),
            &FilterProfile::all_pass(f.axis_i().clone()),
            PumpGain::new(xi).unwrap(),
        )
        .unwrap();
        assert!((p.get(1, 1) / xi - 1.0).abs() < 1e-12);
        assert!((p.get(2, 2) / (xi * xi * (1.0 + 1.0 / k) / 2.0) - 1.0).abs() < 1e-12);
        for (j, k) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
            assert_eq!(p.get(j, k), 0.0);
        }
        assert!((p.total() - 1.0).abs() < 1e-15);
    }
}
