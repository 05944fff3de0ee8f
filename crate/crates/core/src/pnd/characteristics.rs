use crate::error::{invalid, undefined, Result};
use crate::pnd::matrix::{Mode, PndMatrix};

/// Thermal single-mode statistics on the diagonal, `P_jj = (1-μ) μ^j`.
///
/// The tail beyond `n_max` is dropped, so the result is subnormalized with
/// total `1 - μ^(n_max+1)`.
pub fn tmsv_pnd(mu: f64, n_max: usize) -> Result<PndMatrix> {
    if !(0.0..1.0).contains(&mu) {
        return Err(invalid(format!("mean parameter mu = {mu} outside [0, 1)")));
    }
    let d = n_max + 1;
    let mut cells = vec![0.0; d * d];
    for j in 0..d {
        cells[j * d + j] = (1.0 - mu) * mu.powi(j as i32);
    }
    PndMatrix::subnormalized(n_max, cells)
}

/// Pair generation probability `p_g = P_11`.
pub fn pair_gen_prob(p: &PndMatrix) -> Result<f64> {
    p.require_normalized()?;
    Ok(p.get(1, 1))
}

/// Loss-free upper bounds `(η_H,s, η_H,i)` of the heralding efficiencies.
pub fn heralding_bounds(p: &PndMatrix) -> Result<(f64, f64)> {
    p.require_normalized()?;
    let d = p.dim();
    let both: f64 = (1..d).flat_map(|j| (1..d).map(move |k| (j, k))).map(|(j, k)| p.get(j, k)).sum();
    let idler_only: f64 = (1..d).map(|k| p.get(0, k)).sum();
    let signal_only: f64 = (1..d).map(|j| p.get(j, 0)).sum();
    if both + idler_only <= 0.0 || both + signal_only <= 0.0 {
        return Err(undefined("heralding bound needs photons in the heralding mode"));
    }
    Ok((both / (both + idler_only), both / (both + signal_only)))
}

/// `Σ (n² - n) P_n / (Σ n P_n)²`.
pub fn g2_marginal(pv: &[f64]) -> Result<f64> {
    let mean: f64 = pv.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    if mean <= 0.0 {
        return Err(undefined("g2 of a distribution without photons"));
    }
    let fact: f64 = pv.iter().enumerate().map(|(n, p)| (n * n.saturating_sub(1)) as f64 * p).sum();
    Ok(fact / (mean * mean))
}

/// Leading-order form `2 P_2 / P_1²`.
pub fn g2_marginal_truncated(pv: &[f64]) -> Result<f64> {
    let p1 = pv.get(1).copied().unwrap_or(0.0);
    if p1 <= 0.0 {
        return Err(undefined("truncated g2 needs P_1 > 0"));
    }
    Ok(2.0 * pv.get(2).copied().unwrap_or(0.0) / (p1 * p1))
}

/// Heralded `g_h²` of mode `heralded`, conditioned on the partner mode:
/// `2 (P_21 + P_22)(P_01 + P_11) / P_11²` for the signal.
pub fn gh2(p: &PndMatrix, heralded: Mode) -> Result<f64> {
    p.require_normalized()?;
    if p.n_max() < 2 {
        return Err(invalid("heralded g2 needs n_max >= 2"));
    }
    let at = |a: usize, b: usize| match heralded {
        Mode::Signal => p.get(a, b),
        Mode::Idler => p.get(b, a),
    };
    let p11 = at(1, 1);
    if p11 <= 0.0 {
        return Err(undefined("heralded g2 needs P_11 > 0"));
    }
    Ok(2.0 * (at(2, 1) + at(2, 2)) * (at(0, 1) + at(1, 1)) / (p11 * p11))
}

/// The source figures of merit derived from one PND.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicSet {
    pub p_g: f64,
    pub eta_h_s: f64,
    pub eta_h_i: f64,
    pub g2_s: f64,
    pub g2_i: f64,
    pub gh2_s: f64,
    pub gh2_i: f64,
}

impl CharacteristicSet {
    pub const NAMES: [&'static str; 7] = ["p_g", "eta_H_s", "eta_H_i", "g2_s", "g2_i", "gh2_s", "gh2_i"];

    /// Marginal g² uses the full factorial-moment form.
    pub fn from_pnd(p: &PndMatrix) -> Result<Self> {
        let (eta_h_s, eta_h_i) = heralding_bounds(p)?;
        Ok(Self {
            p_g: pair_gen_prob(p)?,
            eta_h_s,
            eta_h_i,
            g2_s: g2_marginal(&p.marginal(Mode::Signal))?,
            g2_i: g2_marginal(&p.marginal(Mode::Idler))?,
            gh2_s: gh2(p, Mode::Signal)?,
            gh2_i: gh2(p, Mode::Idler)?,
        })
    }

    pub fn values(&self) -> [f64; 7] {
        [self.p_g, self.eta_h_s, self.eta_h_i, self.g2_s, self.g2_i, self.gh2_s, self.gh2_i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tmsv_cells() {
        let p = tmsv_pnd(0.0, 2).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.total(), 1.0);
        let p = tmsv_pnd(0.01, 2).unwrap();
        assert!((p.get(1, 1) - 0.0099).abs() < 1e-15);
        assert!((p.total() - (1.0 - 0.01f64.powi(3))).abs() < 1e-15);
        assert!(tmsv_pnd(1.0, 2).is_err());
    }

    #[test]
    fn equal_first_order_cells_give_half_bounds() {
        let x = 1e-3 / 3.0;
        let p = PndMatrix::with_vacuum_complement(2, vec![0.0, x, 0.0, x, x, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let (s, i) = heralding_bounds(&p).unwrap();
        assert!((s - 0.5).abs() < 1e-12 && (i - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pairs_only_give_unit_bounds() {
        let p = PndMatrix::with_vacuum_complement(2, vec![0.0, 0.0, 0.0, 0.0, 1e-3, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(heralding_bounds(&p).unwrap(), (1.0, 1.0));
        assert!(heralding_bounds(&PndMatrix::from_rows([[1.0, 0.0], [0.0, 0.0]]).unwrap()).is_err());
    }

    #[test]
    fn thermal_and_poisson_g2() {
        let mu: f64 = 0.01;
        let thermal: Vec<f64> = (0..=12).map(|n| (1.0 - mu) * mu.powi(n)).collect();
        assert!((g2_marginal(&thermal).unwrap() - 2.0).abs() < 1e-3);
        let p = 1e-3;
        assert!((g2_marginal_truncated(&[1.0 - p, p, p * p / 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((g2_marginal_truncated(&[1.0, 1e-5, 1e-10]).unwrap() - 2.0).abs() < 1e-9);
        assert!(g2_marginal(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gh2_zero_without_multi_pairs() {
        let p = PndMatrix::with_vacuum_complement(2, vec![0.0, 1e-4, 0.0, 1e-4, 1e-3, 1e-7, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(gh2(&p, Mode::Signal).unwrap(), 0.0);
        assert!(gh2(&p, Mode::Idler).unwrap() > 0.0);
    }

    #[test]
    fn gh2_of_unfiltered_source() {
        let xi = 1e-3;
        let k = 3.0;
        let p22 = xi * xi * (1.0 + 1.0 / k) / 2.0;
        let p = PndMatrix::with_vacuum_complement(2, vec![0.0, 0.0, 0.0, 0.0, xi, 0.0, 0.0, 0.0, p22]).unwrap();
        let want = xi * (1.0 + 1.0 / k);
        assert!((gh2(&p, Mode::Signal).unwrap() - want).abs() < 1e-15);
        assert!((gh2(&p, Mode::Idler).unwrap() - want).abs() < 1e-15);
    }
}
