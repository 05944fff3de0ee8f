use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::detection::{CountRecord, Layout};
use crate::error::{invalid, Result};
use crate::pnd::PndMatrix;

/// Generator fully determined by `(seed, stream)`, so parallel workers never
/// share state.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw of `n_m` trials over the outcome probabilities `w`,
/// as a chain of conditional binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(w: &[f64], n_m: u64, rng: &mut R) -> Result<Vec<u64>> {
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("outcome probabilities must be finite and nonnegative"));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("outcome probabilities sum to {total}")));
    }
    let mut out = vec![0u64; w.len()];
    let mut left = n_m;
    let mut mass = 1.0f64;
    for (k, p) in w.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == w.len() {
            out[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let x = Binomial::new(left, q).map_err(|e| invalid(e.to_string()))?.sample(rng);
        out[k] = x;
        left -= x;
        mass -= p;
    }
    Ok(out)
}

/// Samples a count record from exact outcome probabilities.
pub fn sample_counts<R: Rng + ?Sized>(
    layout: Layout,
    w: &[f64],
    n_m: u64,
    setting: usize,
    rng: &mut R,
) -> Result<CountRecord> {
    if w.len() != layout.cells() {
        return Err(invalid("outcome vector does not match the layout"));
    }
    let counts = sample_multinomial(w, n_m, rng)?;
    CountRecord::from_integers(layout, &counts, setting)
}

/// Counts equal to their expectation, `n_m · W`.
pub fn expected_counts(layout: Layout, w: &[f64], n_m: f64, setting: usize) -> Result<CountRecord> {
    let counts: Vec<f64> = w.iter().map(|v| v * n_m).collect();
    let total = counts.iter().sum();
    CountRecord::new(layout, counts, total, setting)
}

/// Random pair-source PND: first-order cells `p_g · r`, second-order cells
/// `p_g² · r` with a fresh `r ~ U[0.5, 1.5]` per cell, vacuum by
/// normalization.
pub fn random_pps_pnd<R: Rng + ?Sized>(p_g: f64, rng: &mut R) -> Result<PndMatrix> {
    if !(p_g > 0.0 && p_g <= 0.1) {
        return Err(invalid(format!("p_g = {p_g} outside (0, 0.1]")));
    }
    let mut cells = vec![0.0; 9];
    for (idx, cell) in cells.iter_mut().enumerate().skip(1) {
        let order = (idx / 3).max(idx % 3) as i32;
        *cell = p_g.powi(order) * rng.random_range(0.5..=1.5);
    }
    PndMatrix::with_vacuum_complement(2, cells)
}

/// Random single-mode distribution, normalized `(1, p_g, p_g² g²/2)` with
/// `g² ~ U[1, 2]`.
pub fn random_single_pnd<R: Rng + ?Sized>(p_g: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(p_g > 0.0 && p_g <= 0.1) {
        return Err(invalid(format!("p_g = {p_g} outside (0, 0.1]")));
    }
    let g2: f64 = rng.random_range(1.0..=2.0);
    let p2 = p_g * p_g * g2 / 2.0;
    Ok(vec![1.0 - p_g - p2, p_g, p2])
}
