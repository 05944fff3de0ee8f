//! Distances between photon-number distributions.

use crate::error::{invalid, Result};

/// Guard added to every cell before taking logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub alpha: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { alpha: 1e-15 }
    }
}

fn same_shape(p: &[f64], o: &[f64]) -> Result<()> {
    if p.len() != o.len() || p.is_empty() {
        return Err(invalid(format!("distributions have {} and {} cells", p.len(), o.len())));
    }
    Ok(())
}

/// Root mean squared base-10 log ratio `sqrt(mean(log10((P+α)/(O+α))²))`.
pub fn rmsle(p: &[f64], o: &[f64], cfg: MetricConfig) -> Result<f64> {
    same_shape(p, o)?;
    if !(cfg.alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    let a = cfg.alpha;
    let sum: f64 = p.iter().zip(o).map(|(x, y)| ((x + a) / (y + a)).log10().powi(2)).sum();
    Ok((sum / p.len() as f64).sqrt())
}

/// `Σ sqrt(P O)`.
pub fn fidelity(p: &[f64], o: &[f64]) -> Result<f64> {
    same_shape(p, o)?;
    Ok(p.iter().zip(o).map(|(x, y)| (x * y).max(0.0).sqrt()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmsle_examples() {
        let p = [0.5, 0.25, 0.125, 0.125];
        assert_eq!(rmsle(&p, &p, MetricConfig::default()).unwrap(), 0.0);
        let half: Vec<f64> = p.iter().map(|v| v / 2.0).collect();
        let e = rmsle(&p, &half, MetricConfig::default()).unwrap();
        assert!((e - 2f64.log10()).abs() < 1e-12);
        assert!(rmsle(&p, &p[..3], MetricConfig::default()).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let p = [0.999, 0.001, 0.0];
        let o = [0.999, 0.0, 0.001];
        assert!((fidelity(&p, &o).unwrap() - 0.999).abs() < 1e-12);
        assert_eq!(fidelity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }
}
