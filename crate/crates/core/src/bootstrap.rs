//! Bootstrap uncertainties of fitted characteristics.
//!
//! Each bootstrap sample redraws every record of a measurement from its
//! empirical outcome frequencies. Resampling outcome categories is the same
//! as resampling individual trials with replacement.

use std::io::Write;

use rayon::prelude::*;

use crate::detection::CountRecord;
use crate::error::{invalid, Error, Result};
use crate::estimator::{characterize, estimate, EstimateOptions, LikelihoodModel, Objective};
use crate::simulator::{sample_counts, stream_rng};

/// `n_boot` resampled copies of `records`, each record redrawn with
/// `sample_size` trials. Sample `b`, record `r` uses its own stream, so the
/// result does not depend on thread scheduling.
pub fn bootstrap(records: &[CountRecord], n_boot: usize, sample_size: u64, seed: u64) -> Result<Vec<Vec<CountRecord>>> {
    if records.is_empty() {
        return Err(invalid("bootstrap needs at least one record"));
    }
    if sample_size == 0 {
        return Err(invalid("bootstrap sample size must be positive"));
    }
    if records.len() >= 1 << 16 {
        return Err(invalid("too many records for one bootstrap"));
    }
    if records.iter().any(|r| !(r.n_m() > 0.0)) {
        return Err(invalid("bootstrap needs records with trials"));
    }
    (0..n_boot)
        .into_par_iter()
        .map(|b| {
            records
                .iter()
                .enumerate()
                .map(|(r, rec)| {
                    let mut rng = stream_rng(seed, ((b as u64) << 16) | r as u64);
                    sample_counts(rec.layout(), &rec.frequencies(), sample_size, rec.setting(), &mut rng)
                })
                .collect()
        })
        .collect()
}

/// Summary of one characteristic over the bootstrap samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub characteristic: String,
    pub sample_size: u64,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator).
    pub std: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    /// Samples where the pipeline failed or the value was not finite.
    pub n_fail: usize,
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Runs `pipeline` on every sample and summarizes each named output.
pub fn bootstrap_stats<F>(
    samples: &[Vec<CountRecord>],
    sample_size: u64,
    names: &[&str],
    pipeline: F,
) -> Result<Vec<BootstrapSummary>>
where
    F: Fn(&[CountRecord]) -> Result<Vec<f64>> + Sync,
{
    let outputs: Vec<Result<Vec<f64>>> = samples.par_iter().map(|s| pipeline(s)).collect();
    let first_err = outputs.iter().find_map(|o| o.as_ref().err().cloned());
    let ok: Vec<&Vec<f64>> = outputs.iter().filter_map(|o| o.as_ref().ok()).collect();
    if ok.is_empty() {
        let why = first_err.map(|e| e.to_string()).unwrap_or_else(|| "no samples".into());
        return Err(Error::NotConverged(format!("all {} bootstrap samples failed; first failure: {why}", samples.len())));
    }
    if ok.iter().any(|v| v.len() != names.len()) {
        return Err(invalid("pipeline output does not match the characteristic names"));
    }
    let mut out = Vec::with_capacity(names.len());
    for (c, name) in names.iter().enumerate() {
        let mut vals: Vec<f64> = ok.iter().map(|v| v[c]).filter(|v| v.is_finite()).collect();
        let n_fail = samples.len() - vals.len();
        let summary = if vals.is_empty() {
            BootstrapSummary {
                characteristic: name.to_string(),
                sample_size,
                mean: f64::NAN,
                std: f64::NAN,
                q05: f64::NAN,
                q50: f64::NAN,
                q95: f64::NAN,
                n_fail,
            }
        } else {
            vals.sort_by(f64::total_cmp);
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            BootstrapSummary {
                characteristic: name.to_string(),
                sample_size,
                mean,
                std,
                q05: quantile(&vals, 0.05),
                q50: quantile(&vals, 0.5),
                q95: quantile(&vals, 0.95),
                n_fail,
            }
        };
        out.push(summary);
    }
    Ok(out)
}

/// Output names of [`characteristics_pipeline`].
pub const PIPELINE_NAMES: [&str; 7] = crate::pnd::CharacteristicSet::NAMES;

/// Fits the two-mode PND and returns its characteristics.
pub fn characteristics_pipeline<'a>(
    model: &'a LikelihoodModel,
    objective: Objective,
    opts: EstimateOptions,
) -> impl Fn(&[CountRecord]) -> Result<Vec<f64>> + Sync + 'a {
    move |records| {
        let est = estimate(objective, records, model, &opts)?;
        Ok(characterize(&est)?.values().to_vec())
    }
}

pub const BOOTSTRAP_HEADER: &str = "characteristic,sample_size,mean,std,q05,q50,q95,n_fail";

pub fn write_bootstrap_csv<W: Write>(rows: &[BootstrapSummary], mut w: W) -> Result<()> {
    let io = |e: std::io::Error| invalid(e.to_string());
    writeln!(w, "{BOOTSTRAP_HEADER}").map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:?},{:?},{:?},{:?},{:?},{}",
            r.characteristic, r.sample_size, r.mean, r.std, r.q05, r.q50, r.q95, r.n_fail
        )
        .map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Layout;

    fn record() -> CountRecord {
        CountRecord::new(Layout::Single, vec![9000.0, 500.0, 400.0, 100.0], 10000.0, 0).unwrap()
    }

    #[test]
    fn sizes_and_determinism() {
        let recs = [record()];
        assert!(bootstrap(&recs, 0, 10, 1).unwrap().is_empty());
        assert!(bootstrap(&recs, 3, 0, 1).is_err());
        assert!(bootstrap(&[], 3, 10, 1).is_err());
        let a = bootstrap(&recs, 5, 777, 3).unwrap();
        let b = bootstrap(&recs, 5, 777, 3).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert_eq!(s[0].n_m(), 777.0);
            assert_eq!(s[0].counts().iter().sum::<f64>(), 777.0);
        }
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn constant_pipeline_has_zero_spread() {
        let samples = bootstrap(&[record()], 20, 100, 0).unwrap();
        let s = bootstrap_stats(&samples, 100, &["c"], |_| Ok(vec![2.5])).unwrap();
        assert_eq!(s[0].std, 0.0);
        assert_eq!((s[0].mean, s[0].q05, s[0].q50, s[0].q95, s[0].n_fail), (2.5, 2.5, 2.5, 2.5, 0));
    }

    #[test]
    fn failures_are_counted() {
        let samples = bootstrap(&[record()], 10, 100, 0).unwrap();
        let s = bootstrap_stats(&samples, 100, &["x"], |r| {
            if r[0].counts()[0] > 90.0 {
                Err(invalid("boom"))
            } else {
                Ok(vec![r[0].counts()[0]])
            }
        })
        .unwrap();
        assert!(s[0].n_fail > 0 && s[0].n_fail < 10);
        assert!(s[0].q05 <= s[0].q50 && s[0].q50 <= s[0].q95);
        let all = bootstrap_stats(&samples, 100, &["x"], |_| Err(invalid("boom")));
        assert!(matches!(all, Err(Error::NotConverged(m)) if m.contains("boom")));
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert!((quantile(&v, 0.05) - 0.2).abs() < 1e-12);
        assert!((quantile(&v, 0.95) - 3.8).abs() < 1e-12);
    }
}
