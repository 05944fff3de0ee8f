use std::io::Write;

use rayon::prelude::*;

use crate::detection::{bipartite_probs, single_mode_probs, CountRecord, DetectorPair, Layout};
use crate::error::{invalid, Result};
use crate::estimator::{estimate, EstimateOptions, LikelihoodModel, Objective, Setup};
use crate::metrics::{rmsle, MetricConfig};
use crate::pnd::{g2_marginal, CharacteristicSet};
use crate::simulator::sampling::{expected_counts, random_pps_pnd, random_single_pnd, sample_counts, stream_rng};

/// Detector arrangement used in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorLayout {
    /// One mode, one detector.
    OneD,
    /// One mode, beam splitter and two detectors.
    TwoD,
    /// Both modes, two detectors each.
    TwoByTwoD,
}

impl DetectorLayout {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1d" => Ok(Self::OneD),
            "2d" => Ok(Self::TwoD),
            "2x2d" => Ok(Self::TwoByTwoD),
            _ => Err(invalid(format!("unknown detector layout '{s}' (expected 1d, 2d or 2x2d)"))),
        }
    }
}

/// Grid of simulated experiments.
///
/// Every cell is one combination of `p_g`, `n_m` (trials per setting),
/// detector efficiency, noise probability and smallest attenuator
/// transmittance. With `n_settings > 1` the attenuator takes that many
/// values evenly spaced from `gamma` to 1 (per mode, all combinations for
/// two-mode layouts).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub p_g: Vec<f64>,
    pub n_m: Vec<f64>,
    pub eta: Vec<f64>,
    pub d: Vec<f64>,
    pub gamma: Vec<f64>,
    pub reps: usize,
    pub n_settings: usize,
    pub layout: DetectorLayout,
    pub method: Objective,
    pub split: f64,
    pub seed: u64,
    /// Use expected instead of sampled counts.
    pub exact_counts: bool,
    pub options: EstimateOptions,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            p_g: vec![1e-3],
            n_m: vec![1e8],
            eta: vec![0.5],
            d: vec![0.0],
            gamma: vec![1.0],
            reps: 100,
            n_settings: 1,
            layout: DetectorLayout::TwoByTwoD,
            method: Objective::Ml,
            split: 0.5,
            seed: 0,
            exact_counts: false,
            options: EstimateOptions { restarts: 1, ..EstimateOptions::default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub id: usize,
    pub p_g: f64,
    pub n_m: f64,
    pub eta: f64,
    pub d: f64,
    pub gamma: f64,
}

/// One repetition of one cell. Failed estimates leave `rmsle` as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub rep: usize,
    pub rmsle: f64,
    /// `p_g, η_H,s, η_H,i, g²_s, g²_i, g_h²_s, g_h²_i` of the estimate; NaN
    /// where undefined or not applicable.
    pub characteristics: [f64; 7],
    pub converged: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("p_g", &self.p_g), ("n_m", &self.n_m), ("eta", &self.eta), ("d", &self.d), ("gamma", &self.gamma)] {
            if g.is_empty() {
                return Err(invalid(format!("sweep grid '{name}' is empty")));
            }
        }
        if self.n_m.iter().any(|n| !(*n >= 1.0) || n.fract() != 0.0) {
            return Err(invalid("n_m values must be positive integers"));
        }
        if self.gamma.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err(invalid("gamma values must lie in (0, 1]"));
        }
        if self.n_settings == 0 {
            return Err(invalid("n_settings must be at least 1"));
        }
        if self.method == Objective::Eml && self.n_settings < 2 {
            return Err(invalid("the renormalized likelihood needs n_settings >= 2"));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &p_g in &self.p_g {
            for &n_m in &self.n_m {
                for &eta in &self.eta {
                    for &d in &self.d {
                        for &gamma in &self.gamma {
                            out.push(SweepCell { id: out.len(), p_g, n_m, eta, d, gamma });
                        }
                    }
                }
            }
        }
        out
    }

    fn gammas(&self, gamma_min: f64) -> Vec<f64> {
        if self.n_settings == 1 {
            return vec![1.0];
        }
        let n = self.n_settings;
        (0..n).map(|k| gamma_min + (1.0 - gamma_min) * k as f64 / (n - 1) as f64).collect()
    }

    fn arm(&self, cell: &SweepCell) -> Result<DetectorPair> {
        match self.layout {
            DetectorLayout::OneD => DetectorPair::single(cell.eta, cell.d),
            _ => DetectorPair::new(self.split, cell.eta, cell.eta, cell.d, cell.d),
        }
    }

    /// Settings `ν` of a cell with their setups.
    pub fn model(&self, cell: &SweepCell) -> Result<LikelihoodModel> {
        let arm = self.arm(cell)?;
        let gammas = self.gammas(cell.gamma);
        let setups: Vec<(usize, Setup)> = match self.layout {
            DetectorLayout::TwoByTwoD => {
                let mut v = Vec::new();
                for gs in &gammas {
                    for gi in &gammas {
                        let s = arm.with_gamma(*gs)?;
                        let i = arm.with_gamma(*gi)?;
                        v.push((v.len(), Setup::Bipartite { s, i }));
                    }
                }
                v
            }
            _ => gammas
                .iter()
                .enumerate()
                .map(|(nu, g)| Ok((nu, Setup::Single(arm.with_gamma(*g)?))))
                .collect::<Result<_>>()?,
        };
        LikelihoodModel::new(2, setups)
    }
}

/// Stream id of a repetition; cells and repetitions never share one.
fn stream_of(cell: usize, rep: usize) -> u64 {
    ((cell as u64) << 32) | rep as u64
}

fn run_one(spec: &SweepSpec, cell: &SweepCell, model: &LikelihoodModel, rep: usize) -> SweepRow {
    let failed = SweepRow { cell: *cell, rep, rmsle: f64::NAN, characteristics: [f64::NAN; 7], converged: false };
    let stream = stream_of(cell.id, rep);
    let mut rng = stream_rng(spec.seed, stream);
    let mut attempt = || -> Result<SweepRow> {
        let (truth, layout) = match spec.layout {
            DetectorLayout::TwoByTwoD => (random_pps_pnd(cell.p_g, &mut rng)?.cells().to_vec(), Layout::Bipartite),
            _ => (random_single_pnd(cell.p_g, &mut rng)?, Layout::Single),
        };
        let mut records: Vec<CountRecord> = Vec::new();
        for (nu, setup) in model.settings() {
            let w: Vec<f64> = match setup {
                Setup::Bipartite { s, i } => {
                    let p = crate::pnd::PndMatrix::new(2, truth.clone())?;
                    bipartite_probs(&p, s, i)?.to_vec()
                }
                Setup::Single(d) => single_mode_probs(&truth, d)?.to_vec(),
            };
            let rec = if spec.exact_counts {
                expected_counts(layout, &w, cell.n_m, *nu)?
            } else {
                sample_counts(layout, &w, cell.n_m as u64, *nu, &mut rng)?
            };
            records.push(rec);
        }
        let opts = EstimateOptions { seed: spec.seed ^ stream.rotate_left(17), ..spec.options };
        let est = estimate(spec.method, &records, model, &opts)?;
        let e = rmsle(&truth, est.reconstruction.cells(), MetricConfig::default())?;
        let characteristics = match est.p_hat() {
            Some(p) => CharacteristicSet::from_pnd(p).map(|c| c.values()).unwrap_or([f64::NAN; 7]),
            None => {
                let g2 = g2_marginal(est.reconstruction.cells()).unwrap_or(f64::NAN);
                let pg = est.reconstruction.cells()[1];
                [pg, f64::NAN, f64::NAN, g2, f64::NAN, f64::NAN, f64::NAN]
            }
        };
        Ok(SweepRow { cell: *cell, rep, rmsle: e, characteristics, converged: est.converged })
    };
    attempt().unwrap_or(failed)
}

/// Runs every repetition of every cell. Rows come back ordered by cell and
/// repetition whatever the thread scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cells = spec.cells();
    let models = cells.iter().map(|c| spec.model(c)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.reps).map(move |r| (c, r))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(c, r)| run_one(spec, &cells[c], &models[c], r))
        .collect())
}

pub const SWEEP_HEADER: &str =
    "cell_id,p_g,n_m,eta,d,gamma,rep,rmsle,pg_hat,etaHs_hat,etaHi_hat,g2s_hat,g2i_hat,gh2s_hat,gh2i_hat,converged";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    let io = |e: std::io::Error| invalid(e.to_string());
    writeln!(w, "{SWEEP_HEADER}").map_err(io)?;
    for r in rows {
        let c = &r.cell;
        let chars: Vec<String> = r.characteristics.iter().map(|v| format!("{v:?}")).collect();
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{:?},{},{:?},{},{}",
            c.id,
            c.p_g,
            c.n_m,
            c.eta,
            c.d,
            c.gamma,
            r.rep,
            r.rmsle,
            chars.join(","),
            r.converged
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Mean RMSLE per cell over the repetitions that produced one.
pub fn mean_rmsle_by_cell(rows: &[SweepRow]) -> Vec<(SweepCell, f64, usize)> {
    let mut out: Vec<(SweepCell, f64, usize)> = Vec::new();
    for r in rows {
        if out.last().is_none_or(|(c, _, _)| c.id != r.cell.id) {
            out.push((r.cell, 0.0, 0));
        }
        if r.rmsle.is_finite() {
            let last = out.last_mut().expect("pushed above");
            last.1 += r.rmsle;
            last.2 += 1;
        }
    }
    for o in &mut out {
        o.1 = if o.2 > 0 { o.1 / o.2 as f64 } else { f64::NAN };
    }
    out
}
