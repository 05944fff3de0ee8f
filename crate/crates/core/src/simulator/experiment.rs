use crate::detection::{bipartite_probs, CountRecord, DetectorPair, Layout};
use crate::error::{invalid, Result};
use crate::estimator::{LikelihoodModel, Setup};
use crate::pnd::PndMatrix;
use crate::simulator::sampling::{random_pps_pnd, sample_counts, stream_rng};

/// Where the true PND of a simulated experiment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PndSource {
    Explicit(PndMatrix),
    /// Drawn per repetition with the given `p_g`.
    Random { p_g: f64 },
}

/// A simulated two-mode experiment over a list of attenuator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: PndSource,
    pub det_s: DetectorPair,
    pub det_i: DetectorPair,
    /// `(γ_s, γ_i)` per setting `ν`.
    pub settings: Vec<(f64, f64)>,
    pub n_m: u64,
    pub seed: u64,
    pub reps: usize,
}

/// One repetition: the true PND and a record per setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    pub truth: PndMatrix,
    pub records: Vec<CountRecord>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() {
            return Err(invalid("at least one attenuator setting is required"));
        }
        if self.n_m == 0 {
            return Err(invalid("n_m must be at least 1"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<LikelihoodModel> {
        let setups = self
            .settings
            .iter()
            .enumerate()
            .map(|(nu, (gs, gi))| {
                Ok((nu, Setup::Bipartite { s: self.det_s.with_gamma(*gs)?, i: self.det_i.with_gamma(*gi)? }))
            })
            .collect::<Result<Vec<_>>>()?;
        LikelihoodModel::new(2, setups)
    }

    pub fn run(&self, rep: usize) -> Result<SimulatedRun> {
        self.validate()?;
        let mut rng = stream_rng(self.seed, rep as u64);
        let truth = match &self.source {
            PndSource::Explicit(p) => p.clone(),
            PndSource::Random { p_g } => random_pps_pnd(*p_g, &mut rng)?,
        };
        let mut records = Vec::with_capacity(self.settings.len());
        for (nu, (gs, gi)) in self.settings.iter().enumerate() {
            let w = bipartite_probs(&truth, &self.det_s.with_gamma(*gs)?, &self.det_i.with_gamma(*gi)?)?;
            records.push(sample_counts(Layout::Bipartite, &w, self.n_m, nu, &mut rng)?);
        }
        Ok(SimulatedRun { truth, records })
    }
}
