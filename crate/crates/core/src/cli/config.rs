//! Run configuration: a TOML file of flat sections.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use ppstat::detection::DetectorPair;
use ppstat::estimator::{EstimateOptions, LikelihoodModel, Objective, Setup};
use ppstat::jsd::{io as jsd_io, FilterProfile, JsdGrid, PumpGain, TransmittanceKind};
use ppstat::pnd::{read_pnd_csv, PndMatrix};
use ppstat::simulator::{DetectorLayout, SweepSpec};

use crate::cli::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jsd: Option<JsdSection>,
    pub filter_s: Option<FilterSection>,
    pub filter_i: Option<FilterSection>,
    #[serde(default)]
    pub detectors: DetectorSection,
    pub simulate: Option<SimulateSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub estimate: EstimateSection,
    pub bootstrap: Option<BootstrapSection>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsdSection {
    /// `gaussian` or `csv`.
    pub source: String,
    pub path: Option<PathBuf>,
    pub sigma_plus: Option<f64>,
    pub sigma_minus: Option<f64>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_points")]
    pub n_s: usize,
    #[serde(default = "default_points")]
    pub n_i: usize,
    pub extent_s: Option<f64>,
    pub extent_i: Option<f64>,
    #[serde(default = "default_xi_sq")]
    pub xi_sq: f64,
}

fn default_points() -> usize {
    128
}

fn default_xi_sq() -> f64 {
    1e-3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    /// `all_pass`, `blocking`, `rect`, `gauss` or `csv`.
    pub kind: String,
    #[serde(default)]
    pub center: f64,
    pub width: Option<f64>,
    pub fwhm: Option<f64>,
    pub path: Option<PathBuf>,
    /// How CSV samples are read: `amplitude` or `intensity`.
    #[serde(default = "default_transmittance")]
    pub transmittance: String,
}

fn default_transmittance() -> String {
    "amplitude".into()
}

/// Detector parameters. Detectors 1, 2 are the transmitted and reflected
/// arms of the signal mode, 3, 4 those of the idler mode. Defaults are a
/// calibrated four-detector setup.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct DetectorSection {
    pub T_s: f64,
    pub T_i: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta4: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    /// Attenuator transmittance per setting `ν`.
    pub gamma_s: Vec<f64>,
    pub gamma_i: Vec<f64>,
    pub rep_rate_hz: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            T_s: 0.4952,
            T_i: 0.4846,
            eta1: 0.562,
            eta2: 0.575,
            eta3: 0.567,
            eta4: 0.548,
            d1: 1.01e-7,
            d2: 2.11e-7,
            d3: 0.94e-7,
            d4: 1.00e-7,
            gamma_s: vec![1.0],
            gamma_i: vec![1.0],
            rep_rate_hz: 76e6,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// `random`, `jsd` or `pnd`.
    pub source: String,
    pub p_g: Option<f64>,
    pub pnd_path: Option<PathBuf>,
    pub n_m: f64,
    #[serde(default = "one")]
    pub reps: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p_g: Vec<f64>,
    pub n_m: Vec<f64>,
    #[serde(default = "half")]
    pub eta: Vec<f64>,
    #[serde(default = "zero")]
    pub d: Vec<f64>,
    #[serde(default = "unit")]
    pub gamma: Vec<f64>,
    #[serde(default = "hundred")]
    pub reps: usize,
    #[serde(default = "one")]
    pub n_settings: usize,
    #[serde(default = "default_layout")]
    pub layout: String,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_split")]
    pub split: f64,
    #[serde(default)]
    pub exact_counts: bool,
    #[serde(default = "one")]
    pub restarts: usize,
}

fn half() -> Vec<f64> {
    vec![0.5]
}

fn zero() -> Vec<f64> {
    vec![0.0]
}

fn unit() -> Vec<f64> {
    vec![1.0]
}

fn hundred() -> usize {
    100
}

fn default_layout() -> String {
    "2x2d".into()
}

fn default_method() -> String {
    "ml".into()
}

fn default_split() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_restarts() -> usize {
    4
}

fn default_max_iter() -> usize {
    10_000
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self { method: default_method(), restarts: default_restarts(), max_iter: default_max_iter() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    #[serde(default = "hundred")]
    pub n_boot: usize,
    /// Trials per record in each bootstrap sample; defaults to the
    /// recorded `n_m`.
    pub sample_sizes: Option<Vec<f64>>,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self { n_boot: hundred(), sample_sizes: None }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| input(format!("missing key '{key}'")))
}

/// An `n_m` given as a TOML float such as `1e9`.
pub fn trial_count(v: f64, key: &str) -> Result<u64, CliError> {
    if v >= 1.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(input(format!("'{key}' must be a positive integer, got {v}")))
    }
}

pub fn parse_method(s: &str, key: &str) -> Result<Objective, CliError> {
    match s {
        "ml" => Ok(Objective::Ml),
        "eml" => Ok(Objective::Eml),
        _ => Err(input(format!("'{key}' must be 'ml' or 'eml', got '{s}'"))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| input(format!("config {}: {}", path.display(), e.message())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn check_files(&self) -> Result<(), CliError> {
        let mut paths: Vec<(&str, &PathBuf)> = Vec::new();
        if let Some(p) = self.jsd.as_ref().and_then(|j| j.path.as_ref()) {
            paths.push(("jsd.path", p));
        }
        for (key, f) in [("filter_s.path", &self.filter_s), ("filter_i.path", &self.filter_i)] {
            if let Some(p) = f.as_ref().and_then(|f| f.path.as_ref()) {
                paths.push((key, p));
            }
        }
        if let Some(p) = self.simulate.as_ref().and_then(|s| s.pnd_path.as_ref()) {
            paths.push(("simulate.pnd_path", p));
        }
        for (key, p) in paths {
            if !self.resolve(p).is_file() {
                return Err(input(format!("'{key}': file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn build_jsd(&self) -> Result<JsdGrid, CliError> {
        let j = self.jsd.as_ref().ok_or_else(|| input("missing section [jsd]"))?;
        match j.source.as_str() {
            "gaussian" => {
                let extent = match (j.extent_s, j.extent_i) {
                    (Some(a), Some(b)) => Some((a, b)),
                    (None, None) => None,
                    _ => return Err(input("'jsd.extent_s' and 'jsd.extent_i' must be given together")),
                };
                Ok(JsdGrid::gaussian(
                    need(j.sigma_plus, "jsd.sigma_plus")?,
                    need(j.sigma_minus, "jsd.sigma_minus")?,
                    j.theta,
                    j.n_s,
                    j.n_i,
                    extent,
                )?)
            }
            "csv" => {
                let p = self.resolve(j.path.as_ref().ok_or_else(|| input("missing key 'jsd.path'"))?);
                let f = fs::File::open(&p).map_err(|e| input(format!("{}: {e}", p.display())))?;
                Ok(jsd_io::read_jsd_csv(f)?)
            }
            other => Err(input(format!("'jsd.source' must be 'gaussian' or 'csv', got '{other}'"))),
        }
    }

    pub fn gain(&self) -> Result<PumpGain, CliError> {
        let j = self.jsd.as_ref().ok_or_else(|| input("missing section [jsd]"))?;
        Ok(PumpGain::new(j.xi_sq)?)
    }

    pub fn build_filter(&self, which: &str, jsd: &JsdGrid) -> Result<FilterProfile, CliError> {
        let (section, axis) = match which {
            "filter_s" => (&self.filter_s, jsd.axis_s()),
            _ => (&self.filter_i, jsd.axis_i()),
        };
        let Some(f) = section else {
            return Ok(FilterProfile::all_pass(axis.clone()));
        };
        let key = |k: &str| format!("{which}.{k}");
        match f.kind.as_str() {
            "all_pass" => Ok(FilterProfile::all_pass(axis.clone())),
            "blocking" => Ok(FilterProfile::blocking(axis.clone())),
            "rect" => Ok(FilterProfile::rect(axis.clone(), f.center, need(f.width, &key("width"))?)?),
            "gauss" => Ok(FilterProfile::gauss(axis.clone(), f.center, need(f.fwhm, &key("fwhm"))?)?),
            "csv" => {
                let kind = match f.transmittance.as_str() {
                    "amplitude" => TransmittanceKind::Amplitude,
                    "intensity" => TransmittanceKind::Intensity,
                    other => {
                        return Err(input(format!(
                            "'{}' must be 'amplitude' or 'intensity', got '{other}'",
                            key("transmittance")
                        )))
                    }
                };
                let p = self.resolve(f.path.as_ref().ok_or_else(|| input(format!("missing key '{}'", key("path"))))?);
                let file = fs::File::open(&p).map_err(|e| input(format!("{}: {e}", p.display())))?;
                Ok(jsd_io::read_filter_csv(file, axis, kind)?)
            }
            other => Err(input(format!("'{}' has unknown value '{other}'", key("kind")))),
        }
    }

    pub fn arms(&self) -> Result<(DetectorPair, DetectorPair), CliError> {
        let d = &self.detectors;
        let s = DetectorPair::new(d.T_s, d.eta1, d.eta2, d.d1, d.d2)?;
        let i = DetectorPair::new(d.T_i, d.eta3, d.eta4, d.d3, d.d4)?;
        Ok((s, i))
    }

    /// `(γ_s, γ_i)` per setting.
    pub fn settings(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let d = &self.detectors;
        if d.gamma_s.is_empty() || d.gamma_s.len() != d.gamma_i.len() {
            return Err(input("'detectors.gamma_s' and 'detectors.gamma_i' must be nonempty and of equal length"));
        }
        Ok(d.gamma_s.iter().copied().zip(d.gamma_i.iter().copied()).collect())
    }

    /// Likelihood model for the settings `ν = 0, 1, ...`. Single-mode data
    /// use the signal arm.
    pub fn model(&self, two_mode: bool) -> Result<LikelihoodModel, CliError> {
        let (s, i) = self.arms()?;
        let setups = self
            .settings()?
            .into_iter()
            .enumerate()
            .map(|(nu, (gs, gi))| {
                Ok((
                    nu,
                    if two_mode {
                        Setup::Bipartite { s: s.with_gamma(gs)?, i: i.with_gamma(gi)? }
                    } else {
                        Setup::Single(s.with_gamma(gs)?)
                    },
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(LikelihoodModel::new(2, setups)?)
    }

    pub fn estimate_options(&self, seed: u64) -> EstimateOptions {
        EstimateOptions {
            max_iter: self.estimate.max_iter,
            restarts: self.estimate.restarts,
            seed,
            ..EstimateOptions::default()
        }
    }

    pub fn read_pnd(&self, path: &Path) -> Result<PndMatrix, CliError> {
        let p = self.resolve(path);
        let f = fs::File::open(&p).map_err(|e| input(format!("{}: {e}", p.display())))?;
        Ok(read_pnd_csv(f)?.0)
    }

    pub fn sweep_spec(&self, seed: u64, reps: Option<usize>) -> Result<SweepSpec, CliError> {
        let s = self.sweep.as_ref().ok_or_else(|| input("missing section [sweep]"))?;
        let layout = DetectorLayout::parse(&s.layout).map_err(|e| input(format!("'sweep.layout': {e}")))?;
        let method = parse_method(&s.method, "sweep.method")?;
        let base = SweepSpec::default();
        Ok(SweepSpec {
            p_g: s.p_g.clone(),
            n_m: s.n_m.clone(),
            eta: s.eta.clone(),
            d: s.d.clone(),
            gamma: s.gamma.clone(),
            reps: reps.unwrap_or(s.reps),
            n_settings: s.n_settings,
            layout,
            method,
            split: s.split,
            seed,
            exact_counts: s.exact_counts,
            options: EstimateOptions { restarts: s.restarts, ..base.options },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let e = toml::from_str::<RunConfig>("[detectors]\netaa = 0.5\n").unwrap_err();
        assert!(e.message().contains("etaa"));
        let e = toml::from_str::<RunConfig>("bogus = 1\n").unwrap_err();
        assert!(e.message().contains("bogus"));
    }

    #[test]
    fn defaults_fill_in() {
        let cfg: RunConfig = toml::from_str("[sweep]\np_g = [1e-3]\nn_m = [1e6]\n").unwrap();
        let spec = cfg.sweep_spec(3, None).unwrap();
        assert_eq!(spec.reps, 100);
        assert_eq!(spec.eta, vec![0.5]);
        assert_eq!(cfg.detectors.eta1, 0.562);
        assert_eq!(cfg.settings().unwrap(), vec![(1.0, 1.0)]);
    }

    #[test]
    fn trial_counts_must_be_integral() {
        assert_eq!(trial_count(1e9, "n_m").unwrap(), 1_000_000_000);
        assert!(trial_count(1.5, "n_m").is_err());
        assert!(trial_count(0.0, "n_m").is_err());
    }
}
