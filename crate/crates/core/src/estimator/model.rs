use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::detection::{CountRecord, DetectorPair, Layout};
use crate::error::{invalid, Error, Result};
use crate::pnd::PndMatrix;

/// Known detection parameters of one measurement setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setup {
    /// One mode on its own; the unknown is a photon-number vector.
    Single(DetectorPair),
    /// Both modes; the unknown is the joint PND matrix.
    Bipartite { s: DetectorPair, i: DetectorPair },
}

fn is_one_detector(d: &DetectorPair) -> bool {
    d.t == 1.0 && d.eta_r == 0.0 && d.d_r == 0.0
}

/// Outcome index, within `(XX, XO, OX, OO)`, where every working detector of
/// the arm clicks.
fn arm_all_click(d: &DetectorPair) -> usize {
    if is_one_detector(d) {
        2
    } else {
        3
    }
}

impl Setup {
    pub fn layout(&self) -> Layout {
        match self {
            Setup::Single(_) => Layout::Single,
            Setup::Bipartite { .. } => Layout::Bipartite,
        }
    }

    /// Linear map from the unknown cells to outcome probabilities.
    pub fn response(&self, n_max: usize) -> DMatrix<f64> {
        match self {
            Setup::Single(d) => d.response(n_max),
            Setup::Bipartite { s, i } => s.response(n_max).kronecker(&i.response(n_max)),
        }
    }

    /// The outcome in which all working detectors click.
    pub fn all_click(&self) -> usize {
        match self {
            Setup::Single(d) => arm_all_click(d),
            Setup::Bipartite { s, i } => 4 * arm_all_click(s) + arm_all_click(i),
        }
    }
}

/// Per-setting detection parameters, assumed known from calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    layout: Layout,
    n_max: usize,
    setups: BTreeMap<usize, Setup>,
}

impl LikelihoodModel {
    pub fn new(n_max: usize, setups: impl IntoIterator<Item = (usize, Setup)>) -> Result<Self> {
        let setups: BTreeMap<usize, Setup> = setups.into_iter().collect();
        let Some(first) = setups.values().next() else {
            return Err(invalid("likelihood model needs at least one setting"));
        };
        let layout = first.layout();
        if setups.values().any(|s| s.layout() != layout) {
            return Err(invalid("all settings must share one layout"));
        }
        if n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        Ok(Self { layout, n_max, setups })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn setup(&self, nu: usize) -> Option<&Setup> {
        self.setups.get(&nu)
    }

    pub fn settings(&self) -> impl Iterator<Item = (&usize, &Setup)> {
        self.setups.iter()
    }

    /// Number of unknown cells.
    pub fn unknowns(&self) -> usize {
        match self.layout {
            Layout::Single => self.n_max + 1,
            Layout::Bipartite => (self.n_max + 1).pow(2),
        }
    }

    /// Pairs every record with its response matrix.
    pub(crate) fn bind<'a>(&self, records: &'a [CountRecord]) -> Result<Vec<Bound<'a>>> {
        if records.is_empty() {
            return Err(invalid("no count records"));
        }
        records
            .iter()
            .map(|r| {
                if r.layout() != self.layout {
                    return Err(Error::Mismatch("record layout differs from the model layout".into()));
                }
                let setup = self.setups.get(&r.setting()).ok_or_else(|| {
                    Error::Mismatch(format!("record refers to setting {} which the model lacks", r.setting()))
                })?;
                Ok(Bound { record: r, response: setup.response(self.n_max), all_click: setup.all_click() })
            })
            .collect()
    }

    /// Outcome probabilities for setting `nu` given the unknown cells.
    pub fn outcome_probs(&self, nu: usize, cells: &[f64]) -> Result<Vec<f64>> {
        let setup = self.setups.get(&nu).ok_or_else(|| Error::Mismatch(format!("unknown setting {nu}")))?;
        if cells.len() != self.unknowns() {
            return Err(invalid("cell count does not match the model"));
        }
        let w = setup.response(self.n_max) * nalgebra::DVector::from_column_slice(cells);
        Ok(w.iter().copied().collect())
    }
}

pub(crate) struct Bound<'a> {
    pub record: &'a CountRecord,
    pub response: DMatrix<f64>,
    pub all_click: usize,
}

/// The reconstructed distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Reconstruction {
    Bipartite(PndMatrix),
    Single(Vec<f64>),
}

impl Reconstruction {
    pub(crate) fn from_cells(layout: Layout, n_max: usize, cells: Vec<f64>) -> Result<Self> {
        Ok(match layout {
            Layout::Single => Reconstruction::Single(cells),
            Layout::Bipartite => Reconstruction::Bipartite(PndMatrix::new(n_max, cells)?),
        })
    }

    pub fn cells(&self) -> &[f64] {
        match self {
            Reconstruction::Bipartite(p) => p.cells(),
            Reconstruction::Single(v) => v,
        }
    }

    pub fn pnd(&self) -> Option<&PndMatrix> {
        match self {
            Reconstruction::Bipartite(p) => Some(p),
            Reconstruction::Single(_) => None,
        }
    }
}

/// `Σ_ν Σ_o f log W` with `0 log 0 = 0`.
pub fn log_likelihood(cells: &[f64], records: &[CountRecord], model: &LikelihoodModel) -> Result<f64> {
    if cells.len() != model.unknowns() {
        return Err(invalid("cell count does not match the model"));
    }
    let p = nalgebra::DVector::from_column_slice(cells);
    let mut ll = 0.0;
    for b in model.bind(records)? {
        let w = &b.response * &p;
        for (f, w) in b.record.counts().iter().zip(w.iter()) {
            if *f == 0.0 {
                continue;
            }
            if *w <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "outcome with {f} counts has zero probability in setting {}",
                    b.record.setting()
                )));
            }
            ll += f * w.ln();
        }
    }
    Ok(ll)
}

/// [`log_likelihood`] for a joint PND.
pub fn pnd_log_likelihood(p: &PndMatrix, records: &[CountRecord], model: &LikelihoodModel) -> Result<f64> {
    if model.layout() != Layout::Bipartite || p.n_max() != model.n_max() {
        return Err(Error::Mismatch("PND shape does not match the model".into()));
    }
    log_likelihood(p.cells(), records, model)
}
