//! PND reconstruction from click counts and count-based baselines.

pub mod count_based;
pub mod model;
pub mod optimize;

pub use count_based::{count_based_g2, count_based_gh2, count_based_pg_eta};
pub use model::{log_likelihood, pnd_log_likelihood, LikelihoodModel, Reconstruction, Setup};
pub use optimize::{
    eml_estimate, estimate, ml_estimate, EstimateOptions, EstimateResult, Objective, StartSummary,
};

use crate::error::{invalid, Result};
use crate::pnd::CharacteristicSet;

/// Source characteristics of a two-mode reconstruction.
pub fn characterize(result: &EstimateResult) -> Result<CharacteristicSet> {
    let p = result
        .p_hat()
        .ok_or_else(|| invalid("characteristics need a two-mode reconstruction"))?;
    CharacteristicSet::from_pnd(p)
}
