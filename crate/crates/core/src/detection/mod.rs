//! Click detection through beam splitters, lossy detectors and noise.

pub mod counts;
pub mod model;

pub use counts::{
    count_columns, noise_correct, read_count_log, write_count_log, CorrectedRecord, CountRecord, Layout, LoadSummary,
};
pub use model::{
    bipartite_probs, conversion_matrix, noise_matrix, noise_matrix_inverse, single_mode_probs, DetectorPair,
    ALL_CLICK,
};
