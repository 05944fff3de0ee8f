//! Synthetic experiments: random PNDs, multinomial count sampling and
//! parameter sweeps.

pub mod experiment;
pub mod sampling;
pub mod sweep;

pub use experiment::{ExperimentConfig, PndSource, SimulatedRun};
pub use sampling::{
    expected_counts, random_pps_pnd, random_single_pnd, sample_counts, sample_multinomial, stream_rng,
};
pub use sweep::{mean_rmsle_by_cell, run_sweep, write_sweep_csv, DetectorLayout, SweepCell, SweepRow, SweepSpec, SWEEP_HEADER};
