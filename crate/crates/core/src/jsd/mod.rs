//! Joint spectral amplitudes, Schmidt mode numbers, filter segmentation and
//! PND synthesis up to two pairs.

pub mod filter;
pub mod grid;
pub mod io;
pub mod overlap;
pub mod schmidt;
pub mod segment;
pub mod synth;

pub use filter::{FilterProfile, TransmittanceKind};
pub use grid::{Axis, JsdGrid};
pub use overlap::{complex_overlap, pair_overlap, OverlapAxis};
pub use schmidt::{schmidt_coefficients, schmidt_number_analytic, schmidt_number_svd};
pub use segment::{segment, Segmentation};
pub use synth::{pnd_from_segmentation, synthesize_pnd, PumpGain};
