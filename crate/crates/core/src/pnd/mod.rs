//! Photon-number distributions, loss channels and source characteristics.

pub mod characteristics;
pub mod io;
pub mod loss;
pub mod matrix;

pub use characteristics::{
    g2_marginal, g2_marginal_truncated, gh2, heralding_bounds, pair_gen_prob, tmsv_pnd, CharacteristicSet,
};
pub use io::{read_pnd_csv, write_pnd_csv};
pub use loss::{apply_loss_bipartite, apply_loss_single, loss_matrix, LossChannel};
pub use matrix::{Mode, PndMatrix};
