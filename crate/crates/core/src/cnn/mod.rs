//! Dynamic convolutional network fitted to binary codes.
//!
//! Per layer: wide convolution of every embedding row (summed over input
//! maps, plus a per-row bias), folding of adjacent rows, dynamic k-max
//! pooling, `tanh`. The last layer's maps flatten into the deep feature `h`;
//! `q` logistic units on `W_O h` predict the code bits.

pub mod checkpoint;
mod config;
mod model;
mod ops;
mod train;

pub use config::{dynamic_k, CnnConfig};
pub use model::{
    logistic_loss, sample_mask, sigmoid, CnnModel, Example, ForwardTrace, Gradients, LayerTrace,
    Parameters, ADAGRAD_EPS, PROB_EPS,
};
pub use ops::{fold, k_max_indices, k_max_pool, wide_conv_row, wide_conv_row_backward};
pub use train::{train, write_loss_csv, EpochLoss, TrainingSet};
