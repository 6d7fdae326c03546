use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the dynamic convolutional network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub num_layers: usize,
    pub filter_widths: Vec<usize>,
    pub feature_maps: Vec<usize>,
    pub k_top: usize,
    /// Embedding dimension `d_w`.
    pub d_w: usize,
    /// Sentence width `s`; longer texts are truncated.
    pub sentence_width: usize,
    /// Number of output bits.
    pub q: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            num_layers: 2,
            filter_widths: vec![3, 3],
            feature_maps: vec![12, 8],
            k_top: 5,
            d_w: 48,
            sentence_width: 38,
            q: 48,
            learning_rate: 0.01,
            batch_size: 200,
            dropout_rate: 0.5,
            epochs: 20,
            seed: 0,
        }
    }
}

impl CnnConfig {
    /// Deep-feature dimension `(d_w / 2^L) · k_top · maps[L−1]`.
    pub fn r(&self) -> usize {
        self.final_rows() * self.k_top * self.feature_maps[self.num_layers - 1]
    }

    /// Rows entering layer `l` (1-based).
    pub fn rows_in(&self, l: usize) -> usize {
        self.d_w >> (l - 1)
    }

    /// Rows after the last folding.
    pub fn final_rows(&self) -> usize {
        self.d_w >> self.num_layers
    }

    /// Feature maps entering layer `l` (1-based).
    pub fn maps_in(&self, l: usize) -> usize {
        if l == 1 {
            1
        } else {
            self.feature_maps[l - 2]
        }
    }

    /// Narrowest input the first layer will accept so that every pooling
    /// stage has at least `k_top` columns to choose from.
    pub fn min_input_width(&self) -> usize {
        (self.k_top + 1).saturating_sub(self.filter_widths[0]).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.num_layers;
        if l == 0 {
            return Err(Error::Param("num_layers must be at least 1".into()));
        }
        if self.filter_widths.len() != l || self.feature_maps.len() != l {
            return Err(Error::Param(format!(
                "filter_widths ({}) and feature_maps ({}) must both list {l} layers",
                self.filter_widths.len(),
                self.feature_maps.len()
            )));
        }
        if self.filter_widths.contains(&0) || self.feature_maps.contains(&0) {
            return Err(Error::Param("filter widths and feature maps must be positive".into()));
        }
        if l >= usize::BITS as usize || self.d_w == 0 || !self.d_w.is_multiple_of(1usize << l) {
            return Err(Error::Param(format!(
                "d_w = {} must be a positive multiple of 2^L = 2^{l}",
                self.d_w
            )));
        }
        if self.k_top == 0 || self.q == 0 || self.batch_size == 0 || self.sentence_width == 0 {
            return Err(Error::Param(
                "k_top, q, batch_size and sentence_width must be positive".into(),
            ));
        }
        if self.sentence_width + self.filter_widths[0] - 1 < self.k_top {
            return Err(Error::Param(format!(
                "sentence width {} with filter width {} cannot supply k_top = {} columns",
                self.sentence_width, self.filter_widths[0], self.k_top
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Param(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Param(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// `k_l = max(k_top, ⌈(L − l)/L · s⌉)` for layer `l` of `L`.
pub fn dynamic_k(l: usize, num_layers: usize, s: usize, k_top: usize) -> usize {
    debug_assert!(l >= 1 && l <= num_layers);
    let scaled = ((num_layers - l) * s).div_ceil(num_layers);
    scaled.max(k_top)
}
