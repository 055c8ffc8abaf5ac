//! Bidirectional LSTM column encoder trained on pair classification.
//!
//! A token sequence of fixed length `n` is embedded (`N x d` table), run
//! through `layers` stacked bidirectional LSTM layers, and summarized as the
//! top layer's final forward state concatenated with its final backward state
//! (dimension `2h`). Two drug encodings `a`, `b` form the pair feature
//! `|a - b| ++ (a * b)` (dimension `4h`), which a single linear layer maps to
//! label logits; training minimizes the mean negative log-likelihood of the
//! log-softmax.

mod checkpoint;
mod export;
mod grid;
mod lstm;
mod train;

use std::ops::Range;

use rand::Rng;

use crate::{seeds, Error, Result};

pub use export::{export_encodings, prepare_column, EncodedColumn};
pub use grid::{grid_search, GridPoint, GridResult, GridRow};
pub use lstm::{
    batch_loss, classify_pair, encode_sequence, gradients, nll_loss, pair_features, Gradients,
    PairExample,
};
pub use train::{accuracy, predict, train, Adam, EpochRecord, TrainHistory};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub num_labels: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            embed_dim: 32,
            hidden: 32,
            layers: 1,
            max_len: 20,
            vocab_size: 3,
            num_labels: 2,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 50,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("embed_dim", self.embed_dim),
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("vocab_size", self.vocab_size),
            ("num_labels", self.num_labels),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.max_len < 2 {
            return Err(Error::InvalidArgument("max_len must be at least 2".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Dimension of a sequence encoding.
    pub fn encoding_dim(&self) -> usize {
        2 * self.hidden
    }

    pub fn pair_dim(&self) -> usize {
        4 * self.hidden
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

/// A named block of parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Embedding,
    /// `4h x input` input weights, gate rows ordered i, f, g, o.
    WeightIh { layer: usize, dir: Direction },
    /// `4h x h` recurrent weights.
    WeightHh { layer: usize, dir: Direction },
    BiasIh { layer: usize, dir: Direction },
    BiasHh { layer: usize, dir: Direction },
    /// `L x 4h` classifier weights.
    HeadWeight,
    HeadBias,
}

/// Offsets of one direction of one LSTM layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CellOffsets {
    pub input_dim: usize,
    pub w_ih: usize,
    pub w_hh: usize,
    pub b_ih: usize,
    pub b_hh: usize,
}

/// Row-major placement of every parameter group in one flat vector:
/// embedding, then per layer the forward and backward cells, then the head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    groups: Vec<(ParamGroup, Range<usize>, (usize, usize))>,
    cells: Vec<[CellOffsets; 2]>,
    head_w: usize,
    head_b: usize,
    total: usize,
}

impl ParamLayout {
    pub fn new(cfg: &EncoderConfig) -> Self {
        let h = cfg.hidden;
        let mut groups = Vec::new();
        let mut at = 0;
        let mut push = |g: ParamGroup, rows: usize, cols: usize| {
            let start = at;
            at += rows * cols;
            groups.push((g, start..at, (rows, cols)));
            start
        };
        push(ParamGroup::Embedding, cfg.vocab_size, cfg.embed_dim);
        let mut cells = Vec::with_capacity(cfg.layers);
        for layer in 0..cfg.layers {
            let input_dim = if layer == 0 { cfg.embed_dim } else { 2 * h };
            let mut cell = |dir| CellOffsets {
                input_dim,
                w_ih: push(ParamGroup::WeightIh { layer, dir }, 4 * h, input_dim),
                w_hh: push(ParamGroup::WeightHh { layer, dir }, 4 * h, h),
                b_ih: push(ParamGroup::BiasIh { layer, dir }, 4 * h, 1),
                b_hh: push(ParamGroup::BiasHh { layer, dir }, 4 * h, 1),
            };
            let fwd = cell(Direction::Forward);
            let bwd = cell(Direction::Backward);
            cells.push([fwd, bwd]);
        }
        let head_w = push(ParamGroup::HeadWeight, cfg.num_labels, 4 * h);
        let head_b = push(ParamGroup::HeadBias, cfg.num_labels, 1);
        ParamLayout {
            groups,
            cells,
            head_w,
            head_b,
            total: at,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn groups(&self) -> impl Iterator<Item = (ParamGroup, Range<usize>, (usize, usize))> + '_ {
        self.groups.iter().cloned()
    }

    pub fn range(&self, group: ParamGroup) -> Range<usize> {
        self.groups
            .iter()
            .find(|(g, _, _)| *g == group)
            .map(|(_, r, _)| r.clone())
            .unwrap_or_else(|| panic!("no parameter group {group:?}"))
    }

    /// Length of the embedding block at the front of the vector.
    pub(crate) fn embedding_len(&self) -> usize {
        self.groups[0].1.end
    }

    pub(crate) fn cell(&self, layer: usize, dir: Direction) -> CellOffsets {
        self.cells[layer][dir as usize]
    }
}

/// Encoder plus classifier head. All parameters live in one flat vector laid
/// out by [`ParamLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    config: EncoderConfig,
    layout: ParamLayout,
    params: Vec<f64>,
}

impl EncoderModel {
    /// Zero-initialized model.
    pub fn zeros(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        let params = vec![0.0; layout.total()];
        Ok(EncoderModel {
            config,
            layout,
            params,
        })
    }

    /// Uniform `±1/sqrt(h)` for LSTM and head weights, `±0.5/d` for
    /// embeddings, zero biases.
    pub fn init<R: Rng>(config: EncoderConfig, rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let w = 1.0 / (model.config.hidden as f64).sqrt();
        let e = 0.5 / model.config.embed_dim as f64;
        let layout = model.layout.clone();
        for (group, range, _) in layout.groups() {
            let scale = match group {
                ParamGroup::Embedding => e,
                ParamGroup::WeightIh { .. } | ParamGroup::WeightHh { .. } | ParamGroup::HeadWeight => w,
                ParamGroup::BiasIh { .. } | ParamGroup::BiasHh { .. } | ParamGroup::HeadBias => continue,
            };
            for p in &mut model.params[range] {
                *p = rng.gen_range(-scale..scale);
            }
        }
        Ok(model)
    }

    pub fn seeded(config: EncoderConfig) -> Result<Self> {
        let mut rng = seeds::rng(config.seed);
        Self::init(config, &mut rng)
    }

    pub(crate) fn from_parts(config: EncoderConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if params.len() != layout.total() {
            return Err(Error::DimensionMismatch {
                expected: layout.total(),
                actual: params.len(),
            });
        }
        Ok(EncoderModel {
            config,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn group(&self, group: ParamGroup) -> &[f64] {
        &self.params[self.layout.range(group)]
    }

    pub fn group_mut(&mut self, group: ParamGroup) -> &mut [f64] {
        let r = self.layout.range(group);
        &mut self.params[r]
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn head(&self) -> (&[f64], &[f64]) {
        let l = self.config.num_labels;
        let p = self.config.pair_dim();
        let w = &self.params[self.layout.head_w..self.layout.head_w + l * p];
        let b = &self.params[self.layout.head_b..self.layout.head_b + l];
        (w, b)
    }
}
