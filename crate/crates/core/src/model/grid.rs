//! Exhaustive hyper-parameter search scored by validation accuracy.

use super::{prepare_column, train, EncoderConfig, EncoderModel, ParamLayout};
use crate::corpus::{ColumnId, DrugRecord, Preprocessor, Vocabulary};
use crate::partition::PartitionSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub max_len: usize,
    pub min_count: usize,
    pub learning_rate: f64,
}

impl GridPoint {
    /// Cartesian product, in lexicographic order of
    /// `(embed_dim, hidden, layers, max_len, min_count, learning_rate)`.
    pub fn product(
        embed_dims: &[usize],
        hiddens: &[usize],
        layers: &[usize],
        max_lens: &[usize],
        min_counts: &[usize],
        learning_rates: &[f64],
    ) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &embed_dim in embed_dims {
            for &hidden in hiddens {
                for &layers in layers {
                    for &max_len in max_lens {
                        for &min_count in min_counts {
                            for &learning_rate in learning_rates {
                                out.push(GridPoint {
                                    embed_dim,
                                    hidden,
                                    layers,
                                    max_len,
                                    min_count,
                                    learning_rate,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn key(&self) -> (usize, usize, usize, usize, usize, u64) {
        (
            self.embed_dim,
            self.hidden,
            self.layers,
            self.max_len,
            self.min_count,
            self.learning_rate.to_bits(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: GridPoint,
    pub val_accuracy: f64,
    pub param_count: usize,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// One row per grid point, in grid order.
    pub rows: Vec<GridRow>,
    pub best: usize,
    pub best_config: EncoderConfig,
    pub best_model: EncoderModel,
    pub best_vocab: Vocabulary,
}

impl GridResult {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "embed_dim\thidden\tlayers\tmax_len\tmin_count\tlearning_rate\tparam_count\tval_accuracy\tbest\n",
        );
        for (i, r) in self.rows.iter().enumerate() {
            let p = &r.point;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\n",
                p.embed_dim,
                p.hidden,
                p.layers,
                p.max_len,
                p.min_count,
                p.learning_rate,
                r.param_count,
                r.val_accuracy,
                u8::from(i == self.best)
            ));
        }
        out
    }
}

/// Trains one model per grid point (vocabulary refit per `min_count`) and
/// selects the highest validation accuracy; ties go to the smaller model,
/// then to the lexicographically smaller point.
pub fn grid_search(
    points: &[GridPoint],
    base: &EncoderConfig,
    drugs: &[DrugRecord],
    column: ColumnId,
    partition: &PartitionSet,
    pre: &Preprocessor,
) -> Result<GridResult> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let config_for = |point: &GridPoint, vocab_size: usize| EncoderConfig {
        embed_dim: point.embed_dim,
        hidden: point.hidden,
        layers: point.layers,
        max_len: point.max_len,
        vocab_size,
        num_labels: partition.num_labels,
        learning_rate: point.learning_rate,
        ..base.clone()
    };
    for point in points {
        config_for(point, 1).validate()?;
    }
    let fitting = partition.fitting_drugs();
    let mut rows = Vec::with_capacity(points.len());
    let mut best: Option<(usize, EncoderConfig, EncoderModel, Vocabulary)> = None;
    for point in points {
        let (vocab, data) = prepare_column(drugs, column, &fitting, point.min_count, point.max_len, pre);
        let config = config_for(point, vocab.len());
        let (model, history) = train(&config, &data, partition)?;
        let row = GridRow {
            point: point.clone(),
            val_accuracy: history.best_val_accuracy(),
            param_count: ParamLayout::new(&config).total(),
        };
        let better = match &best {
            None => true,
            Some((b, ..)) => {
                let cur: &GridRow = &rows[*b];
                row.val_accuracy > cur.val_accuracy
                    || (row.val_accuracy == cur.val_accuracy
                        && (row.param_count, row.point.key()) < (cur.param_count, cur.point.key()))
            }
        };
        if better {
            best = Some((rows.len(), config, model, vocab));
        }
        rows.push(row);
    }
    let (best, best_config, best_model, best_vocab) = best.expect("non-empty grid");
    Ok(GridResult {
        rows,
        best,
        best_config,
        best_model,
        best_vocab,
    })
}
