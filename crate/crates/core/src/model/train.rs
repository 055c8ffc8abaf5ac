//! Mini-batch training with best-validation checkpointing.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::lstm::{classify_pair, encode_sequence, gradients, pair_features, PairExample};
use super::{EncodedColumn, EncoderConfig, EncoderModel};
use crate::corpus::DdiTriple;
use crate::header::{header_num, parse_header};
use crate::partition::PartitionSet;
use crate::{seeds, Error, Result};

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, num_params: usize) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    /// Best validation accuracy over epochs `1..=epoch`.
    pub best_val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept; 0 if none completed.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best_val_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.best_val_accuracy)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#best_epoch={}\nepoch\ttrain_loss\tval_accuracy\tbest_val_accuracy\n", self.best_epoch);
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{}\t{:.17e}\t{:.17e}\t{:.17e}",
                e.epoch, e.train_loss, e.val_accuracy, e.best_val_accuracy
            );
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let fields = parse_header(lines.next().unwrap_or(""), 1)?;
        let best_epoch = header_num(&fields, "best_epoch", 1)?;
        let mut epochs = Vec::new();
        for (i, line) in lines.enumerate().skip(1) {
            let lineno = i + 2;
            let f: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::format(lineno, format!("bad number `{s}`")));
            let [epoch, loss, acc, best] = f[..] else {
                return Err(Error::format(lineno, "expected 4 fields"));
            };
            epochs.push(EpochRecord {
                epoch: epoch.parse().map_err(|_| Error::format(lineno, "bad epoch"))?,
                train_loss: num(loss)?,
                val_accuracy: num(acc)?,
                best_val_accuracy: num(best)?,
            });
        }
        Ok(TrainHistory { epochs, best_epoch })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }
}

fn examples<'a>(data: &'a EncodedColumn, triples: &[DdiTriple]) -> Result<Vec<PairExample<'a>>> {
    triples
        .iter()
        .map(|t| {
            Ok(PairExample {
                left: data.sequence(&t.drug1)?,
                right: data.sequence(&t.drug2)?,
                label: t.label,
            })
        })
        .collect()
}

/// Most likely label for each triple's ordered pair. Each distinct drug is
/// encoded once.
pub fn predict(model: &EncoderModel, data: &EncodedColumn, triples: &[DdiTriple]) -> Result<Vec<usize>> {
    let mut ids: Vec<&str> = triples.iter().flat_map(|t| [t.drug1.as_str(), t.drug2.as_str()]).collect();
    ids.sort_unstable();
    ids.dedup();
    let encs: HashMap<&str, Vec<f64>> = ids
        .par_iter()
        .map(|&id| Ok((id, encode_sequence(model, data.sequence(id)?)?)))
        .collect::<Result<_>>()?;
    triples
        .par_iter()
        .map(|t| {
            let lp = classify_pair(model, &pair_features(&encs[t.drug1.as_str()], &encs[t.drug2.as_str()])?)?;
            Ok(argmax(&lp))
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(model: &EncoderModel, data: &EncodedColumn, triples: &[DdiTriple]) -> Result<f64> {
    if triples.is_empty() {
        return Ok(0.0);
    }
    let preds = predict(model, data, triples)?;
    let correct = preds.iter().zip(triples).filter(|(p, t)| **p == t.label).count();
    Ok(correct as f64 / triples.len() as f64)
}

/// Trains on `partition.train` with Adam, evaluating validation accuracy
/// after every epoch and keeping the parameters of the best epoch (earliest
/// on ties). Deterministic for a fixed `config.seed`.
pub fn train(
    config: &EncoderConfig,
    data: &EncodedColumn,
    partition: &PartitionSet,
) -> Result<(EncoderModel, TrainHistory)> {
    if partition.train.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(t) = partition.all().find(|t| t.label >= config.num_labels) {
        return Err(Error::InvalidArgument(format!(
            "label {} exceeds the configured {} labels",
            t.label, config.num_labels
        )));
    }
    let mut rng = seeds::rng(config.seed);
    let mut model = EncoderModel::init(config.clone(), &mut rng)?;
    let train_ex = examples(data, &partition.train)?;
    let mut optimizer = Adam::new(config.learning_rate, model.param_count());

    let mut history = TrainHistory::default();
    let mut best: Option<(f64, EncoderModel)> = None;
    let mut order: Vec<usize> = (0..train_ex.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batch = Vec::with_capacity(config.batch_size);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_ex[i]));
            let (loss, grad) = gradients(&model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::DivergedLoss {
                    epoch,
                    history: Box::new(history),
                });
            }
            loss_sum += loss * batch.len() as f64;
            optimizer.update(model.params_mut(), grad.values());
        }
        let val_accuracy = accuracy(&model, data, &partition.val)?;
        // Without validation data every epoch replaces the checkpoint.
        let improved = match &best {
            None => true,
            Some((acc, _)) => partition.val.is_empty() || val_accuracy > *acc,
        };
        if improved {
            best = Some((val_accuracy, model.clone()));
            history.best_epoch = epoch;
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_ex.len() as f64,
            val_accuracy,
            best_val_accuracy: best.as_ref().map_or(val_accuracy, |(a, _)| *a),
        });
    }
    let model = best.map_or(model, |(_, m)| m);
    Ok((model, history))
}
