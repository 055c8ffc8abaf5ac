//! Forward pass, pair head, loss and exact backpropagation.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{CellOffsets, Direction, EncoderModel, ParamGroup, ParamLayout};
use crate::{Error, Result};

/// Unique sequences per backward work unit. Fixed so that the gradient sum
/// order does not depend on the thread count.
const BACKWARD_CHUNK: usize = 16;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Activations of one direction of one layer, `n` time steps.
#[derive(Debug, Clone)]
struct CellCache {
    /// `n x 4h`, post-activation gates i, f, g, o.
    gates: Vec<f64>,
    /// `n x h`.
    c: Vec<f64>,
    /// `n x h`.
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
struct SeqCache {
    indices: Vec<usize>,
    /// Per layer, the `n x input_dim` input.
    inputs: Vec<Vec<f64>>,
    cells: Vec<[CellCache; 2]>,
}

fn prev_step(dir: Direction, t: usize, n: usize) -> Option<usize> {
    match dir {
        Direction::Forward => t.checked_sub(1),
        Direction::Backward => (t + 1 < n).then_some(t + 1),
    }
}

fn step_time(dir: Direction, step: usize, n: usize) -> usize {
    match dir {
        Direction::Forward => step,
        Direction::Backward => n - 1 - step,
    }
}

fn cell_forward(params: &[f64], off: CellOffsets, h: usize, dir: Direction, input: &[f64], n: usize) -> CellCache {
    let in_dim = off.input_dim;
    let mut cache = CellCache {
        gates: vec![0.0; n * 4 * h],
        c: vec![0.0; n * h],
        h: vec![0.0; n * h],
    };
    let mut a = vec![0.0; 4 * h];
    for step in 0..n {
        let t = step_time(dir, step, n);
        let prev = prev_step(dir, t, n);
        let x = &input[t * in_dim..(t + 1) * in_dim];
        for (r, ar) in a.iter_mut().enumerate() {
            let w_ih = &params[off.w_ih + r * in_dim..off.w_ih + (r + 1) * in_dim];
            let mut s = params[off.b_ih + r] + params[off.b_hh + r] + dot(w_ih, x);
            if let Some(p) = prev {
                let w_hh = &params[off.w_hh + r * h..off.w_hh + (r + 1) * h];
                s += dot(w_hh, &cache.h[p * h..(p + 1) * h]);
            }
            *ar = s;
        }
        for k in 0..h {
            let i = sigmoid(a[k]);
            let f = sigmoid(a[h + k]);
            let g = a[2 * h + k].tanh();
            let o = sigmoid(a[3 * h + k]);
            let c_prev = prev.map_or(0.0, |p| cache.c[p * h + k]);
            let c = f * c_prev + i * g;
            let gates = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
            gates[k] = i;
            gates[h + k] = f;
            gates[2 * h + k] = g;
            gates[3 * h + k] = o;
            cache.c[t * h + k] = c;
            cache.h[t * h + k] = o * c.tanh();
        }
    }
    cache
}

fn check_indices(model: &EncoderModel, indices: &[usize]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty token sequence".into()));
    }
    let size = model.config.vocab_size;
    match indices.iter().find(|&&i| i >= size) {
        Some(&index) => Err(Error::IndexOutOfVocab { index, size }),
        None => Ok(()),
    }
}

fn forward(model: &EncoderModel, indices: &[usize]) -> Result<(Vec<f64>, SeqCache)> {
    check_indices(model, indices)?;
    let cfg = &model.config;
    let (n, d, h) = (indices.len(), cfg.embed_dim, cfg.hidden);
    let params = &model.params;

    let mut input: Vec<f64> = indices
        .iter()
        .flat_map(|&i| params[i * d..(i + 1) * d].iter().copied())
        .collect();
    let mut inputs = Vec::with_capacity(cfg.layers);
    let mut cells = Vec::with_capacity(cfg.layers);
    for layer in 0..cfg.layers {
        let fwd = cell_forward(params, model.layout.cell(layer, Direction::Forward), h, Direction::Forward, &input, n);
        let bwd = cell_forward(params, model.layout.cell(layer, Direction::Backward), h, Direction::Backward, &input, n);
        let mut output = vec![0.0; n * 2 * h];
        for t in 0..n {
            output[t * 2 * h..t * 2 * h + h].copy_from_slice(&fwd.h[t * h..(t + 1) * h]);
            output[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&bwd.h[t * h..(t + 1) * h]);
        }
        inputs.push(std::mem::replace(&mut input, output));
        cells.push([fwd, bwd]);
    }
    let top = cells.last().expect("at least one layer");
    let mut enc = Vec::with_capacity(2 * h);
    enc.extend_from_slice(&top[0].h[(n - 1) * h..n * h]);
    enc.extend_from_slice(&top[1].h[0..h]);
    Ok((
        enc,
        SeqCache {
            indices: indices.to_vec(),
            inputs,
            cells,
        },
    ))
}

/// Encodes a token index sequence: top-layer forward state at the last step
/// concatenated with the top-layer backward state at the first step.
pub fn encode_sequence(model: &EncoderModel, indices: &[usize]) -> Result<Vec<f64>> {
    forward(model, indices).map(|(enc, _)| enc)
}

/// `|a - b| ++ (a * b)`, elementwise.
pub fn pair_features(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut p = Vec::with_capacity(2 * a.len());
    p.extend(a.iter().zip(b).map(|(x, y)| (x - y).abs()));
    p.extend(a.iter().zip(b).map(|(x, y)| x * y));
    Ok(p)
}

fn log_softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    for z in logits {
        *z -= lse;
    }
}

pub(crate) fn logits(w: &[f64], b: &[f64], p: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(c, bc)| bc + dot(&w[c * p.len()..(c + 1) * p.len()], p))
        .collect()
}

/// Log-probabilities over labels for a pair feature.
pub fn classify_pair(model: &EncoderModel, p: &[f64]) -> Result<Vec<f64>> {
    let (w, b) = model.head();
    if p.len() != model.config.pair_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.config.pair_dim(),
            actual: p.len(),
        });
    }
    let mut z = logits(w, b, p);
    log_softmax(&mut z);
    Ok(z)
}

pub fn nll_loss(log_probs: &[f64], label: usize) -> f64 {
    -log_probs[label]
}

/// One labeled pair of token index sequences.
#[derive(Debug, Clone, Copy)]
pub struct PairExample<'a> {
    pub left: &'a [usize],
    pub right: &'a [usize],
    pub label: usize,
}

/// Gradient of the batch loss, in the model's parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layout: ParamLayout,
    values: Vec<f64>,
}

impl Gradients {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn group(&self, group: ParamGroup) -> &[f64] {
        &self.values[self.layout.range(group)]
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }
}

struct Dedup<'a> {
    unique: Vec<&'a [usize]>,
    pairs: Vec<(usize, usize, usize)>,
}

fn dedup<'a>(batch: &[PairExample<'a>]) -> Dedup<'a> {
    let mut unique = Vec::new();
    let mut index: HashMap<&[usize], usize> = HashMap::new();
    let mut id = |s: &'a [usize]| {
        *index.entry(s).or_insert_with(|| {
            unique.push(s);
            unique.len() - 1
        })
    };
    let pairs = batch.iter().map(|e| (id(e.left), id(e.right), e.label)).collect();
    Dedup { unique, pairs }
}

/// Mean NLL of a batch, without gradients.
pub fn batch_loss(model: &EncoderModel, batch: &[PairExample<'_>]) -> Result<f64> {
    let dd = dedup(batch);
    let encs: Vec<Vec<f64>> = dd
        .unique
        .par_iter()
        .map(|s| encode_sequence(model, s))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for &(i, j, label) in &dd.pairs {
        let lp = classify_pair(model, &pair_features(&encs[i], &encs[j])?)?;
        total += nll_loss(&lp, label);
    }
    Ok(total / batch.len() as f64)
}

#[allow(clippy::too_many_arguments)]
fn cell_backward(
    params: &[f64],
    off: CellOffsets,
    h: usize,
    dir: Direction,
    input: &[f64],
    cache: &CellCache,
    d_out: &[f64],
    d_out_col: usize,
    grad: &mut [f64],
    base: usize,
    d_input: &mut [f64],
) {
    let in_dim = off.input_dim;
    let n = cache.h.len() / h;
    let zeros = vec![0.0; h];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];

    for step in (0..n).rev() {
        let t = step_time(dir, step, n);
        let prev = prev_step(dir, t, n);
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let (c_prev, h_prev) = match prev {
            Some(p) => (&cache.c[p * h..(p + 1) * h], &cache.h[p * h..(p + 1) * h]),
            None => (zeros.as_slice(), zeros.as_slice()),
        };
        for k in 0..h {
            let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let dh = d_out[t * 2 * h + d_out_col + k] + dh_next[k];
            let tc = cache.c[t * h + k].tanh();
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            da[k] = dc * g * i * (1.0 - i);
            da[h + k] = dc * c_prev[k] * f * (1.0 - f);
            da[2 * h + k] = dc * i * (1.0 - g * g);
            da[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }

        let x = &input[t * in_dim..(t + 1) * in_dim];
        let dx = &mut d_input[t * in_dim..(t + 1) * in_dim];
        dh_next.fill(0.0);
        for (r, &a) in da.iter().enumerate() {
            grad[off.b_ih - base + r] += a;
            grad[off.b_hh - base + r] += a;

            let w = &params[off.w_ih + r * in_dim..off.w_ih + (r + 1) * in_dim];
            let gw = &mut grad[off.w_ih - base + r * in_dim..off.w_ih - base + (r + 1) * in_dim];
            for c in 0..in_dim {
                gw[c] += a * x[c];
                dx[c] += w[c] * a;
            }

            let w = &params[off.w_hh + r * h..off.w_hh + (r + 1) * h];
            let gw = &mut grad[off.w_hh - base + r * h..off.w_hh - base + (r + 1) * h];
            for c in 0..h {
                gw[c] += a * h_prev[c];
                dh_next[c] += w[c] * a;
            }
        }
    }
}

/// Backpropagates `d_enc` through one sequence. LSTM gradients accumulate
/// into `grad`, which covers the parameters from the end of the embedding
/// block onward; the embedding-input gradient (`n x d`) is returned.
fn backward(model: &EncoderModel, cache: &SeqCache, d_enc: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let cfg = &model.config;
    let (n, h) = (cache.indices.len(), cfg.hidden);
    let base = model.layout.embedding_len();

    let mut d_out = vec![0.0; n * 2 * h];
    d_out[(n - 1) * 2 * h..(n - 1) * 2 * h + h].copy_from_slice(&d_enc[..h]);
    d_out[h..2 * h].copy_from_slice(&d_enc[h..]);

    for layer in (0..cfg.layers).rev() {
        let input = &cache.inputs[layer];
        let mut d_input = vec![0.0; input.len()];
        for (k, dir) in [Direction::Forward, Direction::Backward].into_iter().enumerate() {
            cell_backward(
                &model.params,
                model.layout.cell(layer, dir),
                h,
                dir,
                input,
                &cache.cells[layer][k],
                &d_out,
                k * h,
                grad,
                base,
                &mut d_input,
            );
        }
        d_out = d_input;
    }
    d_out
}

/// Mean NLL over `batch` and its exact gradient with respect to every
/// parameter. Identical sequences within the batch are encoded once.
pub fn gradients(model: &EncoderModel, batch: &[PairExample<'_>]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cfg = &model.config;
    let (d, e_dim, p_dim, n_labels) = (cfg.embed_dim, cfg.encoding_dim(), cfg.pair_dim(), cfg.num_labels);
    let dd = dedup(batch);

    let forwards: Vec<(Vec<f64>, SeqCache)> = dd
        .unique
        .par_iter()
        .map(|s| forward(model, s))
        .collect::<Result<_>>()?;

    let (w, b) = model.head();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut d_enc = vec![vec![0.0; e_dim]; dd.unique.len()];
    let mut g_head_w = vec![0.0; w.len()];
    let mut g_head_b = vec![0.0; b.len()];
    let mut dp = vec![0.0; p_dim];
    for &(i, j, label) in &dd.pairs {
        let (ei, ej) = (&forwards[i].0, &forwards[j].0);
        let p = pair_features(ei, ej)?;
        let mut z = logits(w, b, &p);
        log_softmax(&mut z);
        loss += nll_loss(&z, label);

        dp.fill(0.0);
        for c in 0..n_labels {
            let dz = (z[c].exp() - if c == label { 1.0 } else { 0.0 }) * scale;
            g_head_b[c] += dz;
            let row = &w[c * p_dim..(c + 1) * p_dim];
            let grow = &mut g_head_w[c * p_dim..(c + 1) * p_dim];
            for k in 0..p_dim {
                grow[k] += dz * p[k];
                dp[k] += row[k] * dz;
            }
        }
        for k in 0..e_dim {
            let diff = ei[k] - ej[k];
            let sign = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            let (d_abs, d_prod) = (dp[k], dp[e_dim + k]);
            d_enc[i][k] += d_abs * sign + d_prod * ej[k];
            d_enc[j][k] += -d_abs * sign + d_prod * ei[k];
        }
    }

    let base = model.layout.embedding_len();
    let tail_len = model.layout.total() - base;
    let work: Vec<usize> = (0..dd.unique.len()).collect();
    let partials: Vec<(Vec<f64>, Vec<Vec<f64>>)> = work
        .par_chunks(BACKWARD_CHUNK)
        .map(|chunk| {
            let mut tail = vec![0.0; tail_len];
            let emb = chunk
                .iter()
                .map(|&u| backward(model, &forwards[u].1, &d_enc[u], &mut tail))
                .collect();
            (tail, emb)
        })
        .collect();

    let mut values = vec![0.0; model.layout.total()];
    for (chunk, (tail, emb)) in work.chunks(BACKWARD_CHUNK).zip(partials) {
        for (v, t) in values[base..].iter_mut().zip(&tail) {
            *v += t;
        }
        for (&u, d_x) in chunk.iter().zip(emb) {
            for (t, &tok) in forwards[u].1.indices.iter().enumerate() {
                for k in 0..d {
                    values[tok * d + k] += d_x[t * d + k];
                }
            }
        }
    }
    let hw = model.layout.range(ParamGroup::HeadWeight);
    for (v, g) in values[hw].iter_mut().zip(&g_head_w) {
        *v += g;
    }
    let hb = model.layout.range(ParamGroup::HeadBias);
    for (v, g) in values[hb].iter_mut().zip(&g_head_b) {
        *v += g;
    }

    Ok((
        loss * scale,
        Gradients {
            layout: model.layout.clone(),
            values,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EncoderConfig;
    use proptest::prelude::*;

    fn cfg(d: usize, h: usize, layers: usize, vocab: usize, labels: usize) -> EncoderConfig {
        EncoderConfig {
            embed_dim: d,
            hidden: h,
            layers,
            max_len: 5,
            vocab_size: vocab,
            num_labels: labels,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn zero_params_give_zero_encoding() {
        let m = EncoderModel::zeros(cfg(3, 4, 2, 6, 3)).unwrap();
        assert_eq!(encode_sequence(&m, &[3, 4, 2, 0, 0]).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn padding_with_zero_embeddings_gives_zero_encoding() {
        let mut m = EncoderModel::seeded(cfg(3, 4, 2, 6, 3)).unwrap();
        m.group_mut(ParamGroup::Embedding)[..3].fill(0.0);
        assert_eq!(encode_sequence(&m, &[0, 0, 0, 0]).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn out_of_vocab_index() {
        let m = EncoderModel::zeros(cfg(3, 4, 1, 6, 3)).unwrap();
        assert!(matches!(
            encode_sequence(&m, &[1, 6]),
            Err(Error::IndexOutOfVocab { index: 6, size: 6 })
        ));
    }

    /// Scalar LSTM (d = h = 1) evaluated by hand from the gate equations.
    #[test]
    fn scalar_cell_matches_hand_evaluation() {
        let mut m = EncoderModel::zeros(cfg(1, 1, 1, 3, 2)).unwrap();
        m.group_mut(ParamGroup::Embedding).copy_from_slice(&[0.0, 0.5, -1.0]);
        let fwd = Direction::Forward;
        let bwd = Direction::Backward;
        // gate rows i, f, g, o
        m.group_mut(ParamGroup::WeightIh { layer: 0, dir: fwd }).copy_from_slice(&[0.3, -0.2, 0.9, 0.4]);
        m.group_mut(ParamGroup::WeightHh { layer: 0, dir: fwd }).copy_from_slice(&[0.1, 0.5, -0.7, 0.2]);
        m.group_mut(ParamGroup::BiasIh { layer: 0, dir: fwd }).copy_from_slice(&[0.05, 0.0, 0.1, -0.1]);
        m.group_mut(ParamGroup::BiasHh { layer: 0, dir: fwd }).copy_from_slice(&[0.0, 0.2, 0.0, 0.3]);
        m.group_mut(ParamGroup::WeightIh { layer: 0, dir: bwd }).copy_from_slice(&[-0.4, 0.6, 0.2, 0.8]);
        m.group_mut(ParamGroup::WeightHh { layer: 0, dir: bwd }).copy_from_slice(&[0.3, 0.3, 0.3, 0.3]);

        let s = |x: f64| 1.0 / (1.0 + (-x).exp());
        let cell = |w: [f64; 4], u: [f64; 4], b: [f64; 4], x: f64, h: f64, c: f64| {
            let i = s(w[0] * x + b[0] + u[0] * h);
            let f = s(w[1] * x + b[1] + u[1] * h);
            let g = (w[2] * x + b[2] + u[2] * h).tanh();
            let o = s(w[3] * x + b[3] + u[3] * h);
            let c = f * c + i * g;
            (o * c.tanh(), c)
        };
        // input tokens [1, 2] -> x = [0.5, -1.0]
        let (wf, uf, bf) = ([0.3, -0.2, 0.9, 0.4], [0.1, 0.5, -0.7, 0.2], [0.05, 0.2, 0.1, 0.2]);
        let (h1, c1) = cell(wf, uf, bf, 0.5, 0.0, 0.0);
        let (h2, _) = cell(wf, uf, bf, -1.0, h1, c1);
        let (wb, ub, bb) = ([-0.4, 0.6, 0.2, 0.8], [0.3; 4], [0.0; 4]);
        let (g2, d2) = cell(wb, ub, bb, -1.0, 0.0, 0.0);
        let (g1, _) = cell(wb, ub, bb, 0.5, g2, d2);

        let enc = encode_sequence(&m, &[1, 2]).unwrap();
        assert!((enc[0] - h2).abs() < 1e-14, "{} vs {h2}", enc[0]);
        assert!((enc[1] - g1).abs() < 1e-14, "{} vs {g1}", enc[1]);
    }

    #[test]
    fn pair_feature_cases() {
        assert_eq!(pair_features(&[1.0, 2.0], &[3.0, 1.0]).unwrap(), [2.0, 1.0, 3.0, 2.0]);
        assert_eq!(pair_features(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), [0.0, 0.0, 2.25, 4.0]);
        assert!(matches!(pair_features(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn classify_uniform_and_closed_form() {
        let m = EncoderModel::zeros(cfg(2, 2, 1, 4, 5)).unwrap();
        let lp = classify_pair(&m, &[0.3; 8]).unwrap();
        for v in &lp {
            assert!((v + 5f64.ln()).abs() < 1e-15);
        }
        assert!((nll_loss(&lp, 2) - 5f64.ln()).abs() < 1e-15);

        let mut m = EncoderModel::zeros(cfg(2, 1, 1, 4, 2)).unwrap();
        m.group_mut(ParamGroup::HeadBias).copy_from_slice(&[1.0, 0.0]);
        let lp = classify_pair(&m, &[0.0; 4]).unwrap();
        let e = std::f64::consts::E;
        assert!((lp[0] - (e / (e + 1.0)).ln()).abs() < 1e-15);
        assert!((lp[1] - (1.0 / (e + 1.0)).ln()).abs() < 1e-15);
        assert!((nll_loss(&lp, 0) - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-15);
        assert!(classify_pair(&m, &[0.0; 3]).is_err());
    }

    #[test]
    fn saturated_head_has_vanishing_gradient() {
        let mut m = EncoderModel::seeded(cfg(2, 2, 1, 4, 3)).unwrap();
        m.group_mut(ParamGroup::HeadWeight).fill(0.0);
        m.group_mut(ParamGroup::HeadBias).copy_from_slice(&[60.0, 0.0, 0.0]);
        let (a, b) = ([3, 1, 2, 0, 0], [1, 3, 2, 0, 0]);
        let batch = [PairExample { left: &a, right: &b, label: 0 }];
        let (loss, g) = gradients(&m, &batch).unwrap();
        assert!(loss < 1e-20);
        assert!(g.group(ParamGroup::HeadWeight).iter().all(|v| v.abs() < 1e-20));
        assert!(g.group(ParamGroup::HeadBias).iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn unused_vocabulary_rows_get_zero_gradient() {
        let m = EncoderModel::seeded(cfg(3, 2, 2, 8, 3)).unwrap();
        let (a, b) = ([3, 4, 2, 0, 0], [5, 2, 0, 0, 0]);
        let batch = [PairExample { left: &a, right: &b, label: 1 }];
        let (_, g) = gradients(&m, &batch).unwrap();
        let emb = g.group(ParamGroup::Embedding);
        for row in [1, 6, 7] {
            assert!(emb[row * 3..row * 3 + 3].iter().all(|&v| v == 0.0));
        }
        assert!(emb[3 * 3..3 * 3 + 3].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn dedup_matches_loss() {
        let m = EncoderModel::seeded(cfg(3, 2, 1, 8, 3)).unwrap();
        let (a, b, c) = ([3, 4, 2, 0, 0], [5, 2, 0, 0, 0], [6, 7, 2, 0, 0]);
        let batch = [
            PairExample { left: &a, right: &b, label: 1 },
            PairExample { left: &b, right: &c, label: 2 },
            PairExample { left: &a, right: &c, label: 0 },
        ];
        let (loss, _) = gradients(&m, &batch).unwrap();
        assert!((loss - batch_loss(&m, &batch).unwrap()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn softmax_normalizes(p in prop::collection::vec(-5.0f64..5.0, 8), seed in 0u64..1000) {
            let mut c = cfg(2, 2, 1, 4, 6);
            c.seed = seed;
            let m = EncoderModel::seeded(c).unwrap();
            let lp = classify_pair(&m, &p).unwrap();
            let s: f64 = lp.iter().map(|v| v.exp()).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn shift_invariance(p in prop::collection::vec(-5.0f64..5.0, 8), k in -50.0f64..50.0) {
            let m = EncoderModel::seeded(cfg(2, 2, 1, 4, 6)).unwrap();
            let lp = classify_pair(&m, &p).unwrap();
            let mut shifted = m.clone();
            shifted.group_mut(ParamGroup::HeadBias).iter_mut().for_each(|b| *b += k);
            let lq = classify_pair(&shifted, &p).unwrap();
            for (x, y) in lp.iter().zip(&lq) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn pair_features_symmetric(
            a in prop::collection::vec(-3.0f64..3.0, 6),
            b in prop::collection::vec(-3.0f64..3.0, 6),
        ) {
            prop_assert_eq!(pair_features(&a, &b).unwrap(), pair_features(&b, &a).unwrap());
        }
    }
}
