//! Feedforward n-gram language model.
//!
//! The model maps the `n - 1` preceding token ids to a distribution over the
//! vocabulary: each id is looked up in an embedding table, the embeddings are
//! concatenated, passed through bias-free ReLU layers and a final linear
//! projection to `V` logits, then normalized with a softmax.
//!
//! All parameters live in one flat buffer (embedding first, then each layer's
//! `out x in` matrix in row-major order), so gradients, momentum and finite
//! difference checks share a single indexing scheme.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, uniform01};
use crate::text::{Document, TokenId, PAD_ID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnlmConfig {
    /// n-gram order; the context window holds `n_ctx - 1` tokens.
    pub n_ctx: usize,
    pub embed_dim: usize,
    pub hidden_widths: Vec<usize>,
    /// Evaluation floor `exp(-trunc_b)` on predicted probabilities.
    pub trunc_b: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for NnlmConfig {
    fn default() -> Self {
        Self {
            n_ctx: 5,
            embed_dim: 32,
            hidden_widths: vec![64],
            trunc_b: 10.0,
            epochs: 10,
            batch_size: 32,
            step_size: 0.05,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl NnlmConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_ctx < 2 {
            return fail("n_ctx must be >= 2");
        }
        if self.embed_dim < 1 {
            return fail("embed_dim must be >= 1");
        }
        if self.hidden_widths.contains(&0) {
            return fail("hidden widths must be >= 1");
        }
        if !(self.trunc_b >= 2.0 && self.trunc_b.is_finite()) {
            return fail("trunc_b must be a finite value >= 2");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return fail("epochs and batch_size must be >= 1");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return fail("step_size must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail("momentum must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn context_len(&self) -> usize {
        self.n_ctx - 1
    }
}

/// Dimensions of one dense layer, `rows` outputs by `cols` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnlmParams {
    v_size: usize,
    n_ctx: usize,
    embed_dim: usize,
    hidden_widths: Vec<usize>,
    values: Vec<f64>,
}

impl NnlmParams {
    /// All-zero parameters: the model predicts the uniform distribution.
    pub fn zeros(cfg: &NnlmConfig, v_size: usize) -> Result<Self> {
        cfg.validate()?;
        if v_size < 2 {
            return Err(Error::InvalidConfig("vocabulary size must be >= 2".into()));
        }
        let mut p = Self {
            v_size,
            n_ctx: cfg.n_ctx,
            embed_dim: cfg.embed_dim,
            hidden_widths: cfg.hidden_widths.clone(),
            values: Vec::new(),
        };
        p.values = vec![0.0; p.num_params()];
        Ok(p)
    }

    /// Rebuild from a flat parameter buffer in the canonical layout.
    pub fn from_parts(
        v_size: usize,
        n_ctx: usize,
        embed_dim: usize,
        hidden_widths: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let cfg = NnlmConfig {
            n_ctx,
            embed_dim,
            hidden_widths,
            ..NnlmConfig::default()
        };
        let mut p = Self::zeros(&cfg, v_size)?;
        if values.len() != p.values.len() {
            return Err(Error::InvalidConfig(alloc::format!(
                "expected {} parameters, got {}",
                p.values.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        p.values = values;
        Ok(p)
    }

    pub fn v_size(&self) -> usize {
        self.v_size
    }

    pub fn n_ctx(&self) -> usize {
        self.n_ctx
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden_widths
    }

    pub fn input_dim(&self) -> usize {
        (self.n_ctx - 1) * self.embed_dim
    }

    /// Hidden layers followed by the output projection.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let mut shapes = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut cols = self.input_dim();
        for &rows in self.hidden_widths.iter().chain(core::iter::once(&self.v_size)) {
            shapes.push(LayerShape { rows, cols });
            cols = rows;
        }
        shapes
    }

    pub fn num_params(&self) -> usize {
        self.v_size * self.embed_dim
            + self.layer_shapes().iter().map(|s| s.rows * s.cols).sum::<usize>()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn embedding(&self) -> &[f64] {
        &self.values[..self.v_size * self.embed_dim]
    }

    /// Row-major weights of layer `index` (the last index is the output projection).
    pub fn layer(&self, index: usize) -> &[f64] {
        let (start, len) = self.layer_range(index);
        &self.values[start..start + len]
    }

    fn layer_range(&self, index: usize) -> (usize, usize) {
        let shapes = self.layer_shapes();
        let mut start = self.v_size * self.embed_dim;
        for s in &shapes[..index] {
            start += s.rows * s.cols;
        }
        (start, shapes[index].rows * shapes[index].cols)
    }

    fn check_context(&self, context: &[TokenId]) -> Result<()> {
        if context.len() != self.n_ctx - 1 {
            return Err(Error::ContextLength {
                got: context.len(),
                expected: self.n_ctx - 1,
            });
        }
        if let Some(&id) = context.iter().find(|&&id| id as usize >= self.v_size) {
            return Err(Error::TokenOutOfRange {
                id,
                v_size: self.v_size,
            });
        }
        Ok(())
    }
}

/// Glorot-uniform layer weights and uniform(-0.1, 0.1) embeddings, drawn in
/// layout order from a stream seeded by `seed`.
pub fn init_params(cfg: &NnlmConfig, v_size: usize, seed: u64) -> Result<NnlmParams> {
    let mut params = NnlmParams::zeros(cfg, v_size)?;
    let mut rng = rng_from_seed(seed);
    let emb_len = v_size * cfg.embed_dim;
    let shapes = params.layer_shapes();
    let (emb, rest) = params.values.split_at_mut(emb_len);
    for w in emb.iter_mut() {
        *w = (2.0 * uniform01(&mut rng) - 1.0) * 0.1;
    }
    let mut offset = 0;
    for s in shapes {
        let scale = libm::sqrt(6.0 / (s.rows + s.cols) as f64);
        for w in &mut rest[offset..offset + s.rows * s.cols] {
            *w = (2.0 * uniform01(&mut rng) - 1.0) * scale;
        }
        offset += s.rows * s.cols;
    }
    Ok(params)
}

/// Fixed-stride table of (context, target) training or evaluation examples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Contexts {
    context_len: usize,
    data: Vec<TokenId>,
}

impl Contexts {
    pub fn new(context_len: usize) -> Self {
        Self {
            context_len,
            data: Vec::new(),
        }
    }

    /// One example per token; positions before the start of a document are
    /// filled with the padding id.
    pub fn from_documents<'a, I>(docs: I, context_len: usize) -> Self
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut out = Self::new(context_len);
        for doc in docs {
            out.extend_document(doc);
        }
        out
    }

    pub fn extend_document(&mut self, doc: &Document) {
        let ids = doc.ids();
        for t in 0..ids.len() {
            for k in 0..self.context_len {
                // Context slot k holds the token at t - context_len + k.
                let pos = t as isize - self.context_len as isize + k as isize;
                self.data.push(if pos < 0 { PAD_ID } else { ids[pos as usize] });
            }
            self.data.push(ids[t]);
        }
    }

    pub fn push(&mut self, context: &[TokenId], target: TokenId) -> Result<()> {
        if context.len() != self.context_len {
            return Err(Error::ContextLength {
                got: context.len(),
                expected: self.context_len,
            });
        }
        self.data.extend_from_slice(context);
        self.data.push(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.context_len + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, index: usize) -> (&[TokenId], TokenId) {
        let stride = self.context_len + 1;
        let row = &self.data[index * stride..(index + 1) * stride];
        (&row[..self.context_len], row[self.context_len])
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Per-thread buffers for one forward/backward pass.
#[derive(Debug, Clone)]
struct Scratch {
    // acts[0] is the stacked embedding input, acts[l] the ReLU output of
    // hidden layer l, and the last entry holds the logits.
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    probs: Vec<f64>,
    offsets: Vec<usize>,
    shapes: Vec<LayerShape>,
}

impl Scratch {
    fn new(params: &NnlmParams) -> Self {
        let shapes = params.layer_shapes();
        let mut sizes = vec![params.input_dim()];
        sizes.extend(shapes.iter().map(|s| s.rows));
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut off = params.v_size * params.embed_dim;
        for s in &shapes {
            offsets.push(off);
            off += s.rows * s.cols;
        }
        Self {
            acts: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            deltas: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            probs: vec![0.0; params.v_size],
            offsets,
            shapes,
        }
    }

    /// Fills the logits and returns their log-sum-exp.
    fn forward(&mut self, params: &NnlmParams, context: &[TokenId]) -> f64 {
        let q = params.embed_dim;
        let emb = params.embedding();
        for (k, &id) in context.iter().enumerate() {
            let row = &emb[id as usize * q..(id as usize + 1) * q];
            self.acts[0][k * q..(k + 1) * q].copy_from_slice(row);
        }
        let last = self.shapes.len() - 1;
        for (l, s) in self.shapes.iter().enumerate() {
            let w = &params.values[self.offsets[l]..self.offsets[l] + s.rows * s.cols];
            let (head, tail) = self.acts.split_at_mut(l + 1);
            let input = &head[l];
            let out = &mut tail[0];
            for (i, o) in out.iter_mut().enumerate() {
                let z = dot(&w[i * s.cols..(i + 1) * s.cols], input);
                *o = if l < last { z.max(0.0) } else { z };
            }
        }
        log_sum_exp(self.acts.last().unwrap())
    }

    fn log_prob(&mut self, params: &NnlmParams, context: &[TokenId], target: TokenId) -> f64 {
        let lse = self.forward(params, context);
        self.acts.last().unwrap()[target as usize] - lse
    }

    /// Adds `scale * d(-log p(target))/dθ` to `grad` using the state left by
    /// the preceding `forward`.
    fn backward(
        &mut self,
        params: &NnlmParams,
        context: &[TokenId],
        target: TokenId,
        lse: f64,
        scale: f64,
        grad: &mut [f64],
    ) {
        let n_layers = self.shapes.len();
        {
            let logits = &self.acts[n_layers];
            let delta = &mut self.deltas[n_layers];
            for ((d, &z), p) in delta.iter_mut().zip(logits).zip(self.probs.iter_mut()) {
                *p = libm::exp(z - lse);
                *d = scale * *p;
            }
            delta[target as usize] -= scale;
        }
        for l in (0..n_layers).rev() {
            let s = self.shapes[l];
            let off = self.offsets[l];
            let w = &params.values[off..off + s.rows * s.cols];
            let (lower, upper) = self.deltas.split_at_mut(l + 1);
            let delta_out = &upper[0];
            let delta_in = &mut lower[l];
            let input = &self.acts[l];
            delta_in.iter_mut().for_each(|d| *d = 0.0);
            let g = &mut grad[off..off + s.rows * s.cols];
            for (i, &d) in delta_out.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                axpy(d, input, &mut g[i * s.cols..(i + 1) * s.cols]);
                axpy(d, &w[i * s.cols..(i + 1) * s.cols], delta_in);
            }
            if l > 0 {
                for (d, &a) in delta_in.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
        }
        let q = params.embed_dim;
        for (k, &id) in context.iter().enumerate() {
            let row = &mut grad[id as usize * q..(id as usize + 1) * q];
            axpy(1.0, &self.deltas[0][k * q..(k + 1) * q], row);
        }
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = z.iter().map(|&x| libm::exp(x - m)).sum();
    m + libm::log(s)
}

/// Next-token distribution for a context of exactly `n_ctx - 1` ids.
pub fn forward(params: &NnlmParams, context: &[TokenId]) -> Result<Vec<f64>> {
    params.check_context(context)?;
    let mut scratch = Scratch::new(params);
    let lse = scratch.forward(params, context);
    Ok(scratch
        .acts
        .last()
        .unwrap()
        .iter()
        .map(|&z| libm::exp(z - lse))
        .collect())
}

/// Mean cross-entropy over `batch` and its gradient with respect to every
/// parameter, in the flat layout of [`NnlmParams::values`].
pub fn loss_and_grad(params: &NnlmParams, examples: &Contexts, batch: &[usize]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.values.len()];
    let mut scratch = Scratch::new(params);
    let loss = accumulate_batch(params, examples, batch, &mut scratch, &mut grad);
    (loss, grad)
}

fn accumulate_batch(
    params: &NnlmParams,
    examples: &Contexts,
    batch: &[usize],
    scratch: &mut Scratch,
    grad: &mut [f64],
) -> f64 {
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for &i in batch {
        let (ctx, target) = examples.get(i);
        let lse = scratch.forward(params, ctx);
        loss -= scratch.acts.last().unwrap()[target as usize] - lse;
        scratch.backward(params, ctx, target, lse, scale, grad);
    }
    loss * scale
}

pub fn mean_loss(params: &NnlmParams, examples: &Contexts, batch: &[usize]) -> f64 {
    let mut scratch = Scratch::new(params);
    let total: f64 = batch
        .iter()
        .map(|&i| {
            let (ctx, target) = examples.get(i);
            -scratch.log_prob(params, ctx, target)
        })
        .sum();
    total / batch.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-token cross-entropy seen during each epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean cross-entropy of the trained model on the full training set.
    pub final_loss: f64,
    pub tokens: usize,
}

/// Train on the pooled estimation documents of both groups.
pub fn train(
    params: NnlmParams,
    est_a: &[Document],
    est_b: &[Document],
    cfg: &NnlmConfig,
) -> Result<(NnlmParams, TrainReport)> {
    if est_a.is_empty() || est_b.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    train_pooled(params, &[est_a, est_b], cfg)
}

/// Mini-batch SGD with momentum on the summed cross-entropy of all groups.
///
/// Examples are reshuffled every epoch from a stream seeded by `cfg.seed`;
/// the velocity update is `v = momentum * v + g`, `θ -= step_size * v`.
pub fn train_pooled(
    mut params: NnlmParams,
    groups: &[&[Document]],
    cfg: &NnlmConfig,
) -> Result<(NnlmParams, TrainReport)> {
    cfg.validate()?;
    if params.n_ctx != cfg.n_ctx {
        return Err(Error::InvalidConfig("model and config disagree on n_ctx".into()));
    }
    let examples = Contexts::from_documents(groups.iter().flat_map(|g| g.iter()), cfg.context_len());
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for i in 0..examples.len() {
        let (ctx, target) = examples.get(i);
        params.check_context(ctx)?;
        if target as usize >= params.v_size {
            return Err(Error::TokenOutOfRange {
                id: target,
                v_size: params.v_size,
            });
        }
    }

    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grad = vec![0.0; params.values.len()];
    let mut velocity = vec![0.0; params.values.len()];
    let mut scratch = Scratch::new(&params);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = accumulate_batch(&params, &examples, batch, &mut scratch, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: b });
            }
            total += loss * batch.len() as f64;
            for ((w, v), g) in params.values.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v + g;
                *w -= cfg.step_size * *v;
            }
        }
        epoch_losses.push(total / examples.len() as f64);
    }
    if params.values.iter().any(|w| !w.is_finite()) {
        return Err(Error::Divergence {
            epoch: cfg.epochs - 1,
            batch: 0,
        });
    }
    let all: Vec<usize> = (0..examples.len()).collect();
    let final_loss = mean_loss(&params, &examples, &all);
    Ok((
        params,
        TrainReport {
            epoch_losses,
            final_loss,
            tokens: examples.len(),
        },
    ))
}

/// Largest relative error between the analytic gradient of the mean batch
/// cross-entropy and its central difference with step `1e-5`, over every
/// parameter. Entries are compared relative to `max(|analytic|, |numeric|, floor)`.
pub fn grad_check(params: &NnlmParams, examples: &Contexts, batch: &[usize], floor: f64) -> f64 {
    const H: f64 = 1e-5;
    let (_, analytic) = loss_and_grad(params, examples, batch);
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.values[i];
        probe.values[i] = orig + H;
        let up = mean_loss(&probe, examples, batch);
        probe.values[i] = orig - H;
        let down = mean_loss(&probe, examples, batch);
        probe.values[i] = orig;
        let numeric = (up - down) / (2.0 * H);
        let denom = a.abs().max(numeric.abs()).max(floor);
        if denom > 0.0 {
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}

/// Length-normalized log-likelihood of `doc` in nats per token, with every
/// predicted probability floored at `exp(-trunc_b)`. Always within `[-trunc_b, 0]`.
pub fn doc_loglik(params: &NnlmParams, doc: &Document, trunc_b: f64) -> f64 {
    let mut scratch = Scratch::new(params);
    doc_loglik_with(params, doc, trunc_b, &mut scratch)
}

fn doc_loglik_with(params: &NnlmParams, doc: &Document, trunc_b: f64, scratch: &mut Scratch) -> f64 {
    let mut examples = Contexts::new(params.n_ctx - 1);
    examples.extend_document(doc);
    let mut total = 0.0;
    for i in 0..examples.len() {
        let (ctx, target) = examples.get(i);
        total += scratch.log_prob(params, ctx, target).max(-trunc_b).min(0.0);
    }
    total / examples.len() as f64
}

/// [`doc_loglik`] for each document, reusing one set of buffers.
pub fn doc_logliks(params: &NnlmParams, docs: &[Document], trunc_b: f64) -> Vec<f64> {
    let mut scratch = Scratch::new(params);
    docs.iter()
        .map(|d| doc_loglik_with(params, d, trunc_b, &mut scratch))
        .collect()
}
