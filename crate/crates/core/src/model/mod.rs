//! K-layer GraphSAGE with mean_concat / mean_add aggregators, auxiliary
//! classifier heads at every depth, supervised loss, a hand-composed
//! backward pass and the mini-batch training loop.
//!
//! Layer `k` combines each tree node's embedding with the mean of its
//! sampled children's embeddings, applies the two weight matrices, ReLU and
//! row l2-normalization. After `k` layers only the roots remain; the depth-k
//! classifier head maps their embeddings to logits. Partial-depth
//! predictions reuse layers `1..k` of the shared stack plus the depth-k
//! auxiliary head.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, LabelMode, Split};
use crate::metrics::micro_f1;
use crate::ndmath::{
    adam_step, block_row_mean, block_row_mean_backward, concat_cols, l2_normalize_backward,
    l2_normalize_rows, matmul, matmul_nt, matmul_tn, relu, relu_backward, sigmoid_rows,
    softmax_rows, split_cols, AdamConfig, Matrix, Param, Real,
};
use crate::rng::RngStream;
use crate::samplers::{build_tree, SampleTree, SamplerKind};
use crate::value::{per_step_reward, EpisodeRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    MeanConcat,
    MeanAdd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SageConfig {
    /// Layer count K; must equal `fanouts.len()`.
    pub layers: usize,
    pub hidden_dim: usize,
    pub aggregator: Aggregator,
    /// Per-hop sample sizes N^1..N^K.
    pub fanouts: Vec<usize>,
    pub learning_rate: Real,
    pub batch_size: usize,
    pub epochs: usize,
    /// Train auxiliary classifier heads at depths 1..K-1 (required for
    /// all-hop rewards).
    pub aux_heads: bool,
}

impl Default for SageConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden_dim: 512,
            aggregator: Aggregator::MeanConcat,
            fanouts: vec![30, 30],
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 10,
            aux_heads: false,
        }
    }
}

impl SageConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers != self.fanouts.len() {
            return Err(ModelError::Config(format!(
                "layers = {} but {} fanouts given",
                self.layers,
                self.fanouts.len()
            )));
        }
        if self.fanouts.contains(&0) {
            return Err(ModelError::Config("all fanouts must be >= 1".into()));
        }
        if self.layers == 0 || self.hidden_dim == 0 || self.batch_size == 0 {
            return Err(ModelError::Config(
                "layers, hidden_dim and batch_size must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Output width of every aggregation layer.
    pub fn out_width(&self) -> usize {
        match self.aggregator {
            Aggregator::MeanConcat => 2 * self.hidden_dim,
            Aggregator::MeanAdd => self.hidden_dim,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("training split is empty")]
    EmptyTrainSplit,
}

#[derive(Clone, Debug)]
struct SageLayer {
    w_neigh: Param,
    w_self: Param,
}

#[derive(Clone, Debug)]
struct Head {
    w: Param,
    b: Param,
}

/// All trainable state plus the dimensions needed to rebuild it.
#[derive(Clone, Debug)]
pub struct SageParams {
    config: SageConfig,
    feature_dim: usize,
    label_count: usize,
    label_mode: LabelMode,
    layers: Vec<SageLayer>,
    /// One head per depth 1..=K when `aux_heads`, otherwise just the main
    /// depth-K head.
    heads: Vec<Head>,
}

fn glorot(rows: usize, cols: usize, stream: RngStream) -> Matrix {
    let limit = (6.0 / (rows + cols) as Real).sqrt();
    let mut rng = stream.rng();
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

impl SageParams {
    pub fn init(
        config: &SageConfig,
        feature_dim: usize,
        label_count: usize,
        label_mode: LabelMode,
        stream: RngStream,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let hidden = config.hidden_dim;
        let out_w = config.out_width();
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let in_w = if l == 0 { feature_dim } else { out_w };
            let s = stream.derive(10 + l as u64);
            layers.push(SageLayer {
                w_neigh: Param::new(glorot(hidden, in_w, s.derive(0))),
                w_self: Param::new(glorot(hidden, in_w, s.derive(1))),
            });
        }
        let head_count = if config.aux_heads { config.layers } else { 1 };
        let mut heads = Vec::with_capacity(head_count);
        for d in 0..head_count {
            let s = stream.derive(100 + d as u64);
            heads.push(Head {
                w: Param::new(glorot(label_count, out_w, s)),
                b: Param::new(Matrix::zeros(1, label_count)),
            });
        }
        Ok(Self {
            config: config.clone(),
            feature_dim,
            label_count,
            label_mode,
            layers,
            heads,
        })
    }

    pub fn config(&self) -> &SageConfig {
        &self.config
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn label_mode(&self) -> LabelMode {
        self.label_mode
    }

    fn head_index(&self, depth: usize) -> usize {
        if self.config.aux_heads {
            depth - 1
        } else {
            assert!(
                depth == self.config.layers,
                "auxiliary heads disabled; only depth {} predictions are available",
                self.config.layers
            );
            0
        }
    }

    /// Every trainable matrix in declaration order: layer weights, then
    /// heads (weight, bias) by depth.
    pub(crate) fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(&mut layer.w_neigh);
            out.push(&mut layer.w_self);
        }
        for head in &mut self.heads {
            out.push(&mut head.w);
            out.push(&mut head.b);
        }
        out
    }

    pub(crate) fn params(&self) -> Vec<&Param> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push(&layer.w_neigh);
            out.push(&layer.w_self);
        }
        for head in &self.heads {
            out.push(&head.w);
            out.push(&head.b);
        }
        out
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn adam_step_all(&mut self, cfg: &AdamConfig) {
        for p in self.params_mut() {
            adam_step(p, cfg);
        }
    }

    /// All parameter values as one flat vector, in declaration order.
    /// Together with [`SageParams::set_from_flat`] this supports external
    /// gradient checking.
    pub fn flatten_values(&self) -> Vec<Real> {
        let mut out = Vec::new();
        for p in self.params() {
            out.extend_from_slice(p.value.data());
        }
        out
    }

    /// Accumulated gradients as one flat vector, aligned with
    /// [`SageParams::flatten_values`].
    pub fn flatten_grads(&self) -> Vec<Real> {
        let mut out = Vec::new();
        for p in self.params() {
            out.extend_from_slice(p.grad.data());
        }
        out
    }

    /// Overwrite every parameter value from a flat vector.
    pub fn set_from_flat(&mut self, flat: &[Real]) {
        let mut offset = 0;
        for p in self.params_mut() {
            let len = p.value.data().len();
            p.value
                .data_mut()
                .copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        assert!(
            offset == flat.len(),
            "flat vector length {} != parameter count {offset}",
            flat.len()
        );
    }

    /// Total scalar parameter count across aggregator weights and all heads.
    pub fn param_count(&self) -> u64 {
        self.params()
            .iter()
            .map(|p| (p.value.rows() * p.value.cols()) as u64)
            .sum()
    }

    /// Parameter footprint at the 4-bytes-per-parameter (32-bit) reporting
    /// convention.
    pub fn param_bytes(&self) -> u64 {
        4 * self.param_count()
    }

    pub fn param_megabytes(&self) -> f64 {
        self.param_bytes() as f64 / 1e6
    }
}

/// Per-level intermediates cached by one aggregation layer.
struct LevelCache {
    self_input: Matrix,
    nbr_mean: Matrix,
    pre_act: Matrix,
    normalized: Matrix,
    norms: Vec<Real>,
}

/// Everything the backward pass and the auxiliary heads need from one
/// forward evaluation.
pub struct ForwardCache {
    depth: usize,
    fanouts: Vec<usize>,
    layer_caches: Vec<Vec<LevelCache>>,
    /// Root embeddings after each layer 1..=depth.
    root_embeddings: Vec<Matrix>,
    logits: Matrix,
}

impl ForwardCache {
    pub fn logits(&self) -> &Matrix {
        &self.logits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Root embeddings after layer `k` (1-indexed).
    pub fn root_embedding(&self, k: usize) -> &Matrix {
        &self.root_embeddings[k - 1]
    }
}

fn head_logits(head: &Head, embedding: &Matrix) -> Matrix {
    let mut logits = matmul_nt(embedding, &head.w.value);
    for i in 0..logits.rows() {
        for (o, &b) in logits.row_mut(i).iter_mut().zip(head.b.value.row(0)) {
            *o += b;
        }
    }
    logits
}

/// Run layers `1..=depth` over the tree truncated at `depth` and apply the
/// depth's classifier head to the roots. `h^0` is the raw features of every
/// tree node; each layer applies ReLU then row l2-normalization.
pub fn forward(
    graph: &Graph,
    tree: &SampleTree,
    params: &SageParams,
    depth: usize,
) -> ForwardCache {
    assert!(
        tree.fanouts() == params.config.fanouts.as_slice(),
        "fanout mismatch: tree {:?} vs model {:?}",
        tree.fanouts(),
        params.config.fanouts
    );
    assert!(
        depth >= 1 && depth <= params.config.layers,
        "depth {} outside 1..={}",
        depth,
        params.config.layers
    );
    let features = graph.features();
    let mut levels: Vec<Matrix> = (0..=depth)
        .map(|j| features.gather_rows(tree.level(j)))
        .collect();

    let mut layer_caches = Vec::with_capacity(depth);
    let mut root_embeddings = Vec::with_capacity(depth);
    for l in 1..=depth {
        let layer = &params.layers[l - 1];
        let keep = depth - l; // highest level index that survives this layer
        let mut new_levels = Vec::with_capacity(keep + 1);
        let mut caches = Vec::with_capacity(keep + 1);
        // Consume old levels front-to-back; level keep+1 is only read as
        // children of level keep.
        let mut old = std::mem::take(&mut levels).into_iter();
        let mut current = old.next().expect("level 0 present");
        for (j, next) in old.enumerate() {
            debug_assert!(j <= keep);
            let fanout = params.config.fanouts[j];
            let nbr_mean = block_row_mean(&next, fanout);
            let a = matmul_nt(&nbr_mean, &layer.w_neigh.value);
            let b = matmul_nt(&current, &layer.w_self.value);
            let pre_act = match params.config.aggregator {
                Aggregator::MeanConcat => concat_cols(&a, &b),
                Aggregator::MeanAdd => {
                    let mut sum = a;
                    sum.add_scaled(&b, 1.0);
                    sum
                }
            };
            let post = relu(&pre_act);
            let (normalized, norms) = l2_normalize_rows(&post);
            new_levels.push(normalized.clone());
            caches.push(LevelCache {
                self_input: current,
                nbr_mean,
                pre_act,
                normalized,
                norms,
            });
            current = next;
        }
        root_embeddings.push(new_levels[0].clone());
        layer_caches.push(caches);
        levels = new_levels;
    }

    let head = &params.heads[params.head_index(depth)];
    let logits = head_logits(head, &levels[0]);
    ForwardCache {
        depth,
        fanouts: params.config.fanouts.clone(),
        layer_caches,
        root_embeddings,
        logits,
    }
}

fn pick_loss(mode: LabelMode, logits: &Matrix, labels: &Matrix) -> (Real, Matrix) {
    match mode {
        LabelMode::Single => crate::ndmath::softmax_xent(logits, labels),
        LabelMode::Multi => crate::ndmath::sigmoid_xent(logits, labels),
    }
}

fn column_sum(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, m.cols());
    for i in 0..m.rows() {
        for (o, &v) in out.row_mut(0).iter_mut().zip(m.row(i)) {
            *o += v;
        }
    }
    out
}

/// Cross-entropy loss of the cached depth-limit logits against the batch
/// labels, with gradients accumulated into every parameter reachable at
/// that depth. Returns the loss summed over the batch rows.
pub fn loss_and_backward(labels: &Matrix, params: &mut SageParams, cache: &ForwardCache) -> Real {
    assert!(
        labels.rows() == cache.logits.rows() && labels.cols() == cache.logits.cols(),
        "stale cache: labels {}x{} vs logits {}x{}",
        labels.rows(),
        labels.cols(),
        cache.logits.rows(),
        cache.logits.cols()
    );
    let (loss, d_logits) = pick_loss(params.label_mode, &cache.logits, labels);

    // Head backward.
    let head_idx = params.head_index(cache.depth);
    let root_emb = &cache.root_embeddings[cache.depth - 1];
    {
        let head = &mut params.heads[head_idx];
        head.w.grad.add_scaled(&matmul_tn(&d_logits, root_emb), 1.0);
        head.b.grad.add_scaled(&column_sum(&d_logits), 1.0);
    }
    let d_root = matmul(&d_logits, &params.heads[head_idx].w.value);

    // Aggregation layers in reverse. `d_levels[j]` is the gradient w.r.t.
    // the layer's output at tree level j.
    let mut d_levels = vec![d_root];
    for l in (1..=cache.depth).rev() {
        let caches = &cache.layer_caches[l - 1];
        let mut d_prev: Vec<Matrix> = (0..=cache.depth - l + 1)
            .map(|j| {
                let rows = if j <= cache.depth - l {
                    caches[j].self_input.rows()
                } else {
                    caches[j - 1].nbr_mean.rows() * cache.fanouts[j - 1]
                };
                let cols = caches[0].self_input.cols();
                Matrix::zeros(rows, cols)
            })
            .collect();
        for (j, c) in caches.iter().enumerate() {
            let g = &d_levels[j];
            let g = l2_normalize_backward(&c.normalized, &c.norms, g);
            let g = relu_backward(&c.pre_act, &g);
            let (ga, gb) = match params.config.aggregator {
                Aggregator::MeanConcat => split_cols(&g, params.config.hidden_dim),
                Aggregator::MeanAdd => (g.clone(), g),
            };
            let layer = &mut params.layers[l - 1];
            layer
                .w_neigh
                .grad
                .add_scaled(&matmul_tn(&ga, &c.nbr_mean), 1.0);
            layer
                .w_self
                .grad
                .add_scaled(&matmul_tn(&gb, &c.self_input), 1.0);
            d_prev[j].add_scaled(&matmul(&gb, &layer.w_self.value), 1.0);
            let d_mean = matmul(&ga, &layer.w_neigh.value);
            d_prev[j + 1].add_scaled(&block_row_mean_backward(&d_mean, cache.fanouts[j]), 1.0);
        }
        d_levels = d_prev;
    }
    loss
}

/// Logits of the depth-k auxiliary head applied to the cached root
/// embeddings of a deeper forward pass. Identical to a standalone depth-k
/// forward because the layer prefixes share weights.
pub fn aux_logits(params: &SageParams, cache: &ForwardCache, depth: usize) -> Matrix {
    assert!(depth >= 1 && depth <= cache.depth);
    head_logits(
        &params.heads[params.head_index(depth)],
        cache.root_embedding(depth),
    )
}

/// Train the depth-k auxiliary head on the cached embeddings. Gradients
/// flow only into the head weights; the aggregator stack is unaffected.
/// Returns the head's logits for reward extraction.
pub fn aux_head_backward(
    labels: &Matrix,
    params: &mut SageParams,
    cache: &ForwardCache,
    depth: usize,
) -> Matrix {
    let logits = aux_logits(params, cache, depth);
    let (_, d_logits) = pick_loss(params.label_mode, &logits, labels);
    let head_idx = params.head_index(depth);
    let head = &mut params.heads[head_idx];
    head.w
        .grad
        .add_scaled(&matmul_tn(&d_logits, cache.root_embedding(depth)), 1.0);
    head.b.grad.add_scaled(&column_sum(&d_logits), 1.0);
    logits
}

fn probabilities(mode: LabelMode, logits: &Matrix) -> Matrix {
    match mode {
        LabelMode::Single => softmax_rows(logits),
        LabelMode::Multi => sigmoid_rows(logits),
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    /// Mean training loss per root node, per epoch.
    pub epoch_loss: Vec<Real>,
    /// Validation micro-F1 per epoch (empty when there are no val nodes).
    pub val_f1: Vec<f64>,
}

/// Mini-batch training over the shuffled train split. Trees are sampled
/// from the inductive training view of the graph (edges incident to
/// val/test nodes removed); validation F1 is measured on the full graph.
///
/// When `episode_sink` is given, one [`EpisodeRecord`] per batch root is
/// emitted: rewards at depths 1..K-1 come from the auxiliary heads (only
/// when `aux_heads` is enabled; otherwise those entries are zero, the
/// last-hop approximation) and the depth-K reward from the main head.
pub fn train(
    graph: &Graph,
    config: &SageConfig,
    sampler: SamplerKind,
    stream: RngStream,
    mut episode_sink: Option<&mut dyn FnMut(EpisodeRecord)>,
) -> Result<(SageParams, TrainHistory), ModelError> {
    config.validate()?;
    let train_nodes = graph.nodes_with_split(Split::Train);
    if train_nodes.is_empty() {
        return Err(ModelError::EmptyTrainSplit);
    }
    let val_nodes = graph.nodes_with_split(Split::Val);
    let train_graph = graph.restrict_to_train();
    let meta = graph.meta();
    let mut params = SageParams::init(
        config,
        meta.feature_dim,
        meta.label_count,
        meta.label_mode,
        stream.derive(0),
    )?;
    let adam = AdamConfig::with_lr(config.learning_rate);
    let k = config.layers;
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        let mut order = train_nodes.clone();
        order.shuffle(&mut stream.derive(1).derive(epoch as u64).rng());
        let mut epoch_loss = 0.0;
        for (batch_idx, roots) in order.chunks(config.batch_size).enumerate() {
            let tree_stream = stream
                .derive(2)
                .derive(epoch as u64)
                .derive(batch_idx as u64);
            let tree = build_tree(&train_graph, roots, sampler, &config.fanouts, tree_stream);
            let cache = forward(graph, &tree, &params, k);
            let labels = graph.labels().gather_rows(roots);
            epoch_loss += loss_and_backward(&labels, &mut params, &cache);

            if let Some(sink) = episode_sink.as_mut() {
                // Per-root rewards at every hop depth.
                let mut probs_per_depth: Vec<Option<Matrix>> = vec![None; k];
                if config.aux_heads {
                    for d in 1..k {
                        let logits = aux_head_backward(&labels, &mut params, &cache, d);
                        probs_per_depth[d - 1] = Some(probabilities(meta.label_mode, &logits));
                    }
                }
                probs_per_depth[k - 1] = Some(probabilities(meta.label_mode, cache.logits()));
                for (i, &root) in roots.iter().enumerate() {
                    let rewards: Vec<Real> = (0..k)
                        .map(|d| match &probs_per_depth[d] {
                            Some(p) => per_step_reward(labels.row(i), p.row(i), meta.label_mode),
                            None => 0.0,
                        })
                        .collect();
                    sink(EpisodeRecord {
                        root,
                        first_hop: tree.children(1, i).to_vec(),
                        rewards,
                    });
                }
            }

            params.adam_step_all(&adam);
            params.zero_grads();
        }
        history
            .epoch_loss
            .push(epoch_loss / train_nodes.len() as Real);
        if !val_nodes.is_empty() {
            let preds = predict(
                graph,
                &params,
                &val_nodes,
                sampler,
                stream.derive(3).derive(epoch as u64),
            );
            let val_labels = graph.labels().gather_rows(&val_nodes);
            history.val_f1.push(micro_f1(&preds, &val_labels));
        }
    }
    Ok((params, history))
}

/// Label decisions for the given nodes on freshly sampled trees: argmax per
/// row in single-label mode, logits thresholded at 0 (sigmoid 0.5) in
/// multi-label mode. Rows align with `nodes`.
pub fn predict(
    graph: &Graph,
    params: &SageParams,
    nodes: &[usize],
    sampler: SamplerKind,
    stream: RngStream,
) -> Matrix {
    let k = params.config.layers;
    let mut out = Matrix::zeros(nodes.len(), params.label_count);
    for (chunk_idx, chunk) in nodes.chunks(params.config.batch_size).enumerate() {
        let tree = build_tree(
            graph,
            chunk,
            sampler,
            &params.config.fanouts,
            stream.derive(chunk_idx as u64),
        );
        let cache = forward(graph, &tree, params, k);
        let logits = cache.logits();
        for (i, _) in chunk.iter().enumerate() {
            let row = logits.row(i);
            let dst = out.row_mut(chunk_idx * params.config.batch_size + i);
            match params.label_mode {
                LabelMode::Single => {
                    let mut best = 0;
                    for (j, &v) in row.iter().enumerate() {
                        if v > row[best] {
                            best = j;
                        }
                    }
                    dst[best] = 1.0;
                }
                LabelMode::Multi => {
                    for (d, &v) in dst.iter_mut().zip(row) {
                        *d = if v > 0.0 { 1.0 } else { 0.0 };
                    }
                }
            }
        }
    }
    out
}
