//! Value learning for the data-driven sampler: per-step rewards from the
//! classifier, episode accumulation into a return/visit-count table, the
//! nonlinear value regressor and its fit, and the three-phase pipeline.
//!
//! One episode is one batch root's sampling-and-prediction pass. Its
//! discounted return is credited to every first-hop neighbor of the root
//! (with multiplicity); deeper hops receive no direct credit. The table's
//! expected return per (root, neighbor) pair is the fit target for the
//! regressor, which at sampling time generalizes to unseen pairs through
//! node features.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, LabelMode};
use crate::model::{train, SageConfig, SageParams, TrainHistory};
use crate::ndmath::{adam_step, AdamConfig, Matrix, Param, Real};
use crate::rng::RngStream;
use crate::samplers::SamplerKind;

/// One mini-batch root's pass: the root, its sampled first-hop multiset and
/// the per-hop rewards R^1..R^K (all <= 0; zeros below K in last-hop mode).
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub root: usize,
    pub first_hop: Vec<usize>,
    pub rewards: Vec<Real>,
}

/// Negative cross-entropy of one root's predicted distribution, the
/// per-step reward. One scalar per root node; no summation over the batch.
/// Probabilities are clamped to `[1e-12, 1 - 1e-12]` so the reward is
/// always finite.
pub fn per_step_reward(label_row: &[Real], prob_row: &[Real], mode: LabelMode) -> Real {
    assert!(
        label_row.len() == prob_row.len(),
        "per_step_reward: dimension mismatch {} vs {}",
        label_row.len(),
        prob_row.len()
    );
    let clamp = |p: Real| p.clamp(1e-12, 1.0 - 1e-12);
    match mode {
        LabelMode::Single => label_row
            .iter()
            .zip(prob_row)
            .map(|(&y, &p)| y * clamp(p).ln())
            .sum(),
        LabelMode::Multi => label_row
            .iter()
            .zip(prob_row)
            .map(|(&y, &p)| {
                let p = clamp(p);
                y * p.ln() + (1.0 - y) * (1.0 - p).ln()
            })
            .sum(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct TableEntry {
    g_sum: Real,
    count: u64,
}

/// Sparse edge-keyed accumulator of cumulative discounted returns and visit
/// counts per (root, first-hop neighbor) pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValueTable {
    entries: BTreeMap<(usize, usize), TableEntry>,
}

impl ValueTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cumulative return and visit count for a pair, if visited.
    pub fn entry(&self, v: usize, u: usize) -> Option<(Real, u64)> {
        self.entries.get(&(v, u)).map(|e| (e.g_sum, e.count))
    }

    /// Expected return G/C for a pair; `None` signals "unvisited" and the
    /// caller skips the pair as a training target.
    pub fn value(&self, v: usize, u: usize) -> Option<Real> {
        self.entries.get(&(v, u)).map(|e| e.g_sum / e.count as Real)
    }

    /// Visited pairs with their expected returns, in sorted key order.
    pub fn targets(&self) -> Vec<(usize, usize, Real)> {
        self.entries
            .iter()
            .map(|(&(v, u), e)| (v, u, e.g_sum / e.count as Real))
            .collect()
    }

    /// Text export, one `v u G_sum C` line per key. Floats carry 17
    /// significant digits so the round trip is exact.
    pub fn export(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut out = String::new();
        for (&(v, u), e) in &self.entries {
            out.push_str(&format!("{} {} {:.16e} {}\n", v, u, e.g_sum, e.count));
        }
        std::fs::write(path, out)
    }

    pub fn import(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut table = ValueTable::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("line {}: expected `v u G_sum C`", idx + 1),
                ));
            }
            let v: usize = fields[0].parse().map_err(bad_field(idx))?;
            let u: usize = fields[1].parse().map_err(bad_field(idx))?;
            let g_sum: Real = fields[2].parse().map_err(bad_field(idx))?;
            let count: u64 = fields[3].parse().map_err(bad_field(idx))?;
            table.entries.insert((v, u), TableEntry { g_sum, count });
        }
        Ok(table)
    }
}

fn bad_field<E: std::fmt::Display>(idx: usize) -> impl Fn(E) -> std::io::Error {
    move |e| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("line {}: {}", idx + 1, e),
        )
    }
}

/// Fold one episode into the table. The episode return is the discounted
/// sum of its per-hop rewards; every distinct first-hop neighbor `u` with
/// multiplicity `m` receives `m * G_ep` return and `m * K` visits (the
/// per-step count fires at every hop).
pub fn record_episode(table: &mut ValueTable, episode: &EpisodeRecord, gamma: Real) {
    let hops = episode.rewards.len() as u64;
    let mut g_ep = 0.0;
    let mut discount = 1.0;
    for &r in &episode.rewards {
        g_ep += discount * r;
        discount *= gamma;
    }
    let mut mult: BTreeMap<usize, u64> = BTreeMap::new();
    for &u in &episode.first_hop {
        *mult.entry(u).or_insert(0) += 1;
    }
    for (u, m) in mult {
        let e = table.entries.entry((episode.root, u)).or_default();
        e.g_sum += m as Real * g_ep;
        e.count += m * hops;
    }
}

/// Weights of the `-exp(ReLU(W (x_v || x_u) + b))` value approximator.
#[derive(Clone, Debug)]
pub struct ValueRegressor {
    w: Param,
    b: Param,
    feature_dim: usize,
    fitted: bool,
}

impl ValueRegressor {
    /// Fresh unfitted regressor with a small seeded init. The init must be
    /// small (the untrained prediction should sit near the -1 plateau) but
    /// not zero: at exactly zero the ReLU gate never opens and no gradient
    /// flows.
    pub fn new(feature_dim: usize, stream: RngStream) -> Self {
        let mut rng = stream.rng();
        let limit = 1.0 / ((2 * feature_dim) as Real).sqrt();
        let w = (0..2 * feature_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self {
            w: Param::new(Matrix::from_vec(1, 2 * feature_dim, w)),
            b: Param::new(Matrix::zeros(1, 1)),
            feature_dim,
            fitted: false,
        }
    }

    /// Explicitly initialized weights; counts as fitted.
    pub fn with_weights(w: Vec<Real>, b: Real) -> Self {
        assert!(
            w.len().is_multiple_of(2) && !w.is_empty(),
            "weight row must have 2M entries"
        );
        let feature_dim = w.len() / 2;
        Self {
            w: Param::new(Matrix::from_vec(1, w.len(), w)),
            b: Param::new(Matrix::from_vec(1, 1, vec![b])),
            feature_dim,
            fitted: true,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn weights(&self) -> (&[Real], Real) {
        (self.w.value.row(0), self.b.value.at(0, 0))
    }

    /// Contribution of the root's features to the pre-activation.
    pub fn left_partial(&self, x_v: &[Real]) -> Real {
        assert!(
            x_v.len() == self.feature_dim,
            "regressor: feature dimension mismatch {} vs {}",
            x_v.len(),
            self.feature_dim
        );
        self.w.value.row(0)[..self.feature_dim]
            .iter()
            .zip(x_v)
            .map(|(w, x)| w * x)
            .sum()
    }

    /// Predicted value given a precomputed root partial.
    pub fn predict_with_partial(&self, left: Real, x_u: &[Real]) -> Real {
        assert!(
            x_u.len() == self.feature_dim,
            "regressor: feature dimension mismatch {} vs {}",
            x_u.len(),
            self.feature_dim
        );
        let right: Real = self.w.value.row(0)[self.feature_dim..]
            .iter()
            .zip(x_u)
            .map(|(w, x)| w * x)
            .sum();
        let z = left + right + self.b.value.at(0, 0);
        -(z.max(0.0)).exp()
    }

    /// `-exp(ReLU(W (x_v || x_u) + b))`; always at most -1.
    pub fn predict(&self, x_v: &[Real], x_u: &[Real]) -> Real {
        self.predict_with_partial(self.left_partial(x_v), x_u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    AllHop,
    LastHop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOptimizer {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RLConfig {
    /// Discount factor in (0, 1]. First-hop learning is all-hop with a very
    /// small gamma (0.001), not a separate mode.
    pub gamma: Real,
    pub reward_mode: RewardMode,
    pub fit_epochs: usize,
    pub fit_batch_size: usize,
    pub fit_learning_rate: Real,
    pub fit_optimizer: FitOptimizer,
}

impl Default for RLConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            reward_mode: RewardMode::LastHop,
            fit_epochs: 50,
            fit_batch_size: 512,
            fit_learning_rate: 0.001,
            fit_optimizer: FitOptimizer::Adam,
        }
    }
}

impl RLConfig {
    pub fn validate(&self) -> Result<(), ValueError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ValueError::Config(format!(
                "gamma {} outside (0, 1]",
                self.gamma
            )));
        }
        if self.fit_epochs == 0 || self.fit_batch_size == 0 || self.fit_learning_rate <= 0.0 {
            return Err(ValueError::Config(
                "fit epochs, batch size and learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ValueError {
    #[error("invalid value-learning config: {0}")]
    Config(String),
    #[error("value table is empty; nothing to fit")]
    EmptyTable,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Clone, Debug, Default)]
pub struct FitHistory {
    /// Full-dataset mean squared error before any update.
    pub initial_mse: Real,
    /// Full-dataset mean squared error after each epoch.
    pub epoch_mse: Vec<Real>,
}

fn dataset_mse(reg: &ValueRegressor, features: &Matrix, targets: &[(usize, usize, Real)]) -> Real {
    let mut acc = 0.0;
    for &(v, u, t) in targets {
        let p = reg.predict(features.row(v), features.row(u));
        acc += (p - t) * (p - t);
    }
    acc / targets.len() as Real
}

/// Fit the regressor to the table's expected returns with mini-batch
/// squared-error descent over all visited pairs.
pub fn fit_regressor(
    reg: &mut ValueRegressor,
    table: &ValueTable,
    features: &Matrix,
    config: &RLConfig,
    stream: RngStream,
) -> Result<FitHistory, ValueError> {
    config.validate()?;
    if table.is_empty() {
        return Err(ValueError::EmptyTable);
    }
    assert!(
        features.cols() == reg.feature_dim,
        "regressor: feature dimension mismatch {} vs {}",
        features.cols(),
        reg.feature_dim
    );
    let targets = table.targets();
    let m = reg.feature_dim;
    let adam = AdamConfig::with_lr(config.fit_learning_rate);
    let mut history = FitHistory {
        initial_mse: dataset_mse(reg, features, &targets),
        epoch_mse: Vec::with_capacity(config.fit_epochs),
    };

    let mut order: Vec<usize> = (0..targets.len()).collect();
    for epoch in 0..config.fit_epochs {
        order.shuffle(&mut stream.derive(epoch as u64).rng());
        for batch in order.chunks(config.fit_batch_size) {
            let scale = 2.0 / batch.len() as Real;
            for &idx in batch {
                let (v, u, target) = targets[idx];
                let x_v = features.row(v);
                let x_u = features.row(u);
                let left = reg.left_partial(x_v);
                let right: Real = reg.w.value.row(0)[m..]
                    .iter()
                    .zip(x_u)
                    .map(|(w, x)| w * x)
                    .sum();
                let z = left + right + reg.b.value.at(0, 0);
                if z <= 0.0 {
                    continue; // prediction pinned at -1; zero gradient
                }
                let pred = -z.exp();
                let dz = scale * (pred - target) * pred;
                let gw = reg.w.grad.row_mut(0);
                for (g, &x) in gw[..m].iter_mut().zip(x_v) {
                    *g += dz * x;
                }
                for (g, &x) in gw[m..].iter_mut().zip(x_u) {
                    *g += dz * x;
                }
                *reg.b.grad.row_mut(0).first_mut().unwrap() += dz;
            }
            match config.fit_optimizer {
                FitOptimizer::Adam => {
                    adam_step(&mut reg.w, &adam);
                    adam_step(&mut reg.b, &adam);
                }
                FitOptimizer::Sgd => {
                    let lr = config.fit_learning_rate;
                    let w = &mut reg.w;
                    w.value.add_scaled(&w.grad, -lr);
                    let b = &mut reg.b;
                    b.value.add_scaled(&b.grad, -lr);
                }
            }
            reg.w.zero_grad();
            reg.b.zero_grad();
        }
        history.epoch_mse.push(dataset_mse(reg, features, &targets));
    }
    reg.fitted = true;
    Ok(history)
}

/// Output of the three-phase pipeline: the uniform-sampling baseline model
/// (phase A), the value table and fitted regressor (phase B), and the model
/// retrained from scratch with the value sampler (phase C).
pub struct PipelineResult {
    pub uniform_model: SageParams,
    pub uniform_history: TrainHistory,
    pub table: ValueTable,
    pub regressor: ValueRegressor,
    pub fit_history: FitHistory,
    pub value_model: SageParams,
    pub value_history: TrainHistory,
}

/// Phase A trains GraphSAGE with uniform sampling while streaming episode
/// records into a fresh value table (auxiliary heads provide intermediate
/// rewards in all-hop mode; last-hop mode reads only the final head).
/// Phase B fits the regressor to the table. Phase C trains a fresh model of
/// the same config with the value sampler.
pub fn run_pipeline(
    graph: &Graph,
    sage_config: &SageConfig,
    rl_config: &RLConfig,
    stream: RngStream,
) -> Result<PipelineResult, ValueError> {
    rl_config.validate()?;
    sage_config.validate()?;

    let mut config_a = sage_config.clone();
    config_a.aux_heads = rl_config.reward_mode == RewardMode::AllHop;
    let mut table = ValueTable::new();
    let gamma = rl_config.gamma;
    let (uniform_model, uniform_history) = {
        let mut sink = |ep: EpisodeRecord| record_episode(&mut table, &ep, gamma);
        train(
            graph,
            &config_a,
            SamplerKind::Uniform,
            stream.derive(0),
            Some(&mut sink),
        )?
    };

    let mut regressor = ValueRegressor::new(graph.features().cols(), stream.derive(1));
    let fit_history = fit_regressor(
        &mut regressor,
        &table,
        graph.features(),
        rl_config,
        stream.derive(2),
    )?;

    let mut config_c = sage_config.clone();
    config_c.aux_heads = false;
    let (value_model, value_history) = train(
        graph,
        &config_c,
        SamplerKind::value(&regressor),
        stream.derive(3),
        None,
    )?;

    Ok(PipelineResult {
        uniform_model,
        uniform_history,
        table,
        regressor,
        fit_history,
        value_model,
        value_history,
    })
}
