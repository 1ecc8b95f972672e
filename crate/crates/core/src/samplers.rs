//! Fixed-fan-out neighborhood sampling.
//!
//! Both samplers emit exactly `N_k` children per frontier node, so every tree
//! level has size `|roots| * prod(N_j)`. The uniform sampler draws i.i.d.
//! with replacement; the value sampler partitions a node's neighbors into
//! `N_k` balanced random groups and keeps the member with the highest
//! predicted return in each group, replacing a full sort.
//!
//! Expansion over distinct frontier nodes is embarrassingly parallel: the
//! graph and regressor are read-only and each frontier slot derives its own
//! rng stream from the call stream, so output is identical regardless of
//! schedule and of whether the `parallel` feature is enabled.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::ndmath::Real;
use crate::rng::RngStream;
use crate::value::ValueRegressor;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Frontier size below which parallel expansion is not worth spawning.
#[cfg(feature = "parallel")]
const PAR_MIN_FRONTIER: usize = 256;

/// Minimum slots per rayon task. Uniform slots are a handful of RNG draws
/// and only amortize the fork cost on large frontiers; value slots score
/// whole neighbor lists, so they amortize much sooner.
#[cfg(feature = "parallel")]
const UNIFORM_SLOTS_PER_TASK: usize = 2048;
#[cfg(feature = "parallel")]
const VALUE_SLOTS_PER_TASK: usize = 32;
#[cfg(not(feature = "parallel"))]
const UNIFORM_SLOTS_PER_TASK: usize = 1;
#[cfg(not(feature = "parallel"))]
const VALUE_SLOTS_PER_TASK: usize = 1;

/// Which neighborhood sampler drives tree construction.
#[derive(Clone, Copy)]
pub enum SamplerKind<'a> {
    Uniform,
    Value(&'a ValueRegressor),
}

impl<'a> SamplerKind<'a> {
    /// Value-driven sampling. Panics if the regressor has not been fitted or
    /// explicitly initialized; misconfiguration surfaces here rather than
    /// per expansion call.
    pub fn value(regressor: &'a ValueRegressor) -> Self {
        assert!(
            regressor.is_fitted(),
            "value sampler requires a fitted regressor"
        );
        SamplerKind::Value(regressor)
    }
}

/// K-hop fixed-fan-out sample tree. Level 0 holds the batch roots; level k
/// holds `|level k-1| * N_k` node ids, where the children of parent slot `i`
/// occupy the contiguous block `[i*N_k, (i+1)*N_k)`. Duplicates are allowed
/// (sampling with replacement).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleTree {
    levels: Vec<Vec<usize>>,
    fanouts: Vec<usize>,
}

impl SampleTree {
    /// Assemble a tree from explicit levels. Level sizes must obey the
    /// size law `|level k| == |level k-1| * N_k`.
    pub fn from_levels(levels: Vec<Vec<usize>>, fanouts: Vec<usize>) -> Self {
        assert!(
            levels.len() == fanouts.len() + 1,
            "expected {} levels for {} fanouts",
            fanouts.len() + 1,
            fanouts.len()
        );
        for (k, &n) in fanouts.iter().enumerate() {
            assert!(
                levels[k + 1].len() == levels[k].len() * n,
                "level {} has {} ids, size law requires {}",
                k + 1,
                levels[k + 1].len(),
                levels[k].len() * n
            );
        }
        Self { levels, fanouts }
    }

    pub fn roots(&self) -> &[usize] {
        &self.levels[0]
    }

    /// Node ids at hop `k` (0 = roots).
    pub fn level(&self, k: usize) -> &[usize] {
        &self.levels[k]
    }

    pub fn depth(&self) -> usize {
        self.fanouts.len()
    }

    pub fn fanouts(&self) -> &[usize] {
        &self.fanouts
    }

    /// Children block of parent slot `i` at hop `k` (k >= 1).
    pub fn children(&self, k: usize, i: usize) -> &[usize] {
        let n = self.fanouts[k - 1];
        &self.levels[k][i * n..(i + 1) * n]
    }
}

fn expand_slot_uniform(graph: &Graph, v: usize, rng: &mut ChaCha8Rng, out: &mut [usize]) {
    let nbrs = graph.neighbors(v);
    if nbrs.is_empty() {
        out.iter_mut().for_each(|o| *o = v);
    } else {
        for o in out.iter_mut() {
            *o = nbrs[rng.gen_range(0..nbrs.len())];
        }
    }
}

/// Expand a frontier by uniform sampling with replacement: each node emits
/// exactly `n_k` ids drawn i.i.d. from its neighbors. Degree-0 nodes emit
/// `n_k` copies of themselves. Frontier slot `i` draws from
/// `stream.derive(i)`, which is what makes the result schedule-independent.
pub fn uniform_expand(
    graph: &Graph,
    frontier: &[usize],
    n_k: usize,
    stream: RngStream,
) -> Vec<usize> {
    assert!(n_k >= 1, "fan-out must be >= 1");
    expand_with(frontier, n_k, UNIFORM_SLOTS_PER_TASK, |i, v, out| {
        let mut rng = stream.derive(i as u64).rng();
        expand_slot_uniform(graph, v, &mut rng, out);
    })
}

/// Sequential-only variant of [`uniform_expand`] for benchmarking the
/// fallback path; output is identical.
pub fn uniform_expand_seq(
    graph: &Graph,
    frontier: &[usize],
    n_k: usize,
    stream: RngStream,
) -> Vec<usize> {
    assert!(n_k >= 1, "fan-out must be >= 1");
    let mut out = vec![0usize; frontier.len() * n_k];
    for (i, (&v, chunk)) in frontier.iter().zip(out.chunks_mut(n_k)).enumerate() {
        let mut rng = stream.derive(i as u64).rng();
        expand_slot_uniform(graph, v, &mut rng, chunk);
    }
    out
}

fn expand_with<F>(frontier: &[usize], n_k: usize, slots_per_task: usize, per_slot: F) -> Vec<usize>
where
    F: Fn(usize, usize, &mut [usize]) + Sync,
{
    let mut out = vec![0usize; frontier.len() * n_k];
    #[cfg(feature = "parallel")]
    {
        if frontier.len() >= PAR_MIN_FRONTIER.max(2 * slots_per_task) {
            out.par_chunks_mut(n_k)
                .enumerate()
                .with_min_len(slots_per_task)
                .for_each(|(i, chunk)| per_slot(i, frontier[i], chunk));
            return out;
        }
    }
    let _ = slots_per_task;
    for (i, (&v, chunk)) in frontier.iter().zip(out.chunks_mut(n_k)).enumerate() {
        per_slot(i, v, chunk);
    }
    out
}

/// Split `neighbor_ids` into `n_k` balanced groups: a random permutation cut
/// into contiguous chunks whose sizes differ by at most one. Requires
/// `len > n_k`; the small-degree path is handled by the caller.
pub fn partition_neighbors(
    neighbor_ids: &[usize],
    n_k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    assert!(
        neighbor_ids.len() > n_k,
        "partition_neighbors requires more ids ({}) than groups ({})",
        neighbor_ids.len(),
        n_k
    );
    let mut ids = neighbor_ids.to_vec();
    // Fisher-Yates via rand's shuffle.
    use rand::seq::SliceRandom;
    ids.shuffle(rng);
    let base = ids.len() / n_k;
    let extra = ids.len() % n_k;
    let mut groups = Vec::with_capacity(n_k);
    let mut start = 0;
    for g in 0..n_k {
        let size = base + usize::from(g < extra);
        groups.push(ids[start..start + size].to_vec());
        start += size;
    }
    groups
}

fn expand_slot_value(
    graph: &Graph,
    regressor: &ValueRegressor,
    v: usize,
    n_k: usize,
    rng: &mut ChaCha8Rng,
    out: &mut [usize],
) {
    let nbrs = graph.neighbors(v);
    if nbrs.is_empty() {
        out.iter_mut().for_each(|o| *o = v);
        return;
    }
    if nbrs.len() <= n_k {
        // Every neighbor once, remaining slots filled uniformly with
        // replacement.
        out[..nbrs.len()].copy_from_slice(nbrs);
        for o in out[nbrs.len()..].iter_mut() {
            *o = nbrs[rng.gen_range(0..nbrs.len())];
        }
        return;
    }
    let features = graph.features();
    let left = regressor.left_partial(features.row(v));
    let groups = partition_neighbors(nbrs, n_k, rng);
    for (g, slot) in groups.iter().zip(out.iter_mut()) {
        let mut best_id = usize::MAX;
        let mut best_score = Real::NEG_INFINITY;
        for &u in g {
            let score = regressor.predict_with_partial(left, features.row(u));
            if score > best_score || (score == best_score && u < best_id) {
                best_score = score;
                best_id = u;
            }
        }
        *slot = best_id;
    }
}

/// Expand a frontier with the value-driven sampler: neighbors are
/// partitioned into `n_k` groups and each group contributes its
/// highest-value member (ties break toward the lowest node id). Nodes with
/// degree at most `n_k` contribute every neighbor once plus uniform fill;
/// degree-0 nodes emit copies of themselves. Frontier slot `i` draws its
/// partition from `stream.derive(i)`.
pub fn value_expand(
    graph: &Graph,
    regressor: &ValueRegressor,
    frontier: &[usize],
    n_k: usize,
    stream: RngStream,
) -> Vec<usize> {
    assert!(n_k >= 1, "fan-out must be >= 1");
    expand_with(frontier, n_k, VALUE_SLOTS_PER_TASK, |i, v, out| {
        let mut rng = stream.derive(i as u64).rng();
        expand_slot_value(graph, regressor, v, n_k, &mut rng, out);
    })
}

/// Sequential-only variant of [`value_expand`]; output is identical.
pub fn value_expand_seq(
    graph: &Graph,
    regressor: &ValueRegressor,
    frontier: &[usize],
    n_k: usize,
    stream: RngStream,
) -> Vec<usize> {
    assert!(n_k >= 1, "fan-out must be >= 1");
    let mut out = vec![0usize; frontier.len() * n_k];
    for (i, (&v, chunk)) in frontier.iter().zip(out.chunks_mut(n_k)).enumerate() {
        let mut rng = stream.derive(i as u64).rng();
        expand_slot_value(graph, regressor, v, n_k, &mut rng, chunk);
    }
    out
}

/// Build the K-hop sample tree for a batch of roots, expanding hop by hop
/// with the chosen sampler. One regressor serves every hop of the value
/// sampler; hop `k` derives its streams from `stream.derive(k)`.
pub fn build_tree(
    graph: &Graph,
    roots: &[usize],
    sampler: SamplerKind,
    fanouts: &[usize],
    stream: RngStream,
) -> SampleTree {
    assert!(!roots.is_empty(), "build_tree requires at least one root");
    if let SamplerKind::Value(reg) = sampler {
        assert!(reg.is_fitted(), "value sampler requires a fitted regressor");
    }
    let mut levels = Vec::with_capacity(fanouts.len() + 1);
    levels.push(roots.to_vec());
    for (k, &n_k) in fanouts.iter().enumerate() {
        let hop_stream = stream.derive(k as u64 + 1);
        let frontier = &levels[k];
        let next = match sampler {
            SamplerKind::Uniform => uniform_expand(graph, frontier, n_k, hop_stream),
            SamplerKind::Value(reg) => value_expand(graph, reg, frontier, n_k, hop_stream),
        };
        levels.push(next);
    }
    SampleTree {
        levels,
        fanouts: fanouts.to_vec(),
    }
}

/// Sequential-only variant of [`build_tree`]; output is identical.
pub fn build_tree_seq(
    graph: &Graph,
    roots: &[usize],
    sampler: SamplerKind,
    fanouts: &[usize],
    stream: RngStream,
) -> SampleTree {
    assert!(!roots.is_empty(), "build_tree requires at least one root");
    let mut levels = Vec::with_capacity(fanouts.len() + 1);
    levels.push(roots.to_vec());
    for (k, &n_k) in fanouts.iter().enumerate() {
        let hop_stream = stream.derive(k as u64 + 1);
        let frontier = &levels[k];
        let next = match sampler {
            SamplerKind::Uniform => uniform_expand_seq(graph, frontier, n_k, hop_stream),
            SamplerKind::Value(reg) => value_expand_seq(graph, reg, frontier, n_k, hop_stream),
        };
        levels.push(next);
    }
    SampleTree {
        levels,
        fanouts: fanouts.to_vec(),
    }
}

#[cfg(test)]
mod tests;
