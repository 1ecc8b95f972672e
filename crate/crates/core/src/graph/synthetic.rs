//! Synthetic planted-informative-neighbor graphs for desk-scale experiments.
//!
//! Every node belongs to a community and is labeled by it. A fraction
//! `informative_fraction` of each community is "informative": their features
//! sit near the community centroid (all centroids share a common beacon
//! direction, so informative nodes are linearly separable from noise nodes).
//! The remaining nodes draw features from a community-independent
//! distribution around the origin.
//!
//! Edge stubs follow the same coin: with probability `informative_fraction`
//! a stub attaches to an informative node of the same community, otherwise
//! to a noise node of a different community. Every edge is therefore
//! same-community exactly when it is informative, and the expected
//! same-community edge fraction equals `informative_fraction`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError, LabelMode, Split};
use crate::ndmath::{Matrix, Real};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSpec {
    pub num_nodes: usize,
    pub num_communities: usize,
    pub feature_dim: usize,
    /// Fraction of informative nodes per community and of informative
    /// (same-community) edge stubs. Must lie in [0, 1].
    pub informative_fraction: f64,
    pub mean_degree: usize,
    pub noise_std: f64,
    pub seed: u64,
}

/// Length of the beacon component shared by every centroid. Informative
/// nodes are identified by their projection onto this direction, so it must
/// stand out against `noise_std` even for single nodes.
const BEACON_SCALE: f64 = 2.0;

/// Distance of the community centroids from the shared beacon. Chosen so
/// aggregated neighbor features separate communities once per-node noise is
/// averaged out.
const CENTROID_SPREAD: f64 = 2.0;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the lower bound keeps ln() finite.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// `Real as f64` casts below are real conversions under the `f32` feature.
#[allow(clippy::unnecessary_cast)]
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Graph, GraphError> {
    if !(0.0..=1.0).contains(&spec.informative_fraction) {
        return Err(GraphError::Invalid(format!(
            "informative_fraction {} outside [0, 1]",
            spec.informative_fraction
        )));
    }
    if spec.num_communities < 2 || spec.num_nodes < 2 * spec.num_communities {
        return Err(GraphError::Invalid(
            "need at least 2 communities and 2 nodes per community".into(),
        ));
    }
    if spec.feature_dim < 1 {
        return Err(GraphError::Invalid("feature_dim must be >= 1".into()));
    }

    let n = spec.num_nodes;
    let k = spec.num_communities;
    let m = spec.feature_dim;
    let stream = RngStream::new(spec.seed);

    let community: Vec<usize> = (0..n).map(|v| v % k).collect();
    let members: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..n).filter(|v| v % k == c).collect())
        .collect();

    // Per-community informative pools.
    let mut informative = vec![false; n];
    let mut info_pool: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut noise_pool: Vec<Vec<usize>> = Vec::with_capacity(k);
    {
        let mut rng = stream.derive(0).rng();
        for community_members in members.iter().take(k) {
            let mut ids = community_members.clone();
            ids.shuffle(&mut rng);
            let count = (spec.informative_fraction * ids.len() as f64).round() as usize;
            let (info, noise) = ids.split_at(count.min(ids.len()));
            for &v in info {
                informative[v] = true;
            }
            let mut info = info.to_vec();
            let mut noise = noise.to_vec();
            info.sort_unstable();
            noise.sort_unstable();
            info_pool.push(info);
            noise_pool.push(noise);
        }
    }
    // Noise nodes of all communities other than c, for uninformative stubs.
    let other_noise: Vec<Vec<usize>> = (0..k)
        .map(|c| {
            (0..k)
                .filter(|&d| d != c)
                .flat_map(|d| noise_pool[d].iter().copied())
                .collect()
        })
        .collect();

    // Centroids: shared beacon plus a community-specific direction.
    let beacon = BEACON_SCALE / (m as f64).sqrt();
    let mut centroids = Matrix::zeros(k, m);
    {
        let mut rng = stream.derive(1).rng();
        for c in 0..k {
            let dir: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            for (j, d) in dir.iter().enumerate() {
                centroids.set(c, j, (beacon + CENTROID_SPREAD * d / norm) as Real);
            }
        }
    }

    // Features, quantized to f32 so a save/load round trip is exact.
    let mut features = Matrix::zeros(n, m);
    {
        let mut rng = stream.derive(2).rng();
        for (v, &c) in community.iter().enumerate() {
            for j in 0..m {
                let base = if informative[v] {
                    centroids.at(c, j) as f64
                } else {
                    0.0
                };
                let x = base + spec.noise_std * normal(&mut rng);
                features.set(v, j, (x as f32) as Real);
            }
        }
    }

    // Edge stubs. Half the mean degree per node; symmetrization restores
    // the other half in expectation.
    let stubs = (spec.mean_degree / 2).max(1);
    let mut edges = Vec::with_capacity(n * stubs);
    {
        let mut rng = stream.derive(3).rng();
        for (v, &c) in community.iter().enumerate() {
            for _ in 0..stubs {
                let pool: &[usize] = if rng.gen::<f64>() < spec.informative_fraction {
                    if info_pool[c].is_empty() {
                        &members[c]
                    } else {
                        &info_pool[c]
                    }
                } else if other_noise[c].is_empty() {
                    &members[c]
                } else {
                    &other_noise[c]
                };
                // Retry a few times on self-draws; give up quietly on
                // pathological pools (the duplicate is dropped anyway).
                for _ in 0..8 {
                    let u = pool[rng.gen_range(0..pool.len())];
                    if u != v {
                        edges.push((v, u));
                        break;
                    }
                }
            }
        }
    }

    // 60/20/20 split by seeded shuffle.
    let mut split = vec![Split::Train; n];
    {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = stream.derive(4).rng();
        order.shuffle(&mut rng);
        let train_end = (n * 6) / 10;
        let val_end = (n * 8) / 10;
        for (rank, &v) in order.iter().enumerate() {
            split[v] = if rank < train_end {
                Split::Train
            } else if rank < val_end {
                Split::Val
            } else {
                Split::Test
            };
        }
    }

    let mut labels = Matrix::zeros(n, k);
    for (v, &c) in community.iter().enumerate() {
        labels.set(v, c, 1.0);
    }

    Graph::from_parts(features, labels, LabelMode::Single, split, &edges)
}
