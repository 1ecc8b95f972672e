//! GraphSAGE node classification with two interchangeable neighborhood
//! samplers: the uniform baseline and a value-guided sampler whose
//! per-neighbor importance is learned from the classifier's own loss.
//!
//! Modules:
//! - [`graph`]: immutable CSR graphs, dataset IO, synthetic generator
//! - [`ndmath`]: dense matrices, losses, Adam, finite-difference oracle
//! - [`samplers`]: uniform and value-driven fixed-fan-out tree sampling
//! - [`model`]: the K-layer aggregator, training loop and checkpoints
//! - [`value`]: rewards, the return/visit table, the regressor and the
//!   three-phase pipeline
//! - [`metrics`] computes micro-F1
//!
//! With the default `parallel` feature, tree expansion and the dense
//! kernels fan out over rayon; every parallel unit derives its own random
//! stream, so results are identical to the sequential fallback build.

pub mod graph;
pub mod metrics;
pub mod model;
pub mod ndmath;
pub mod rng;
pub mod samplers;
pub mod value;

pub use graph::{
    generate_synthetic, load_dataset, save_dataset, DatasetMeta, Graph, LabelMode, Split,
    SyntheticSpec,
};
pub use metrics::micro_f1;
pub use model::{
    forward, load_checkpoint, loss_and_backward, predict, save_checkpoint, train, Aggregator,
    SageConfig, SageParams,
};
pub use ndmath::{Matrix, Real};
pub use rng::RngStream;
pub use samplers::{build_tree, SampleTree, SamplerKind};
pub use value::{
    fit_regressor, per_step_reward, record_episode, run_pipeline, EpisodeRecord, FitOptimizer,
    PipelineResult, RLConfig, RewardMode, ValueRegressor, ValueTable,
};

/// Cap the global worker pool from the `SAGE_THREADS` environment variable.
/// Call once at process start, before any parallel work. No-op without the
/// `parallel` feature.
pub fn init_thread_pool_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(v) = std::env::var("SAGE_THREADS") {
            if let Ok(n) = v.parse::<usize>() {
                if n >= 1 {
                    // Ignore the error if a pool was already installed.
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    }
}
