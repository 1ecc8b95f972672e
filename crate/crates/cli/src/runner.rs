//! Experiment orchestration behind the CLI subcommands.

use std::path::PathBuf;
use std::time::Instant;

use sage_core::model::TrainHistory;
use sage_core::{
    generate_synthetic, load_checkpoint, load_dataset, micro_f1, predict, run_pipeline,
    save_checkpoint, save_dataset, train, Graph, Matrix, RngStream, SamplerKind, Split,
};

use crate::config::{DatasetSource, ExperimentConfig, SamplerMode};
use crate::report::{write_report, ResultRow};
use crate::CliError;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Resolve the dataset source into a graph. Unresolvable datasets are
/// configuration errors.
pub fn load_graph(source: &DatasetSource) -> Result<Graph, CliError> {
    match source {
        DatasetSource::Path(dir) => {
            let (graph, _) = load_dataset(dir).map_err(config_err)?;
            Ok(graph)
        }
        DatasetSource::Synthetic(spec) => generate_synthetic(spec).map_err(config_err),
    }
}

/// Apply `--seed` / `--out` overrides.
pub fn apply_overrides(config: &mut ExperimentConfig, seed: Option<u64>, out: Option<PathBuf>) {
    if let Some(s) = seed {
        config.seeds = vec![s];
    }
    if let Some(o) = out {
        config.out = o;
    }
}

fn timed_predict(
    graph: &Graph,
    params: &sage_core::SageParams,
    nodes: &[usize],
    sampler: SamplerKind,
    stream: RngStream,
) -> (Matrix, f64) {
    let start = Instant::now();
    let preds = predict(graph, params, nodes, sampler, stream);
    (preds, start.elapsed().as_secs_f64())
}

/// Run the full pipeline once per seed and assemble the Uniform and RL
/// result rows. Wall time covers prediction only (tree sampling, forward
/// pass and thresholding over all test nodes).
pub fn run_bench(config: &ExperimentConfig) -> Result<Vec<ResultRow>, CliError> {
    let graph = load_graph(&config.dataset)?;
    let test_nodes = graph.nodes_with_split(Split::Test);
    if test_nodes.is_empty() {
        return Err(CliError::Config("dataset has no test nodes".into()));
    }
    let test_labels = graph.labels().gather_rows(&test_nodes);

    let mut uniform_f1 = Vec::with_capacity(config.seeds.len());
    let mut value_f1 = Vec::with_capacity(config.seeds.len());
    let mut uniform_time = 0.0;
    let mut value_time = 0.0;
    let mut param_mb = (0.0, 0.0);
    for &seed in &config.seeds {
        let stream = RngStream::new(seed);
        let result =
            run_pipeline(&graph, &config.model, &config.rl, stream).map_err(runtime_err)?;

        let (preds_u, t_u) = timed_predict(
            &graph,
            &result.uniform_model,
            &test_nodes,
            SamplerKind::Uniform,
            stream.derive(1001),
        );
        let (preds_v, t_v) = timed_predict(
            &graph,
            &result.value_model,
            &test_nodes,
            SamplerKind::value(&result.regressor),
            stream.derive(1002),
        );
        uniform_f1.push(micro_f1(&preds_u, &test_labels));
        value_f1.push(micro_f1(&preds_v, &test_labels));
        uniform_time += t_u;
        value_time += t_v;
        param_mb = (
            result.uniform_model.param_megabytes(),
            result.value_model.param_megabytes(),
        );
    }
    let n = config.seeds.len() as f64;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let dataset = config.dataset.label();
    let time = |total: f64| if config.measure_time { total / n } else { 0.0 };
    let rows = vec![
        ResultRow {
            method: "uniform".into(),
            dataset: dataset.clone(),
            f1_mean: mean(&uniform_f1),
            f1_per_seed: uniform_f1,
            seeds: config.seeds.clone(),
            time_s: time(uniform_time),
            param_mb: param_mb.0,
            epochs: config.model.epochs,
            config: config.clone(),
        },
        ResultRow {
            method: "rl".into(),
            dataset,
            f1_mean: mean(&value_f1),
            f1_per_seed: value_f1,
            seeds: config.seeds.clone(),
            time_s: time(value_time),
            param_mb: param_mb.1,
            epochs: config.model.epochs,
            config: config.clone(),
        },
    ];
    write_report(&rows, &config.out)?;
    Ok(rows)
}

fn print_history(history: &TrainHistory) {
    for (epoch, loss) in history.epoch_loss.iter().enumerate() {
        match history.val_f1.get(epoch) {
            Some(f1) => println!("epoch {epoch}: train loss {loss:.6}, val micro-F1 {f1:.4}"),
            None => println!("epoch {epoch}: train loss {loss:.6}"),
        }
    }
}

/// Train one model per the configured sampler mode and write a checkpoint
/// to `<out>/model.ckpt`. In `rl` mode this runs the full pipeline and the
/// checkpoint carries the phase-C model plus the regressor.
pub fn run_train(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let graph = load_graph(&config.dataset)?;
    let seed = config.seeds[0];
    let stream = RngStream::new(seed);
    std::fs::create_dir_all(&config.out)
        .map_err(|e| runtime_err(format!("cannot create {}: {e}", config.out.display())))?;
    let path = config.out.join("model.ckpt");
    match config.sampler {
        SamplerMode::Uniform => {
            let (params, history) =
                train(&graph, &config.model, SamplerKind::Uniform, stream, None)
                    .map_err(runtime_err)?;
            print_history(&history);
            save_checkpoint(&params, None, &path).map_err(runtime_err)?;
        }
        SamplerMode::Rl => {
            let result =
                run_pipeline(&graph, &config.model, &config.rl, stream).map_err(runtime_err)?;
            print_history(&result.value_history);
            save_checkpoint(&result.value_model, Some(&result.regressor), &path)
                .map_err(runtime_err)?;
        }
    }
    println!("checkpoint written to {}", path.display());
    Ok(path)
}

/// Evaluate `<out>/model.ckpt` on the dataset's test split. Uses the value
/// sampler when the checkpoint carries a regressor, the uniform sampler
/// otherwise.
pub fn run_eval(config: &ExperimentConfig) -> Result<f64, CliError> {
    let graph = load_graph(&config.dataset)?;
    let path = config.out.join("model.ckpt");
    let (params, regressor) = load_checkpoint(&path).map_err(config_err)?;
    let test_nodes = graph.nodes_with_split(Split::Test);
    if test_nodes.is_empty() {
        return Err(CliError::Config("dataset has no test nodes".into()));
    }
    let sampler = match &regressor {
        Some(reg) => SamplerKind::value(reg),
        None => SamplerKind::Uniform,
    };
    let seed = config.seeds[0];
    let preds = predict(
        &graph,
        &params,
        &test_nodes,
        sampler,
        RngStream::new(seed).derive(1001),
    );
    let f1 = micro_f1(&preds, &graph.labels().gather_rows(&test_nodes));
    println!("test micro-F1: {f1}");
    Ok(f1)
}

/// Generate the configured synthetic dataset and save it in the on-disk
/// format under the output directory.
pub fn run_synth(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let DatasetSource::Synthetic(spec) = &config.dataset else {
        return Err(CliError::Config(
            "synth requires a synthetic dataset spec in the config".into(),
        ));
    };
    let graph = generate_synthetic(spec).map_err(config_err)?;
    save_dataset(&graph, &config.out).map_err(runtime_err)?;
    println!(
        "synthetic dataset ({} nodes, {} edges) written to {}",
        graph.num_nodes(),
        graph.num_edges(),
        config.out.display()
    );
    Ok(config.out.clone())
}

/// Shared helper for tests and the acceptance suite: predictions and F1 of
/// a model on the test split.
pub fn test_f1(
    graph: &Graph,
    params: &sage_core::SageParams,
    sampler: SamplerKind,
    stream: RngStream,
) -> f64 {
    let test_nodes = graph.nodes_with_split(Split::Test);
    let preds = predict(graph, params, &test_nodes, sampler, stream);
    micro_f1(&preds, &graph.labels().gather_rows(&test_nodes))
}
