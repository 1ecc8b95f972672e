//! On-disk dataset format. All files are UTF-8 text with LF line endings:
//!
//! - `meta.json`    — `num_nodes`, `feature_dim`, `num_labels`, `label_mode`
//! - `edges.txt`    — one edge per line, two whitespace-separated node ids
//! - `features.tsv` — one line per node, `feature_dim` tab-separated floats
//! - `labels.tsv`   — single mode: one label id per line; multi mode:
//!   space-separated active label ids (possibly empty)
//! - `split.tsv`    — one of `train`/`val`/`test` per node
//!
//! An optional binary `features.f32` (row-major little-endian 32-bit floats)
//! takes precedence over the TSV when present. Features are stored at 32-bit
//! precision and promoted to the working precision in memory.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetMeta, Graph, GraphError, LabelMode, Split};
use crate::ndmath::{Matrix, Real};

#[derive(Serialize, Deserialize)]
struct MetaFile {
    num_nodes: usize,
    feature_dim: usize,
    num_labels: usize,
    label_mode: LabelMode,
}

fn read_to_string(path: &Path) -> Result<String, GraphError> {
    if !path.exists() {
        return Err(GraphError::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_node_id(
    token: &str,
    num_nodes: usize,
    file: &Path,
    line: usize,
) -> Result<usize, GraphError> {
    let id: usize = token
        .parse()
        .map_err(|_| parse_err(file, line, format!("invalid node id {token:?}")))?;
    if id >= num_nodes {
        return Err(parse_err(
            file,
            line,
            format!("node id {id} out of range 0..{num_nodes}"),
        ));
    }
    Ok(id)
}

/// Load a dataset directory into a [`Graph`] plus its [`DatasetMeta`].
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(Graph, DatasetMeta), GraphError> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta_text = read_to_string(&meta_path)?;
    let meta: MetaFile = serde_json::from_str(&meta_text).map_err(|e| GraphError::Format {
        file: meta_path.clone(),
        message: e.to_string(),
    })?;
    if meta.feature_dim < 1 || meta.num_labels < 2 {
        return Err(GraphError::Format {
            file: meta_path,
            message: format!(
                "require feature_dim >= 1 and num_labels >= 2, got {} and {}",
                meta.feature_dim, meta.num_labels
            ),
        });
    }

    let edges = load_edges(&dir.join("edges.txt"), meta.num_nodes)?;
    let features = load_features(dir, meta.num_nodes, meta.feature_dim)?;
    let labels = load_labels(
        &dir.join("labels.tsv"),
        meta.num_nodes,
        meta.num_labels,
        meta.label_mode,
    )?;
    let split = load_split(&dir.join("split.tsv"), meta.num_nodes)?;

    let graph = Graph::from_parts(features, labels, meta.label_mode, split, &edges)?;
    let meta = graph.meta();
    Ok((graph, meta))
}

fn load_edges(path: &Path, num_nodes: usize) -> Result<Vec<(usize, usize)>, GraphError> {
    let text = read_to_string(path)?;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut it = raw.split_whitespace();
        let a = it
            .next()
            .ok_or_else(|| parse_err(path, line, "expected two node ids"))?;
        let b = it
            .next()
            .ok_or_else(|| parse_err(path, line, "expected two node ids"))?;
        if it.next().is_some() {
            return Err(parse_err(path, line, "expected exactly two node ids"));
        }
        edges.push((
            parse_node_id(a, num_nodes, path, line)?,
            parse_node_id(b, num_nodes, path, line)?,
        ));
    }
    Ok(edges)
}

fn load_features(dir: &Path, num_nodes: usize, dim: usize) -> Result<Matrix, GraphError> {
    let bin_path = dir.join("features.f32");
    if bin_path.exists() {
        return load_features_binary(&bin_path, num_nodes, dim);
    }
    let path = dir.join("features.tsv");
    let text = read_to_string(&path)?;
    let mut data: Vec<Real> = Vec::with_capacity(num_nodes * dim);
    let mut rows = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        rows += 1;
        if rows > num_nodes {
            break;
        }
        let mut count = 0usize;
        for token in raw.split('\t') {
            let v: f32 = token
                .trim()
                .parse()
                .map_err(|_| parse_err(&path, line, format!("invalid float {token:?}")))?;
            data.push(v as Real);
            count += 1;
        }
        if count != dim {
            return Err(parse_err(
                &path,
                line,
                format!("expected {dim} features, found {count}"),
            ));
        }
    }
    if rows != num_nodes {
        return Err(parse_err(
            &path,
            rows.min(num_nodes) + 1,
            format!("expected {num_nodes} feature rows, found {rows}"),
        ));
    }
    Ok(Matrix::from_vec(num_nodes, dim, data))
}

fn load_features_binary(path: &Path, num_nodes: usize, dim: usize) -> Result<Matrix, GraphError> {
    let bytes = fs::read(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let expected = num_nodes * dim * 4;
    if bytes.len() != expected {
        return Err(GraphError::Format {
            file: path.to_path_buf(),
            message: format!(
                "expected {expected} bytes ({num_nodes}x{dim} f32), found {}",
                bytes.len()
            ),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as Real)
        .collect();
    Ok(Matrix::from_vec(num_nodes, dim, data))
}

fn load_labels(
    path: &Path,
    num_nodes: usize,
    num_labels: usize,
    mode: LabelMode,
) -> Result<Matrix, GraphError> {
    let text = read_to_string(path)?;
    let mut labels = Matrix::zeros(num_nodes, num_labels);
    let mut rows = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        rows += 1;
        if rows > num_nodes {
            break;
        }
        let node = rows - 1;
        match mode {
            LabelMode::Single => {
                let token = raw.trim();
                if token.is_empty() {
                    return Err(parse_err(
                        path,
                        line,
                        "single-label row must name one label id",
                    ));
                }
                let id: usize = token
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("invalid label id {token:?}")))?;
                if id >= num_labels {
                    return Err(parse_err(
                        path,
                        line,
                        format!("label id {id} out of range 0..{num_labels}"),
                    ));
                }
                labels.set(node, id, 1.0);
            }
            LabelMode::Multi => {
                for token in raw.split_whitespace() {
                    let id: usize = token.parse().map_err(|_| {
                        parse_err(path, line, format!("invalid label id {token:?}"))
                    })?;
                    if id >= num_labels {
                        return Err(parse_err(
                            path,
                            line,
                            format!("label id {id} out of range 0..{num_labels}"),
                        ));
                    }
                    labels.set(node, id, 1.0);
                }
            }
        }
    }
    if rows != num_nodes {
        return Err(parse_err(
            path,
            rows.min(num_nodes) + 1,
            format!("expected {num_nodes} label rows, found {rows}"),
        ));
    }
    Ok(labels)
}

fn load_split(path: &Path, num_nodes: usize) -> Result<Vec<Split>, GraphError> {
    let text = read_to_string(path)?;
    let mut split = Vec::with_capacity(num_nodes);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if split.len() == num_nodes {
            break;
        }
        split.push(match raw.trim() {
            "train" => Split::Train,
            "val" => Split::Val,
            "test" => Split::Test,
            other => {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected train/val/test, found {other:?}"),
                ))
            }
        });
    }
    if split.len() != num_nodes {
        return Err(parse_err(
            path,
            split.len() + 1,
            format!("expected {num_nodes} split rows, found {}", split.len()),
        ));
    }
    Ok(split)
}

/// Write a graph back out in the dataset directory format. Features are
/// stored as 32-bit floats; reloading reproduces the graph exactly.
pub fn save_dataset(graph: &Graph, dir: impl AsRef<Path>) -> Result<(), GraphError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let meta = graph.meta();
    let meta_file = MetaFile {
        num_nodes: meta.num_nodes,
        feature_dim: meta.feature_dim,
        num_labels: meta.label_count,
        label_mode: meta.label_mode,
    };
    write_file(
        &dir.join("meta.json"),
        &(serde_json::to_string_pretty(&meta_file).expect("meta serializes") + "\n"),
    )?;

    let mut edges = String::new();
    for (a, b) in graph.undirected_edges() {
        edges.push_str(&format!("{a} {b}\n"));
    }
    write_file(&dir.join("edges.txt"), &edges)?;

    let mut features = String::new();
    for i in 0..graph.num_nodes() {
        let row: Vec<String> = graph
            .features()
            .row(i)
            .iter()
            .map(|&v| format!("{}", v as f32))
            .collect();
        features.push_str(&row.join("\t"));
        features.push('\n');
    }
    write_file(&dir.join("features.tsv"), &features)?;

    let mut labels = String::new();
    for i in 0..graph.num_nodes() {
        let row = graph.labels().row(i);
        let active: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1.0)
            .map(|(j, _)| j.to_string())
            .collect();
        labels.push_str(&active.join(" "));
        labels.push('\n');
    }
    write_file(&dir.join("labels.tsv"), &labels)?;

    let mut split = String::new();
    for tag in graph.split() {
        split.push_str(tag.as_str());
        split.push('\n');
    }
    write_file(&dir.join("split.tsv"), &split)?;
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), GraphError> {
    let mut f = fs::File::create(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(contents.as_bytes())
        .map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })
}
