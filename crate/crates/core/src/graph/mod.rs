//! Immutable graph storage: CSR adjacency over symmetrized undirected edges,
//! dense node features and labels, and the train/val/test split.
//!
//! Graphs are immutable after construction, so shared read access from any
//! number of workers is safe. Self-loops are stripped and duplicate edges
//! collapsed on ingestion; directed input edges are symmetrized.

mod io;
mod synthetic;

pub use io::{load_dataset, save_dataset};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ndmath::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Single,
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Dataset dimensions and label mode, as declared by `meta.json` and
/// cross-checked against the loaded arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetMeta {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub feature_dim: usize,
    pub label_count: usize,
    pub label_mode: LabelMode,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("missing dataset file: {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{file}: {message}")]
    Format { file: PathBuf, message: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Immutable CSR graph with node features, labels and split tags.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    csr_offsets: Vec<usize>,
    csr_targets: Vec<usize>,
    features: Matrix,
    labels: Matrix,
    label_mode: LabelMode,
    split: Vec<Split>,
}

impl Graph {
    /// Build a graph from raw parts. Edges may appear in either or both
    /// directions and may repeat; self-loops are dropped, the rest is
    /// symmetrized and deduplicated into sorted CSR rows.
    pub fn from_parts(
        features: Matrix,
        labels: Matrix,
        label_mode: LabelMode,
        split: Vec<Split>,
        edges: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let num_nodes = features.rows();
        if labels.rows() != num_nodes {
            return Err(GraphError::Invalid(format!(
                "label rows {} != num_nodes {}",
                labels.rows(),
                num_nodes
            )));
        }
        if split.len() != num_nodes {
            return Err(GraphError::Invalid(format!(
                "split length {} != num_nodes {}",
                split.len(),
                num_nodes
            )));
        }
        validate_labels(&labels, label_mode)?;
        for &(a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(GraphError::Invalid(format!(
                    "edge ({a}, {b}) references a node outside 0..{num_nodes}"
                )));
            }
        }
        let (csr_offsets, csr_targets) = build_csr(num_nodes, edges);
        Ok(Self {
            num_nodes,
            csr_offsets,
            csr_targets,
            features,
            labels,
            label_mode,
            split,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.csr_targets.len() / 2
    }

    /// CSR slice of `v`'s neighbors, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        assert!(
            v < self.num_nodes,
            "node id {} out of range 0..{}",
            v,
            self.num_nodes
        );
        &self.csr_targets[self.csr_offsets[v]..self.csr_offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        assert!(
            v < self.num_nodes,
            "node id {} out of range 0..{}",
            v,
            self.num_nodes
        );
        self.csr_offsets[v + 1] - self.csr_offsets[v]
    }

    pub fn csr_offsets(&self) -> &[usize] {
        &self.csr_offsets
    }

    pub fn csr_targets(&self) -> &[usize] {
        &self.csr_targets
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &Matrix {
        &self.labels
    }

    pub fn label_mode(&self) -> LabelMode {
        self.label_mode
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn nodes_with_split(&self, tag: Split) -> Vec<usize> {
        (0..self.num_nodes)
            .filter(|&v| self.split[v] == tag)
            .collect()
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            num_nodes: self.num_nodes,
            num_edges: self.num_edges(),
            feature_dim: self.features.cols(),
            label_count: self.labels.cols(),
            label_mode: self.label_mode,
        }
    }

    /// Each undirected edge once, as `(a, b)` with `a < b`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for a in 0..self.num_nodes {
            for &b in self.neighbors(a) {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// The inductive training view: every edge incident to a val or test
    /// node is removed. Features, labels and split tags are retained, so
    /// val/test nodes exist but are unreachable through the adjacency.
    pub fn restrict_to_train(&self) -> Graph {
        let kept: Vec<(usize, usize)> = self
            .undirected_edges()
            .into_iter()
            .filter(|&(a, b)| self.split[a] == Split::Train && self.split[b] == Split::Train)
            .collect();
        let (csr_offsets, csr_targets) = build_csr(self.num_nodes, &kept);
        Graph {
            num_nodes: self.num_nodes,
            csr_offsets,
            csr_targets,
            features: self.features.clone(),
            labels: self.labels.clone(),
            label_mode: self.label_mode,
            split: self.split.clone(),
        }
    }
}

fn validate_labels(labels: &Matrix, mode: LabelMode) -> Result<(), GraphError> {
    for i in 0..labels.rows() {
        let row = labels.row(i);
        if row.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(GraphError::Invalid(format!(
                "label row {i} contains entries outside {{0, 1}}"
            )));
        }
        if mode == LabelMode::Single {
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            if ones != 1 {
                return Err(GraphError::Invalid(format!(
                    "single-label row {i} has {ones} active labels, expected exactly 1"
                )));
            }
        }
    }
    Ok(())
}

fn build_csr(num_nodes: usize, edges: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    for &(a, b) in edges {
        if a == b {
            continue;
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut offsets = Vec::with_capacity(num_nodes + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
        targets.extend_from_slice(list);
        offsets.push(targets.len());
    }
    (offsets, targets)
}
