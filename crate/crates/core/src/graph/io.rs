use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{KernelProfile, WeightedGraph};
use crate::error::Result;
use crate::manifold::{sidecar_path, DensitySpec, ManifoldSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub manifold: ManifoldSpec,
    pub density: DensitySpec,
    pub epsilon: f64,
    pub kernel: KernelProfile,
    pub n: usize,
    pub seed: u64,
    pub edges: usize,
    pub components: usize,
    /// Hex SHA-256 of the graph content.
    pub hash: String,
}

impl GraphMetadata {
    pub fn of(graph: &WeightedGraph) -> Self {
        Self {
            manifold: graph.cloud.manifold,
            density: graph.cloud.density,
            epsilon: graph.epsilon,
            kernel: graph.kernel,
            n: graph.len(),
            seed: graph.cloud.seed,
            edges: graph.edge_count(),
            components: graph.components(),
            hash: hex(&graph.content_hash()),
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the upper-triangle edge list `i,j,w`, the degrees `i,d`, and a
/// metadata sidecar next to the edge file.
pub fn write_graph(graph: &WeightedGraph, edges: &Path, degrees: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(edges)?;
    w.write_record(["i", "j", "w"])?;
    for (i, j, v) in graph.upper_entries() {
        w.write_record([i.to_string(), j.to_string(), format!("{v:?}")])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(degrees)?;
    w.write_record(["i", "d"])?;
    for (i, d) in graph.degrees().iter().enumerate() {
        w.write_record([i.to_string(), format!("{d:?}")])?;
    }
    w.flush()?;
    std::fs::write(
        sidecar_path(edges),
        serde_json::to_string_pretty(&GraphMetadata::of(graph))?,
    )?;
    Ok(())
}
