//! Spectrum cache keyed by the content of the point cloud and the eigensolver
//! request.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use mbolab::graph::WeightedGraph;
use mbolab::spectral::{load_spectrum, partial_eigendecomposition, save_spectrum, EigenOptions, SpectralDecomposition};

use crate::config::hex;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CacheEvent {
    pub key: String,
    pub hit: bool,
}

/// `sha256(cloud bytes ‖ ε ‖ kernel ‖ K ‖ tol)`
pub fn cache_key(graph: &WeightedGraph, k: usize, tol: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(graph.cloud.coord_bytes());
    hasher.update(graph.epsilon.to_le_bytes());
    hasher.update(graph.kernel.name().as_bytes());
    hasher.update((k as u64).to_le_bytes());
    hasher.update(tol.to_le_bytes());
    hex(&hasher.finalize())
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.mbospec"))
}

/// Loads the first `k` eigenpairs from `dir` or computes and stores them.
/// An unreadable or mismatching cache file is recomputed and overwritten.
pub fn cached_spectrum(
    graph: &WeightedGraph,
    k: usize,
    tol: f64,
    dir: &Path,
) -> Result<(SpectralDecomposition, CacheEvent), CliError> {
    let key = cache_key(graph, k, tol);
    let path = cache_path(dir, &key);
    if path.exists() {
        match load_spectrum(&path, graph) {
            Ok(dec) if dec.k() == k => return Ok((dec, CacheEvent { key, hit: true })),
            Ok(dec) => log::warn!("{}: holds {} pairs, expected {k}; recomputing", path.display(), dec.k()),
            Err(e) => log::warn!("{e}; recomputing"),
        }
    }
    let opts = EigenOptions {
        tol,
        ..EigenOptions::default()
    };
    let dec = partial_eigendecomposition(graph, k, &opts)?;
    std::fs::create_dir_all(dir)?;
    save_spectrum(&dec, &path)?;
    Ok((dec, CacheEvent { key, hit: false }))
}
