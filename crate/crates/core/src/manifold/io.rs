use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::{DensitySpec, ManifoldSpec, PointCloud};
use crate::error::{invalid, Error, Result};

/// Sidecar record stored next to a point-cloud CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloudMetadata {
    pub manifold: ManifoldSpec,
    pub density: DensitySpec,
    pub seed: u64,
    pub n: usize,
}

/// `points.csv` -> `points.csv.meta.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

pub fn write_point_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(cloud.dim()))?;
    for p in cloud.points() {
        // `{:?}` prints the shortest representation that round-trips
        w.write_record(p.iter().map(|c| format!("{c:?}")))?;
    }
    w.flush()?;
    let meta = PointCloudMetadata {
        manifold: cloud.manifold,
        density: cloud.density,
        seed: cloud.seed,
        n: cloud.len(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let meta: PointCloudMetadata =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let dim = meta.manifold.embedding_dim();
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.clone();
    for name in header(dim) {
        if !cols.iter().any(|c| c == name) {
            return Err(Error::MissingColumn(name));
        }
    }
    let mut coords = Vec::with_capacity(meta.n * dim);
    for rec in r.records() {
        let rec = rec?;
        for (i, field) in rec.iter().take(dim).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| invalid(format!("column x{i}: cannot parse `{field}`")))?;
            coords.push(v);
        }
    }
    let cloud = PointCloud::from_coords(meta.manifold, meta.density, meta.seed, coords)?;
    if cloud.len() != meta.n {
        return Err(invalid(format!(
            "metadata promises {} points, file holds {}",
            meta.n,
            cloud.len()
        )));
    }
    Ok(cloud)
}
