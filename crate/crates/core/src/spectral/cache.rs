//! Binary spectrum cache.
//!
//! Layout (little-endian): magic `MBOSPEC1`, `n: u64`, `K: u64`, 32-byte
//! graph hash, `tol: f64`, `K` eigenvalues, `n·K` eigenvector entries in
//! node-major order, CRC32 of everything before the trailer.

use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

use super::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub const CACHE_MAGIC: &[u8; 8] = b"MBOSPEC1";
const HEADER: usize = 8 + 8 + 8 + 32 + 8;

/// Writes the cache through a temporary file renamed into place.
pub fn save_spectrum(dec: &SpectralDecomposition, path: &Path) -> Result<()> {
    let (n, k) = (dec.n(), dec.k());
    let mut buf = Vec::with_capacity(HEADER + 8 * (k + n * k) + 4);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(k as u64).to_le_bytes());
    buf.extend_from_slice(&dec.graph_hash);
    buf.extend_from_slice(&dec.tol.to_le_bytes());
    for v in dec.eigenvalues.iter().chain(dec.eigenvectors_raw()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());

    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a cache written for `graph`; degrees and residuals are taken from
/// the graph.
pub fn load_spectrum(path: &Path, graph: &WeightedGraph) -> Result<SpectralDecomposition> {
    let fail = |reason: String| Error::Cache {
        path: path.to_path_buf(),
        reason,
    };
    let buf = std::fs::read(path)?;
    if buf.len() < HEADER + 4 {
        return Err(fail(format!("file too short ({} bytes)", buf.len())));
    }
    if &buf[..8] != CACHE_MAGIC {
        return Err(fail("bad magic; not a spectrum cache".into()));
    }
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let n = u64_at(8) as usize;
    let k = u64_at(16) as usize;
    let expected = n
        .checked_mul(k)
        .and_then(|nk| nk.checked_add(k))
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| b.checked_add(HEADER + 4));
    let body_end = buf.len() - 4;
    let stored = u32::from_le_bytes(buf[body_end..].try_into().unwrap());
    let computed = crc32fast::hash(&buf[..body_end]);
    if stored != computed || expected != Some(buf.len()) {
        return Err(Error::Checksum {
            path: path.to_path_buf(),
            stored,
            computed,
        });
    }
    let mut hash = [0u8; 32];
    hash.copy_from_slice(&buf[24..56]);
    if hash != graph.content_hash() {
        return Err(fail("graph hash mismatch; cache belongs to a different graph".into()));
    }
    if n != graph.len() {
        return Err(fail(format!("cache has n = {n}, graph has {}", graph.len())));
    }
    let tol = f64_at(56);
    let values: Vec<f64> = (0..k).map(|l| f64_at(HEADER + 8 * l)).collect();
    let base = HEADER + 8 * k;
    let vectors: Vec<f64> = (0..n * k).map(|i| f64_at(base + 8 * i)).collect();

    let dec = SpectralDecomposition::from_parts(
        values,
        vectors,
        graph.degrees().to_vec(),
        vec![0.0; k],
        tol,
        hash,
    )?;
    let residuals = (0..k)
        .into_par_iter()
        .map(|l| {
            let v = dec.vector(l);
            let lv = graph.laplacian_apply(&v)?;
            let r: Vec<f64> = lv.iter().zip(&v).map(|(a, b)| a - dec.eigenvalues[l] * b).collect();
            Ok(graph.inner_product(&r, &r).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectralDecomposition { residuals, ..dec })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::KernelProfile;
    use crate::manifold::{sample_points, DensitySpec, ManifoldSpec};
    use crate::spectral::{partial_eigendecomposition, EigenOptions};

    fn setup(seed: u64) -> WeightedGraph {
        let m = ManifoldSpec::unit_torus();
        WeightedGraph::build(
            sample_points(m, DensitySpec::uniform(m), 150, seed).unwrap(),
            0.25,
            KernelProfile::Indicator,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let g = setup(1);
        let dec = partial_eigendecomposition(&g, 7, &EigenOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        save_spectrum(&dec, &p).unwrap();
        let back = load_spectrum(&p, &g).unwrap();
        assert_eq!(back.eigenvalues, dec.eigenvalues);
        assert_eq!(back.eigenvectors_raw(), dec.eigenvectors_raw());
        assert_eq!(back.tol, dec.tol);
        for (a, b) in back.residuals.iter().zip(&dec.residuals) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let g = setup(1);
        let dec = partial_eigendecomposition(&g, 3, &EigenOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        save_spectrum(&dec, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 100]).unwrap();
        assert!(matches!(load_spectrum(&p, &g), Err(Error::Checksum { .. })));
    }

    #[test]
    fn wrong_graph_is_rejected() {
        let g = setup(1);
        let other = setup(2);
        let dec = partial_eigendecomposition(&g, 3, &EigenOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        save_spectrum(&dec, &p).unwrap();
        match load_spectrum(&p, &other) {
            Err(Error::Cache { reason, .. }) => assert!(reason.contains("hash")),
            other => panic!("unexpected {:?}", other.map(|d| d.k())),
        }
    }
}
