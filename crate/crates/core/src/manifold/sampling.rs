use rand::Rng;
use std::f64::consts::PI;

use super::{DensitySpec, ManifoldSpec, PointCloud};
use crate::error::{invalid, Error, Result};
use crate::util::seeded_rng;

/// Rejection budget per requested point before the density is declared malformed.
const ATTEMPTS_PER_POINT: u64 = 1000;

/// Draws `n` i.i.d. points from `density` by rejection against the uniform
/// volume measure. Deterministic for a fixed seed.
pub fn sample_points(
    manifold: ManifoldSpec,
    density: DensitySpec,
    n: usize,
    seed: u64,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(invalid("sample_points needs n >= 1"));
    }
    if density.manifold != manifold {
        return Err(invalid("density was built for a different manifold"));
    }
    let rho_max = density.max_value();
    if !(rho_max.is_finite() && rho_max > 0.0) {
        return Err(invalid("density maximum must be positive and finite"));
    }
    let mut rng = seeded_rng(seed);
    let dim = manifold.embedding_dim();
    let mut coords = Vec::with_capacity(n * dim);
    let budget = ATTEMPTS_PER_POINT * n as u64 + ATTEMPTS_PER_POINT;
    let mut attempts = 0u64;
    let mut p = [0.0f64; 3];
    while coords.len() < n * dim {
        if attempts >= budget {
            return Err(Error::SamplingFailed { attempts, n });
        }
        attempts += 1;
        let x = &mut p[..dim];
        match manifold {
            ManifoldSpec::FlatTorus { side } => {
                for c in x.iter_mut() {
                    *c = rng.random::<f64>() * side;
                }
            }
            ManifoldSpec::Sphere => {
                // Archimedes: z uniform on [-1,1] gives the uniform area measure
                let z = 2.0 * rng.random::<f64>() - 1.0;
                let phi = 2.0 * PI * rng.random::<f64>();
                let r = (1.0 - z * z).max(0.0).sqrt();
                x[0] = r * phi.cos();
                x[1] = r * phi.sin();
                x[2] = z;
            }
        }
        manifold.project(x);
        let accept = density.is_uniform() || rng.random::<f64>() * rho_max < density.value(x);
        if accept {
            coords.extend_from_slice(x);
        }
    }
    PointCloud::from_coords(manifold, density, seed, coords)
}
