//! Closed two-dimensional manifolds with sampling densities.
//!
//! Two models are supported: the flat torus `[0, L)^2` in fundamental-domain
//! coordinates (quotient metric) and the unit sphere embedded in `R^3`.

mod density;
mod eigensystem;
mod io;
mod sampling;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

pub use density::{DensityForm, DensitySpec};
pub use eigensystem::{
    continuum_eigensystem, continuum_heat_apply, ContinuumEigensystem, EigenMode, Projection,
    QuadratureGrid, HEAT_TRUNCATION,
};
pub(crate) use eigensystem::{heat_kernel, periodic_heat_1d};
pub use io::{read_point_cloud, sidecar_path, write_point_cloud, PointCloudMetadata};
pub use sampling::sample_points;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ManifoldSpec {
    /// Flat torus `R^2 / (L Z)^2`, represented by coordinates in `[0, L)^2`.
    FlatTorus { side: f64 },
    /// Unit sphere `S^2 ⊂ R^3`.
    Sphere,
}

impl ManifoldSpec {
    pub fn torus(side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(invalid(format!("torus side length must be positive, got {side}")));
        }
        Ok(Self::FlatTorus { side })
    }

    pub fn unit_torus() -> Self {
        Self::FlatTorus { side: 1.0 }
    }

    pub fn sphere() -> Self {
        Self::Sphere
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::FlatTorus { .. } => "flat-torus-2d",
            Self::Sphere => "sphere-2",
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        2
    }

    pub fn embedding_dim(&self) -> usize {
        match self {
            Self::FlatTorus { .. } => 2,
            Self::Sphere => 3,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Self::FlatTorus { side } => side * side,
            Self::Sphere => 4.0 * PI,
        }
    }

    /// Largest kernel radius for which neighbourhoods stay embedded balls.
    pub fn injectivity_scale(&self) -> f64 {
        match *self {
            Self::FlatTorus { side } => 0.5 * side,
            Self::Sphere => PI,
        }
    }

    pub fn side(&self) -> Option<f64> {
        match *self {
            Self::FlatTorus { side } => Some(side),
            Self::Sphere => None,
        }
    }

    /// Checks the defining equation of the manifold for a coordinate vector.
    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            Self::FlatTorus { side } => {
                x.len() == 2 && x.iter().all(|&c| (0.0..side).contains(&c))
            }
            Self::Sphere => x.len() == 3 && (norm3(x) - 1.0).abs() <= 1e-12,
        }
    }

    /// Maps arbitrary coordinates back onto the manifold (wrap or normalise).
    pub fn project(&self, x: &mut [f64]) {
        match *self {
            Self::FlatTorus { side } => {
                for c in x.iter_mut() {
                    *c = wrap(*c, side);
                }
            }
            Self::Sphere => {
                let r = norm3(x);
                for c in x.iter_mut() {
                    *c /= r;
                }
            }
        }
    }

    /// Intrinsic (geodesic) distance.
    pub fn geodesic_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Self::FlatTorus { side } => torus_distance(x, y, side),
            Self::Sphere => {
                let dot = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
                let cx = x[1] * y[2] - x[2] * y[1];
                let cy = x[2] * y[0] - x[0] * y[2];
                let cz = x[0] * y[1] - x[1] * y[0];
                (cx * cx + cy * cy + cz * cz).sqrt().atan2(dot)
            }
        }
    }

    /// Distance fed to the graph kernel: quotient distance on the torus,
    /// chordal (ambient) distance on the sphere.
    pub fn kernel_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Self::FlatTorus { side } => torus_distance(x, y, side),
            Self::Sphere => {
                let dx = x[0] - y[0];
                let dy = x[1] - y[1];
                let dz = x[2] - y[2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
        }
    }
}

/// Minimal-image displacement `y - x` on a circle of length `side`.
#[inline]
pub fn periodic_delta(x: f64, y: f64, side: f64) -> f64 {
    let mut d = (y - x) % side;
    if d > 0.5 * side {
        d -= side;
    } else if d < -0.5 * side {
        d += side;
    }
    d
}

#[inline]
pub fn wrap(c: f64, side: f64) -> f64 {
    let w = c.rem_euclid(side);
    // rem_euclid can round up to `side` for tiny negative inputs
    if w >= side {
        0.0
    } else {
        w
    }
}

#[inline]
fn torus_distance(x: &[f64], y: &[f64], side: f64) -> f64 {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = (a - b).abs() % side;
        let d = d.min(side - d);
        s += d * d;
    }
    s.sqrt()
}

#[inline]
pub(crate) fn norm3(x: &[f64]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Sampled points on a manifold together with their provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub manifold: ManifoldSpec,
    pub density: DensitySpec,
    pub seed: u64,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from flat coordinates, validating every point.
    pub fn from_coords(
        manifold: ManifoldSpec,
        density: DensitySpec,
        seed: u64,
        coords: Vec<f64>,
    ) -> Result<Self> {
        let dim = manifold.embedding_dim();
        if coords.len() % dim != 0 {
            return Err(invalid(format!(
                "coordinate buffer length {} is not a multiple of {dim}",
                coords.len()
            )));
        }
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            if !manifold.contains(p) {
                return Err(invalid(format!("point {i} = {p:?} is not on {}", manifold.name())));
            }
        }
        Ok(Self {
            manifold,
            density,
            seed,
            coords,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.manifold.embedding_dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Little-endian coordinate bytes, used for content hashing.
    pub fn coord_bytes(&self) -> Vec<u8> {
        self.coords.iter().flat_map(|c| c.to_le_bytes()).collect()
    }
}
