//! Normal displacement of a front after one step of a scheme.

use rayon::prelude::*;

use super::grid::GridField;
use crate::error::{invalid, Result};
use crate::front::{BoundarySample, FrontDescriptor};
use crate::manifold::{ManifoldSpec, PointCloud};
use crate::mbo::ClusterState;

/// The set reached after one step, in one of the representations the
/// schemes produce.
#[derive(Clone, Copy, Debug)]
pub enum AfterSet<'a> {
    /// Grid indicator; a point takes the value of its cell.
    Grid(&'a GridField),
    /// `{u ≥ level}` for a grid field, interpolated bilinearly, which
    /// resolves displacements below one cell.
    Level { field: &'a GridField, level: f64 },
    /// Node labels; a point takes the label of its nearest node.
    Nodes { cloud: &'a PointCloud, state: &'a ClusterState },
    /// A closed-form region.
    Region(&'a FrontDescriptor),
}

impl AfterSet<'_> {
    /// Signed indicator value: positive inside.
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            AfterSet::Grid(g) => g.nearest(x) - 0.5,
            AfterSet::Level { field, level } => field.bilinear(x) - level,
            AfterSet::Nodes { cloud, state } => {
                let m = cloud.manifold;
                let (best, _) = cloud.points().enumerate().fold((0, f64::INFINITY), |acc, (i, p)| {
                    let d = m.kernel_distance(p, &x[..cloud.dim()]);
                    if d < acc.1 {
                        (i, d)
                    } else {
                        acc
                    }
                });
                state.get(best) as f64 - 0.5
            }
            AfterSet::Region(f) => f.signed_distance(x),
        }
    }

    /// Walking step: a quarter of the representation's resolution.
    fn resolution(&self, manifold: &ManifoldSpec) -> f64 {
        match self {
            AfterSet::Grid(g) | AfterSet::Level { field: g, .. } => g.cell(),
            AfterSet::Nodes { cloud, .. } => {
                (cloud.manifold.volume() / cloud.len() as f64).powf(1.0 / cloud.manifold.intrinsic_dim() as f64)
            }
            AfterSet::Region(_) => manifold.injectivity_scale() * 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementReport {
    /// Signed displacement per boundary sample, positive outward;
    /// `±∞` where no crossing was found.
    pub z: Vec<f64>,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Resolution of the after-set representation.
    pub resolution: f64,
}

impl DisplacementReport {
    pub fn is_bounded(&self) -> bool {
        self.max_abs.is_finite()
    }
}

fn displacement_at(before: &FrontDescriptor, after: &AfterSet, s: &BoundarySample, ds: f64) -> f64 {
    let limit = before.manifold.injectivity_scale();
    let at = |t: f64| after.score(&before.walk(s, t)[..before.manifold.embedding_dim()]);
    let inside = at(0.0) >= 0.0;
    // outward if the point is still inside, inward otherwise
    let dir = if inside { 1.0 } else { -1.0 };
    let changed = |v: f64| (v >= 0.0) != inside;
    let mut prev = 0.0;
    let mut t = ds;
    while t <= limit {
        if changed(at(dir * t)) {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if changed(at(dir * mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-12 * limit {
                    break;
                }
            }
            return dir * 0.5 * (lo + hi);
        }
        prev = t;
        t += ds;
    }
    dir * f64::INFINITY
}

/// Walks from `count` boundary points of `before` along the outer normal to
/// the first label change of `after`.
pub fn normal_displacement(
    before: &FrontDescriptor,
    after: &AfterSet,
    count: usize,
) -> Result<DisplacementReport> {
    let samples = before.boundary_samples(count);
    if samples.is_empty() {
        return Err(invalid("front has no boundary to sample"));
    }
    let resolution = after.resolution(&before.manifold);
    let ds = 0.25 * resolution;
    let z: Vec<f64> = samples
        .par_iter()
        .map(|s| displacement_at(before, after, s, ds))
        .collect();
    let max_abs = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean_abs = z.iter().map(|v| v.abs()).sum::<f64>() / z.len() as f64;
    Ok(DisplacementReport {
        z,
        max_abs,
        mean_abs,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::{continuum_mbo_step_with_field, ContinuumMboConfig};
    use crate::manifold::DensitySpec;

    #[test]
    fn own_indicator_has_subcell_displacement() {
        let t = ManifoldSpec::unit_torus();
        let c = FrontDescriptor::circle(t, [0.5, 0.5], 0.25).unwrap();
        let g = GridField::indicator(&c, 128).unwrap();
        let rep = normal_displacement(&c, &AfterSet::Grid(&g), 64).unwrap();
        assert!(rep.max_abs <= g.cell(), "{}", rep.max_abs);
    }

    #[test]
    fn shrunken_circle_is_measured_exactly() {
        let t = ManifoldSpec::unit_torus();
        let c = FrontDescriptor::circle(t, [0.5, 0.5], 0.25).unwrap();
        let d = FrontDescriptor::circle(t, [0.5, 0.5], 0.24).unwrap();
        let rep = normal_displacement(&c, &AfterSet::Region(&d), 32).unwrap();
        assert!(rep.z.iter().all(|z| (z + 0.01).abs() < 1e-9));
    }

    #[test]
    fn one_step_circle_displacement_matches_curvature() {
        let t = ManifoldSpec::unit_torus();
        let c = FrontDescriptor::circle(t, [0.5, 0.5], 0.25).unwrap();
        let f = GridField::indicator(&c, 512).unwrap();
        let cfg = ContinuumMboConfig::new(1.0, 1e-3).unwrap();
        let (_, u) = continuum_mbo_step_with_field(&f, &cfg, &DensitySpec::uniform(t)).unwrap();
        let rep = normal_displacement(&c, &AfterSet::Level { field: &u, level: 0.5 }, 128).unwrap();
        let want = 1e-3 / 0.25;
        assert!(rep.max_abs / want < 1.5 && rep.max_abs / want > 1.0 / 1.5, "{}", rep.max_abs);
    }

    #[test]
    fn empty_after_set_is_unbounded() {
        let t = ManifoldSpec::unit_torus();
        let c = FrontDescriptor::circle(t, [0.5, 0.5], 0.25).unwrap();
        let g = GridField::new(1.0, 16, vec![0.0; 256]).unwrap();
        let rep = normal_displacement(&c, &AfterSet::Grid(&g), 8).unwrap();
        assert!(!rep.is_bounded());
    }

    #[test]
    fn node_labels_on_a_band() {
        let t = ManifoldSpec::unit_torus();
        let band = FrontDescriptor::band(t, 0, 0.3, 0.7).unwrap();
        let cloud = crate::manifold::sample_points(t, DensitySpec::uniform(t), 4000, 3).unwrap();
        let state = crate::mbo::initial_state_from_region(&cloud, &band);
        let rep = normal_displacement(&band, &AfterSet::Nodes { cloud: &cloud, state: &state }, 32).unwrap();
        assert!(rep.max_abs < 3.0 * rep.resolution, "{rep:?}");
    }
}
