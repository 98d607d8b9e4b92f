//! Closed-form regions whose boundaries have explicit mean-curvature
//! evolutions: discs on the torus, bands on the torus and polar caps on the
//! sphere.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::manifold::{periodic_delta, wrap, ManifoldSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrontKind {
    /// Geodesic disc on the torus.
    Circle { center: [f64; 2], radius: f64 },
    /// `{a ≤ x_axis ≤ b}` on the torus, `axis` zero-based.
    Band { axis: usize, a: f64, b: f64 },
    /// `{colatitude < θ₀}` around the north pole `(0,0,1)`.
    Cap { theta0: f64 },
    /// The whole manifold (no boundary).
    Whole,
    /// The empty set.
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontDescriptor {
    pub manifold: ManifoldSpec,
    pub kind: FrontKind,
}

/// Point on the boundary together with its unit outer normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

impl FrontDescriptor {
    pub fn circle(manifold: ManifoldSpec, center: [f64; 2], radius: f64) -> Result<Self> {
        let side = manifold
            .side()
            .ok_or_else(|| invalid("circle fronts live on the torus"))?;
        if !(radius > 0.0 && radius < 0.5 * side) {
            return Err(invalid(format!("circle radius must lie in (0, L/2), got {radius}")));
        }
        let mut c = center;
        manifold.project(&mut c);
        Ok(Self {
            manifold,
            kind: FrontKind::Circle { center: c, radius },
        })
    }

    pub fn band(manifold: ManifoldSpec, axis: usize, a: f64, b: f64) -> Result<Self> {
        let side = manifold
            .side()
            .ok_or_else(|| invalid("band fronts live on the torus"))?;
        if axis > 1 {
            return Err(invalid(format!("band axis must be 0 or 1, got {axis}")));
        }
        if !(0.0 <= a && a < b && b < side) {
            return Err(invalid(format!("band needs 0 <= a < b < L, got [{a}, {b}]")));
        }
        Ok(Self {
            manifold,
            kind: FrontKind::Band { axis, a, b },
        })
    }

    pub fn cap(theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < PI) {
            return Err(invalid(format!("cap angle must lie in (0, π), got {theta0}")));
        }
        Ok(Self {
            manifold: ManifoldSpec::Sphere,
            kind: FrontKind::Cap { theta0 },
        })
    }

    pub fn whole(manifold: ManifoldSpec) -> Self {
        Self {
            manifold,
            kind: FrontKind::Whole,
        }
    }

    pub fn empty(manifold: ManifoldSpec) -> Self {
        Self {
            manifold,
            kind: FrontKind::Empty,
        }
    }

    /// `d(x, Ωᶜ) − d(x, Ω)`: positive inside. Infinite for the trivial regions.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match (self.kind, self.manifold) {
            (FrontKind::Whole, _) => f64::INFINITY,
            (FrontKind::Empty, _) => f64::NEG_INFINITY,
            (FrontKind::Circle { center, radius }, ManifoldSpec::FlatTorus { side }) => {
                let dx = periodic_delta(center[0], x[0], side);
                let dy = periodic_delta(center[1], x[1], side);
                // images of the disc are disjoint because r < L/2
                radius - dx.hypot(dy)
            }
            (FrontKind::Band { axis, a, b }, ManifoldSpec::FlatTorus { side }) => {
                let c = x[axis];
                if a <= c && c <= b {
                    (c - a).min(b - c)
                } else {
                    -periodic_delta(c, a, side).abs().min(periodic_delta(c, b, side).abs())
                }
            }
            (FrontKind::Cap { theta0 }, ManifoldSpec::Sphere) => theta0 - colatitude(x),
            _ => unreachable!("front kind and manifold validated at construction"),
        }
    }

    /// Membership with the closed-set convention `sd ≥ 0`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) >= 0.0
    }

    /// Riemannian area of the region.
    pub fn area(&self) -> f64 {
        match (self.kind, self.manifold) {
            (FrontKind::Whole, m) => m.volume(),
            (FrontKind::Empty, _) => 0.0,
            (FrontKind::Circle { radius, .. }, _) => PI * radius * radius,
            (FrontKind::Band { a, b, .. }, ManifoldSpec::FlatTorus { side }) => (b - a) * side,
            (FrontKind::Cap { theta0 }, _) => 2.0 * PI * (1.0 - theta0.cos()),
            _ => unreachable!("front kind and manifold validated at construction"),
        }
    }

    /// Boundary length (perimeter).
    pub fn perimeter(&self) -> f64 {
        match (self.kind, self.manifold) {
            (FrontKind::Whole | FrontKind::Empty, _) => 0.0,
            (FrontKind::Circle { radius, .. }, _) => 2.0 * PI * radius,
            (FrontKind::Band { .. }, ManifoldSpec::FlatTorus { side }) => 2.0 * side,
            (FrontKind::Cap { theta0 }, _) => 2.0 * PI * theta0.sin(),
            _ => unreachable!("front kind and manifold validated at construction"),
        }
    }

    /// Equally spaced boundary points with outer normals (`count` per
    /// boundary component).
    pub fn boundary_samples(&self, count: usize) -> Vec<BoundarySample> {
        let mut out = Vec::new();
        match (self.kind, self.manifold) {
            (FrontKind::Circle { center, radius }, ManifoldSpec::FlatTorus { side }) => {
                for j in 0..count {
                    let a = 2.0 * PI * j as f64 / count as f64;
                    let (s, c) = a.sin_cos();
                    out.push(BoundarySample {
                        point: [wrap(center[0] + radius * c, side), wrap(center[1] + radius * s, side), 0.0],
                        normal: [c, s, 0.0],
                    });
                }
            }
            (FrontKind::Band { axis, a, b }, ManifoldSpec::FlatTorus { side }) => {
                let other = 1 - axis;
                for (edge, sign) in [(a, -1.0), (b, 1.0)] {
                    for j in 0..count {
                        let mut p = [0.0; 3];
                        let mut nrm = [0.0; 3];
                        p[axis] = edge;
                        p[other] = (j as f64 + 0.5) * side / count as f64;
                        nrm[axis] = sign;
                        out.push(BoundarySample { point: p, normal: nrm });
                    }
                }
            }
            (FrontKind::Cap { theta0 }, ManifoldSpec::Sphere) => {
                let (st, ct) = theta0.sin_cos();
                for j in 0..count {
                    let phi = 2.0 * PI * j as f64 / count as f64;
                    let (sp, cp) = phi.sin_cos();
                    out.push(BoundarySample {
                        point: [st * cp, st * sp, ct],
                        // ∂/∂θ points away from the pole
                        normal: [ct * cp, ct * sp, -st],
                    });
                }
            }
            _ => {}
        }
        out
    }

    /// Point reached by moving a signed geodesic distance `s` along `normal`
    /// from `point` (straight line on the torus, great circle on the sphere).
    pub fn walk(&self, sample: &BoundarySample, s: f64) -> [f64; 3] {
        let p = sample.point;
        let v = sample.normal;
        match self.manifold {
            ManifoldSpec::FlatTorus { side } => {
                [wrap(p[0] + s * v[0], side), wrap(p[1] + s * v[1], side), 0.0]
            }
            ManifoldSpec::Sphere => {
                let (sn, cs) = s.sin_cos();
                let mut q = [0.0; 3];
                for c in 0..3 {
                    q[c] = cs * p[c] + sn * v[c];
                }
                q
            }
        }
    }
}

/// Polar angle measured from `(0,0,1)`.
pub fn colatitude(x: &[f64]) -> f64 {
    (x[0] * x[0] + x[1] * x[1]).sqrt().atan2(x[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn signed_distance_examples() {
        let t = ManifoldSpec::unit_torus();
        let c = FrontDescriptor::circle(t, [0.5, 0.5], 0.25).unwrap();
        assert!((c.signed_distance(&[0.5, 0.5]) - 0.25).abs() < 1e-15);
        assert!((c.signed_distance(&[0.5, 0.95]) + 0.2).abs() < 1e-12);
        let cap = FrontDescriptor::cap(PI / 3.0).unwrap();
        let th = PI / 3.0;
        assert!(cap.signed_distance(&[th.sin(), 0.0, th.cos()]).abs() < 1e-14);
        let band = FrontDescriptor::band(t, 0, 0.2, 0.6).unwrap();
        assert!((band.signed_distance(&[0.1, 0.3]) + 0.1).abs() < 1e-15);
        assert!((band.signed_distance(&[0.95, 0.3]) + 0.25).abs() < 1e-12);
        assert!((band.signed_distance(&[0.5, 0.3]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn circle_across_the_seam() {
        let t = ManifoldSpec::unit_torus();
        let c = FrontDescriptor::circle(t, [0.05, 0.0], 0.2).unwrap();
        assert!(c.contains(&[0.95, 0.98]));
        assert!(!c.contains(&[0.5, 0.5]));
    }

    #[test]
    fn boundary_samples_lie_on_front() {
        let t = ManifoldSpec::unit_torus();
        let fronts = [
            FrontDescriptor::circle(t, [0.3, 0.6], 0.2).unwrap(),
            FrontDescriptor::band(t, 1, 0.25, 0.75).unwrap(),
            FrontDescriptor::cap(1.0).unwrap(),
        ];
        for f in fronts {
            let dim = f.manifold.embedding_dim();
            for s in f.boundary_samples(16) {
                assert!(f.signed_distance(&s.point[..dim]).abs() < 1e-12);
                let out = f.walk(&s, 0.01);
                assert!((f.signed_distance(&out[..dim]) + 0.01).abs() < 1e-9);
                let inside = f.walk(&s, -0.01);
                assert!((f.signed_distance(&inside[..dim]) - 0.01).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trivial_regions() {
        let t = ManifoldSpec::unit_torus();
        assert!(FrontDescriptor::whole(t).contains(&[0.2, 0.2]));
        assert!(!FrontDescriptor::empty(t).contains(&[0.2, 0.2]));
        assert!(FrontDescriptor::circle(t, [0.5, 0.5], 0.6).is_err());
        assert!(FrontDescriptor::band(t, 0, 0.6, 0.2).is_err());
        assert!(FrontDescriptor::cap(0.0).is_err());
    }

    proptest! {
        #[test]
        fn circle_signed_distance_is_lipschitz(
            x0 in 0.0..1.0f64, x1 in 0.0..1.0f64, y0 in 0.0..1.0f64, y1 in 0.0..1.0f64,
            r in 0.05..0.45f64,
        ) {
            let t = ManifoldSpec::unit_torus();
            let f = FrontDescriptor::circle(t, [0.4, 0.7], r).unwrap();
            let (x, y) = ([x0, x1], [y0, y1]);
            let lhs = (f.signed_distance(&x) - f.signed_distance(&y)).abs();
            prop_assert!(lhs <= t.geodesic_distance(&x, &y) + 1e-12);
        }

        #[test]
        fn band_signed_distance_is_lipschitz(
            x0 in 0.0..1.0f64, x1 in 0.0..1.0f64, y0 in 0.0..1.0f64, y1 in 0.0..1.0f64,
        ) {
            let t = ManifoldSpec::unit_torus();
            let f = FrontDescriptor::band(t, 0, 0.2, 0.6).unwrap();
            let (x, y) = ([x0, x1], [y0, y1]);
            let lhs = (f.signed_distance(&x) - f.signed_distance(&y)).abs();
            prop_assert!(lhs <= t.geodesic_distance(&x, &y) + 1e-12);
        }

        #[test]
        fn cap_signed_distance_is_lipschitz(
            a in 0.0..PI, b in 0.0..(2.0 * PI), c in 0.0..PI, d in 0.0..(2.0 * PI), th in 0.1..3.0f64,
        ) {
            let s = ManifoldSpec::sphere();
            let f = FrontDescriptor::cap(th).unwrap();
            let x = [a.sin() * b.cos(), a.sin() * b.sin(), a.cos()];
            let y = [c.sin() * d.cos(), c.sin() * d.sin(), c.cos()];
            let lhs = (f.signed_distance(&x) - f.signed_distance(&y)).abs();
            prop_assert!(lhs <= s.geodesic_distance(&x, &y) + 1e-12);
        }
    }
}
