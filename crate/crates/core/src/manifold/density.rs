use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::ManifoldSpec;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum DensityForm {
    Uniform,
    /// Torus: `1 + a cos(2π x_axis / L)`. Sphere: `1 + a x_axis` (cosine of
    /// the angle to the axis). `axis` is zero-based.
    CosinePerturbed { axis: usize, amplitude: f64 },
}

/// Probability density `ρ` with respect to the Riemannian volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub manifold: ManifoldSpec,
    pub form: DensityForm,
    /// Constant `c` with `ρ = c · (shape)` and `∫ ρ dVol = 1`.
    pub normalization: f64,
}

impl DensitySpec {
    pub fn uniform(manifold: ManifoldSpec) -> Self {
        Self {
            manifold,
            form: DensityForm::Uniform,
            normalization: 1.0 / manifold.volume(),
        }
    }

    pub fn cosine(manifold: ManifoldSpec, axis: usize, amplitude: f64) -> Result<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(invalid(format!(
                "cosine amplitude must satisfy |a| < 1, got {amplitude}"
            )));
        }
        if axis >= manifold.embedding_dim() {
            return Err(invalid(format!(
                "axis {axis} out of range for {}",
                manifold.name()
            )));
        }
        // Both shapes integrate to the volume: the cosine term has zero mean.
        Ok(Self {
            manifold,
            form: DensityForm::CosinePerturbed { axis, amplitude },
            normalization: 1.0 / manifold.volume(),
        })
    }

    pub fn new(manifold: ManifoldSpec, form: DensityForm) -> Result<Self> {
        match form {
            DensityForm::Uniform => Ok(Self::uniform(manifold)),
            DensityForm::CosinePerturbed { axis, amplitude } => {
                Self::cosine(manifold, axis, amplitude)
            }
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.form, DensityForm::Uniform)
    }

    pub fn name(&self) -> String {
        match self.form {
            DensityForm::Uniform => "uniform".into(),
            DensityForm::CosinePerturbed { axis, amplitude } => {
                format!("cosine(axis={axis},a={amplitude})")
            }
        }
    }

    /// Unnormalised profile and its phase argument.
    #[inline]
    fn shape(&self, x: &[f64]) -> f64 {
        match self.form {
            DensityForm::Uniform => 1.0,
            DensityForm::CosinePerturbed { axis, amplitude } => match self.manifold {
                ManifoldSpec::FlatTorus { side } => {
                    1.0 + amplitude * (2.0 * PI * x[axis] / side).cos()
                }
                ManifoldSpec::Sphere => 1.0 + amplitude * x[axis],
            },
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.normalization * self.shape(x)
    }

    /// Weight `ξ = ρ²` of the limiting weighted Laplacian.
    pub fn xi(&self, x: &[f64]) -> f64 {
        let r = self.value(x);
        r * r
    }

    pub fn max_value(&self) -> f64 {
        match self.form {
            DensityForm::Uniform => self.normalization,
            DensityForm::CosinePerturbed { amplitude, .. } => {
                self.normalization * (1.0 + amplitude.abs())
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        match self.form {
            DensityForm::Uniform => self.normalization,
            DensityForm::CosinePerturbed { amplitude, .. } => {
                self.normalization * (1.0 - amplitude.abs())
            }
        }
    }

    /// Tangential gradient of `log ξ = 2 log ρ`, padded to three components.
    pub fn grad_log_xi(&self, x: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        if let DensityForm::CosinePerturbed { axis, amplitude } = self.form {
            let s = self.shape(x);
            match self.manifold {
                ManifoldSpec::FlatTorus { side } => {
                    let k = 2.0 * PI / side;
                    g[axis] = 2.0 * (-amplitude * k * (k * x[axis]).sin()) / s;
                }
                ManifoldSpec::Sphere => {
                    // tangential part of a e_axis
                    for (c, gc) in g.iter_mut().enumerate() {
                        let e = if c == axis { 1.0 } else { 0.0 };
                        *gc = 2.0 * amplitude * (e - x[axis] * x[c]) / s;
                    }
                }
            }
        }
        g
    }

    /// `∂ log ξ / ∂x_axis` for an axis-aligned torus density, as a function of
    /// the single coordinate. Zero for the uniform density.
    pub fn log_xi_derivative_1d(&self, coordinate: f64) -> f64 {
        match (self.form, self.manifold) {
            (DensityForm::CosinePerturbed { amplitude, .. }, ManifoldSpec::FlatTorus { side }) => {
                let k = 2.0 * PI / side;
                -2.0 * amplitude * k * (k * coordinate).sin()
                    / (1.0 + amplitude * (k * coordinate).cos())
            }
            _ => 0.0,
        }
    }

    /// Axis of a cosine perturbation, if any.
    pub fn axis(&self) -> Option<usize> {
        match self.form {
            DensityForm::CosinePerturbed { axis, .. } => Some(axis),
            DensityForm::Uniform => None,
        }
    }
}
