//! Continuum MBO with drift on torus grids.

use std::fmt;
use std::sync::Arc;

use super::grid::{grid_heat_step, GridField};
use crate::error::{invalid, Result};
use crate::manifold::DensitySpec;

pub type DriftFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ContinuumMboConfig {
    pub kappa: f64,
    pub h: f64,
    /// Threshold shift `f`; the scheme keeps `{u ≥ ½ + f √h}`.
    pub drift: Option<DriftFn>,
}

impl fmt::Debug for ContinuumMboConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumMboConfig")
            .field("kappa", &self.kappa)
            .field("h", &self.h)
            .field("drift", &self.drift.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl ContinuumMboConfig {
    pub fn new(kappa: f64, h: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(h > 0.0) || !kappa.is_finite() || !h.is_finite() {
            return Err(invalid(format!("need κ > 0 and h > 0, got κ = {kappa}, h = {h}")));
        }
        Ok(Self { kappa, h, drift: None })
    }

    pub fn with_drift(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.drift = Some(Arc::new(f));
        self
    }

    /// `½ + f(x)√h` at every cell centre.
    fn thresholds(&self, field: &GridField) -> Result<Vec<f64>> {
        let n = field.n;
        let root_h = self.h.sqrt();
        let mut out = vec![0.5; n * n];
        if let Some(f) = &self.drift {
            for i in 0..n {
                for j in 0..n {
                    let v = f(&field.center(i, j));
                    if !v.is_finite() {
                        return Err(invalid("drift must be finite on the grid"));
                    }
                    out[i * n + j] += v * root_h;
                }
            }
        }
        Ok(out)
    }
}

/// One continuum MBO step; returns the new indicator and the diffused field
/// it was thresholded from.
pub fn continuum_mbo_step_with_field(
    field: &GridField,
    config: &ContinuumMboConfig,
    density: &DensitySpec,
) -> Result<(GridField, GridField)> {
    if field.values.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(invalid("continuum MBO expects an indicator field"));
    }
    let u = grid_heat_step(field, config.kappa * config.h, density)?;
    let thr = config.thresholds(field)?;
    let values = u
        .values
        .iter()
        .zip(&thr)
        .map(|(&v, &t)| if v >= t { 1.0 } else { 0.0 })
        .collect();
    Ok((GridField::new(field.side, field.n, values)?, u))
}

/// Diffuse for time `κh` under `Δ_ξ`, then threshold at `½ + f√h` (ties to 1).
pub fn continuum_mbo_step(
    field: &GridField,
    config: &ContinuumMboConfig,
    density: &DensitySpec,
) -> Result<GridField> {
    Ok(continuum_mbo_step_with_field(field, config, density)?.0)
}
