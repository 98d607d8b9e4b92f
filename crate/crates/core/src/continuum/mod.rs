//! Continuum references: weighted heat flow on torus grids, continuum MBO,
//! closed-form and ODE front evolutions, displacement measurement and the
//! consistency probe.

mod displacement;
mod dynamics;
mod fronts;
mod grid;
mod probe;
mod zonal;

use std::path::Path;

use crate::error::Result;

pub use displacement::{normal_displacement, AfterSet, DisplacementReport};
pub use dynamics::{continuum_mbo_step, continuum_mbo_step_with_field, ContinuumMboConfig, DriftFn};
pub use fronts::{analytic_front, dormand_prince, drift_front_ode, extinction_time, FrontState};
pub use grid::{crank_nicolson_heat, fft_heat, grid_heat_step, CrankNicolson, GridField};
pub use probe::{consistency_probe, probe_rhs, write_probe_csv, LevelSet, ProbeOptions, ProbeRow};
pub use zonal::{
    cap_heat, zonal_cap_mbo_run, zonal_cap_mbo_step, zonal_degree_cap, ZonalCapState, ZonalField,
};

/// Writes `h,max_z,mean_z`.
pub fn write_displacement_csv(rows: &[(f64, DisplacementReport)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["h", "max_z", "mean_z"])?;
    for (h, r) in rows {
        w.write_record([*h, r.max_abs, r.mean_abs].map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}
