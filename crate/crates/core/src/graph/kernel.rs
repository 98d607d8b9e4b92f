use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Radial profile `η` supported on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelProfile {
    /// `1_{[0,1]}(r)`
    Indicator,
    /// `(1 − r)₊`
    Triangular,
    /// `(1 − r²)₊`
    Quadratic,
}

impl KernelProfile {
    pub fn eval(self, r: f64) -> f64 {
        if !(0.0..=1.0).contains(&r) {
            return 0.0;
        }
        match self {
            Self::Indicator => 1.0,
            Self::Triangular => 1.0 - r,
            Self::Quadratic => 1.0 - r * r,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Indicator => "indicator",
            Self::Triangular => "triangular",
            Self::Quadratic => "quadratic",
        }
    }

    /// `∫₀¹ η(r) r^p dr`
    fn radial_moment(self, p: i32) -> f64 {
        let p = p as f64;
        match self {
            Self::Indicator => 1.0 / (p + 1.0),
            Self::Triangular => 1.0 / ((p + 1.0) * (p + 2.0)),
            Self::Quadratic => 2.0 / ((p + 1.0) * (p + 3.0)),
        }
    }
}

impl std::str::FromStr for KernelProfile {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(Self::Indicator),
            "triangular" => Ok(Self::Triangular),
            "quadratic" => Ok(Self::Quadratic),
            other => Err(invalid(format!("unknown kernel profile `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    /// `∫_{R^k} η(|y|) dy`
    pub c1: f64,
    /// `∫_{R^k} η(|y|) y₁² dy`
    pub c2: f64,
    /// `C₂ / (2 C₁)`, the diffusion-time calibration of the graph Laplacian.
    pub kappa: f64,
}

/// Surface area of the unit sphere `S^{k-1} ⊂ R^k`.
fn sphere_area(k: usize) -> f64 {
    match k {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!(),
    }
}

pub fn kernel_constants(kernel: KernelProfile, k: usize) -> Result<KernelConstants> {
    if !(1..=3).contains(&k) {
        return Err(invalid(format!("kernel constants are tabulated for k in 1..=3, got {k}")));
    }
    let area = sphere_area(k);
    let c1 = area * kernel.radial_moment(k as i32 - 1);
    // by symmetry ∫ y₁² = (1/k) ∫ |y|²
    let c2 = area / k as f64 * kernel.radial_moment(k as i32 + 1);
    Ok(KernelConstants {
        c1,
        c2,
        kappa: c2 / (2.0 * c1),
    })
}
