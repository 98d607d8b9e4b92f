//! Closed-form and ODE references for the weighted mean-curvature flow.

use crate::error::{invalid, Error, Result};
use crate::front::{FrontDescriptor, FrontKind};
use crate::manifold::{DensitySpec, ManifoldSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrontState {
    Alive(FrontDescriptor),
    /// The region has vanished before the requested time.
    Extinct,
}

impl FrontState {
    pub fn descriptor(&self) -> Option<&FrontDescriptor> {
        match self {
            FrontState::Alive(d) => Some(d),
            FrontState::Extinct => None,
        }
    }
}

/// Time at which the analytic flow of `front` makes it disappear, if it does.
pub fn extinction_time(front: &FrontDescriptor, kappa: f64) -> Option<f64> {
    match front.kind {
        FrontKind::Circle { radius, .. } => Some(radius * radius / (2.0 * kappa)),
        FrontKind::Cap { theta0 } if theta0.cos() > 0.0 => Some(-theta0.cos().ln() / kappa),
        FrontKind::Empty => Some(0.0),
        _ => None,
    }
}

/// Exact mean-curvature flow `V = κ H` of a disc, band or cap at time `t`
/// (uniform density only).
///
/// Discs follow `r² = r₀² − 2κt`, caps `cos θ = cos θ₀ e^{κt}`, bands stay put.
/// A cap wider than a hemisphere grows until it covers the sphere.
pub fn analytic_front(
    front: &FrontDescriptor,
    density: &DensitySpec,
    kappa: f64,
    t: f64,
) -> Result<FrontState> {
    if !density.is_uniform() {
        return Err(Error::Unsupported(
            "closed-form fronts exist only for the uniform density; use drift_front_ode".into(),
        ));
    }
    if !(kappa > 0.0) || !(t >= 0.0) {
        return Err(invalid(format!("need κ > 0 and t ≥ 0, got κ = {kappa}, t = {t}")));
    }
    let state = match front.kind {
        FrontKind::Circle { center, radius } => {
            let r2 = radius * radius - 2.0 * kappa * t;
            if r2 <= 0.0 {
                FrontState::Extinct
            } else {
                FrontState::Alive(FrontDescriptor::circle(front.manifold, center, r2.sqrt())?)
            }
        }
        FrontKind::Cap { theta0 } => {
            let c = theta0.cos() * (kappa * t).exp();
            if c >= 1.0 {
                FrontState::Extinct
            } else if c <= -1.0 {
                FrontState::Alive(FrontDescriptor::whole(ManifoldSpec::Sphere))
            } else {
                FrontState::Alive(FrontDescriptor::cap(c.acos())?)
            }
        }
        FrontKind::Empty => FrontState::Extinct,
        FrontKind::Band { .. } | FrontKind::Whole => FrontState::Alive(*front),
    };
    Ok(state)
}

/// Position at time `t` of a flat front `{x_axis = a₀}` moving by
/// `da/dt = −κ ∂_axis log ξ(a)`, integrated with adaptive Dormand–Prince
/// steps (relative tolerance `1e-10`).
pub fn drift_front_ode(a0: f64, density: &DensitySpec, kappa: f64, t: f64) -> Result<f64> {
    if !matches!(density.manifold, ManifoldSpec::FlatTorus { .. }) {
        return Err(Error::Unsupported("drift fronts are defined on the torus".into()));
    }
    if !(t >= 0.0) || !a0.is_finite() {
        return Err(invalid("need finite a₀ and t ≥ 0"));
    }
    let f = |a: f64| -kappa * density.log_xi_derivative_1d(a);
    dormand_prince(f, a0, t, 1e-10)
}

/// Scalar Dormand–Prince 5(4) with standard step-size control.
pub fn dormand_prince(f: impl Fn(f64) -> f64, y0: f64, t_end: f64, tol: f64) -> Result<f64> {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    // fifth-order weights minus embedded fourth-order weights
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
    if t_end == 0.0 {
        return Ok(y0);
    }
    let mut t = 0.0;
    let mut y = y0;
    let mut dt = (t_end / 100.0).min(1e-3).max(t_end * 1e-12);
    let mut k = [0.0; 7];
    k[0] = f(y);
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > 10_000_000 {
            return Err(invalid("ODE integration exceeded the step budget"));
        }
        dt = dt.min(t_end - t);
        for s in 0..6 {
            let incr: f64 = (0..=s).map(|j| C[s][j] * k[j]).sum();
            k[s + 1] = f(y + dt * incr);
        }
        let y_new = y + dt * (0..6).map(|j| C[5][j] * k[j]).sum::<f64>();
        let err = dt * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let scale = tol * (1.0 + y.abs().max(y_new.abs()));
        let ratio = err.abs() / scale;
        if ratio <= 1.0 {
            t += dt;
            y = y_new;
            k[0] = k[6];
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        dt *= factor;
    }
    Ok(y)
}
