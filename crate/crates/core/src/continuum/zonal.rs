//! Heat flow and MBO for colatitude-only profiles on the unit sphere, in
//! Legendre coefficients of `μ = cos θ`.

use crate::error::{invalid, Result};
use crate::manifold::HEAT_TRUNCATION;
use crate::util::{gauss_legendre, legendre_table};

/// Degree beyond which `e^{-t l(l+1)}` drops below the truncation threshold.
pub fn zonal_degree_cap(t: f64) -> usize {
    let need = -HEAT_TRUNCATION.ln() / t;
    let mut l = 1usize;
    while ((l * (l + 1)) as f64) < need {
        l += 1;
    }
    l
}

/// `(e^{-tΔ} 1_{μ > μ₀})(μ)` from the exact Legendre coefficients of the cap
/// indicator, `c_l = (P_{l-1}(μ₀) − P_{l+1}(μ₀)) / 2`.
pub fn cap_heat(mu0: f64, t: f64, mu: f64) -> f64 {
    let lmax = zonal_degree_cap(t);
    let p0 = legendre_table(lmax + 1, mu0);
    let p = legendre_table(lmax, mu);
    let mut s = 0.5 * (1.0 - mu0);
    for l in 1..=lmax {
        let c = 0.5 * (p0[l - 1] - p0[l + 1]);
        s += c * (-t * (l * (l + 1)) as f64).exp() * p[l];
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZonalCapState {
    /// `{μ > μ₀}`
    Cap { mu0: f64 },
    Extinct,
    Whole,
}

/// One MBO step of the polar cap `{cos θ > μ₀}`: diffuse for `κh`, keep
/// `{u ≥ ½ + f√h}`.
pub fn zonal_cap_mbo_step(mu0: f64, kappa: f64, h: f64, drift: f64) -> Result<ZonalCapState> {
    if !(-1.0..1.0).contains(&mu0) || !(kappa > 0.0) || !(h > 0.0) || !drift.is_finite() {
        return Err(invalid("need μ₀ ∈ [-1, 1), κ > 0, h > 0 and finite drift"));
    }
    let t = kappa * h;
    let level = 0.5 + drift * h.sqrt();
    let g = |mu: f64| cap_heat(mu0, t, mu) - level;
    if g(1.0) < 0.0 {
        return Ok(ZonalCapState::Extinct);
    }
    if g(-1.0) >= 0.0 {
        return Ok(ZonalCapState::Whole);
    }
    // the diffused cap is increasing in μ; locate the crossing from the top
    let scan = 400;
    let mut hi = 1.0;
    let mut lo = -1.0;
    for j in 1..=scan {
        let mu = 1.0 - 2.0 * j as f64 / scan as f64;
        if g(mu) < 0.0 {
            lo = mu;
            break;
        }
        hi = mu;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(ZonalCapState::Cap { mu0: hi })
}

/// Colatitudes of the cap after each MBO step, stopping at extinction.
/// Returns `(θ per step, extinction step if reached)`.
pub fn zonal_cap_mbo_run(
    theta0: f64,
    kappa: f64,
    h: f64,
    max_steps: usize,
) -> Result<(Vec<f64>, Option<usize>)> {
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(invalid("cap angle must lie in (0, π)"));
    }
    let mut thetas = vec![theta0];
    let mut mu = theta0.cos();
    for step in 1..=max_steps {
        match zonal_cap_mbo_step(mu, kappa, h, 0.0)? {
            ZonalCapState::Cap { mu0 } => {
                mu = mu0;
                thetas.push(mu.clamp(-1.0, 1.0).acos());
            }
            ZonalCapState::Extinct => return Ok((thetas, Some(step))),
            ZonalCapState::Whole => {
                thetas.push(std::f64::consts::PI);
                return Ok((thetas, None));
            }
        }
    }
    Ok((thetas, None))
}

/// Zonal profile sampled at Gauss–Legendre nodes in `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonalField {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl ZonalField {
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        let (nodes, weights) = gauss_legendre(m);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self { nodes, weights, values }
    }

    /// Legendre coefficients up to degree `m − 1`.
    pub fn coefficients(&self) -> Vec<f64> {
        let m = self.nodes.len();
        let mut c = vec![0.0; m];
        for ((&x, &w), &v) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let p = legendre_table(m - 1, x);
            for l in 0..m {
                c[l] += w * v * p[l];
            }
        }
        for (l, cl) in c.iter_mut().enumerate() {
            *cl *= (2 * l + 1) as f64 / 2.0;
        }
        c
    }

    pub fn heat(&self, t: f64) -> Self {
        let c = self.coefficients();
        let m = c.len();
        let damped: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(l, v)| v * (-t * (l * (l + 1)) as f64).exp())
            .collect();
        let values = self
            .nodes
            .iter()
            .map(|&x| {
                let p = legendre_table(m - 1, x);
                damped.iter().zip(&p).map(|(a, b)| a * b).sum()
            })
            .collect();
        Self {
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            values,
        }
    }

    /// `∫ u dμ`, proportional to the surface integral of the profile.
    pub fn mass(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }
}
