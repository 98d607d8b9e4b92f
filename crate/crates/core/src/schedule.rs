//! Admissible exponents and concrete `(K_n, h_n, ε_n)` schedules for the
//! spectrally truncated MBO scheme.
//!
//! Asymptotic relations `≫`/`≪` are realised by a slack `δ` on the exponent
//! of `log n`; logarithms are natural.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{invalid, Error, Result};

/// How `ε_n` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsRule {
    /// `ε_n = c_eps (ln n)^{-(1+δ)β}`, the upper-rate choice.
    Theorem,
    /// `ε_n = c_eps (ln n / n)^{(1−δ)/(k+4)}`, just above the lower rate
    /// needed for kernel consistency; usable at desk scale.
    LowerRate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub k: usize,
    pub s: f64,
    pub q: f64,
    pub c_h: f64,
    pub c_eps: f64,
    pub delta: f64,
    pub eps_rule: EpsRule,
}

impl ScheduleParams {
    pub fn new(k: usize, s: f64, q: f64) -> Result<Self> {
        let p = Self {
            k,
            s,
            q,
            c_h: 1.0,
            c_eps: 1.0,
            delta: 0.1,
            eps_rule: EpsRule::Theorem,
        };
        p.validate()?;
        Ok(p)
    }

    /// Schedule used for desk-scale kernel-error sweeps on the unit torus:
    /// `k = 2, s = ¼, q = 2` (so `α = ½`), `c_h = 0.2`, `c_eps = 0.18` with
    /// the lower-rate `ε` rule.
    pub fn desk() -> Self {
        Self {
            k: 2,
            s: 0.25,
            q: 2.0,
            c_h: 0.2,
            c_eps: 0.18,
            delta: 0.1,
            eps_rule: EpsRule::LowerRate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.k) {
            return Err(invalid(format!("k must be 2 or 3, got {}", self.k)));
        }
        if !(self.q > 0.0) || !(self.c_h > 0.0) || !(self.c_eps > 0.0) {
            return Err(invalid("q, c_h and c_eps must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("slack δ must lie in (0,1), got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// `1 / (2/k − s)`, or `None` when `s` is outside `(0, 2/k)`.
    pub q_boundary: Option<f64>,
    pub report: String,
}

/// `0 < s < 2/k` and `q > 1/(2/k − s)`.
pub fn check_admissible(k: usize, s: f64, q: f64) -> Admissibility {
    let two_k = 2.0 / k as f64;
    let region = format!(
        "admissible region in the (s, q) plane: 0 < s < {two_k:.4} and q above the hyperbola q = 1/({two_k:.4} − s)"
    );
    if !(s > 0.0 && s < two_k) {
        return Admissibility {
            admissible: false,
            q_boundary: None,
            report: format!("s = {s} outside (0, 2/k) = (0, {two_k:.4}); {region}"),
        };
    }
    let boundary = 1.0 / (two_k - s);
    let admissible = q > boundary;
    Admissibility {
        admissible,
        q_boundary: Some(boundary),
        report: format!(
            "q = {q} {} boundary {boundary:.6}; {region}",
            if admissible { ">" } else { "<=" }
        ),
    }
}

/// `α = −1 + 2q/k − sq`, `β = −½ + 4q + 13q/k − sq/2`.
pub fn exponents(k: usize, s: f64, q: f64) -> Result<(f64, f64)> {
    let adm = check_admissible(k, s, q);
    if !adm.admissible {
        return Err(Error::Inadmissible {
            k,
            s,
            q,
            reason: adm.report,
        });
    }
    let kf = k as f64;
    let alpha = -1.0 + 2.0 * q / kf - s * q;
    let beta = -0.5 + 4.0 * q + 13.0 * q / kf - s * q / 2.0;
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::Inadmissible {
            k,
            s,
            q,
            reason: format!("negative exponent (α = {alpha}, β = {beta})"),
        });
    }
    Ok((alpha, beta))
}

/// Exponent of `(ln n / n)` in the lower bound on `ε_n` that makes the graph
/// spectra converge: `1/8` for `k = 2`, `1/k` for `k ≥ 3`.
pub fn eps_lower_exponent_theorem(k: usize) -> f64 {
    if k == 2 {
        1.0 / 8.0
    } else {
        1.0 / k as f64
    }
}

/// Exponent `1/(k+4)` of the kernel-consistency lower bound.
pub fn eps_lower_exponent_corollary(k: usize) -> f64 {
    1.0 / (k as f64 + 4.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOutput {
    pub n: usize,
    pub k_n: usize,
    /// `(ln n)^q` before rounding and clamping to `n`.
    pub k_raw: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub h: f64,
    pub eps: f64,
    pub eps_lower_theorem: f64,
    pub eps_lower_corollary: f64,
    pub feasible: bool,
    pub clamped: bool,
    /// `n ε^{k+4}`, the argument of the first exponential in the failure
    /// probability (unknown constant omitted).
    pub exp_arg_eps: f64,
    /// `n / (ln n)^{2q}`, the argument of the second one.
    pub exp_arg_k: Option<f64>,
}

fn lower_bounds(k: usize, n: usize) -> (f64, f64) {
    let ratio = (n as f64).ln() / n as f64;
    (
        ratio.powf(eps_lower_exponent_theorem(k)),
        ratio.powf(eps_lower_exponent_corollary(k)),
    )
}

pub fn schedule_for_n(params: &ScheduleParams, n: usize) -> Result<ScheduleOutput> {
    params.validate()?;
    if n < 3 {
        return Err(invalid(format!("need n >= 3 so that ln n > 1, got {n}")));
    }
    let (alpha, beta) = exponents(params.k, params.s, params.q)?;
    let ln = (n as f64).ln();
    let k_raw = ln.powf(params.q);
    let clamped = k_raw.ceil() > n as f64;
    let k_n = if clamped { n } else { (k_raw.ceil() as usize).max(1) };
    let h = params.c_h * ln.powf(-(1.0 - params.delta) * alpha);
    let eps = match params.eps_rule {
        EpsRule::Theorem => params.c_eps * ln.powf(-(1.0 + params.delta) * beta),
        EpsRule::LowerRate => {
            params.c_eps
                * (ln / n as f64).powf((1.0 - params.delta) * eps_lower_exponent_corollary(params.k))
        }
    };
    let (lb_thm, lb_cor) = lower_bounds(params.k, n);
    Ok(ScheduleOutput {
        n,
        k_n,
        k_raw: Some(k_raw),
        alpha: Some(alpha),
        beta: Some(beta),
        h,
        eps,
        eps_lower_theorem: lb_thm,
        eps_lower_corollary: lb_cor,
        feasible: lb_thm.max(lb_cor) < eps,
        clamped,
        exp_arg_eps: n as f64 * eps.powi(params.k as i32 + 4),
        exp_arg_k: Some(n as f64 / ln.powf(2.0 * params.q)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PracticalReport {
    pub output: ScheduleOutput,
    pub checks: Vec<InequalityCheck>,
    /// `ε ≤ h^{3/2}` and `ε` above both lower bounds.
    pub proven_regime: bool,
    /// `h ≥ ε²` (no pinning) and expected degree `n |B_ε| / Vol ≥ ln n` on a
    /// unit-volume `k`-manifold.
    pub practical_regime: bool,
}

impl PracticalReport {
    pub fn summary(&self) -> &'static str {
        match (self.proven_regime, self.practical_regime) {
            (true, true) => "inside proven regime, inside practical regime",
            (true, false) => "inside proven regime, outside practical regime",
            (false, true) => "outside proven regime, inside practical regime",
            (false, false) => "outside proven regime, outside practical regime",
        }
    }
}

/// Wraps hand-picked values and reports which of the theoretical inequalities
/// they satisfy.
pub fn practical_override(k: usize, n: usize, eps: f64, h: f64, k_n: usize) -> Result<PracticalReport> {
    if !(eps > 0.0) || !(h > 0.0) || n < 3 || k_n == 0 {
        return Err(invalid("ε, h, n and K must be positive (n >= 3)"));
    }
    if k_n > n {
        return Err(invalid(format!("K = {k_n} exceeds n = {n}")));
    }
    if !(1..=3).contains(&k) {
        return Err(invalid(format!("intrinsic dimension must be 1..=3, got {k}")));
    }
    let (lb_thm, lb_cor) = lower_bounds(k, n);
    let ln = (n as f64).ln();
    let check = |name: &str, lhs: f64, rhs: f64, satisfied: bool| InequalityCheck {
        name: name.into(),
        lhs,
        rhs,
        satisfied,
    };
    let unit_ball = match k {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 / 3.0 * std::f64::consts::PI,
    };
    let degree = n as f64 * unit_ball * eps.powi(k as i32);
    let checks = vec![
        check("eps <= h^(3/2)", eps, h.powf(1.5), eps <= h.powf(1.5)),
        check("eps < h", eps, h, eps < h),
        check("eps > (ln n/n)^(thm exponent)", eps, lb_thm, eps > lb_thm),
        check("eps > (ln n/n)^(1/(k+4))", eps, lb_cor, eps > lb_cor),
        check("h >= eps^2 (no pinning)", h, eps * eps, h >= eps * eps),
        check("expected degree >= ln n", degree, ln, degree >= ln),
    ];
    let proven_regime = checks[0].satisfied && checks[2].satisfied && checks[3].satisfied;
    let practical_regime = checks[4].satisfied && checks[5].satisfied;
    Ok(PracticalReport {
        output: ScheduleOutput {
            n,
            k_n,
            k_raw: None,
            alpha: None,
            beta: None,
            h,
            eps,
            eps_lower_theorem: lb_thm,
            eps_lower_corollary: lb_cor,
            feasible: lb_thm.max(lb_cor) < eps,
            clamped: false,
            exp_arg_eps: n as f64 * eps.powi(k as i32 + 4),
            exp_arg_k: None,
        },
        checks,
        proven_regime,
        practical_regime,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Writes `n,K,alpha,beta,h,eps,eps_lb_thm,eps_lb_cor,feasible,clamped`.
pub fn write_schedule_csv<W: Write>(rows: &[ScheduleOutput], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n", "K", "alpha", "beta", "h", "eps", "eps_lb_thm", "eps_lb_cor", "feasible", "clamped",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.k_n.to_string(),
            opt(r.alpha),
            opt(r.beta),
            format!("{:?}", r.h),
            format!("{:?}", r.eps),
            format!("{:?}", r.eps_lower_theorem),
            format!("{:?}", r.eps_lower_corollary),
            r.feasible.to_string(),
            r.clamped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
