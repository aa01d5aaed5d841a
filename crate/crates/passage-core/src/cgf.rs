//! Generating functions of the multiplier A, characteristic roots, the
//! large-deviation rate function, and large-time regime diagnostics.
//!
//! Throughout, `cgf` denotes the cumulant generating function
//! Λ(α) = log E[A^α] of log A, `mean` its derivative μ(α) (the drift of
//! log A under the α-tilted measure) and `variance` the second derivative
//! σ²(α). The characteristic root ξ is the nonzero solution of Λ(ξ) = 0
//! governing the power-law tail of the stationary maximum, and
//! ρ = 1/μ(ξ) is the time constant at which the scaled first passage time
//! concentrates.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{BLaw, BoundedB, Family, PairLaw};
use crate::numerics::{
    adaptive_simpson, derivative, golden_min, newton_bracketed, second_derivative,
};

/// Largest tilt exponent magnitude probed when bracketing roots and slopes.
const PROBE_CAP: f64 = 1_073_741_824.0; // 2^30

/// Requested relative tolerance for quadrature-backed evaluation. The
/// integrator aims well below the 1e-10 acceptance threshold so that
/// finite differences on top of it stay quiet.
const QUAD_TOL: f64 = 1e-13;
const QUAD_ACCEPT: f64 = 1e-10;

/// Point evaluation of the generating functions and their derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfProfile {
    pub alpha: f64,
    /// λ(α) = E[A^α]; may overflow to infinity while `cgf` stays finite.
    pub moment: f64,
    /// Λ(α) = log λ(α).
    pub cgf: f64,
    /// λ_B(α) = E[|B|^α].
    pub moment_b: f64,
    /// Λ_B(α) = log λ_B(α).
    pub cgf_b: f64,
    /// μ(α) = Λ'(α).
    pub mean: f64,
    /// σ²(α) = Λ''(α).
    pub variance: f64,
    pub in_domain: bool,
}

/// Time regime of a horizon τ relative to the concentration constant ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    SmallTime,
    Critical,
    LargeTime,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::SmallTime => "small_time",
            Regime::Critical => "critical",
            Regime::LargeTime => "large_time",
        }
    }
}

/// The root, time constant, tilt point and decay exponent for one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSummary {
    pub xi: f64,
    /// ρ = 1/μ(ξ).
    pub rho: f64,
    pub tau: f64,
    /// α(τ), the tilt solving μ(α) = 1/τ.
    pub alpha: f64,
    /// I(τ) = α(τ) - τ Λ(α(τ)).
    pub rate: f64,
    pub regime: Regime,
}

/// Diagnostics for the large-time regime dichotomy: whether the drift
/// condition μ(0) > Λ(α(τ)) holds (slower-than-rate decay possible), or a
/// witness β with Λ(β) < Λ(α(τ)) exists (geometric interval bounds apply).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    /// 1/μ(α); not a passage horizon when μ(α) ≤ 0.
    pub tau: f64,
    pub alpha: f64,
    /// True when τ > ρ, the regime this report describes.
    pub applicable: bool,
    /// μ(0) - Λ(α).
    pub count1_gap: f64,
    pub count1_holds: bool,
    pub count2_witness: Option<f64>,
    pub count2_holds: bool,
    /// Largest value of q(β)·(μ(α)(α-β) + μ(0) - Λ(α)) over β ∈ (α, ξ)
    /// with q(β) = 1 - μ(α)/μ(β); falls back to the β→α inner expression
    /// (the count1 gap) when the maximization is not defined.
    pub exponent_gap: f64,
    /// ϱ = λ(α), the geometric factor of the interval bound.
    pub varrho: f64,
}

/// Evaluate λ, Λ, λ_B, Λ_B, μ and σ² at one exponent.
///
/// Closed-form families evaluate analytically; the bounded-density family
/// integrates by adaptive quadrature and differentiates Λ by central
/// differences with Richardson extrapolation.
pub fn cgf_profile(law: &PairLaw, alpha: f64) -> Result<CgfProfile> {
    if alpha == 0.0 {
        // Normalization is pinned exactly: λ(0) = 1, Λ(0) = 0.
        return Ok(CgfProfile {
            alpha,
            moment: 1.0,
            cgf: 0.0,
            moment_b: 1.0,
            cgf_b: 0.0,
            mean: law.e_log_a(),
            variance: law.var_log_a(),
            in_domain: true,
        });
    }
    let (cgf, mean, variance) = cgf_a(law, alpha)?;
    let cgf_b = cgf_abs_b(law, alpha);
    Ok(CgfProfile {
        alpha,
        moment: cgf.exp(),
        cgf,
        moment_b: cgf_b.exp(),
        cgf_b,
        mean,
        variance,
        in_domain: cgf.is_finite(),
    })
}

fn cgf_a(law: &PairLaw, alpha: f64) -> Result<(f64, f64, f64)> {
    match law.family() {
        Family::LognormalA { mean, var, .. } => Ok((
            alpha * mean + 0.5 * alpha * alpha * var,
            mean + alpha * var,
            *var,
        )),
        Family::TwoPointA { a1, a2, p1, p2, .. } => {
            Ok(atomic_cgf(&[(*a1, *p1), (*a2, *p2)], alpha))
        }
        Family::Table { atoms } => {
            let pairs: Vec<(f64, f64)> = atoms.iter().map(|t| (t.a, t.p)).collect();
            Ok(atomic_cgf(&pairs, alpha))
        }
        Family::UniformA { lo, hi, .. } => {
            let cgf = uniform_log_moment(*lo, *hi, alpha)?;
            let f = |x: f64| uniform_log_moment(*lo, *hi, x).unwrap_or(f64::NAN);
            let h = (1e-6 * alpha.abs()).max(1e-6);
            let mean = derivative(&f, alpha, h);
            let h2 = 1e-3 * alpha.abs().max(1.0);
            let variance = second_derivative(&f, alpha, h2).max(0.0);
            Ok((cgf, mean, variance))
        }
    }
}

/// Log-sum-exp evaluation of log Σ pᵢ aᵢ^α together with the tilted mean
/// and variance of log A.
fn atomic_cgf(atoms: &[(f64, f64)], alpha: f64) -> (f64, f64, f64) {
    let mut shift = f64::NEG_INFINITY;
    for &(a, p) in atoms {
        if p > 0.0 {
            shift = shift.max(alpha * a.ln());
        }
    }
    let mut z = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for &(a, p) in atoms {
        if p > 0.0 {
            let l = a.ln();
            let w = p * (alpha * l - shift).exp();
            z += w;
            m1 += w * l;
            m2 += w * l * l;
        }
    }
    let mean = m1 / z;
    (shift + z.ln(), mean, (m2 / z - mean * mean).max(0.0))
}

/// log E[A^α] for A uniform on [lo, hi], by quadrature anchored at the
/// dominating endpoint so the integrand stays in [0, 1].
fn uniform_log_moment(lo: f64, hi: f64, alpha: f64) -> Result<f64> {
    let anchor = if alpha >= 0.0 { hi } else { lo };
    let log_anchor = anchor.ln();
    let f = |a: f64| (alpha * (a.ln() - log_anchor)).exp();
    let q = adaptive_simpson(&f, lo, hi, QUAD_TOL);
    if q.achieved > QUAD_ACCEPT {
        return Err(Error::Quadrature {
            requested: QUAD_ACCEPT,
            achieved: q.achieved,
        });
    }
    Ok(alpha * log_anchor + (q.value / (hi - lo)).ln())
}

fn cgf_abs_b(law: &PairLaw, alpha: f64) -> f64 {
    fn const_b(v: f64, alpha: f64) -> f64 {
        alpha * v.abs().ln()
    }
    match law.family() {
        Family::LognormalA {
            b: BLaw::Const(v), ..
        } => const_b(*v, alpha),
        Family::LognormalA {
            b: BLaw::Lognormal { mean, var },
            ..
        } => alpha * mean + 0.5 * alpha * alpha * var,
        Family::TwoPointA { b, .. } => const_b(*b, alpha),
        Family::UniformA {
            b: BoundedB::Const(v),
            ..
        } => const_b(*v, alpha),
        Family::UniformA {
            b: BoundedB::Uniform { lo, hi },
            ..
        } => uniform_abs_moment(*lo, *hi, alpha).ln(),
        Family::Table { atoms } => {
            // log Σ pᵢ |bᵢ|^α; atoms at b = 0 kill negative exponents.
            let mut shift = f64::NEG_INFINITY;
            for t in atoms {
                if t.p > 0.0 {
                    let c = if t.b == 0.0 {
                        if alpha < 0.0 {
                            return f64::INFINITY;
                        }
                        f64::NEG_INFINITY
                    } else {
                        alpha * t.b.abs().ln()
                    };
                    shift = shift.max(c);
                }
            }
            let z: f64 = atoms
                .iter()
                .filter(|t| t.p > 0.0 && t.b != 0.0)
                .map(|t| t.p * (alpha * t.b.abs().ln() - shift).exp())
                .sum();
            shift + z.ln()
        }
    }
}

/// E[|B|^α] for B uniform on [lo, hi], by the power-law primitive on each
/// sign region.
fn uniform_abs_moment(lo: f64, hi: f64, alpha: f64) -> f64 {
    let width = hi - lo;
    // integral of t^α over [a, b] with 0 ≤ a < b
    let piece = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        if a == 0.0 && alpha <= -1.0 {
            return f64::INFINITY;
        }
        if alpha == -1.0 {
            (b / a).ln()
        } else {
            (b.powf(alpha + 1.0) - a.powf(alpha + 1.0)) / (alpha + 1.0)
        }
    };
    let pos = if hi > 0.0 {
        piece(lo.max(0.0), hi)
    } else {
        0.0
    };
    let neg = if lo < 0.0 {
        piece((-hi).max(0.0), -lo)
    } else {
        0.0
    };
    (pos + neg) / width
}

fn mean_at(law: &PairLaw, alpha: f64) -> Result<f64> {
    Ok(cgf_profile(law, alpha)?.mean)
}

/// Solve Λ(ξ) = 0 for the nonzero root ξ > 0 by bracketing and
/// safeguarded Newton iteration.
pub fn solve_xi(law: &PairLaw) -> Result<f64> {
    // Λ is convex with Λ(0) = 0; a nonzero root needs negative initial
    // slope and an eventual sign change.
    let mut lo = 1.0;
    while cgf_profile(law, lo)?.cgf >= 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::NoRoot { lo: 1e-12, hi: 1.0 });
        }
    }
    let mut hi = (2.0 * lo).max(1.0);
    while cgf_profile(law, hi)?.cgf <= 0.0 {
        hi *= 2.0;
        if hi > PROBE_CAP {
            return Err(Error::NoRoot { lo, hi: PROBE_CAP });
        }
    }
    let g = |x: f64| cgf_profile(law, x).map(|p| p.cgf).unwrap_or(f64::NAN);
    let dg = |x: f64| cgf_profile(law, x).map(|p| p.mean).unwrap_or(f64::NAN);
    let root = newton_bracketed(
        &g,
        &dg,
        lo,
        hi,
        |_, gx, dgx| gx.abs() <= 1e-15 * dgx.abs().max(1.0),
        200,
    );
    Ok(root)
}

/// Attainable slope interval over the probed exponent domain.
pub fn attainable_slopes(law: &PairLaw) -> Result<(f64, f64)> {
    Ok((mean_at(law, -PROBE_CAP)?, mean_at(law, PROBE_CAP)?))
}

/// Solve μ(α) = slope. μ is increasing by convexity of Λ, so the solution
/// is unique when the slope is attainable.
pub fn solve_slope(law: &PairLaw, slope: f64) -> Result<f64> {
    let mut lo = -1.0;
    let mut hi = 1.0;
    while mean_at(law, hi)? < slope {
        hi *= 2.0;
        if hi > PROBE_CAP {
            return Err(Error::SlopeOutOfRange {
                target: slope,
                attainable: attainable_slopes(law)?,
            });
        }
    }
    while mean_at(law, lo)? > slope {
        lo *= 2.0;
        if lo < -PROBE_CAP {
            return Err(Error::SlopeOutOfRange {
                target: slope,
                attainable: attainable_slopes(law)?,
            });
        }
    }
    let g = |x: f64| {
        cgf_profile(law, x)
            .map(|p| p.mean - slope)
            .unwrap_or(f64::NAN)
    };
    let dg = |x: f64| cgf_profile(law, x).map(|p| p.variance).unwrap_or(f64::NAN);
    Ok(newton_bracketed(
        &g,
        &dg,
        lo,
        hi,
        |_, gx, _| gx.abs() <= 1e-10,
        200,
    ))
}

/// Solve μ(α(τ)) = 1/τ for the tilt point of the horizon τ.
pub fn solve_alpha(law: &PairLaw, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Precondition {
            operation: "solve_alpha",
            detail: format!("horizon must be positive, got {tau}"),
        });
    }
    solve_slope(law, 1.0 / tau)
}

/// Fenchel-Legendre transform Λ*(x) = sup_α (αx - Λ(α)).
///
/// When x is an attainable slope the supremum is solved exactly;
/// otherwise the probed-domain supremum is returned, which is positive
/// infinity when the objective still climbs at the probe boundary.
pub fn legendre(law: &PairLaw, x: f64) -> Result<f64> {
    match solve_slope(law, x) {
        Ok(alpha) => {
            let p = cgf_profile(law, alpha)?;
            Ok((alpha * x - p.cgf).max(0.0))
        }
        Err(Error::SlopeOutOfRange { attainable, .. }) => {
            let (edge, gap) = if x >= attainable.1 {
                (PROBE_CAP, x - attainable.1)
            } else {
                (-PROBE_CAP, attainable.0 - x)
            };
            if gap > 1e-9 {
                return Ok(f64::INFINITY);
            }
            let p = cgf_profile(law, edge)?;
            Ok((edge * x - p.cgf).max(0.0))
        }
        Err(e) => Err(e),
    }
}

/// Rate function I(τ) = α(τ) - τ Λ(α(τ)), cross-checked against the
/// conjugate form τ Λ*(1/τ).
pub fn rate_function(law: &PairLaw, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Precondition {
            operation: "rate_function",
            detail: format!("horizon must be positive, got {tau}"),
        });
    }
    let alpha = solve_alpha(law, tau)?;
    let p = cgf_profile(law, alpha)?;
    let rate = alpha - tau * p.cgf;
    let conjugate = tau * legendre(law, 1.0 / tau)?;
    if (rate - conjugate).abs() > 1e-8 * rate.abs().max(1.0) {
        return Err(Error::CrossCheck {
            operation: "rate_function",
            detail: format!("direct {rate} vs conjugate {conjugate}"),
        });
    }
    Ok(rate)
}

/// Relative tolerance for classifying τ = ρ as critical.
pub const CRITICAL_RTOL: f64 = 1e-9;

/// Half-width of the concentration window of the scaled passage time:
/// L(u) = b √(log log u / log u) with b = ρ(2(ξ+1) + ρσ²(ξ)).
///
/// Conditional on passage, the scaled time falls inside ρ ± L(u) with
/// probability tending to one. The coefficient comes from the sharpest
/// stated form of the window; note that L(u) shrinks very slowly and
/// still exceeds ρ itself for moderate levels (e.g. u = 10^4 on the
/// reference lognormal law), where the window is vacuous.
pub fn concentration_window(law: &PairLaw, u: f64) -> Result<f64> {
    if !(u > core::f64::consts::E) {
        return Err(Error::Precondition {
            operation: "concentration_window",
            detail: format!("level must exceed e so that log log u > 0, got {u}"),
        });
    }
    let xi = solve_xi(law)?;
    let p = cgf_profile(law, xi)?;
    let rho = 1.0 / p.mean;
    let b = rho * (2.0 * (xi + 1.0) + rho * p.variance);
    Ok(b * (u.ln().ln() / u.ln()).sqrt())
}

/// Compute ξ, ρ, α(τ), I(τ) and the regime of τ.
pub fn summarize(law: &PairLaw, tau: f64) -> Result<AsymptoticSummary> {
    let xi = solve_xi(law)?;
    let rho = 1.0 / cgf_profile(law, xi)?.mean;
    let alpha = solve_alpha(law, tau)?;
    let rate = rate_function(law, tau)?;
    let regime = if (tau - rho).abs() <= CRITICAL_RTOL * rho.abs() {
        Regime::Critical
    } else if tau < rho {
        Regime::SmallTime
    } else {
        Regime::LargeTime
    };
    Ok(AsymptoticSummary {
        xi,
        rho,
        tau,
        alpha,
        rate,
        regime,
    })
}

/// Large-time regime diagnostics for the horizon τ. Fields are computed
/// for every τ; `applicable` records whether τ > ρ actually holds.
pub fn regime_report(law: &PairLaw, tau: f64) -> Result<RegimeReport> {
    let summary = summarize(law, tau)?;
    report_at(law, summary.alpha, Some(summary))
}

/// Regime diagnostics with the tilt point fixed directly, for laws probed
/// away from any passage horizon (the scaled families used to realize the
/// drift condition have μ(α) < 0 at the exponent of interest).
pub fn regime_report_at(law: &PairLaw, alpha: f64) -> Result<RegimeReport> {
    report_at(law, alpha, None)
}

fn report_at(
    law: &PairLaw,
    alpha: f64,
    summary: Option<AsymptoticSummary>,
) -> Result<RegimeReport> {
    let p = cgf_profile(law, alpha)?;
    let mu0 = law.e_log_a();
    let count1_gap = mu0 - p.cgf;
    let count1_holds = count1_gap > 0.0;

    // Witness search: minimize Λ over a 1e-3-spaced grid on (0, min(1, α)),
    // refined by golden section around the best grid point.
    let upper = alpha.min(1.0);
    let (count2_witness, count2_holds) = if upper > 1e-3 {
        let step = 1e-3;
        let mut best_x = step;
        let mut best_f = f64::INFINITY;
        let mut beta = step;
        while beta < upper {
            let v = cgf_profile(law, beta)?.cgf;
            if v < best_f {
                best_f = v;
                best_x = beta;
            }
            beta += step;
        }
        let f = |x: f64| cgf_profile(law, x).map(|q| q.cgf).unwrap_or(f64::NAN);
        let lo = (best_x - step).max(step * 0.5);
        let hi = (best_x + step).min(upper - 1e-12);
        let (x, fx) = golden_min(&f, lo, hi, 60);
        if fx < p.cgf && x < upper {
            (Some(x), true)
        } else {
            (None, false)
        }
    } else {
        (None, false)
    };

    let xi: Option<f64> = match summary {
        Some(s) => Some(s.xi),
        None => solve_xi(law).ok(),
    };
    let exponent_gap = match xi {
        Some(xi) if p.mean > 0.0 && alpha > 0.0 && alpha < xi => {
            let mut best = f64::NEG_INFINITY;
            let n = 512;
            for j in 1..n {
                let beta = alpha + (xi - alpha) * j as f64 / n as f64;
                let mu_beta = cgf_profile(law, beta)?.mean;
                let q = 1.0 - p.mean / mu_beta;
                best = best.max(q * (p.mean * (alpha - beta) + count1_gap));
            }
            best
        }
        // β → α limit: q → 0 and the bracketed expression degenerates to
        // the drift gap itself.
        _ => count1_gap,
    };

    let (tau, applicable) = match summary {
        Some(s) => (s.tau, s.regime == Regime::LargeTime),
        None => {
            let tau = 1.0 / p.mean;
            let applicable = match (p.mean > 0.0, xi) {
                (true, Some(xi)) => {
                    let rho = 1.0 / cgf_profile(law, xi)?.mean;
                    tau > rho * (1.0 + CRITICAL_RTOL)
                }
                _ => false,
            };
            (tau, applicable)
        }
    };

    Ok(RegimeReport {
        tau,
        alpha,
        applicable,
        count1_gap,
        count1_holds,
        count2_witness,
        count2_holds,
        exponent_gap,
        varrho: p.cgf.exp(),
    })
}
