//! Shared numerical routines: adaptive quadrature, finite differences with
//! Richardson extrapolation, safeguarded root finding, and the standard
//! normal tail.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated relative error actually achieved.
    pub achieved: f64,
}

/// Adaptive Simpson integration of `f` on `[a, b]`.
///
/// Subdivides until the local Richardson error estimate meets `rel_tol`
/// scaled to the interval's share of the running total. Returns the value
/// together with the achieved relative error; callers enforce their own
/// acceptance threshold.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(1e-300);
    let mut worst = 0.0f64;
    let value = simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, 48, &mut worst);
    Quadrature {
        value,
        achieved: worst / value.abs().max(1e-300),
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 {
            *worst = worst.max(delta.abs());
        }
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
}

/// First derivative by central differences with two Richardson levels.
///
/// `h0` is the base step; the extrapolation combines steps `h0`, `h0/2`,
/// `h0/4` to cancel the O(h^2) and O(h^4) truncation terms.
pub fn derivative<F: Fn(f64) -> f64>(f: &F, x: f64, h0: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let d1 = d(h0);
    let d2 = d(0.5 * h0);
    let d3 = d(0.25 * h0);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Second derivative by the central three-point stencil with one
/// Richardson level.
pub fn second_derivative<F: Fn(f64) -> f64>(f: &F, x: f64, h0: f64) -> f64 {
    let fx = f(x);
    let d = |h: f64| (f(x + h) - 2.0 * fx + f(x - h)) / (h * h);
    let d1 = d(h0);
    let d2 = d(0.5 * h0);
    (4.0 * d2 - d1) / 3.0
}

/// Safeguarded Newton iteration for `g(x) = 0` on a bracket with
/// `g(lo) < 0 < g(hi)` (or the reverse). Newton steps that leave the
/// bracket fall back to bisection.
///
/// `accept` decides convergence from `(x, g(x), g'(x))`.
pub fn newton_bracketed<G, D, A>(
    g: &G,
    dg: &D,
    mut lo: f64,
    mut hi: f64,
    accept: A,
    max_iter: u32,
) -> f64
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    A: Fn(f64, f64, f64) -> bool,
{
    let rising = g(hi) > g(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let gx = g(x);
        let dgx = dg(x);
        if accept(x, gx, dgx) {
            return x;
        }
        let below = if rising { gx < 0.0 } else { gx > 0.0 };
        if below {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - gx / dgx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo).abs() <= 1e-15 * (1.0 + x.abs()) {
            return x;
        }
        x = next;
    }
    x
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, iters: u32) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Upper tail of the standard normal distribution.
///
/// Uses the erf Taylor series for small arguments and the Lentz continued
/// fraction for the complementary function otherwise; accurate to close to
/// machine precision across the full range, including far tails.
pub fn normal_sf(z: f64) -> f64 {
    if z < 0.0 {
        return 1.0 - normal_sf(-z);
    }
    let x = z / core::f64::consts::SQRT_2;
    0.5 * erfc_pos(x)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * core::f64::consts::PI).sqrt()
}

fn erfc_pos(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 1.0 {
        1.0 - erf_series(x)
    } else {
        // erfc(x) = exp(-x^2)/sqrt(pi) * K, K the continued fraction
        // 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), evaluated by
        // modified Lentz.
        let tiny = 1e-300;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / x;
        let mut h = d;
        for k in 1..200 {
            let a = 0.5 * k as f64;
            // convergent step: b = x, a_k = k/2
            d = 1.0 / (x + a * d);
            c = x + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (-x * x).exp() / core::f64::consts::PI.sqrt() * h
    }
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum_{n>=0} (-1)^n x^(2n+1) / (n! (2n+1))
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..80 {
        term *= -x2 / n as f64;
        let contrib = term / (2 * n + 1) as f64;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    core::f64::consts::FRAC_2_SQRT_PI * sum
}

/// Ordinary least squares fit `y = intercept + slope * x`.
///
/// Requires at least two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit {
            detail: alloc::format!("need at least 2 points, got {}", xs.len()),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit {
            detail: alloc::string::String::from("abscissae are all equal"),
        });
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_exp() {
        let q = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((q.value - (core::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_cubic() {
        let f = |x: f64| x * x * x - 2.0 * x;
        assert!((derivative(&f, 1.3, 1e-3) - (3.0 * 1.3 * 1.3 - 2.0)).abs() < 1e-10);
        assert!((second_derivative(&f, 1.3, 1e-3) - 6.0 * 1.3).abs() < 1e-7);
    }

    #[test]
    fn normal_tail_reference_points() {
        // Phi-bar(0) = 1/2, Phi-bar(1.96) ~ 0.0249979, Phi-bar(5) ~ 2.8665e-7.
        assert!((normal_sf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_sf(1.959963984540054) - 0.024999999999999998).abs() < 1e-10);
        assert!((normal_sf(5.0) - 2.8665157187919333e-7).abs() < 1e-15);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: alloc::vec::Vec<f64> = xs.iter().map(|x| 2.5 - 0.5 * x).collect();
        let (slope, intercept) = fit_line(&xs, &ys).unwrap();
        assert!((slope + 0.5).abs() < 1e-12);
        assert!((intercept - 2.5).abs() < 1e-12);
    }
}
