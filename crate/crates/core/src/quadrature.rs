//! Double-exponential quadrature for smooth integrands on finite intervals
//! and on half-lines.
//!
//! Finite intervals use the tanh-sinh map, half-lines the exp-sinh map. Both
//! refine by halving the step of the trapezoid rule in the transformed
//! variable, reusing all previous abscissae, until two successive levels agree
//! to the requested relative tolerance.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// Largest refinement level; the step in the transformed variable is `2^-level`.
const MAX_LEVEL: u32 = 14;
/// Levels below this are always computed before the stopping test is trusted.
const MIN_LEVEL: u32 = 3;
/// Truncation of the transformed variable for finite intervals.
const T_FINITE: f64 = 4.0;
/// Truncation of the transformed variable for half-lines.
const T_HALF_LINE: f64 = 4.5;

/// Integrates `f` over the finite interval `[a, b]`.
///
/// The integrand is never evaluated at the end points, so integrable end
/// point singularities are tolerated.
///
/// ```
/// use gjr_moments::quadrature::integrate;
/// let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
/// assert!((v - 2.0).abs() < 1e-12);
/// ```
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, rel_tol).map(|v| -v);
    }
    let half = 0.5 * (b - a);
    let term = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        // Distance from the nearer end point, computed without cancellation.
        let d = (b - a) / (1.0 + (2.0 * u.abs()).exp());
        if d == 0.0 {
            return 0.0;
        }
        let x = if u >= 0.0 { b - d } else { a + d };
        let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
        if w == 0.0 {
            return 0.0;
        }
        w * f(x)
    };
    trapezoid_levels(term, T_FINITE, rel_tol)
}

/// Integrates `f` over `[0, ∞)`.
///
/// ```
/// use gjr_moments::quadrature::integrate_half_line;
/// let v = integrate_half_line(|x| (-x).exp(), 1e-12).unwrap();
/// assert!((v - 1.0).abs() < 1e-12);
/// ```
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    let term = |t: f64| -> f64 {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        if x == 0.0 || !x.is_finite() {
            return 0.0;
        }
        let w = x * FRAC_PI_2 * t.cosh();
        let fx = f(x);
        if fx == 0.0 {
            0.0
        } else {
            w * fx
        }
    };
    trapezoid_levels(term, T_HALF_LINE, rel_tol)
}

/// Integrates `f` over `(-∞, 0]`.
pub fn integrate_negative_half_line<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    integrate_half_line(|x| f(-x), rel_tol)
}

/// Integrates `f` over the real line as the sum of the two half-lines.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    Ok(integrate_negative_half_line(&f, rel_tol)? + integrate_half_line(&f, rel_tol)?)
}

/// Trapezoid sums of `term` on `[-t_max, t_max]` with successively halved steps.
fn trapezoid_levels<G: Fn(f64) -> f64>(term: G, t_max: f64, rel_tol: f64) -> Result<f64> {
    let mut h = 1.0_f64;
    let mut sum = term(0.0);
    let mut k = 1.0;
    while k * h <= t_max {
        sum += term(k * h) + term(-k * h);
        k += 1.0;
    }
    let mut estimate = h * sum;
    check_finite(estimate)?;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut added = 0.0;
        let mut j = 1.0;
        while j * h <= t_max {
            added += term(j * h) + term(-j * h);
            j += 2.0;
        }
        sum += added;
        let next = h * sum;
        check_finite(next)?;
        let delta = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVEL && delta <= rel_tol * estimate.abs().max(f64::MIN_POSITIVE) {
            return Ok(estimate);
        }
        if level >= MIN_LEVEL && estimate == 0.0 && delta == 0.0 {
            return Ok(0.0);
        }
    }
    Err(Error::QuadratureFailure(format!(
        "relative tolerance {rel_tol:e} not reached after {MAX_LEVEL} refinements (estimate {estimate:e})"
    )))
}

fn check_finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::QuadratureFailure("integrand produced a non-finite value".into()))
    }
}
