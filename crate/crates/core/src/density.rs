//! Four-moment approximate predictive distributions: the second-order
//! Edgeworth expansion around the normal and the Johnson SU family fitted by
//! moment matching.

use statrs::function::erf::{erf_inv, erfc};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::moments_forward::MomentSet;

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal quantile: an inverse-error-function start polished by
/// Newton steps on the distribution function, which also repairs the
/// precision lost in `2q − 1` for small `q`.
pub fn std_normal_quantile(q: f64) -> f64 {
    if !(q > 0.0 && q < 1.0) {
        return if q == 0.0 { f64::NEG_INFINITY } else if q == 1.0 { f64::INFINITY } else { f64::NAN };
    }
    let mut z = SQRT_2 * erf_inv(2.0 * q - 1.0);
    for _ in 0..3 {
        let step = (std_normal_cdf(z) - q) / std_normal_pdf(z);
        if !step.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Probabilists' Hermite polynomials `He_2 … He_6` at `z`.
fn hermite(z: f64) -> [f64; 7] {
    let mut he = [0.0; 7];
    he[0] = 1.0;
    he[1] = z;
    for k in 1..6 {
        he[k + 1] = z * he[k] - k as f64 * he[k - 1];
    }
    he
}

/// Half-width of the standardized range scanned for negative densities.
const MONOTONE_SCAN_HALF_WIDTH: f64 = 8.0;
/// Step of the negativity scan.
const MONOTONE_SCAN_STEP: f64 = 1e-3;

/// Second-order Edgeworth expansion applied to the standardized variable
/// `z = (x − mean)/std`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeworthApprox {
    pub mean: f64,
    pub std: f64,
    /// Skewness of the target.
    pub skew: f64,
    /// Kurtosis minus 3.
    pub excess_kurtosis: f64,
    /// Whether the density is non-negative on `[−8, 8]` in standardized
    /// units, so that the cdf is monotone there.
    pub monotone: bool,
}

impl EdgeworthApprox {
    /// Expansion matching the given moments.
    pub fn new(m: &MomentSet) -> Result<Self> {
        if !(m.variance > 0.0) || !m.variance.is_finite() {
            return Err(Error::DegenerateDistribution(format!("variance {} is not positive", m.variance)));
        }
        let mut a = EdgeworthApprox {
            mean: m.mean,
            std: m.variance.sqrt(),
            skew: m.skewness,
            excess_kurtosis: m.kurtosis - 3.0,
            monotone: true,
        };
        let steps = (2.0 * MONOTONE_SCAN_HALF_WIDTH / MONOTONE_SCAN_STEP).round() as usize;
        a.monotone = (0..=steps)
            .map(|i| -MONOTONE_SCAN_HALF_WIDTH + i as f64 * MONOTONE_SCAN_STEP)
            .all(|z| a.standardized_pdf(z) >= 0.0);
        Ok(a)
    }

    /// Density of the standardized variable.
    pub fn standardized_pdf(&self, z: f64) -> f64 {
        let he = hermite(z);
        let t = self.skew;
        std_normal_pdf(z)
            * (1.0 + t / 6.0 * he[3] + self.excess_kurtosis / 24.0 * he[4] + t * t / 72.0 * he[6])
    }

    /// Distribution function of the standardized variable.
    pub fn standardized_cdf(&self, z: f64) -> f64 {
        let he = hermite(z);
        let t = self.skew;
        std_normal_cdf(z)
            - std_normal_pdf(z) * (t / 6.0 * he[2] + self.excess_kurtosis / 24.0 * he[3] + t * t / 72.0 * he[5])
    }

    /// Density at `x`, possibly negative.
    pub fn pdf(&self, x: f64) -> f64 {
        self.standardized_pdf((x - self.mean) / self.std) / self.std
    }

    /// Distribution function at `x`, possibly outside `[0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.standardized_cdf((x - self.mean) / self.std)
    }
}

/// Johnson SU parameters: `γ + δ·asinh((x − ξ)/λ)` is standard normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JohnsonSuParams {
    pub gamma_j: f64,
    pub delta: f64,
    pub xi: f64,
    pub lambda_j: f64,
}

/// Central moments of `Y = sinh(Z/δ − Ω)`, `Ω = γ/δ`: mean, variance,
/// skewness and kurtosis.
fn su_standard_moments(delta: f64, omega: f64) -> (f64, f64, f64, f64) {
    let wm1 = (1.0 / (delta * delta)).exp_m1();
    let w = 1.0 + wm1;
    let sw = w.sqrt();
    let mean = -sw * omega.sinh();
    let var = 0.5 * wm1 * (w * (2.0 * omega).cosh() + 1.0);
    let mu3 = -0.25 * sw * wm1 * wm1 * (w * (w + 2.0) * (3.0 * omega).sinh() + 3.0 * omega.sinh());
    let mu4 = 0.125
        * wm1
        * wm1
        * (w * w * (w.powi(4) + 2.0 * w.powi(3) + 3.0 * w * w - 3.0) * (4.0 * omega).cosh()
            + 4.0 * w * w * (w + 2.0) * (2.0 * omega).cosh()
            + 3.0 * (2.0 * w + 1.0));
    (mean, var, mu3 / var.powf(1.5), mu4 / (var * var))
}

impl JohnsonSuParams {
    /// Distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf(self.gamma_j + self.delta * ((x - self.xi) / self.lambda_j).asinh())
    }

    /// Density.
    pub fn pdf(&self, x: f64) -> f64 {
        let u = (x - self.xi) / self.lambda_j;
        let z = self.gamma_j + self.delta * u.asinh();
        self.delta / (self.lambda_j * (1.0 + u * u).sqrt()) * std_normal_pdf(z)
    }

    /// Exact inverse of [`JohnsonSuParams::cdf`] for `q ∈ (0, 1)`.
    pub fn quantile(&self, q: f64) -> f64 {
        self.xi + self.lambda_j * ((std_normal_quantile(q) - self.gamma_j) / self.delta).sinh()
    }

    /// Mean, variance, skewness and kurtosis implied by the parameters.
    pub fn moments(&self) -> MomentSet {
        let (m, v, s, k) = su_standard_moments(self.delta, self.gamma_j / self.delta);
        MomentSet {
            mean: self.xi + self.lambda_j * m,
            variance: self.lambda_j * self.lambda_j * v,
            skewness: s,
            kurtosis: k,
        }
    }
}

/// Iteration cap of the one-dimensional moment-matching solve.
pub const SU_MAX_ITERATIONS: usize = 200;
/// Relative step tolerance on `w = exp(1/δ²)`. The implied moments depend
/// on `w − 1`, which is tiny near the normal, so the step must be far
/// below the 1e-12 target accuracy of the moments.
pub const SU_TOLERANCE: f64 = 1e-15;

/// Kurtosis of the lognormal with `w = exp(σ²)`, the lower SU boundary.
fn lognormal_kurtosis(w: f64) -> f64 {
    w.powi(4) + 2.0 * w.powi(3) + 3.0 * w * w - 3.0
}

/// Root in `w > 1` of a strictly increasing function on a bracket, by
/// Newton steps safeguarded with bisection.
fn solve_increasing<F>(mut lo: f64, mut hi: f64, f: F) -> Option<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..SU_MAX_ITERATIONS {
        let (v, d) = f(x);
        if v == 0.0 {
            return Some(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= SU_TOLERANCE * x || hi - lo <= SU_TOLERANCE * x {
            return Some(next);
        }
        x = next;
    }
    None
}

/// Fits Johnson SU parameters to a mean, variance, skewness and kurtosis.
///
/// ```
/// use gjr_moments::density::johnson_su_fit;
/// use gjr_moments::moments_forward::MomentSet;
/// let p = johnson_su_fit(&MomentSet { mean: 0.0, variance: 1.0, skewness: 0.0, kurtosis: 4.0 }).unwrap();
/// assert_eq!(p.gamma_j, 0.0);
/// assert!((p.moments().kurtosis - 4.0).abs() < 1e-8);
/// ```
pub fn johnson_su_fit(m: &MomentSet) -> Result<JohnsonSuParams> {
    let infeasible = |detail: String| Error::InfeasibleMoments { skewness: m.skewness, kurtosis: m.kurtosis, detail };
    if !(m.variance > 0.0) || !m.variance.is_finite() {
        return Err(infeasible(format!("variance {} is not positive", m.variance)));
    }
    if !m.skewness.is_finite() || !m.kurtosis.is_finite() {
        return Err(infeasible("moments are not finite".into()));
    }
    let b1 = m.skewness * m.skewness;
    let b2 = m.kurtosis;
    if !(b2 > 3.0) {
        return Err(infeasible("excess kurtosis must be positive".into()));
    }
    // Symmetric end of the feasible range of w.
    let w_sym = (-1.0 + (2.0 * (b2 - 1.0)).sqrt()).sqrt();
    // Lognormal end: the skewness there is the largest SU can reach.
    let w_logn = solve_increasing(1.0, w_sym.max(2.0), |w| {
        (lognormal_kurtosis(w) - b2, 4.0 * w.powi(3) + 6.0 * w * w + 6.0 * w)
    })
    .ok_or_else(|| infeasible("lognormal boundary search failed".into()))?;

    let m_of = |w: f64| -> (f64, f64) {
        let den = w * w + 2.0 * w + 3.0;
        let arg = (4.0 + 2.0 * (w * w - (b2 + 3.0) / den)).max(0.0);
        let root = arg.sqrt();
        let darg = 2.0 * (2.0 * w + (b2 + 3.0) * (2.0 * w + 2.0) / (den * den));
        (-2.0 + root, darg / (2.0 * root))
    };
    // Squared skewness implied by w, decreasing from the lognormal end to
    // zero at the symmetric end.
    let b1_of = |w: f64| -> (f64, f64) {
        let (mm, dm) = m_of(w);
        let a = w - 1.0 - mm;
        let b = w + 2.0 + 0.5 * mm;
        (a * b * b, (1.0 - dm) * b * b + a * 2.0 * b * (1.0 + 0.5 * dm))
    };
    let b1_max = b1_of(w_logn).0;
    if b1 >= b1_max {
        return Err(infeasible(format!(
            "squared skewness {b1} is not below the lognormal bound {b1_max} for this kurtosis"
        )));
    }
    let w = if b1 == 0.0 {
        w_sym
    } else {
        solve_increasing(w_logn, w_sym, |w| {
            let (v, d) = b1_of(w);
            (b1 - v, -d)
        })
        .ok_or_else(|| infeasible("moment-matching iteration did not converge".into()))?
    };
    let (mm, _) = m_of(w);
    let omega = if b1 == 0.0 {
        0.0
    } else {
        let s2 = ((w + 1.0) * (w - 1.0 - mm) / (2.0 * w * mm)).max(0.0);
        -m.skewness.signum() * s2.sqrt().asinh()
    };
    let delta = 1.0 / w.ln().sqrt();
    let (y_mean, y_var, _, _) = su_standard_moments(delta, omega);
    let lambda_j = (m.variance / y_var).sqrt();
    let xi = m.mean - lambda_j * y_mean;
    Ok(JohnsonSuParams { gamma_j: omega * delta, delta, xi, lambda_j })
}

/// Which approximation to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Edgeworth,
    JohnsonSu,
    /// Johnson SU, falling back to Edgeworth when no SU distribution exists.
    Auto,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edgeworth" => Ok(Method::Edgeworth),
            "johnson_su" => Ok(Method::JohnsonSu),
            "auto" => Ok(Method::Auto),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

/// One of the two approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistApprox {
    Edgeworth(EdgeworthApprox),
    JohnsonSu(JohnsonSuParams),
}

impl DistApprox {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistApprox::Edgeworth(a) => a.cdf(x),
            DistApprox::JohnsonSu(p) => p.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            DistApprox::Edgeworth(a) => a.pdf(x),
            DistApprox::JohnsonSu(p) => p.pdf(x),
        }
    }

    /// False only for an Edgeworth density that turns negative.
    pub fn is_monotone(&self) -> bool {
        match self {
            DistApprox::Edgeworth(a) => a.monotone,
            DistApprox::JohnsonSu(_) => true,
        }
    }
}

/// An approximation together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub dist: DistApprox,
    /// Set when `Auto` had to fall back to Edgeworth; holds the SU failure.
    pub fallback_reason: Option<Error>,
}

/// Builds the approximation requested by `method`.
pub fn approximate_distribution(m: &MomentSet, method: Method) -> Result<Approximation> {
    match method {
        Method::Edgeworth => Ok(Approximation { dist: DistApprox::Edgeworth(EdgeworthApprox::new(m)?), fallback_reason: None }),
        Method::JohnsonSu => Ok(Approximation { dist: DistApprox::JohnsonSu(johnson_su_fit(m)?), fallback_reason: None }),
        Method::Auto => match johnson_su_fit(m) {
            Ok(p) => Ok(Approximation { dist: DistApprox::JohnsonSu(p), fallback_reason: None }),
            Err(e @ Error::InfeasibleMoments { .. }) => Ok(Approximation {
                dist: DistApprox::Edgeworth(EdgeworthApprox::new(m)?),
                fallback_reason: Some(e),
            }),
            Err(e) => Err(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(mean: f64, variance: f64, skewness: f64, kurtosis: f64) -> MomentSet {
        MomentSet { mean, variance, skewness, kurtosis }
    }

    #[test]
    fn hermite_values_at_zero() {
        let he = hermite(0.0);
        assert_eq!(he[6], -15.0);
        assert_eq!(he[4], 3.0);
        assert_eq!(he[3], 0.0);
    }

    #[test]
    fn edgeworth_skew_only_at_origin() {
        let a = EdgeworthApprox::new(&ms(0.0, 1.0, 0.5, 3.0)).unwrap();
        let expected = std_normal_pdf(0.0) * (1.0 - 15.0 * 0.25 / 72.0);
        assert!((a.pdf(0.0) - expected).abs() < 1e-16);
    }

    #[test]
    fn edgeworth_flags_negative_density() {
        assert!(EdgeworthApprox::new(&ms(0.0, 1.0, 0.0, 3.5)).unwrap().monotone);
        assert!(!EdgeworthApprox::new(&ms(0.0, 1.0, 1.5, 3.0)).unwrap().monotone);
    }

    #[test]
    fn su_round_trip_asymmetric() {
        for &(s, k) in &[(0.5, 4.0), (-1.0, 6.0), (0.2, 3.5), (-0.05, 3.01)] {
            let p = johnson_su_fit(&ms(0.1, 2.0, s, k)).unwrap();
            let back = p.moments();
            assert!((back.mean - 0.1).abs() < 1e-10, "{back:?}");
            assert!((back.variance / 2.0 - 1.0).abs() < 1e-10, "{back:?}");
            assert!((back.skewness - s).abs() < 1e-9 * s.abs().max(1.0), "{back:?}");
            assert!((back.kurtosis - k).abs() < 1e-9 * k, "{back:?}");
        }
    }

    #[test]
    fn su_near_normal() {
        let p = johnson_su_fit(&ms(0.0, 1.0, 0.0, 3.0001)).unwrap();
        assert!(p.delta > 50.0);
        assert!((p.moments().kurtosis - 3.0001).abs() < 1e-8);
    }

    #[test]
    fn su_infeasible_regions() {
        assert!(matches!(johnson_su_fit(&ms(0.0, 1.0, 2.0, 4.0)), Err(Error::InfeasibleMoments { .. })));
        assert!(matches!(johnson_su_fit(&ms(0.0, 1.0, 0.0, 2.5)), Err(Error::InfeasibleMoments { .. })));
    }

    #[test]
    fn su_quantile_inverts_cdf() {
        let p = johnson_su_fit(&ms(0.0, 1.0, -0.7, 5.0)).unwrap();
        for &q in &[0.001, 0.025, 0.5, 0.9, 0.999] {
            assert!((p.cdf(p.quantile(q)) - q).abs() < 1e-12);
        }
        assert!((p.cdf(p.xi) - std_normal_cdf(p.gamma_j)).abs() < 1e-15);
    }

    #[test]
    fn auto_falls_back_at_zero_excess_kurtosis() {
        let a = approximate_distribution(&ms(0.0, 1.0, 0.0, 3.0), Method::Auto).unwrap();
        assert!(a.fallback_reason.is_some());
        assert_eq!(a.dist.pdf(0.3), std_normal_pdf(0.3));
        assert!(approximate_distribution(&ms(0.0, 1.0, 0.0, 2.9), Method::JohnsonSu).is_err());
    }
}
