//! Standardized innovation distributions: moments up to order eight, the
//! distribution function at zero, lower partial moments, the density and a
//! sampler.
//!
//! Two families have closed forms (normal and standardized Student-t); any
//! other zero-mean, unit-variance density can be supplied as a closure and is
//! handled by quadrature.

use crate::error::{Error, Result};
use crate::quadrature;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Highest supported moment order.
pub const MAX_MOMENT_ORDER: u32 = 8;

/// Relative tolerance of every quadrature performed for generic densities.
pub const GENERIC_QUADRATURE_TOL: f64 = 1e-10;

/// Tolerance on the standardization of a user-supplied density.
pub const STANDARDIZATION_TOL: f64 = 1e-9;

/// A zero-mean, unit-variance innovation distribution.
#[derive(Clone)]
pub enum Innovation {
    /// Standard normal.
    Normal,
    /// Student-t with `nu` degrees of freedom, rescaled to unit variance.
    /// `nu` is the degrees-of-freedom parameter of the unscaled t.
    StudentT { nu: f64 },
    /// Arbitrary standardized density evaluated numerically.
    Generic(GenericDensity),
}

impl fmt::Debug for Innovation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Innovation::Normal => write!(f, "Normal"),
            Innovation::StudentT { nu } => write!(f, "StudentT {{ nu: {nu} }}"),
            Innovation::Generic(g) => write!(f, "Generic {{ cdf_at_zero: {} }}", g.cdf_at_zero),
        }
    }
}

/// Density supplied as a closure, with every quantity the moment formulas
/// need computed once at construction.
#[derive(Clone)]
pub struct GenericDensity {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    moments: [Option<f64>; MAX_MOMENT_ORDER as usize],
    cdf_at_zero: f64,
    lower3: Option<f64>,
    lower5: Option<f64>,
    inverse_cdf: Option<Arc<InverseCdfTable>>,
}

/// Piecewise-linear inverse of a tabulated distribution function.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    x: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfTable {
    fn quantile(&self, u: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c < u);
        if idx == 0 {
            return self.x[0];
        }
        if idx >= self.cdf.len() {
            return self.x[self.x.len() - 1];
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (x0, x1) = (self.x[idx - 1], self.x[idx]);
        if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x0
        }
    }
}

impl Innovation {
    /// Standard normal innovation.
    pub fn normal() -> Self {
        Innovation::Normal
    }

    /// Standardized Student-t innovation; `nu` must exceed 2.
    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::InvalidParams(format!(
                "Student-t degrees of freedom must be finite and exceed 2, got {nu}"
            )));
        }
        Ok(Innovation::StudentT { nu })
    }

    /// Innovation defined by a standardized density.
    ///
    /// Moments, the distribution function at zero and the lower partial
    /// moments are integrated once here. Moments whose integrals do not
    /// converge are recorded as undefined and reported when requested.
    ///
    /// ```
    /// use gjr_moments::innovation::Innovation;
    /// let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    /// let inn = Innovation::generic(phi).unwrap();
    /// assert!((inn.moment(4).unwrap() - 3.0).abs() < 1e-9);
    /// assert!((inn.cdf_at_zero().unwrap() - 0.5).abs() < 1e-10);
    /// ```
    pub fn generic<F>(density: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let density: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(density);
        let tol = GENERIC_QUADRATURE_TOL;
        let lower_mass = quadrature::integrate_negative_half_line(|x| density(x), tol)?;
        let upper_mass = quadrature::integrate_half_line(|x| density(x), tol)?;
        let mass = lower_mass + upper_mass;
        if (mass - 1.0).abs() > STANDARDIZATION_TOL {
            return Err(Error::InvalidParams(format!("density integrates to {mass}, not 1")));
        }
        let raw_moment = |k: i32| -> Option<f64> {
            let lo = quadrature::integrate_negative_half_line(|x| x.powi(k) * density(x), tol).ok()?;
            let hi = quadrature::integrate_half_line(|x| x.powi(k) * density(x), tol).ok()?;
            Some(lo + hi)
        };
        let mut moments = [None; MAX_MOMENT_ORDER as usize];
        for (i, slot) in moments.iter_mut().enumerate() {
            *slot = raw_moment(i as i32 + 1);
        }
        let mean = moments[0].ok_or_else(|| Error::QuadratureFailure("first moment".into()))?;
        let second = moments[1].ok_or_else(|| Error::QuadratureFailure("second moment".into()))?;
        if mean.abs() > STANDARDIZATION_TOL || (second - 1.0).abs() > STANDARDIZATION_TOL {
            return Err(Error::InvalidParams(format!(
                "density is not standardized: mean {mean}, second moment {second}"
            )));
        }
        let lower = |k: i32| quadrature::integrate_negative_half_line(|x| x.powi(k) * density(x), tol).ok();
        let cdf_at_zero = lower_mass;
        if !(cdf_at_zero > 0.0 && cdf_at_zero < 1.0) {
            return Err(Error::InvalidParams(format!("distribution function at zero is {cdf_at_zero}")));
        }
        Ok(Innovation::Generic(GenericDensity {
            lower3: lower(3),
            lower5: lower(5),
            density,
            moments,
            cdf_at_zero,
            inverse_cdf: None,
        }))
    }

    /// Attaches an inverse-CDF table on `points` equally spaced nodes of
    /// `[lo, hi]` so that a generic density can be sampled. Other kinds are
    /// returned unchanged.
    pub fn with_inverse_cdf_table(self, lo: f64, hi: f64, points: usize) -> Result<Self> {
        match self {
            Innovation::Generic(mut g) => {
                if !(hi > lo) || points < 3 {
                    return Err(Error::InvalidParams("inverse-CDF grid needs hi > lo and at least 3 points".into()));
                }
                let step = (hi - lo) / (points - 1) as f64;
                let base = quadrature::integrate_negative_half_line(|x| (g.density)(x + lo), GENERIC_QUADRATURE_TOL)?;
                let mut x = Vec::with_capacity(points);
                let mut cdf = Vec::with_capacity(points);
                let mut acc = base;
                let mut prev = lo;
                x.push(lo);
                cdf.push(acc);
                for i in 1..points {
                    let xi = lo + step * i as f64;
                    // Simpson's rule on each cell.
                    let m = 0.5 * (prev + xi);
                    acc += step / 6.0 * ((g.density)(prev) + 4.0 * (g.density)(m) + (g.density)(xi));
                    x.push(xi);
                    cdf.push(acc);
                    prev = xi;
                }
                g.inverse_cdf = Some(Arc::new(InverseCdfTable { x, cdf }));
                Ok(Innovation::Generic(g))
            }
            other => Ok(other),
        }
    }

    /// Raw moment `E[z^i]` for `i` in `1..=8`.
    pub fn moment(&self, i: u32) -> Result<f64> {
        if i == 0 || i > MAX_MOMENT_ORDER {
            return Err(Error::UndefinedMoment {
                order: i,
                detail: format!("supported orders are 1..={MAX_MOMENT_ORDER}"),
            });
        }
        match self {
            Innovation::Normal => Ok(if i % 2 == 1 { 0.0 } else { double_factorial_odd(i / 2) }),
            Innovation::StudentT { nu } => {
                if *nu <= i as f64 {
                    return Err(Error::UndefinedMoment {
                        order: i,
                        detail: format!("Student-t with nu = {nu} has moments only below order nu"),
                    });
                }
                if i % 2 == 1 {
                    return Ok(0.0);
                }
                // E[z^{2r}] = prod_{k=1}^{r} (2k-1)(nu-2)/(nu-2k)
                let r = i / 2;
                Ok((1..=r).fold(1.0, |acc, k| {
                    let k = k as f64;
                    acc * (2.0 * k - 1.0) * (nu - 2.0) / (nu - 2.0 * k)
                }))
            }
            Innovation::Generic(g) => g.moments[(i - 1) as usize].ok_or_else(|| {
                Error::QuadratureFailure(format!("moment of order {i} did not converge"))
            }),
        }
    }

    /// Skewness `E[z^3]`.
    pub fn skewness(&self) -> Result<f64> {
        self.moment(3)
    }

    /// Kurtosis `E[z^4]`.
    pub fn kurtosis(&self) -> Result<f64> {
        self.moment(4)
    }

    /// Distribution function evaluated at zero.
    pub fn cdf_at_zero(&self) -> Result<f64> {
        match self {
            Innovation::Normal | Innovation::StudentT { .. } => Ok(0.5),
            Innovation::Generic(g) => Ok(g.cdf_at_zero),
        }
    }

    /// Lower partial moment `∫_{-∞}^0 x^k f(x) dx` for `k` in `{3, 5}`.
    pub fn lower_partial_moment(&self, k: u32) -> Result<f64> {
        if k != 3 && k != 5 {
            return Err(Error::UndefinedMoment {
                order: k,
                detail: "lower partial moments are provided for orders 3 and 5".into(),
            });
        }
        match self {
            Innovation::Normal => {
                let base = (2.0 / PI).sqrt();
                Ok(if k == 3 { -base } else { -4.0 * base })
            }
            Innovation::StudentT { nu } => {
                let nu = *nu;
                if nu <= k as f64 {
                    return Err(Error::UndefinedMoment {
                        order: k,
                        detail: format!("Student-t with nu = {nu} has moments only below order nu"),
                    });
                }
                let ratio = (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp();
                let a = nu - 2.0;
                let v = if k == 3 {
                    2.0 * a.powf(1.5) / ((nu - 1.0) * (nu - 3.0))
                } else {
                    8.0 * a.powf(2.5) / ((nu - 1.0) * (nu - 3.0) * (nu - 5.0))
                };
                Ok(-v * ratio / PI.sqrt())
            }
            Innovation::Generic(g) => {
                let v = if k == 3 { g.lower3 } else { g.lower5 };
                v.ok_or_else(|| Error::QuadratureFailure(format!("lower partial moment of order {k} did not converge")))
            }
        }
    }

    /// Probability density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Innovation::Normal => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Innovation::StudentT { nu } => {
                let nu = *nu;
                let a = nu - 2.0;
                let log_c = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (a * PI).ln();
                (log_c - 0.5 * (nu + 1.0) * (1.0 + x * x / a).ln()).exp()
            }
            Innovation::Generic(g) => (g.density)(x),
        }
    }

    /// Builds a reusable sampler. Fails for a generic density without an
    /// inverse-CDF table.
    pub fn sampler(&self) -> Result<InnovationSampler> {
        match self {
            Innovation::Normal => Ok(InnovationSampler::Normal),
            Innovation::StudentT { nu } => {
                let dist = rand_distr::StudentT::new(*nu)
                    .map_err(|e| Error::InvalidParams(format!("Student-t sampler: {e}")))?;
                Ok(InnovationSampler::StudentT { dist, scale: ((nu - 2.0) / nu).sqrt() })
            }
            Innovation::Generic(g) => match &g.inverse_cdf {
                Some(t) => Ok(InnovationSampler::Table(Arc::clone(t))),
                None => Err(Error::GenericSamplingUnsupported),
            },
        }
    }

    /// Draws one standardized innovation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sampler()?.sample(rng))
    }

    /// True for the two symmetric closed-form families.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, Innovation::Normal | Innovation::StudentT { .. })
    }
}

/// Draws standardized innovations; build once with [`Innovation::sampler`].
#[derive(Debug, Clone)]
pub enum InnovationSampler {
    Normal,
    StudentT { dist: rand_distr::StudentT<f64>, scale: f64 },
    Table(Arc<InverseCdfTable>),
}

impl InnovationSampler {
    /// One standardized draw.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationSampler::Normal => StandardNormal.sample(rng),
            InnovationSampler::StudentT { dist, scale } => dist.sample(rng) * scale,
            InnovationSampler::Table(t) => {
                let u: f64 = rng.random();
                t.quantile(u)
            }
        }
    }
}

/// `(2r-1)!! = 1·3·5···(2r-1)`, exact in floating point for the orders used here.
fn double_factorial_odd(r: u32) -> f64 {
    (1..=r).fold(1.0, |acc, k| acc * (2 * k - 1) as f64)
}
