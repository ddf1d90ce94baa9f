//! Infinite-horizon limits of the moment term structures, classified by
//! parameter region.
//!
//! Infinite limits are kept symbolic, together with the region that produced
//! them, so reports can state the case rather than print `inf`.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{nearly_equal, DerivedConstants};

/// A limit value: finite, `+∞` or `−∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitValue {
    Finite(f64),
    PosInf,
    NegInf,
}

impl LimitValue {
    /// `sgn(x)·∞` with the convention `sgn(0)·∞ = 0`.
    pub fn signed_infinity(x: f64) -> Self {
        if x > 0.0 {
            LimitValue::PosInf
        } else if x < 0.0 {
            LimitValue::NegInf
        } else {
            LimitValue::Finite(0.0)
        }
    }

    /// The value as a float, with infinities mapped to `±inf`.
    pub fn as_f64(&self) -> f64 {
        match self {
            LimitValue::Finite(v) => *v,
            LimitValue::PosInf => f64::INFINITY,
            LimitValue::NegInf => f64::NEG_INFINITY,
        }
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            LimitValue::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for LimitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitValue::Finite(v) => write!(f, "{v:.11e}"),
            LimitValue::PosInf => f.write_str("+inf"),
            LimitValue::NegInf => f.write_str("-inf"),
        }
    }
}

/// The parameter region a limit was evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `φ ∈ (0,1)`, no further condition.
    Stationary,
    GammaBelowOne,
    GammaOne,
    GammaAboveOne,
    GammaAtLeastOne,
    GammaBelowOneC4BelowOne,
    GammaBelowOneC4AtLeastOne,
    GammaBelowOneC4AboveOne,
    GammaBelowOneC4One,
    GammaAtLeastOneC4BelowGamma32,
    GammaOneC4AboveOne,
    GammaAboveOneC4EqGamma32,
    GammaAboveOneC4AboveGamma32,
}

impl Region {
    /// Short label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            Region::Stationary => "phi<1",
            Region::GammaBelowOne => "gamma<1",
            Region::GammaOne => "gamma=1",
            Region::GammaAboveOne => "gamma>1",
            Region::GammaAtLeastOne => "gamma>=1",
            Region::GammaBelowOneC4BelowOne => "gamma<1 & c4<1",
            Region::GammaBelowOneC4AtLeastOne => "gamma<1 & c4>=1",
            Region::GammaBelowOneC4AboveOne => "gamma<1 & c4>1",
            Region::GammaBelowOneC4One => "gamma<1 & c4=1",
            Region::GammaAtLeastOneC4BelowGamma32 => "gamma>=1 & c4<gamma^{3/2}",
            Region::GammaOneC4AboveOne => "gamma=1 & c4>1",
            Region::GammaAboveOneC4EqGamma32 => "gamma>1 & c4=gamma^{3/2}",
            Region::GammaAboveOneC4AboveGamma32 => "gamma>1 & c4>gamma^{3/2}",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A limit together with the region that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedMoment {
    pub value: LimitValue,
    pub region: Region,
}

impl ExtendedMoment {
    fn finite(v: f64, region: Region) -> Self {
        ExtendedMoment { value: LimitValue::Finite(v), region }
    }

    fn infinite(positive: bool, region: Region) -> Self {
        ExtendedMoment { value: if positive { LimitValue::PosInf } else { LimitValue::NegInf }, region }
    }
}

/// Limits of the forward return moments as `s → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardReturnLimits {
    pub variance: ExtendedMoment,
    pub skewness: ExtendedMoment,
    pub kurtosis: ExtendedMoment,
}

/// Limits of the aggregated return moments as `n → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedReturnLimits {
    /// `M²_{r,n}/n`.
    pub variance_per_period: ExtendedMoment,
    pub skewness: ExtendedMoment,
    pub kurtosis: ExtendedMoment,
}

/// Limits of the variance moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceLimits {
    /// Variance of `h_{t+s}` as `s → ∞`.
    pub fwd_variance: ExtendedMoment,
    /// Variance of `Σ h` per period as `n → ∞`.
    pub agg_variance_per_period: ExtendedMoment,
    /// Skewness of `h_{t+s}` as `s → ∞`.
    pub fwd_skewness: ExtendedMoment,
    /// Skewness of `Σ h` as `n → ∞`.
    pub agg_skewness: ExtendedMoment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GammaRegion {
    Below,
    One,
    Above,
}

fn gamma_region(dc: &DerivedConstants) -> GammaRegion {
    if dc.flags.near_unit_gamma {
        GammaRegion::One
    } else if dc.gamma < 1.0 {
        GammaRegion::Below
    } else {
        GammaRegion::Above
    }
}

fn require_phi_ne_gamma(dc: &DerivedConstants) -> Result<()> {
    if dc.flags.phi_eq_gamma {
        return Err(Error::UnsupportedRegion("limits are not available when phi = gamma".into()));
    }
    Ok(())
}

/// `(ω² + 2ωφh̄)/(1−γ)`, the stationary second moment of `h`.
fn stationary_h2(dc: &DerivedConstants) -> f64 {
    dc.c1
}

/// Limits of the forward return variance, skewness and kurtosis.
///
/// ```
/// use gjr_moments::model::{DerivedConstants, ForecastOrigin, GjrParams};
/// use gjr_moments::innovation::Innovation;
/// use gjr_moments::limits::{limit_forward_returns, LimitValue};
/// let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
/// let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(5e-5).unwrap()).unwrap();
/// let l = limit_forward_returns(&dc).unwrap();
/// assert_eq!(l.skewness.value, LimitValue::Finite(0.0));
/// assert_eq!(l.variance.region.label(), "phi<1");
/// ```
pub fn limit_forward_returns(dc: &DerivedConstants) -> Result<ForwardReturnLimits> {
    require_phi_ne_gamma(dc)?;
    let variance = ExtendedMoment::finite(dc.h_bar, Region::Stationary);
    let (skewness, kurtosis) = match gamma_region(dc) {
        GammaRegion::Below => {
            let ratio = stationary_h2(dc) / (dc.h_bar * dc.h_bar);
            (
                ExtendedMoment::finite(dc.tau * (0.625 + 0.375 * ratio), Region::GammaBelowOne),
                ExtendedMoment::finite(dc.kappa * ratio, Region::GammaBelowOne),
            )
        }
        _ => (
            ExtendedMoment { value: LimitValue::signed_infinity(dc.tau), region: Region::GammaAtLeastOne },
            ExtendedMoment::infinite(true, Region::GammaAtLeastOne),
        ),
    };
    Ok(ForwardReturnLimits { variance, skewness, kurtosis })
}

/// Limits of the aggregated return variance per period, skewness and
/// kurtosis.
pub fn limit_aggregated_returns(dc: &DerivedConstants) -> Result<AggregatedReturnLimits> {
    require_phi_ne_gamma(dc)?;
    let variance_per_period = ExtendedMoment::finite(dc.h_bar, Region::Stationary);
    let region = gamma_region(dc);
    let skewness = match region {
        GammaRegion::Below => ExtendedMoment::finite(0.0, Region::GammaBelowOne),
        _ => {
            let driver = dc.tau * (dc.alpha + (dc.gamma - dc.phi) / 3.0) + dc.lambda * dc.lower3;
            ExtendedMoment { value: LimitValue::signed_infinity(driver), region: Region::GammaAtLeastOne }
        }
    };
    let kurtosis = match region {
        GammaRegion::Below => ExtendedMoment::finite(3.0, Region::GammaBelowOne),
        GammaRegion::One => {
            if dc.lambda.abs() + dc.tau.abs() > 0.0 {
                ExtendedMoment::infinite(true, Region::GammaOne)
            } else {
                let a_eff = dc.alpha + dc.lambda * dc.f0;
                let v = 3.0
                    + 0.5 * dc.kappa * (1.0 - dc.phi * dc.phi)
                        * (1.0 + 6.0 * (a_eff + dc.beta / dc.kappa) / (1.0 - dc.phi));
                ExtendedMoment::finite(v, Region::GammaOne)
            }
        }
        GammaRegion::Above => ExtendedMoment::infinite(true, Region::GammaAboveOne),
    };
    Ok(AggregatedReturnLimits { variance_per_period, skewness, kurtosis })
}

/// Limit of the skewness of `h_{t+s}` when `γ, c4 < 1`.
pub fn forward_variance_skewness_stationary(dc: &DerivedConstants) -> Result<f64> {
    let c4 = dc.c4()?;
    let w = dc.omega;
    let k = w * (w * w + 3.0 * w * dc.phi * dc.h_bar + 3.0 * dc.gamma * dc.c1);
    let var = dc.c1 - dc.h_bar * dc.h_bar;
    Ok((k / (1.0 - c4) - 3.0 * dc.h_bar * dc.c1 + 2.0 * dc.h_bar.powi(3)) / var.powf(1.5))
}

/// Limit of the skewness of `h_{t+s}` when `γ > 1` and `c4 = γ^{3/2}`: the
/// ratio of the coefficients of the dominant geometric terms of the third
/// central moment and of the variance.
pub fn forward_variance_skewness_critical(dc: &DerivedConstants) -> Result<f64> {
    let d = dc.h_next * dc.h_next - dc.c3;
    Ok(dc.c18()? / d.powf(1.5))
}

/// The sign driver of the aggregated variance skewness when `c4 = 1`.
pub fn aggregated_variance_skew_driver(dc: &DerivedConstants) -> f64 {
    let (w, phi, gamma, hb, c1, h1) = (dc.omega, dc.phi, dc.gamma, dc.h_bar, dc.c1, dc.h_next);
    let q = w * w + 3.0 * w * phi * hb + 3.0 * gamma * c1;
    w * q / 2.0
        + 1.5 * hb * (c1 + phi * q + w * w / (1.0 - gamma) + 2.0 * w * phi * hb)
        + 3.0 * gamma / (1.0 - gamma) * q / 2.0 * (w + 2.0 * phi * hb)
        + 3.0 / (1.0 - phi)
            * hb
            * (c1 * (1.0 + phi) - 2.0 * phi * hb * hb + hb * ((h1 - hb) - w) - phi * (2.0 * c1 - hb * hb))
}

/// Limits of the forward and aggregated variance moments.
pub fn limit_variance_moments(dc: &DerivedConstants) -> Result<VarianceLimits> {
    require_phi_ne_gamma(dc)?;
    let c4 = dc.c4()?;
    if dc.flags.c4_eq_gamma || dc.flags.c4_eq_phi {
        return Err(Error::UnsupportedRegion("limits are not available when c4 equals gamma or phi".into()));
    }
    let region = gamma_region(dc);
    let (fwd_variance, agg_variance_per_period) = match region {
        GammaRegion::Below => {
            let v = dc.c1 - dc.h_bar * dc.h_bar;
            (
                ExtendedMoment::finite(v, Region::GammaBelowOne),
                ExtendedMoment::finite(v * (1.0 + 2.0 * dc.phi / (1.0 - dc.phi)), Region::GammaBelowOne),
            )
        }
        _ => (
            ExtendedMoment::infinite(true, Region::GammaAtLeastOne),
            ExtendedMoment::infinite(true, Region::GammaAtLeastOne),
        ),
    };
    let c4_one = dc.flags.near_unit_c4;
    let fwd_skewness = match region {
        GammaRegion::Below => {
            if c4 < 1.0 && !c4_one {
                ExtendedMoment::finite(forward_variance_skewness_stationary(dc)?, Region::GammaBelowOneC4BelowOne)
            } else {
                ExtendedMoment::infinite(true, Region::GammaBelowOneC4AtLeastOne)
            }
        }
        GammaRegion::One => {
            if c4_one {
                return Err(Error::UnsupportedRegion("no forward variance skewness limit for gamma = c4 = 1".into()));
            } else if c4 > 1.0 {
                ExtendedMoment::infinite(true, Region::GammaOneC4AboveOne)
            } else {
                ExtendedMoment::finite(0.0, Region::GammaAtLeastOneC4BelowGamma32)
            }
        }
        GammaRegion::Above => {
            let g32 = dc.gamma.powf(1.5);
            if nearly_equal(c4, g32) {
                ExtendedMoment::finite(forward_variance_skewness_critical(dc)?, Region::GammaAboveOneC4EqGamma32)
            } else if c4 > g32 {
                ExtendedMoment::infinite(true, Region::GammaAboveOneC4AboveGamma32)
            } else {
                ExtendedMoment::finite(0.0, Region::GammaAtLeastOneC4BelowGamma32)
            }
        }
    };
    let agg_skewness = match region {
        GammaRegion::Below => {
            if c4_one {
                ExtendedMoment {
                    value: LimitValue::signed_infinity(aggregated_variance_skew_driver(dc)),
                    region: Region::GammaBelowOneC4One,
                }
            } else if c4 < 1.0 {
                ExtendedMoment::finite(0.0, Region::GammaBelowOneC4BelowOne)
            } else {
                ExtendedMoment::infinite(true, Region::GammaBelowOneC4AboveOne)
            }
        }
        _ => {
            return Err(Error::UnsupportedRegion(
                "the aggregated variance skewness limit is only available for gamma < 1".into(),
            ))
        }
    };
    Ok(VarianceLimits { fwd_variance, agg_variance_per_period, fwd_skewness, agg_skewness })
}
