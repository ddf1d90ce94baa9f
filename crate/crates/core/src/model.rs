//! Model parameters, forecast origin and the derived constants every moment
//! formula is written in.
//!
//! The variance recursion is `h' = ω + X·h` with the random multiplier
//! `X = (α + λ·1{z<0})·z² + β`. Its moments drive everything downstream:
//! `E[X] = φ`, `E[X²] = γ`, `E[X³] = c4`, `E[X⁴] = c7`. As in the closed forms
//! this crate implements, the indicator is treated as independent of even
//! powers of `z`, which is exact for symmetric innovations.

use crate::error::{Error, Result};
use crate::innovation::Innovation;

/// Relative tolerance below which two persistence constants are treated as
/// equal, or a persistence constant as equal to one.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Parameters of the constant-mean GJR-GARCH(1,1) model
/// `r = μ + ε`, `ε = z·√h`, `h' = ω + (α + λ·1{ε<0})·ε² + β·h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GjrParams {
    /// Conditional mean per period.
    pub mu: f64,
    /// Variance intercept, strictly positive.
    pub omega: f64,
    /// Symmetric response to squared shocks.
    pub alpha: f64,
    /// Additional response to negative shocks.
    pub lambda: f64,
    /// Variance persistence.
    pub beta: f64,
}

impl GjrParams {
    /// GJR parameters.
    pub fn new(mu: f64, omega: f64, alpha: f64, lambda: f64, beta: f64) -> Self {
        GjrParams { mu, omega, alpha, lambda, beta }
    }

    /// Symmetric GARCH(1,1) parameters (`λ = 0`).
    pub fn garch11(mu: f64, omega: f64, alpha: f64, beta: f64) -> Self {
        GjrParams { mu, omega, alpha, lambda: 0.0, beta }
    }

    /// Persistence `φ = α + λ·F0 + β` for a given distribution function at zero.
    pub fn persistence(&self, f0: f64) -> f64 {
        self.alpha + self.lambda * f0 + self.beta
    }

    /// Checks positivity and stationarity given the innovation's `F0`.
    pub fn validate(&self, f0: f64) -> Result<()> {
        let all = [self.mu, self.omega, self.alpha, self.lambda, self.beta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParams(format!("omega must be positive, got {}", self.omega)));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParams(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.beta < 0.0 {
            return Err(Error::InvalidParams(format!("beta must be non-negative, got {}", self.beta)));
        }
        if self.alpha + self.lambda * f0 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "alpha + lambda*F0 must be non-negative, got {}",
                self.alpha + self.lambda * f0
            )));
        }
        let phi = self.persistence(f0);
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::NonStationary { phi });
        }
        Ok(())
    }
}

/// The known one-step-ahead conditional variance at the forecast origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastOrigin {
    /// `h_{t+1}` in variance units.
    pub h_next: f64,
}

impl ForecastOrigin {
    /// Validated forecast origin.
    pub fn new(h_next: f64) -> Result<Self> {
        if !(h_next > 0.0) || !h_next.is_finite() {
            return Err(Error::InvalidParams(format!("h_next must be positive and finite, got {h_next}")));
        }
        Ok(ForecastOrigin { h_next })
    }
}

/// Flags marking parameter points where the generic closed forms divide by
/// zero and the dedicated branches are used instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DegeneracyFlags {
    /// `γ = 1`.
    pub near_unit_gamma: bool,
    /// `c4 = 1`.
    pub near_unit_c4: bool,
    /// `φ = γ`.
    pub phi_eq_gamma: bool,
    /// `c4 = γ`.
    pub c4_eq_gamma: bool,
    /// `c4 = φ`.
    pub c4_eq_phi: bool,
}

impl DegeneracyFlags {
    /// True if any flag is set.
    pub fn any(&self) -> bool {
        self.near_unit_gamma || self.near_unit_c4 || self.phi_eq_gamma || self.c4_eq_gamma || self.c4_eq_phi
    }
}

/// Every constant the moment formulas use, computed once per
/// (parameters, innovation, origin).
///
/// Constants that need innovation moments above order four are `None` when
/// those moments do not exist; accessor methods turn that into an error.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub beta: f64,
    /// One-step-ahead variance `h_{t+1}`.
    pub h_next: f64,
    /// Innovation kurtosis `E[z⁴]`.
    pub kappa: f64,
    /// Innovation skewness `E[z³]`.
    pub tau: f64,
    /// Innovation distribution function at zero.
    pub f0: f64,
    /// `∫_{-∞}^0 x³ f(x) dx`.
    pub lower3: f64,
    /// `∫_{-∞}^0 x⁵ f(x) dx`.
    pub lower5: Option<f64>,
    pub mu5: Option<f64>,
    pub mu6: Option<f64>,
    pub mu8: Option<f64>,
    /// Persistence `E[X]`.
    pub phi: f64,
    /// Second moment of the multiplier `E[X²]`.
    pub gamma: f64,
    /// Steady-state variance `ω/(1−φ)`.
    pub h_bar: f64,
    /// Stationary second moment of `h` when `γ < 1`.
    pub c1: f64,
    /// Coefficient of `φ^{s−1}` in the second moment of `h_{t+s}`.
    pub c2: f64,
    /// `c1 + c2`.
    pub c3: f64,
    /// Third moment of the multiplier `E[X³]`.
    pub c4: Option<f64>,
    /// `6ω²γ`.
    pub c5: f64,
    /// `4ω·c4`.
    pub c6: Option<f64>,
    /// Fourth moment of the multiplier `E[X⁴]`.
    pub c7: Option<f64>,
    /// `E[z·X] = α·τ + λ·∫_{-∞}^0 x³ f`.
    pub c9: f64,
    /// `E[z·X²]`.
    pub c10: Option<f64>,
    pub c12: f64,
    pub c13: f64,
    /// `c12/c13`, undefined when `c13 = 0`.
    pub c14: Option<f64>,
    pub c17: f64,
    /// Coefficient of `c4^{s−1}` in the third moment of `h_{t+s}`.
    pub c18: Option<f64>,
    pub flags: DegeneracyFlags,
}

/// True when `a` and `b` agree to [`DEGENERACY_TOL`] relative.
pub fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl DerivedConstants {
    /// Computes all derived constants.
    ///
    /// ```
    /// use gjr_moments::model::{DerivedConstants, ForecastOrigin, GjrParams};
    /// use gjr_moments::innovation::Innovation;
    /// let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
    /// let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(5e-5).unwrap()).unwrap();
    /// assert!((dc.phi - 0.97).abs() < 1e-15);
    /// assert!((dc.gamma - 0.9534).abs() < 1e-14);
    /// ```
    pub fn new(p: &GjrParams, inn: &Innovation, origin: ForecastOrigin) -> Result<Self> {
        let f0 = inn.cdf_at_zero()?;
        p.validate(f0)?;
        let h1 = ForecastOrigin::new(origin.h_next)?.h_next;
        let kappa = inn.kurtosis()?;
        let tau = inn.skewness()?;
        let lower3 = inn.lower_partial_moment(3)?;
        let lower5 = inn.lower_partial_moment(5).ok();
        let mu5 = inn.moment(5).ok();
        let mu6 = inn.moment(6).ok();
        let mu8 = inn.moment(8).ok();
        let GjrParams { mu, omega, alpha, lambda, beta } = *p;

        let a_eff = alpha + lambda * f0;
        let phi = a_eff + beta;
        let gamma = phi * phi + (kappa - 1.0) * a_eff * a_eff + kappa * lambda * lambda * f0 * (1.0 - f0);
        if !(gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be positive, got {gamma}")));
        }
        let h_bar = omega / (1.0 - phi);
        let c1 = (omega * omega + 2.0 * omega * phi * h_bar) / (1.0 - gamma);
        let c2 = 2.0 * omega * phi * (h1 - h_bar) / (phi - gamma);
        let c3 = c1 + c2;
        let c4 = mu6.map(|m6| {
            m6 * (alpha.powi(3) + 3.0 * alpha * lambda * (alpha + lambda) * f0 + lambda.powi(3) * f0)
                + 3.0 * beta * gamma
                - beta * beta * (2.0 * beta + 3.0 * a_eff)
        });
        let c5 = 6.0 * omega * omega * gamma;
        let c6 = c4.map(|c4| 4.0 * omega * c4);
        let c7 = match (mu6, mu8) {
            (Some(m6), Some(m8)) => Some(
                m8 * (alpha.powi(4)
                    + f0 * (lambda.powi(4)
                        + 4.0 * (alpha.powi(3) * lambda + alpha * lambda.powi(3))
                        + 6.0 * alpha * alpha * lambda * lambda))
                    + beta.powi(4)
                    + 4.0
                        * (m6 * beta
                            * (alpha.powi(3) + f0 * (lambda.powi(3) + 3.0 * (alpha * alpha * lambda + alpha * lambda * lambda)))
                            + beta.powi(3) * a_eff)
                    + 6.0 * kappa * beta * beta * (alpha * alpha + lambda * lambda * f0 + 2.0 * alpha * lambda * f0),
            ),
            _ => None,
        };
        let c9 = alpha * tau + lambda * lower3;
        let c10 = match (mu5, lower5) {
            (Some(m5), Some(l5)) => Some(
                alpha * (alpha * m5 + 2.0 * beta * tau) + lambda * (2.0 * alpha + lambda) * l5 + 2.0 * beta * lambda * lower3,
            ),
            _ => None,
        };
        let c12 = 0.125 * (tau + 3.0 * c9 / (1.0 - phi));
        let c13 = 0.375 * c9 / (1.0 - phi);
        let c14 = if c13 != 0.0 { Some(c12 / c13) } else { None };
        let c17 = tau + 3.0 * c9 / (1.0 - phi);
        let c18 = c4.map(|c4| {
            let k = omega * (omega * omega + 3.0 * omega * phi * h_bar + 3.0 * gamma * c1);
            h1.powi(3)
                - k / (1.0 - c4)
                - (3.0 * omega * omega * phi * (h1 - h_bar) + 3.0 * omega * gamma * c2) / (phi - c4)
                - 3.0 * omega * gamma * (h1 * h1 - c3) / (gamma - c4)
        });
        let flags = DegeneracyFlags {
            near_unit_gamma: nearly_equal(gamma, 1.0),
            near_unit_c4: c4.is_some_and(|c| nearly_equal(c, 1.0)),
            phi_eq_gamma: nearly_equal(phi, gamma),
            c4_eq_gamma: c4.is_some_and(|c| nearly_equal(c, gamma)),
            c4_eq_phi: c4.is_some_and(|c| nearly_equal(c, phi)),
        };
        Ok(DerivedConstants {
            mu,
            omega,
            alpha,
            lambda,
            beta,
            h_next: h1,
            kappa,
            tau,
            f0,
            lower3,
            lower5,
            mu5,
            mu6,
            mu8,
            phi,
            gamma,
            h_bar,
            c1,
            c2,
            c3,
            c4,
            c5,
            c6,
            c7,
            c9,
            c10,
            c12,
            c13,
            c14,
            c17,
            c18,
            flags,
        })
    }

    /// `c4`, or an error when the sixth innovation moment does not exist.
    pub fn c4(&self) -> Result<f64> {
        self.c4.ok_or_else(|| undefined(6))
    }

    /// `c7`, or an error when the eighth innovation moment does not exist.
    pub fn c7(&self) -> Result<f64> {
        self.c7.ok_or_else(|| undefined(8))
    }

    /// `c10`, or an error when the fifth innovation moments do not exist.
    pub fn c10(&self) -> Result<f64> {
        self.c10.ok_or_else(|| undefined(5))
    }

    /// `c18`, or an error when the sixth innovation moment does not exist.
    pub fn c18(&self) -> Result<f64> {
        self.c18.ok_or_else(|| undefined(6))
    }

    /// Moments `E[X^j]`, `j = 0..=order`, of the variance multiplier.
    pub fn multiplier_moments(&self, order: usize) -> Result<[f64; 5]> {
        let mut m = [1.0, self.phi, self.gamma, f64::NAN, f64::NAN];
        if order >= 3 {
            m[3] = self.c4()?;
        }
        if order >= 4 {
            m[4] = self.c7()?;
        }
        Ok(m)
    }

    /// Copy of these constants with a different forecast origin.
    pub fn with_origin(&self, p: &GjrParams, inn: &Innovation, h_next: f64) -> Result<Self> {
        DerivedConstants::new(p, inn, ForecastOrigin::new(h_next)?)
    }
}

fn undefined(order: u32) -> Error {
    Error::UndefinedMoment {
        order,
        detail: "the innovation moment needed by this constant does not exist".into(),
    }
}

/// `α` that makes a normal GARCH(1,1) with the given `β` satisfy `γ = 1`,
/// the positive root of `(α+β)² + 2α² = 1`.
pub fn normal_garch_unit_gamma_alpha(beta: f64) -> f64 {
    (-beta + (3.0 - 2.0 * beta * beta).sqrt()) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> DerivedConstants {
        let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
        DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(5e-5).unwrap()).unwrap()
    }

    #[test]
    fn fixture_constants() {
        let dc = fixture();
        assert!((dc.phi - 0.97).abs() < 1e-15);
        assert!((dc.gamma - 0.9534).abs() < 1e-14);
        assert!((dc.h_bar - 1e-6 / 0.03).abs() < 1e-18);
        assert!((dc.c9 + 0.06 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-16);
        assert_eq!(dc.c3, dc.c1 + dc.c2);
        assert_eq!(dc.c5, 6.0 * 1e-12 * dc.gamma);
        assert_eq!(dc.c6.unwrap(), 4.0 * 1e-6 * dc.c4.unwrap());
        assert!(!dc.flags.any());
    }

    #[test]
    fn garch_specialisation() {
        let p = GjrParams::garch11(0.0, 1e-6, 0.05, 0.90);
        let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(1e-5).unwrap()).unwrap();
        assert!((dc.gamma - 0.9075).abs() < 1e-14);
        assert!((dc.phi - 0.95).abs() < 1e-15);
        assert_eq!(dc.c9, 0.0);
    }

    #[test]
    fn c2_is_linear_in_the_gap() {
        let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
        let inn = Innovation::normal();
        let h_bar = 1e-6 / 0.03;
        let gap = 1e-5;
        let a = DerivedConstants::new(&p, &inn, ForecastOrigin::new(h_bar + gap).unwrap()).unwrap();
        let b = DerivedConstants::new(&p, &inn, ForecastOrigin::new(h_bar + 2.0 * gap).unwrap()).unwrap();
        assert!((b.c2 - 2.0 * a.c2).abs() < 1e-12 * b.c2.abs());
    }

    #[test]
    fn validation_errors() {
        let inn = Innovation::normal();
        let o = ForecastOrigin::new(1e-5).unwrap();
        let bad = GjrParams::new(0.0, 1e-6, 0.5, 0.0, 0.6);
        assert!(matches!(DerivedConstants::new(&bad, &inn, o), Err(Error::NonStationary { .. })));
        let neg = GjrParams::new(0.0, -1.0, 0.05, 0.0, 0.9);
        assert!(matches!(DerivedConstants::new(&neg, &inn, o), Err(Error::InvalidParams(_))));
        let asym = GjrParams::new(0.0, 1e-6, 0.01, -0.05, 0.9);
        assert!(matches!(DerivedConstants::new(&asym, &inn, o), Err(Error::InvalidParams(_))));
        assert!(ForecastOrigin::new(0.0).is_err());
    }

    #[test]
    fn unit_gamma_root() {
        let a = normal_garch_unit_gamma_alpha(0.9);
        assert!(((a + 0.9).powi(2) + 2.0 * a * a - 1.0).abs() < 1e-15);
        let p = GjrParams::garch11(0.0, 1e-6, a, 0.9);
        let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(1e-5).unwrap()).unwrap();
        assert!(dc.flags.near_unit_gamma);
    }

    #[test]
    fn deterministic() {
        assert_eq!(fixture(), fixture());
    }

    #[test]
    fn student_t_drops_high_order_constants() {
        let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
        let dc = DerivedConstants::new(&p, &Innovation::student_t(7.0).unwrap(), ForecastOrigin::new(5e-5).unwrap()).unwrap();
        assert!(dc.c4().is_ok());
        assert!(dc.c7().is_err());
    }
}
