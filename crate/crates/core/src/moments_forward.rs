//! Conditional moments of the `s`-step-ahead variance `h_{t+s}` and return
//! `r_{t+s}`.
//!
//! Raw moments of `h_{t+s}` come from closed forms where the persistence
//! constants are distinct, and from the exact one-step recursion
//! `E[h'^k] = Σ_j C(k,j) ω^{k−j} E[X^j] E[h^j]` otherwise.

use crate::error::{Error, Result};
use crate::model::DerivedConstants;

/// Mean, variance, skewness and kurtosis of one distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl MomentSet {
    /// Builds a moment set from the mean and the second, third and fourth
    /// central moments.
    pub fn from_central(mean: f64, variance: f64, third: f64, fourth: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::DegenerateDistribution(format!(
                "skewness and kurtosis need a positive variance, got {variance}"
            )));
        }
        Ok(MomentSet {
            mean,
            variance,
            skewness: third / variance.powf(1.5),
            kurtosis: fourth / (variance * variance),
        })
    }

    /// Standard deviation.
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Kurtosis minus three.
    pub fn excess_kurtosis(&self) -> f64 {
        self.kurtosis - 3.0
    }
}

/// Raw moments `E_t[h_{t+s}^k]`, `k = 1..=4`, at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRawMoments {
    pub s: usize,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl VarianceRawMoments {
    /// Central moments `(variance, third, fourth)` of `h_{t+s}`.
    pub fn central(&self) -> (f64, f64, f64) {
        central_from_raw(self.m1, self.m2, self.m3, self.m4)
    }
}

/// Central moments `(variance, third, fourth)` from raw moments one to four.
pub fn central_from_raw(m1: f64, m2: f64, m3: f64, m4: f64) -> (f64, f64, f64) {
    let m1sq = m1 * m1;
    let var = m2 - m1sq;
    let third = m3 - 3.0 * m1 * m2 + 2.0 * m1sq * m1;
    let fourth = m4 - 4.0 * m1 * m3 + 6.0 * m1sq * m2 - 3.0 * m1sq * m1sq;
    (var, third, fourth)
}

/// Raw moments of `h_{t+s}` for every horizon `1..=s_max`, up to a chosen order.
///
/// Orders above two need the sixth innovation moment and order four needs
/// the eighth. Entries beyond the requested order are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMomentTable {
    order: usize,
    rows: Vec<[f64; 4]>,
}

impl VarianceMomentTable {
    /// Fills the table for horizons `1..=s_max`.
    ///
    /// ```
    /// use gjr_moments::model::{DerivedConstants, ForecastOrigin, GjrParams};
    /// use gjr_moments::innovation::Innovation;
    /// use gjr_moments::moments_forward::VarianceMomentTable;
    /// let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
    /// let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(5e-5).unwrap()).unwrap();
    /// let t = VarianceMomentTable::new(&dc, 10, 4).unwrap();
    /// assert_eq!(t.m1(1), 5e-5);
    /// assert!((t.m1(2) - 4.95e-5).abs() < 1e-18);
    /// ```
    pub fn new(dc: &DerivedConstants, s_max: usize, order: usize) -> Result<Self> {
        if s_max == 0 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        if !(1..=4).contains(&order) {
            return Err(Error::InvalidParams(format!("moment order must be in 1..=4, got {order}")));
        }
        let x = dc.multiplier_moments(order)?;
        let w = dc.omega;
        let h1 = dc.h_next;
        let mut rows = Vec::with_capacity(s_max);
        let mut first = [f64::NAN; 4];
        for (k, slot) in first.iter_mut().enumerate().take(order) {
            *slot = h1.powi(k as i32 + 1);
        }
        rows.push(first);
        let third_closed = order >= 3 && third_moment_closed_form_applies(dc);
        let mut phi_pow = 1.0; // φ^{s−1}
        let mut gamma_pow = 1.0; // γ^{s−1}
        let mut c4_pow = 1.0; // c4^{s−1}
        for s in 2..=s_max {
            let prev = rows[s - 2];
            phi_pow *= dc.phi;
            gamma_pow *= dc.gamma;
            if order >= 3 {
                c4_pow *= x[3];
            }
            let mut row = [f64::NAN; 4];
            row[0] = dc.h_bar + phi_pow * (h1 - dc.h_bar);
            if order >= 2 {
                row[1] = if dc.flags.phi_eq_gamma {
                    w * w + 2.0 * w * dc.phi * prev[0] + dc.gamma * prev[1]
                } else if dc.flags.near_unit_gamma {
                    (s - 1) as f64 * (w * w + 2.0 * w * dc.phi * dc.h_bar)
                        + 2.0 * dc.phi * dc.h_bar * (1.0 - phi_pow) * (h1 - dc.h_bar)
                        + h1 * h1
                } else {
                    dc.c1 + (h1 * h1 - dc.c3) * gamma_pow + dc.c2 * phi_pow
                };
            }
            if order >= 3 {
                row[2] = if third_closed {
                    third_moment_closed(dc, phi_pow, gamma_pow, c4_pow)?
                } else {
                    w.powi(3) + 3.0 * w * w * x[1] * prev[0] + 3.0 * w * x[2] * prev[1] + x[3] * prev[2]
                };
            }
            if order >= 4 {
                row[3] = w.powi(4)
                    + 4.0 * w.powi(3) * x[1] * prev[0]
                    + dc.c5 * prev[1]
                    + dc.c6.unwrap_or(f64::NAN) * prev[2]
                    + x[4] * prev[3];
            }
            if row.iter().take(order).any(|v| !v.is_finite()) {
                return Err(Error::Overflow { what: "variance moment recursion".into(), horizon: s });
            }
            rows.push(row);
        }
        Ok(VarianceMomentTable { order, rows })
    }

    /// Highest moment order stored.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Largest horizon stored.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Always false: a table holds at least horizon one.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `[E h_s, E h_s², E h_s³, E h_s⁴]` for `s ≥ 1`.
    #[inline]
    pub fn row(&self, s: usize) -> [f64; 4] {
        self.rows[s - 1]
    }

    /// `E_t[h_{t+s}]`.
    #[inline]
    pub fn m1(&self, s: usize) -> f64 {
        self.rows[s - 1][0]
    }

    /// `E_t[h_{t+s}²]`.
    #[inline]
    pub fn m2(&self, s: usize) -> f64 {
        self.rows[s - 1][1]
    }

    /// `E_t[h_{t+s}³]`.
    #[inline]
    pub fn m3(&self, s: usize) -> f64 {
        self.rows[s - 1][2]
    }

    /// `E_t[h_{t+s}⁴]`.
    #[inline]
    pub fn m4(&self, s: usize) -> f64 {
        self.rows[s - 1][3]
    }

    /// The stored raw moments at horizon `s`.
    pub fn raw(&self, s: usize) -> VarianceRawMoments {
        let r = self.row(s);
        VarianceRawMoments { s, m1: r[0], m2: r[1], m3: r[2], m4: r[3] }
    }
}

/// True when the closed form of the third moment is usable: `γ`, `c4`, `φ`
/// pairwise distinct and none of `γ`, `c4` equal to one.
fn third_moment_closed_form_applies(dc: &DerivedConstants) -> bool {
    let f = dc.flags;
    !(f.near_unit_gamma || f.near_unit_c4 || f.phi_eq_gamma || f.c4_eq_gamma || f.c4_eq_phi)
}

fn third_moment_closed(dc: &DerivedConstants, phi_pow: f64, gamma_pow: f64, c4_pow: f64) -> Result<f64> {
    let w = dc.omega;
    let c4 = dc.c4()?;
    let k = w * (w * w + 3.0 * w * dc.phi * dc.h_bar + 3.0 * dc.gamma * dc.c1);
    let phi_coef = (3.0 * w * w * dc.phi * (dc.h_next - dc.h_bar) + 3.0 * w * dc.gamma * dc.c2) / (dc.phi - c4);
    let gamma_coef = 3.0 * w * dc.gamma * (dc.h_next * dc.h_next - dc.c3) / (dc.gamma - c4);
    Ok(k / (1.0 - c4) + phi_coef * phi_pow + dc.c18()? * c4_pow + gamma_coef * gamma_pow)
}

/// Raw moments one to four of `h_{t+s}`.
pub fn variance_raw_moments(dc: &DerivedConstants, s: usize) -> Result<VarianceRawMoments> {
    Ok(VarianceMomentTable::new(dc, s, 4)?.raw(s))
}

/// `E_t[h_{t+s}] = h̄ + φ^{s−1}(h_{t+1} − h̄)`.
pub fn variance_mean(dc: &DerivedConstants, s: usize) -> f64 {
    if s <= 1 {
        return dc.h_next;
    }
    dc.h_bar + dc.phi.powi((s - 1) as i32) * (dc.h_next - dc.h_bar)
}

/// Which fractional power of `h` to approximate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfPower {
    /// `h^{3/2}`.
    ThreeHalves,
    /// `h^{5/2}`.
    FiveHalves,
}

/// Second-order Taylor approximation of `E[h^{3/2}]` from `E[h]` and `E[h²]`.
#[inline]
pub fn taylor_h_three_halves(m1: f64, m2: f64) -> f64 {
    0.625 * m1 * m1.sqrt() + 0.375 * m2 / m1.sqrt()
}

/// Second-order Taylor approximation of `E[h^{5/2}]` from `E[h]` and `E[h²]`.
#[inline]
pub fn taylor_h_five_halves(m1: f64, m2: f64) -> f64 {
    0.125 * m1.sqrt() * (15.0 * m2 - 7.0 * m1 * m1)
}

/// Approximate `E_t[h_{t+s}^p]` for `p ∈ {3/2, 5/2}`; exact at `s = 1`.
///
/// ```
/// use gjr_moments::model::{DerivedConstants, ForecastOrigin, GjrParams};
/// use gjr_moments::innovation::Innovation;
/// use gjr_moments::moments_forward::{expected_h_power, HalfPower};
/// let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
/// let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(4e-4).unwrap()).unwrap();
/// assert!((expected_h_power(&dc, 1, HalfPower::ThreeHalves).unwrap() - 8e-6).abs() < 1e-20);
/// ```
pub fn expected_h_power(dc: &DerivedConstants, s: usize, p: HalfPower) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    if s == 1 {
        return Ok(match p {
            HalfPower::ThreeHalves => dc.h_next.powf(1.5),
            HalfPower::FiveHalves => dc.h_next.powf(2.5),
        });
    }
    let t = VarianceMomentTable::new(dc, s, 2)?;
    Ok(match p {
        HalfPower::ThreeHalves => taylor_h_three_halves(t.m1(s), t.m2(s)),
        HalfPower::FiveHalves => taylor_h_five_halves(t.m1(s), t.m2(s)),
    })
}

/// Return moments at one horizon from the first two variance moments.
pub(crate) fn forward_return_from_variance(dc: &DerivedConstants, m1: f64, m2: f64) -> MomentSet {
    let ratio = m2 / (m1 * m1);
    MomentSet {
        mean: dc.mu,
        variance: m1,
        skewness: dc.tau * (0.625 + 0.375 * ratio),
        kurtosis: dc.kappa * ratio,
    }
}

/// Mean, variance, skewness and kurtosis of the return `r_{t+s}`.
///
/// The skewness uses the Taylor approximation of `E[h^{3/2}]`; the other
/// three are exact.
pub fn forward_return_moments(dc: &DerivedConstants, s: usize) -> Result<MomentSet> {
    if s == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let t = VarianceMomentTable::new(dc, s, 2)?;
    Ok(forward_return_from_variance(dc, t.m1(s), t.m2(s)))
}

/// Forward return moments at every horizon `1..=s_max`.
pub fn forward_return_term_structure(dc: &DerivedConstants, s_max: usize) -> Result<Vec<MomentSet>> {
    let t = VarianceMomentTable::new(dc, s_max, 2)?;
    Ok((1..=s_max).map(|s| forward_return_from_variance(dc, t.m1(s), t.m2(s))).collect())
}

/// Mean, variance, skewness and kurtosis of the variance `h_{t+s}`.
///
/// At `s = 1` the variance is known and skewness and kurtosis are undefined,
/// reported as [`Error::DegenerateDistribution`]; use
/// [`forward_variance_mean_variance`] for the first two moments there.
pub fn forward_variance_moments(dc: &DerivedConstants, s: usize) -> Result<MomentSet> {
    if s <= 1 {
        return Err(Error::DegenerateDistribution(
            "the one-step-ahead variance is known, so its skewness and kurtosis are undefined".into(),
        ));
    }
    let t = VarianceMomentTable::new(dc, s, 4)?;
    forward_variance_from_row(t.raw(s))
}

pub(crate) fn forward_variance_from_row(r: VarianceRawMoments) -> Result<MomentSet> {
    let (var, third, fourth) = r.central();
    MomentSet::from_central(r.m1, var, third, fourth)
}

/// Mean and variance of `h_{t+s}`, defined for every `s ≥ 1`.
pub fn forward_variance_mean_variance(dc: &DerivedConstants, s: usize) -> Result<(f64, f64)> {
    if s == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let t = VarianceMomentTable::new(dc, s, 2)?;
    Ok((t.m1(s), t.m2(s) - t.m1(s) * t.m1(s)))
}
