//! Conditional moments of the aggregated return `R_{tn} = Σ_{s=1}^n r_{t+s}`
//! and the aggregated variance `Σ_{s=1}^n h_{t+s}`, with every cross moment
//! they are built from.
//!
//! Cross moments of the variance process use the tower law: since
//! `h_{t+s+u}` depends on the past only through `h_{t+s}`, the conditional
//! expectation `E[h_{t+s+u}^j | h_{t+s} = h]` is a polynomial of degree `j` in
//! `h`, obtained by applying the one-step transition operator `u` times. Every
//! multi-time moment then reduces to a linear combination of single-time raw
//! moments. See the derivation chapter of the guide for the full argument.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::DerivedConstants;
use crate::moments_forward::{taylor_h_five_halves, taylor_h_three_halves, MomentSet, VarianceMomentTable};
use crate::summation::CompensatedSum;

/// Horizon caps for the sums whose cost grows faster than linearly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregationCaps {
    /// Largest `n` for the aggregated return kurtosis (quadratic cost).
    pub return_kurtosis: usize,
    /// Largest `n` for aggregated variance skewness and kurtosis (cubic and
    /// quartic cost).
    pub variance_higher: usize,
}

impl Default for AggregationCaps {
    fn default() -> Self {
        AggregationCaps { return_kurtosis: 2000, variance_higher: 200 }
    }
}

impl AggregationCaps {
    /// Caps large enough for any horizon.
    pub fn unlimited() -> Self {
        AggregationCaps { return_kurtosis: usize::MAX, variance_higher: usize::MAX }
    }
}

/// Coefficients of `u`-step conditional expectation polynomials.
///
/// `poly(j, u)[k]` is the coefficient of `h^k` in `E[h_{s+u}^j | h_s = h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPolynomials {
    max_power: usize,
    /// `coefs[j-1][u]` holds the coefficients for power `j`.
    coefs: Vec<Vec<[f64; 4]>>,
}

impl TransitionPolynomials {
    /// Polynomials for powers `1..=max_power` and steps `0..=u_max`.
    pub fn new(dc: &DerivedConstants, max_power: usize, u_max: usize) -> Result<Self> {
        if !(1..=3).contains(&max_power) {
            return Err(Error::InvalidParams(format!("transition power must be in 1..=3, got {max_power}")));
        }
        let x = dc.multiplier_moments(max_power)?;
        let w = dc.omega;
        // one_step[k][j]: coefficient of h^j in E[h'^k | h].
        let mut one_step = [[0.0f64; 4]; 4];
        for (k, row) in one_step.iter_mut().enumerate().take(max_power + 1) {
            for (j, slot) in row.iter_mut().enumerate().take(k + 1) {
                *slot = binomial(k, j) * w.powi((k - j) as i32) * x[j];
            }
        }
        let mut coefs = Vec::with_capacity(max_power);
        for j in 1..=max_power {
            let mut seq = Vec::with_capacity(u_max + 1);
            let mut p = [0.0f64; 4];
            p[j] = 1.0;
            seq.push(p);
            for _ in 0..u_max {
                let mut next = [0.0f64; 4];
                for (k, &a) in p.iter().enumerate().take(j + 1) {
                    if a != 0.0 {
                        for (jj, slot) in next.iter_mut().enumerate().take(k + 1) {
                            *slot += a * one_step[k][jj];
                        }
                    }
                }
                p = next;
                seq.push(p);
            }
            coefs.push(seq);
        }
        Ok(TransitionPolynomials { max_power, coefs })
    }

    /// Coefficients of `E[h_{s+u}^j | h_s = h]` in increasing powers of `h`.
    #[inline]
    pub fn poly(&self, j: usize, u: usize) -> &[f64; 4] {
        &self.coefs[j - 1][u]
    }

    /// Highest power available.
    pub fn max_power(&self) -> usize {
        self.max_power
    }
}

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Everything needed to evaluate variance cross moments up to a horizon in
/// constant time per entry: the raw moment table of `h_{t+s}` and the
/// transition polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMomentTables {
    n: usize,
    order: usize,
    h_bar: f64,
    phi_pow: Vec<f64>,
    moments: VarianceMomentTable,
    transition: TransitionPolynomials,
}

impl CrossMomentTables {
    /// Tables for horizons up to `n` supporting cross moments of total
    /// order up to `order ∈ {2, 3, 4}`.
    pub fn new(dc: &DerivedConstants, n: usize, order: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        if !(2..=4).contains(&order) {
            return Err(Error::InvalidParams(format!("cross moment order must be in 2..=4, got {order}")));
        }
        let moments = VarianceMomentTable::new(dc, n, order)?;
        let transition = TransitionPolynomials::new(dc, order - 1, n)?;
        let mut phi_pow = Vec::with_capacity(n + 1);
        let mut p = 1.0;
        for _ in 0..=n {
            phi_pow.push(p);
            p *= dc.phi;
        }
        Ok(CrossMomentTables { n, order, h_bar: dc.h_bar, phi_pow, moments, transition })
    }

    /// Largest horizon covered.
    pub fn horizon(&self) -> usize {
        self.n
    }

    /// Highest total order supported.
    pub fn order(&self) -> usize {
        self.order
    }

    /// The single-time raw moment table.
    pub fn moments(&self) -> &VarianceMomentTable {
        &self.moments
    }

    #[inline]
    fn m(&self, k: usize, s: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.moments.row(s)[k - 1]
        }
    }

    /// `E_t[h_{t+s}]`.
    #[inline]
    pub fn m1(&self, s: usize) -> f64 {
        self.moments.m1(s)
    }

    /// `E_t[h_{t+s}^i h_{t+s+u}^j]`.
    #[inline]
    pub fn pair(&self, i: usize, j: usize, s: usize, u: usize) -> f64 {
        let c = self.transition.poly(j, u);
        let mut acc = 0.0;
        for (k, &ck) in c.iter().enumerate().take(j + 1) {
            acc += ck * self.m(i + k, s);
        }
        acc
    }

    /// `E_t[h_{t+s}^i h_{t+s+u}^j h_{t+s+u+v}^k]` for `k ∈ {1, 2}`.
    #[inline]
    pub fn triple(&self, i: usize, j: usize, k: usize, s: usize, u: usize, v: usize) -> f64 {
        let c = self.transition.poly(k, v);
        let mut acc = 0.0;
        for (l, &cl) in c.iter().enumerate().take(k + 1) {
            acc += cl * self.pair(i, j + l, s, u);
        }
        acc
    }

    /// `E_t[h_{t+s}^i h_{t+s+u}^j h_{t+s+u+v}]`, the common `k = 1` case.
    #[inline]
    fn triple_linear(&self, pair_ij: f64, pair_ij1: f64, v: usize) -> f64 {
        self.h_bar * (1.0 - self.phi_pow[v]) * pair_ij + self.phi_pow[v] * pair_ij1
    }

    /// `E_t[h_{t+s} h_{t+s+u} h_{t+s+u+v} h_{t+s+u+v+w}]`.
    #[inline]
    pub fn quad(&self, s: usize, u: usize, v: usize, w: usize) -> f64 {
        self.h_bar * (1.0 - self.phi_pow[w]) * self.triple(1, 1, 1, s, u, v) + self.phi_pow[w] * self.triple(1, 1, 2, s, u, v)
    }
}

/// A variance cross moment requested by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceCross {
    /// `E[h_s^i h_{s+u}^j]`.
    Pair { i: usize, j: usize, s: usize, u: usize },
    /// `E[h_s^i h_{s+u}^j h_{s+u+v}^k]`.
    Triple { i: usize, j: usize, k: usize, s: usize, u: usize, v: usize },
    /// `E[h_s h_{s+u} h_{s+u+v} h_{s+u+v+w}]`.
    Quad { s: usize, u: usize, v: usize, w: usize },
}

/// Evaluates one variance cross moment, checking indices and orders against
/// what the tables support.
///
/// ```
/// use gjr_moments::model::{DerivedConstants, ForecastOrigin, GjrParams};
/// use gjr_moments::innovation::Innovation;
/// use gjr_moments::moments_aggregated::{variance_cross, CrossMomentTables, VarianceCross};
/// let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
/// let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(5e-5).unwrap()).unwrap();
/// let t = CrossMomentTables::new(&dc, 10, 4).unwrap();
/// let v = variance_cross(&t, VarianceCross::Pair { i: 1, j: 1, s: 2, u: 3 }).unwrap();
/// let m = t.moments();
/// let expected = dc.h_bar * m.m1(2) + 0.97f64.powi(3) * (m.m2(2) - dc.h_bar * m.m1(2));
/// assert!((v - expected).abs() < 1e-22);
/// ```
pub fn variance_cross(t: &CrossMomentTables, idx: VarianceCross) -> Result<f64> {
    let check = |order: usize, last: usize, gaps: &[usize], first: usize| -> Result<()> {
        if first == 0 || gaps.contains(&0) {
            return Err(Error::InvalidParams("cross moment indices must be at least 1".into()));
        }
        if order > t.order {
            return Err(Error::InvalidParams(format!(
                "cross moment of total order {order} needs tables of order {order}, have {}",
                t.order
            )));
        }
        if last > t.n {
            return Err(Error::InvalidParams(format!("horizon {last} exceeds table horizon {}", t.n)));
        }
        Ok(())
    };
    match idx {
        VarianceCross::Pair { i, j, s, u } => {
            check(i + j, s + u, &[u, i, j], s)?;
            Ok(t.pair(i, j, s, u))
        }
        VarianceCross::Triple { i, j, k, s, u, v } => {
            if k > 2 {
                return Err(Error::InvalidParams("the last power of a triple cross moment must be 1 or 2".into()));
            }
            check(i + j + k, s + u + v, &[u, v, i, j, k], s)?;
            Ok(t.triple(i, j, k, s, u, v))
        }
        VarianceCross::Quad { s, u, v, w } => {
            check(4, s + u + v + w, &[u, v, w], s)?;
            Ok(t.quad(s, u, v, w))
        }
    }
}

/// Return cross moments with a closed form in the variance moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsCross {
    /// `E[ε_s ε_{s+u}²]`.
    EpsEps2 { s: usize, u: usize },
    /// `E[ε_s ε_{s+u}³]`.
    EpsEps3 { s: usize, u: usize },
    /// `E[ε_s² ε_{s+u}²]`.
    Eps2Eps2 { s: usize, u: usize },
    /// `E[ε_s ε_{s+u} ε_{s+u+v}²]`.
    EpsEpsEps2 { s: usize, u: usize, v: usize },
}

/// Approximate `E[h_s^{3/2}]` and `E[h_s^{5/2}]`, exact at `s = 1`.
#[inline]
fn half_powers(t: &VarianceMomentTable, s: usize) -> (f64, f64) {
    if s == 1 {
        let h = t.m1(1);
        (h * h.sqrt(), h * h * h.sqrt())
    } else {
        (taylor_h_three_halves(t.m1(s), t.m2(s)), taylor_h_five_halves(t.m1(s), t.m2(s)))
    }
}

/// `θ¹_{su} = E[ε_s h_{s+u}]`, exact given `E[h_s^{3/2}]`.
pub fn theta1(dc: &DerivedConstants, s: usize, u: usize) -> Result<f64> {
    check_su(s, u)?;
    let t = VarianceMomentTable::new(dc, s, 2)?;
    Ok(dc.c9 * dc.phi.powi(u as i32 - 1) * half_powers(&t, s).0)
}

/// `θ²_{su} = E[ε_s h_{s+u}²]`.
///
/// Uses the closed form in `φ^{u−1}` and `γ^{u−1}` when `φ ≠ γ` and the
/// step recursion `θ²_{s,u+1} = 2ωφ θ¹_{su} + γ θ²_{su}` otherwise.
pub fn theta2(dc: &DerivedConstants, s: usize, u: usize) -> Result<f64> {
    check_su(s, u)?;
    let t = VarianceMomentTable::new(dc, s, 2)?;
    let (a, b) = half_powers(&t, s);
    let c10 = dc.c10()?;
    if dc.flags.phi_eq_gamma {
        let mut th1 = dc.c9 * a;
        let mut th2 = c10 * b + 2.0 * dc.omega * dc.c9 * a;
        for _ in 1..u {
            th2 = 2.0 * dc.omega * dc.phi * th1 + dc.gamma * th2;
            th1 *= dc.phi;
        }
        return Ok(th2);
    }
    let pu = dc.phi.powi(u as i32 - 1);
    let gu = dc.gamma.powi(u as i32 - 1);
    Ok(c10 * gu * b + 2.0 * dc.omega * dc.c9 * a * (gu + dc.phi * (pu - gu) / (dc.phi - dc.gamma)))
}

/// `θ^{3/2}_{su} ≈ E[ε_s h_{s+u}^{3/2}]` from the second-order Taylor
/// expansion of `h^{3/2}` around `E[h_{s+u}]`.
pub fn theta_three_halves(dc: &DerivedConstants, s: usize, u: usize) -> Result<f64> {
    let m = crate::moments_forward::variance_mean(dc, s + u);
    Ok(theta32_from(m, theta1(dc, s, u)?, theta2(dc, s, u)?))
}

#[inline]
fn theta32_from(m: f64, th1: f64, th2: f64) -> f64 {
    let r = m.sqrt();
    0.75 * r * th1 + 0.375 * th2 / r
}

fn check_su(s: usize, u: usize) -> Result<()> {
    if s == 0 || u == 0 {
        return Err(Error::InvalidParams("cross moment indices must be at least 1".into()));
    }
    Ok(())
}

/// Evaluates one return cross moment.
///
/// ```
/// use gjr_moments::model::{DerivedConstants, ForecastOrigin, GjrParams};
/// use gjr_moments::innovation::Innovation;
/// use gjr_moments::moments_aggregated::{eps_cross, EpsCross};
/// let p = GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.90);
/// let dc = DerivedConstants::new(&p, &Innovation::normal(), ForecastOrigin::new(5e-5).unwrap()).unwrap();
/// let v = eps_cross(&dc, EpsCross::EpsEps2 { s: 1, u: 1 }).unwrap();
/// assert!((v + 1.6926e-8).abs() < 1e-12);
/// ```
pub fn eps_cross(dc: &DerivedConstants, kind: EpsCross) -> Result<f64> {
    match kind {
        EpsCross::EpsEps2 { s, u } => theta1(dc, s, u),
        EpsCross::EpsEps3 { s, u } => Ok(dc.tau * theta_three_halves(dc, s, u)?),
        EpsCross::Eps2Eps2 { s, u } => {
            check_su(s, u)?;
            let t = VarianceMomentTable::new(dc, s, 2)?;
            Ok(eps2_eps2(dc, &t, dc.phi.powi(u as i32), s))
        }
        EpsCross::EpsEpsEps2 { s, u, v } => {
            check_su(s, u)?;
            check_su(s, v)?;
            Ok(dc.c9 * dc.phi.powi(v as i32 - 1) * theta_three_halves(dc, s, u)?)
        }
    }
}

/// `E[ε_s² ε_{s+u}²]` given `φ^u`.
#[inline]
fn eps2_eps2(dc: &DerivedConstants, t: &VarianceMomentTable, phi_u: f64, s: usize) -> f64 {
    let e_z2x = dc.kappa * (dc.alpha + dc.lambda * dc.f0) + dc.beta;
    dc.h_bar * (1.0 - phi_u) * t.m1(s) + phi_u / dc.phi * e_z2x * t.m2(s)
}

/// `Σ_{s=1}^n E_t[h_{t+s}] = n·h̄ + (1−φⁿ)(h_{t+1} − h̄)/(1−φ)`.
pub fn aggregated_return_variance_closed_form(dc: &DerivedConstants, n: usize) -> f64 {
    n as f64 * dc.h_bar + (1.0 - dc.phi.powi(n as i32)) / (1.0 - dc.phi) * (dc.h_next - dc.h_bar)
}

/// Mean, variance, skewness and kurtosis of the aggregated return `R_{tn}`.
///
/// Skewness and kurtosis use the Taylor approximations of `E[h^{3/2}]`,
/// `E[h^{5/2}]` and `E[ε_s h_{s+u}^{3/2}]`. The kurtosis costs `O(n²)` and is
/// refused above `caps.return_kurtosis`.
pub fn aggregated_return_moments(dc: &DerivedConstants, n: usize, caps: AggregationCaps) -> Result<MomentSet> {
    if n == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    if n > caps.return_kurtosis {
        return Err(Error::ComplexityBudget { what: "aggregated return kurtosis".into(), n, cap: caps.return_kurtosis });
    }
    let t = VarianceMomentTable::new(dc, n, 2)?;
    let halves: Vec<(f64, f64)> = (1..=n).map(|s| half_powers(&t, s)).collect();
    let mut phi_pow = Vec::with_capacity(n + 1);
    let mut p = 1.0;
    for _ in 0..=n {
        phi_pow.push(p);
        p *= dc.phi;
    }
    // Σ_{w=1}^{k} φ^{w−1}
    let geo = |k: usize| (1.0 - phi_pow[k]) / (1.0 - dc.phi);

    let second: CompensatedSum = (1..=n).map(|s| t.m1(s)).collect();
    let second = second.value();

    let mut third = CompensatedSum::new();
    for s in 1..=n {
        let a = halves[s - 1].0;
        third.add(dc.tau * a);
        third.add(3.0 * dc.c9 * a * geo(n - s));
    }
    let third = third.value();

    let symmetric_returns = dc.tau == 0.0 && dc.c9 == 0.0;
    let c10 = if symmetric_returns { 0.0 } else { dc.c10()? };
    // Terms are scaled by the squared variance as they are summed so that a
    // single-period horizon reproduces the innovation kurtosis exactly.
    let second_sq = second * second;
    let partials: Vec<CompensatedSum> = (1..=n)
        .into_par_iter()
        .map(|s| {
            let mut acc = CompensatedSum::new();
            acc.add(dc.kappa * (t.m2(s) / second_sq));
            let (a, b) = halves[s - 1];
            let mut th1 = dc.c9 * a;
            let mut th2 = c10 * b + 2.0 * dc.omega * dc.c9 * a;
            for u in 1..=(n - s) {
                let mut term = 6.0 * eps2_eps2(dc, &t, phi_pow[u], s);
                if !symmetric_returns {
                    let th32 = theta32_from(t.m1(s + u), th1, th2);
                    term += 4.0 * dc.tau * th32 + 12.0 * dc.c9 * th32 * geo(n - s - u);
                }
                acc.add(term / second_sq);
                th2 = 2.0 * dc.omega * dc.phi * th1 + dc.gamma * th2;
                th1 *= dc.phi;
            }
            acc
        })
        .collect();
    let mut fourth = CompensatedSum::new();
    for p in &partials {
        fourth.merge(p);
    }
    let kurtosis = fourth.value();
    if !second.is_finite() || !third.is_finite() || !kurtosis.is_finite() {
        return Err(Error::Overflow { what: "aggregated return moments".into(), horizon: n });
    }
    Ok(MomentSet {
        mean: n as f64 * dc.mu,
        variance: second,
        skewness: third / second.powf(1.5),
        kurtosis,
    })
}

/// Mean and variance of the aggregated variance `Σ_{s≤n} h_{t+s}`.
///
/// The variance sums `Var(h_s) + 2 Σ_u Cov(h_s, h_{s+u})` with
/// `Cov(h_s, h_{s+u}) = φ^u Var(h_s)`, which follows from the pair moment
/// `E[h_s h_{s+u}] = h̄ E[h_s] + φ^u (E[h_s²] − h̄ E[h_s])` and avoids
/// subtracting two nearly equal raw moments.
pub fn aggregated_variance_mean_variance(dc: &DerivedConstants, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let t = VarianceMomentTable::new(dc, n, 2)?;
    let mean: CompensatedSum = (1..=n).map(|s| t.m1(s)).collect();
    let mut var = CompensatedSum::new();
    for s in 1..=n {
        let v = if s == 1 { 0.0 } else { t.m2(s) - t.m1(s) * t.m1(s) };
        // Σ_{u=1}^{n−s} φ^u
        let g = dc.phi * (1.0 - dc.phi.powi((n - s) as i32)) / (1.0 - dc.phi);
        var.add(v * (1.0 + 2.0 * g));
    }
    Ok((mean.value(), var.value()))
}

/// Closed form of the raw second moment `E_t[(Σ_{s≤n} h_{t+s})²]`, valid for
/// `γ ≠ 1` and `φ ≠ γ`.
pub fn aggregated_variance_second_raw_closed_form(dc: &DerivedConstants, n: usize) -> Result<f64> {
    if dc.flags.near_unit_gamma || dc.flags.phi_eq_gamma {
        return Err(Error::UnsupportedRegion("the closed form needs gamma != 1 and phi != gamma".into()));
    }
    let nf = n as f64;
    let (phi, gamma) = (dc.phi, dc.gamma);
    let (c1, c2, c3, hb, h1) = (dc.c1, dc.c2, dc.c3, dc.h_bar, dc.h_next);
    let phin = phi.powi(n as i32);
    let gamn = gamma.powi(n as i32);
    let gphi = (1.0 - phin) / (1.0 - phi);
    let ggam = (1.0 - gamn) / (1.0 - gamma);
    let d = h1 * h1 - c3;
    let sum_m2 = nf * c1 + d * ggam + c2 * gphi;
    let mean_part = 2.0 * hb * (nf * (nf - 1.0) * hb / 2.0 + (nf - gphi) * (h1 - hb) / (1.0 - phi));
    let cross_m2 = 2.0 * phi / (1.0 - phi)
        * (nf * (c1 - c2 * phin / phi) + (c2 - c1) * gphi + d * (ggam - (phin - gamn) / (phi - gamma)));
    let cross_m1 = 2.0 * hb * phi / (1.0 - phi) * (nf * (hb - phin / phi * (h1 - hb)) + (h1 - 2.0 * hb) * gphi);
    Ok(sum_m2 + mean_part + cross_m2 - cross_m1)
}

/// Central third moment of `Σ h`: the diagonal terms, `3·A_{s,u}` for each
/// pair of dates and `6·B_{s,u,v}` for each triple, where `A` and `B` are the
/// central pair and triple products.
fn aggregated_variance_third(t: &CrossMomentTables, n: usize) -> f64 {
    let m1 = |s: usize| t.m1(s);
    let partials: Vec<CompensatedSum> = (1..=n)
        .into_par_iter()
        .map(|s| {
            let mut acc = CompensatedSum::new();
            let r = t.moments().row(s);
            acc.add(r[2] - 3.0 * r[1] * r[0] + 2.0 * r[0].powi(3));
            for u in 1..=(n - s) {
                let a = s;
                let b = s + u;
                let mu11 = t.pair(1, 1, s, u);
                let mu12 = t.pair(1, 2, s, u);
                let mu21 = t.pair(2, 1, s, u);
                let a_term = mu21 + mu12 + 2.0 * (m1(a) + m1(b)) * (m1(a) * m1(b) - mu11)
                    - m1(a) * t.moments().m2(b)
                    - m1(b) * t.moments().m2(a);
                acc.add(3.0 * a_term);
                for v in 1..=(n - s - u) {
                    let c = b + v;
                    let mu111 = t.triple_linear(mu11, mu12, v);
                    let b_term = mu111 - m1(a) * t.pair(1, 1, b, v) - m1(b) * t.pair(1, 1, a, u + v) - m1(c) * mu11
                        + 2.0 * m1(a) * m1(b) * m1(c);
                    acc.add(6.0 * b_term);
                }
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Central fourth moment of `Σ h`: the diagonal terms plus the pair, triple
/// and quadruple central products `C`, `D` and `E`.
fn aggregated_variance_fourth(t: &CrossMomentTables, n: usize) -> f64 {
    let partials: Vec<CompensatedSum> = (1..=n)
        .into_par_iter()
        .map(|s| {
            let mut acc = CompensatedSum::new();
            let r = t.moments().raw(s);
            acc.add(r.central().2);
            for u in 1..=(n - s) {
                acc.add(c_term(t, s, u));
                for v in 1..=(n - s - u) {
                    acc.add(12.0 * d_term(t, s, u, v));
                    let mu111 = t.triple(1, 1, 1, s, u, v);
                    let mu112 = t.triple(1, 1, 2, s, u, v);
                    for w in 1..=(n - s - u - v) {
                        acc.add(24.0 * e_term(t, s, u, v, w, mu111, mu112));
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// `C_{s,u}`: the pair contributions to the central fourth moment, including
/// the multinomial weights 4 and 6.
pub(crate) fn c_term(t: &CrossMomentTables, s: usize, u: usize) -> f64 {
    let b = s + u;
    let (ma, mb) = (t.m1(s), t.m1(b));
    let mv = t.moments();
    let mu11 = t.pair(1, 1, s, u);
    let mu21 = t.pair(2, 1, s, u);
    let mu12 = t.pair(1, 2, s, u);
    let mu31 = t.pair(3, 1, s, u);
    let mu13 = t.pair(1, 3, s, u);
    let mu22 = t.pair(2, 2, s, u);
    let four = mu31 + mu13 - 3.0 * (ma * mu21 + mb * mu12) - (mb * mv.m3(s) + ma * mv.m3(b))
        + 3.0 * ma * (ma * mu11 + mb * mv.m2(s) - ma * ma * mb)
        + 3.0 * mb * (mb * mu11 + ma * mv.m2(b) - ma * mb * mb);
    let six = mu22 - 2.0 * (ma * mu12 + mb * mu21) + ma * ma * mv.m2(b) + mb * mb * mv.m2(s) + 4.0 * ma * mb * mu11
        - 3.0 * (ma * mb) * (ma * mb);
    4.0 * four + 6.0 * six
}

/// `D_{s,u,v}`: the sum of the three central triple terms with one squared
/// factor.
pub(crate) fn d_term(t: &CrossMomentTables, s: usize, u: usize, v: usize) -> f64 {
    let (a, b, c) = (s, s + u, s + u + v);
    let (ma, mb, mc) = (t.m1(a), t.m1(b), t.m1(c));
    let mv = t.moments();
    let mu111 = t.triple(1, 1, 1, s, u, v);
    let mu211 = t.triple(2, 1, 1, s, u, v);
    let mu121 = t.triple(1, 2, 1, s, u, v);
    let mu112 = t.triple(1, 1, 2, s, u, v);
    let p11_ab = t.pair(1, 1, a, u);
    let p11_ac = t.pair(1, 1, a, u + v);
    let p11_bc = t.pair(1, 1, b, v);
    let first = mu211 - 2.0 * ma * mu111 - mb * t.pair(2, 1, a, u + v) - mc * t.pair(2, 1, a, u) + ma * ma * p11_bc
        + 2.0 * ma * mb * p11_ac
        + 2.0 * ma * mc * p11_ab
        + mb * mc * mv.m2(a)
        - 3.0 * ma * ma * mb * mc;
    let second = mu121 - 2.0 * mb * mu111 - ma * t.pair(2, 1, b, v) - mc * t.pair(1, 2, a, u) + mb * mb * p11_ac
        + 2.0 * ma * mb * p11_bc
        + 2.0 * mb * mc * p11_ab
        + ma * mc * mv.m2(b)
        - 3.0 * ma * mb * mb * mc;
    let third = mu112 - 2.0 * mc * mu111 - ma * t.pair(1, 2, b, v) - mb * t.pair(1, 2, a, u + v) + mc * mc * p11_ab
        + 2.0 * ma * mc * p11_bc
        + 2.0 * mb * mc * p11_ac
        + ma * mb * mv.m2(c)
        - 3.0 * ma * mb * mc * mc;
    first + second + third
}

/// `E_{s,u,v,w}`: the central moment of four distinct variances, given the
/// precomputed `E[h_s h_{s+u} h_{s+u+v}]` and `E[h_s h_{s+u} h_{s+u+v}²]`.
#[inline]
pub(crate) fn e_term(t: &CrossMomentTables, s: usize, u: usize, v: usize, w: usize, mu111: f64, mu112: f64) -> f64 {
    let (a, b, c, d) = (s, s + u, s + u + v, s + u + v + w);
    let (ma, mb, mc, md) = (t.m1(a), t.m1(b), t.m1(c), t.m1(d));
    let mu1111 = t.h_bar * (1.0 - t.phi_pow[w]) * mu111 + t.phi_pow[w] * mu112;
    // E[h_a h_b h_d]
    let abd = t.triple_linear(t.pair(1, 1, a, u), t.pair(1, 2, a, u), v + w);
    // E[h_b h_c h_d]
    let bcd = t.triple_linear(t.pair(1, 1, b, v), t.pair(1, 2, b, v), w);
    // E[h_a h_c h_d]
    let acd = t.triple_linear(t.pair(1, 1, a, u + v), t.pair(1, 2, a, u + v), w);
    mu1111 - mc * abd - md * mu111 + mc * md * t.pair(1, 1, a, u) - ma * bcd
        + ma * mc * t.pair(1, 1, b, v + w)
        + ma * md * t.pair(1, 1, b, v)
        - mb * acd
        + mb * mc * t.pair(1, 1, a, u + v + w)
        + mb * md * t.pair(1, 1, a, u + v)
        + ma * mb * t.pair(1, 1, c, w)
        - 3.0 * ma * mb * mc * md
}

/// Mean, variance, skewness and kurtosis of the aggregated variance
/// `Σ_{s≤n} h_{t+s}`.
///
/// Skewness and kurtosis cost `O(n³)` and `O(n⁴)`, are refused above
/// `caps.variance_higher`, and are only served for `γ < 1`.
pub fn aggregated_variance_moments(dc: &DerivedConstants, n: usize, caps: AggregationCaps) -> Result<MomentSet> {
    if n < 2 {
        return Err(Error::DegenerateDistribution(
            "the aggregated variance over one period is known, so its skewness and kurtosis are undefined".into(),
        ));
    }
    if n > caps.variance_higher {
        return Err(Error::ComplexityBudget {
            what: "aggregated variance skewness and kurtosis".into(),
            n,
            cap: caps.variance_higher,
        });
    }
    if dc.flags.near_unit_gamma || dc.gamma >= 1.0 {
        return Err(Error::UnsupportedRegion(format!(
            "aggregated variance skewness and kurtosis are only served for gamma < 1, got gamma = {}",
            dc.gamma
        )));
    }
    let t = CrossMomentTables::new(dc, n, 4)?;
    let (mean, var) = aggregated_variance_mean_variance(dc, n)?;
    let third = aggregated_variance_third(&t, n);
    let fourth = aggregated_variance_fourth(&t, n);
    if !third.is_finite() || !fourth.is_finite() {
        return Err(Error::Overflow { what: "aggregated variance moments".into(), horizon: n });
    }
    MomentSet::from_central(mean, var, third, fourth)
}
