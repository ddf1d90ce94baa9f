//! Goodness-of-fit statistics comparing a hypothesized distribution function
//! with a sample: Kolmogorov–Smirnov, Cramér–von Mises and Anderson–Darling,
//! plus critical values simulated under a null pipeline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::density::std_normal_cdf;
use crate::error::{Error, Result};

/// Asymptotic 5% critical value of `√T·D`, the Kolmogorov distribution's
/// 0.95 quantile.
pub const KS_CRITICAL_5PCT: f64 = 1.3581;
/// Asymptotic 5% critical value of the Cramér–von Mises statistic.
pub const CVM_CRITICAL_5PCT: f64 = 0.461;
/// Asymptotic 5% critical value of the Anderson–Darling statistic.
pub const AD_CRITICAL_5PCT: f64 = 2.492;
/// Distance of clamped cdf values from 0 and 1 in the Anderson–Darling sum.
pub const AD_CLAMP: f64 = 1e-15;

/// The statistic a [`GofResult`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatKind {
    Ks,
    Cvm,
    Ad,
}

impl StatKind {
    /// Asymptotic 5% critical value on the scale of the statistic.
    pub fn asymptotic_critical_value(&self) -> f64 {
        match self {
            StatKind::Ks => KS_CRITICAL_5PCT,
            StatKind::Cvm => CVM_CRITICAL_5PCT,
            StatKind::Ad => AD_CRITICAL_5PCT,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StatKind::Ks => "KS",
            StatKind::Cvm => "CVM",
            StatKind::Ad => "AD",
        }
    }
}

/// A test statistic with its optional 5% decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofResult {
    pub kind: StatKind,
    /// `√T·D` for KS, the usual sums for CVM and AD.
    pub statistic: f64,
    /// The unscaled KS distance `D = statistic/√T`; equals `statistic` for
    /// the other kinds.
    pub distance: f64,
    pub sample_size: usize,
    pub critical_value_5pct: Option<f64>,
    pub rejected: Option<bool>,
    /// Number of cdf values clamped into `(0, 1)` (Anderson–Darling only).
    pub clamped: usize,
}

impl GofResult {
    fn new(kind: StatKind, statistic: f64, distance: f64, sample_size: usize, clamped: usize) -> Self {
        GofResult { kind, statistic, distance, sample_size, critical_value_5pct: None, rejected: None, clamped }
    }

    /// Attaches a critical value and the resulting decision.
    pub fn with_critical_value(mut self, cv: f64) -> Self {
        self.critical_value_5pct = Some(cv);
        self.rejected = Some(self.statistic > cv);
        self
    }

    /// Attaches the asymptotic 5% critical value.
    pub fn with_asymptotic_critical_value(self) -> Self {
        let cv = self.kind.asymptotic_critical_value();
        self.with_critical_value(cv)
    }
}

fn check_sorted(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParams("sample contains NaN".into()));
    }
    if sample.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("sample must be sorted ascending".into()));
    }
    Ok(())
}

/// Kolmogorov–Smirnov statistic of a sorted sample.
///
/// ```
/// use gjr_moments::density::std_normal_cdf;
/// use gjr_moments::gof::ks_statistic;
/// let r = ks_statistic(std_normal_cdf, &[-1.0, 0.0, 1.0, 2.0]).unwrap();
/// // The largest gap is just above x = 1, where F = Φ(1) and the ECDF is 1/2.
/// let d = std_normal_cdf(1.0) - 0.5;
/// assert!((r.distance - d).abs() < 1e-15);
/// assert!((r.statistic - 2.0 * d).abs() < 1e-15);
/// ```
pub fn ks_statistic<F: Fn(f64) -> f64>(cdf: F, sample: &[f64]) -> Result<GofResult> {
    check_sorted(sample)?;
    let t = sample.len() as f64;
    let d = sample.iter().enumerate().fold(0.0_f64, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max(f - i as f64 / t).max((i + 1) as f64 / t - f)
    });
    Ok(GofResult::new(StatKind::Ks, t.sqrt() * d, d, sample.len(), 0))
}

/// Cramér–von Mises statistic of a sorted sample.
pub fn cvm_statistic<F: Fn(f64) -> f64>(cdf: F, sample: &[f64]) -> Result<GofResult> {
    check_sorted(sample)?;
    let t = sample.len() as f64;
    let s: f64 = sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let g = cdf(x) - (2 * i + 1) as f64 / (2.0 * t);
            g * g
        })
        .sum::<f64>()
        + 1.0 / (12.0 * t);
    Ok(GofResult::new(StatKind::Cvm, s, s, sample.len(), 0))
}

fn ad_sum(u: &[f64]) -> f64 {
    let t = u.len();
    let tf = t as f64;
    let s: f64 = (0..t).map(|i| (2 * i + 1) as f64 / tf * (u[i].ln() + (1.0 - u[t - 1 - i]).ln())).sum();
    -s - tf
}

/// Anderson–Darling statistic of a sorted sample; every cdf value must lie
/// strictly inside `(0, 1)`.
pub fn ad_statistic<F: Fn(f64) -> f64>(cdf: F, sample: &[f64]) -> Result<GofResult> {
    check_sorted(sample)?;
    let u: Vec<f64> = sample.iter().map(|&x| cdf(x)).collect();
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::DegenerateCdfValue { index, value });
    }
    let s = ad_sum(&u);
    Ok(GofResult::new(StatKind::Ad, s, s, sample.len(), 0))
}

/// Anderson–Darling statistic with cdf values clamped to
/// `[AD_CLAMP, 1 − AD_CLAMP]`, for approximations whose cdf can leave
/// `(0, 1)`. The number of clamped values is reported.
pub fn ad_statistic_clamped<F: Fn(f64) -> f64>(cdf: F, sample: &[f64]) -> Result<GofResult> {
    check_sorted(sample)?;
    let mut clamped = 0;
    let u: Vec<f64> = sample
        .iter()
        .map(|&x| {
            let v = cdf(x);
            let c = v.clamp(AD_CLAMP, 1.0 - AD_CLAMP);
            if c != v {
                clamped += 1;
            }
            c
        })
        .collect();
    let s = ad_sum(&u);
    Ok(GofResult::new(StatKind::Ad, s, s, sample.len(), clamped))
}

/// Computes the requested statistic; Anderson–Darling uses clamping.
pub fn statistic<F: Fn(f64) -> f64>(kind: StatKind, cdf: F, sample: &[f64]) -> Result<GofResult> {
    match kind {
        StatKind::Ks => ks_statistic(cdf, sample),
        StatKind::Cvm => cvm_statistic(cdf, sample),
        StatKind::Ad => ad_statistic_clamped(cdf, sample),
    }
}

/// Data-generating and testing procedure under the null hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullPipeline {
    /// The hypothesized cdf is known: uniforms tested against the identity.
    FullySpecified,
    /// Normal data tested against a normal with the sample mean and standard
    /// deviation plugged in.
    EstimatedNormal,
}

/// Minimum number of trials for a simulated critical value.
pub const MIN_CRITICAL_VALUE_TRIALS: usize = 100;

/// Generator for trial `index` of a run seeded with `seed`; independent of
/// scheduling so parallel runs are reproducible.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Upper `level` quantile of a statistic over `n_trials` seeded trials, each
/// produced by `trial` from its own generator.
pub fn simulate_critical_values_with<F>(n_trials: usize, level: f64, seed: u64, trial: F) -> Result<f64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n_trials < MIN_CRITICAL_VALUE_TRIALS {
        return Err(Error::ComplexityBudget {
            what: "critical-value simulation (minimum trial count)".into(),
            n: n_trials,
            cap: MIN_CRITICAL_VALUE_TRIALS,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParams(format!("level must be in (0, 1), got {level}")));
    }
    let mut stats = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| trial(&mut trial_rng(seed, i)))
        .collect::<Result<Vec<f64>>>()?;
    stats.sort_by(f64::total_cmp);
    let rank = ((1.0 - level) * n_trials as f64).ceil() as usize;
    Ok(stats[rank.clamp(1, n_trials) - 1])
}

/// Simulated upper-`level` critical value of `kind` for samples of size `t`
/// under `pipeline`.
pub fn simulate_critical_values(
    pipeline: NullPipeline,
    kind: StatKind,
    n_trials: usize,
    t: usize,
    level: f64,
    seed: u64,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::EmptySample);
    }
    simulate_critical_values_with(n_trials, level, seed, |rng| match pipeline {
        NullPipeline::FullySpecified => {
            let mut u: Vec<f64> = (0..t).map(|_| rng.random::<f64>()).collect();
            u.sort_by(f64::total_cmp);
            Ok(statistic(kind, |x| x, &u)?.statistic)
        }
        NullPipeline::EstimatedNormal => {
            let mut x: Vec<f64> = (0..t).map(|_| StandardNormal.sample(rng)).collect();
            x.sort_by(f64::total_cmp);
            let n = t as f64;
            let mean = x.iter().sum::<f64>() / n;
            let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            Ok(statistic(kind, |v| std_normal_cdf((v - mean) / sd), &x)?.statistic)
        }
    })
}
