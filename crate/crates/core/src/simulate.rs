//! Monte Carlo simulation of GJR-GARCH(1,1) paths from a forecast origin,
//! with streaming moment reduction and sample-moment standard errors.
//!
//! Path `i` draws from its own ChaCha8 stream `(seed, i)`, and chunk results
//! are merged in path order, so output is bit-identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::innovation::{Innovation, InnovationSampler};
use crate::model::{ForecastOrigin, GjrParams};
use crate::moments_forward::MomentSet;

/// Paths generated and reduced together by one task.
pub const CHUNK_PATHS: usize = 4096;
/// Largest `n_paths × horizon` that [`simulate`] will materialize.
pub const MATERIALIZE_CAP: usize = 200_000_000;

/// What to simulate.
#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub params: GjrParams,
    pub innovation: Innovation,
    pub origin: ForecastOrigin,
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimulationSpec {
    fn validate(&self) -> Result<()> {
        let p = &self.params;
        if [p.mu, p.omega, p.alpha, p.lambda, p.beta].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if !(p.omega > 0.0) || p.alpha < 0.0 || p.beta < 0.0 || p.alpha + p.lambda < 0.0 {
            return Err(Error::InvalidParams(
                "simulation needs omega > 0, alpha >= 0, beta >= 0 and alpha + lambda >= 0".into(),
            ));
        }
        if self.horizon == 0 || self.n_paths == 0 {
            return Err(Error::InvalidParams("horizon and n_paths must be at least 1".into()));
        }
        Ok(())
    }
}

/// Generator of path `index`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A block of consecutive simulated paths, stored path-major.
#[derive(Debug, Clone)]
pub struct PathChunk {
    first_path: usize,
    n_paths: usize,
    horizon: usize,
    returns: Vec<f64>,
    variances: Vec<f64>,
}

impl PathChunk {
    /// Index of the first path in the chunk.
    pub fn first_path(&self) -> usize {
        self.first_path
    }

    pub fn len(&self) -> usize {
        self.n_paths
    }

    pub fn is_empty(&self) -> bool {
        self.n_paths == 0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Returns `r_{t+1} … r_{t+H}` of path `i` (relative to the chunk).
    pub fn returns(&self, i: usize) -> &[f64] {
        &self.returns[i * self.horizon..(i + 1) * self.horizon]
    }

    /// Conditional variances `h_{t+1} … h_{t+H}` of path `i`.
    pub fn variances(&self, i: usize) -> &[f64] {
        &self.variances[i * self.horizon..(i + 1) * self.horizon]
    }

    fn generate(spec: &SimulationSpec, sampler: &InnovationSampler, first_path: usize, n_paths: usize) -> Self {
        let hz = spec.horizon;
        let p = &spec.params;
        let mut returns = Vec::with_capacity(n_paths * hz);
        let mut variances = Vec::with_capacity(n_paths * hz);
        for i in 0..n_paths {
            let mut rng = path_rng(spec.seed, (first_path + i) as u64);
            let mut h = spec.origin.h_next;
            for _ in 0..hz {
                let eps = h.sqrt() * sampler.sample(&mut rng);
                returns.push(p.mu + eps);
                variances.push(h);
                let a = if eps < 0.0 { p.alpha + p.lambda } else { p.alpha };
                h = p.omega + a * eps * eps + p.beta * h;
            }
        }
        PathChunk { first_path, n_paths, horizon: hz, returns, variances }
    }
}

/// Simulates all paths chunk by chunk in parallel, reduces each chunk with
/// `reduce`, and folds the chunk results in path order with `merge`.
pub fn simulate_chunks<A, F, M>(spec: &SimulationSpec, reduce: F, merge: M) -> Result<A>
where
    A: Send,
    F: Fn(&PathChunk) -> A + Sync,
    M: Fn(A, A) -> A,
{
    spec.validate()?;
    let sampler = spec.innovation.sampler()?;
    let n_chunks = spec.n_paths.div_ceil(CHUNK_PATHS);
    let parts: Vec<A> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let first = c * CHUNK_PATHS;
            let n = CHUNK_PATHS.min(spec.n_paths - first);
            reduce(&PathChunk::generate(spec, &sampler, first, n))
        })
        .collect();
    let mut it = parts.into_iter();
    let first = it.next().expect("at least one chunk");
    Ok(it.fold(first, merge))
}

/// Fully materialized simulation output, indexed `[horizon − 1][path]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub forward_returns: Vec<Vec<f64>>,
    pub aggregated_returns: Vec<Vec<f64>>,
    pub forward_variances: Vec<Vec<f64>>,
    pub aggregated_variances: Vec<Vec<f64>>,
}

/// Simulates and stores every path. Use [`simulate_moments`] for large runs.
pub fn simulate(spec: &SimulationSpec) -> Result<SimulationOutput> {
    let cells = spec.n_paths.saturating_mul(spec.horizon);
    if cells > MATERIALIZE_CAP {
        return Err(Error::ComplexityBudget { what: "materialized simulation cells".into(), n: cells, cap: MATERIALIZE_CAP });
    }
    let hz = spec.horizon;
    let chunks = simulate_chunks(spec, |c| vec![c.clone()], |mut a, b| {
        a.extend(b);
        a
    })?;
    let empty = || vec![Vec::with_capacity(spec.n_paths); hz];
    let mut out = SimulationOutput {
        forward_returns: empty(),
        aggregated_returns: empty(),
        forward_variances: empty(),
        aggregated_variances: empty(),
    };
    for c in &chunks {
        for i in 0..c.len() {
            let (r, h) = (c.returns(i), c.variances(i));
            let (mut cr, mut ch) = (0.0, 0.0);
            for s in 0..hz {
                cr += r[s];
                ch += h[s];
                out.forward_returns[s].push(r[s]);
                out.forward_variances[s].push(h[s]);
                out.aggregated_returns[s].push(cr);
                out.aggregated_variances[s].push(ch);
            }
        }
    }
    Ok(out)
}

/// One return series of length `len` from path `0` of a run seeded with
/// `seed`, started at the unconditional variance and with the first
/// `burn_in` returns discarded.
pub fn simulate_series(
    params: &GjrParams,
    innovation: &Innovation,
    len: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let f0 = innovation.cdf_at_zero()?;
    params.validate(f0)?;
    let h_bar = params.omega / (1.0 - params.persistence(f0));
    let spec = SimulationSpec {
        params: *params,
        innovation: innovation.clone(),
        origin: ForecastOrigin::new(h_bar)?,
        horizon: len + burn_in,
        n_paths: 1,
        seed,
    };
    spec.validate()?;
    let chunk = PathChunk::generate(&spec, &innovation.sampler()?, 0, 1);
    Ok(chunk.returns(0)[burn_in..].to_vec())
}

/// Highest central power sum tracked, enough for the standard error of the
/// sample kurtosis.
const MAX_ORDER: usize = 8;

/// Count, mean and central power sums `Σ(x − x̄)^p`, `p = 2..=8`, merged
/// across blocks with the pairwise update formulas for arbitrary order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    sums: [f64; MAX_ORDER + 1],
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Default for MomentAccumulator {
    fn default() -> Self {
        MomentAccumulator { n: 0, mean: 0.0, sums: [0.0; MAX_ORDER + 1] }
    }
}

impl MomentAccumulator {
    /// Accumulator of a block of observations (two passes over the block).
    pub fn from_slice(xs: &[f64]) -> Self {
        let mut a = MomentAccumulator::default();
        if xs.is_empty() {
            return a;
        }
        a.n = xs.len() as u64;
        a.mean = xs.iter().sum::<f64>() / xs.len() as f64;
        for &x in xs {
            let d = x - a.mean;
            let mut dp = d;
            for p in 2..=MAX_ORDER {
                dp *= d;
                a.sums[p] += dp;
            }
        }
        a
    }

    /// Combines with the accumulator of a disjoint block.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let mut sums = [0.0; MAX_ORDER + 1];
        for p in 2..=MAX_ORDER {
            let mut s = self.sums[p] + other.sums[p];
            for k in 1..=p - 2 {
                s += binomial(p, k)
                    * delta.powi(k as i32)
                    * ((-nb / n).powi(k as i32) * self.sums[p - k] + (na / n).powi(k as i32) * other.sums[p - k]);
            }
            s += (na * nb * delta / n).powi(p as i32)
                * (1.0 / nb.powi(p as i32 - 1) - (-1.0 / na).powi(p as i32 - 1));
            sums[p] = s;
        }
        self.mean += delta * nb / n;
        self.n += other.n;
        self.sums = sums;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Sample moments with standard errors.
    pub fn moments(&self) -> Result<EmpiricalMoments> {
        if self.n < 4 {
            return Err(Error::TooFewObservations { needed: 4, got: self.n as usize });
        }
        let n = self.n as f64;
        let mut m = [0.0; MAX_ORDER + 1];
        m[0] = 1.0;
        for p in 2..=MAX_ORDER {
            m[p] = self.sums[p] / n;
        }
        if !(m[2] > 0.0) {
            return Err(Error::DegenerateSample);
        }
        let (m2, m3, m4) = (m[2], m[3], m[4]);
        let moments = MomentSet {
            mean: self.mean,
            variance: self.sums[2] / (n - 1.0),
            skewness: m3 / m2.powf(1.5),
            kurtosis: m4 / (m2 * m2),
        };
        // Covariance of the influence functions of central moments j and k.
        let cov = |j: usize, k: usize| -> f64 {
            let mm = |i: usize| if i == 1 { 0.0 } else { m[i] };
            mm(j + k) - mm(j) * mm(k) - k as f64 * mm(k - 1) * mm(j + 1) - j as f64 * mm(j - 1) * mm(k + 1)
                + (j * k) as f64 * mm(j - 1) * mm(k - 1) * m2
        };
        let delta_se = |grad: &[(usize, f64)]| -> f64 {
            let v: f64 = grad
                .iter()
                .flat_map(|&(j, gj)| grad.iter().map(move |&(k, gk)| gj * gk * cov(j, k)))
                .sum();
            (v.max(0.0) / n).sqrt()
        };
        let standard_errors = MomentStandardErrors {
            mean: (m2 / n).sqrt(),
            variance: delta_se(&[(2, 1.0)]),
            skewness: delta_se(&[(2, -1.5 * m3 / m2.powf(2.5)), (3, 1.0 / m2.powf(1.5))]),
            kurtosis: delta_se(&[(2, -2.0 * m4 / m2.powi(3)), (4, 1.0 / (m2 * m2))]),
        };
        Ok(EmpiricalMoments {
            moments,
            n: self.n as usize,
            standard_errors,
            normal_skewness_se: (6.0 / n).sqrt(),
            normal_kurtosis_se: (24.0 / n).sqrt(),
        })
    }
}

/// Delta-method standard errors that remain valid for non-normal samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStandardErrors {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Sample moments of one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMoments {
    /// Mean, unbiased variance, and standardized third and fourth central
    /// moments.
    pub moments: MomentSet,
    pub n: usize,
    pub standard_errors: MomentStandardErrors,
    /// `√(6/T)`, the skewness standard error under normality.
    pub normal_skewness_se: f64,
    /// `√(24/T)`, the kurtosis standard error under normality.
    pub normal_kurtosis_se: f64,
}

/// Sample moments with standard errors.
///
/// ```
/// use gjr_moments::simulate::empirical_moments;
/// let e = empirical_moments(&[-1.0, 0.0, 1.0, 0.0]).unwrap();
/// assert_eq!(e.moments.mean, 0.0);
/// assert_eq!(e.moments.skewness, 0.0);
/// ```
pub fn empirical_moments(sample: &[f64]) -> Result<EmpiricalMoments> {
    if sample.len() < 4 {
        return Err(Error::TooFewObservations { needed: 4, got: sample.len() });
    }
    MomentAccumulator::from_slice(sample).moments()
}

/// Horizons at which [`simulate_moments`] reduces each series.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MomentTargets {
    /// Forward horizons `s` for `r_{t+s}` and `h_{t+s}`.
    pub forward: Vec<usize>,
    /// Aggregation lengths `n` for `Σ r` and `Σ h`.
    pub aggregated: Vec<usize>,
}

/// Accumulators per requested horizon, in the order of [`MomentTargets`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMoments {
    pub targets: MomentTargets,
    pub forward_returns: Vec<MomentAccumulator>,
    pub forward_variances: Vec<MomentAccumulator>,
    pub aggregated_returns: Vec<MomentAccumulator>,
    pub aggregated_variances: Vec<MomentAccumulator>,
}

impl SimulatedMoments {
    fn find(list: &[usize], h: usize, what: &str) -> Result<usize> {
        list.iter()
            .position(|&x| x == h)
            .ok_or_else(|| Error::InvalidParams(format!("{what} horizon {h} was not simulated")))
    }

    pub fn forward_return(&self, s: usize) -> Result<EmpiricalMoments> {
        self.forward_returns[Self::find(&self.targets.forward, s, "forward")?].moments()
    }

    pub fn forward_variance(&self, s: usize) -> Result<EmpiricalMoments> {
        self.forward_variances[Self::find(&self.targets.forward, s, "forward")?].moments()
    }

    pub fn aggregated_return(&self, n: usize) -> Result<EmpiricalMoments> {
        self.aggregated_returns[Self::find(&self.targets.aggregated, n, "aggregated")?].moments()
    }

    pub fn aggregated_variance(&self, n: usize) -> Result<EmpiricalMoments> {
        self.aggregated_variances[Self::find(&self.targets.aggregated, n, "aggregated")?].moments()
    }
}

/// Streams all paths through moment accumulators; memory is independent of
/// the number of paths.
pub fn simulate_moments(spec: &SimulationSpec, targets: &MomentTargets) -> Result<SimulatedMoments> {
    let max_h = targets.forward.iter().chain(&targets.aggregated).copied().max().unwrap_or(0);
    if targets.forward.iter().chain(&targets.aggregated).any(|&h| h == 0) || max_h > spec.horizon {
        return Err(Error::InvalidParams(format!(
            "target horizons must lie in 1..={}, got {targets:?}",
            spec.horizon
        )));
    }
    let nf = targets.forward.len();
    let na = targets.aggregated.len();
    let reduce = |c: &PathChunk| -> Vec<MomentAccumulator> {
        let n = c.len();
        let mut cols = vec![Vec::with_capacity(n); 2 * nf + 2 * na];
        for i in 0..n {
            let (r, h) = (c.returns(i), c.variances(i));
            for (k, &s) in targets.forward.iter().enumerate() {
                cols[k].push(r[s - 1]);
                cols[nf + k].push(h[s - 1]);
            }
            for (k, &m) in targets.aggregated.iter().enumerate() {
                cols[2 * nf + k].push(r[..m].iter().sum());
                cols[2 * nf + na + k].push(h[..m].iter().sum());
            }
        }
        cols.iter().map(|c| MomentAccumulator::from_slice(c)).collect()
    };
    let merge = |mut a: Vec<MomentAccumulator>, b: Vec<MomentAccumulator>| {
        for (x, y) in a.iter_mut().zip(&b) {
            x.merge(y);
        }
        a
    };
    let acc = simulate_chunks(spec, reduce, merge)?;
    Ok(SimulatedMoments {
        targets: targets.clone(),
        forward_returns: acc[..nf].to_vec(),
        forward_variances: acc[nf..2 * nf].to_vec(),
        aggregated_returns: acc[2 * nf..2 * nf + na].to_vec(),
        aggregated_variances: acc[2 * nf + na..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(params: GjrParams, n_paths: usize, horizon: usize) -> SimulationSpec {
        SimulationSpec {
            params,
            innovation: Innovation::normal(),
            origin: ForecastOrigin::new(5e-5).unwrap(),
            horizon,
            n_paths,
            seed: 11,
        }
    }

    #[test]
    fn constant_variance_when_no_dynamics() {
        let out = simulate(&spec(GjrParams::new(0.0, 2e-5, 0.0, 0.0, 0.0), 50, 4)).unwrap();
        for s in 1..4 {
            assert!(out.forward_variances[s].iter().all(|&h| h == 2e-5));
        }
    }

    #[test]
    fn aggregated_is_running_sum() {
        let out = simulate(&spec(GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.9), 100, 6)).unwrap();
        for p in 0..100 {
            let mut acc = 0.0;
            for s in 0..6 {
                acc += out.forward_returns[s][p];
                assert_eq!(acc, out.aggregated_returns[s][p]);
            }
        }
    }

    #[test]
    fn paths_do_not_depend_on_chunking() {
        let big = simulate(&spec(GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.9), CHUNK_PATHS + 7, 3)).unwrap();
        let small = simulate(&spec(GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.9), 9, 3)).unwrap();
        for s in 0..3 {
            assert_eq!(&big.forward_returns[s][..9], &small.forward_returns[s][..]);
        }
    }

    #[test]
    fn merged_accumulator_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).powf(1.3) - 20.0).collect();
        let whole = MomentAccumulator::from_slice(&xs);
        let mut parts = MomentAccumulator::from_slice(&xs[..123]);
        parts.merge(&MomentAccumulator::from_slice(&xs[123..700]));
        parts.merge(&MomentAccumulator::from_slice(&xs[700..]));
        for p in 2..=MAX_ORDER {
            assert!((parts.sums[p] - whole.sums[p]).abs() <= 1e-9 * whole.sums[p].abs().max(1.0), "order {p}");
        }
    }

    #[test]
    fn small_samples() {
        let e = empirical_moments(&[-1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((e.moments.variance - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_moments(&[1.0, 1.0, 1.0, 1.0]).unwrap_err(), Error::DegenerateSample);
        assert_eq!(empirical_moments(&[1.0]).unwrap_err(), Error::TooFewObservations { needed: 4, got: 1 });
    }

    #[test]
    fn streaming_matches_materialized() {
        let sp = spec(GjrParams::new(0.0, 1e-6, 0.04, 0.06, 0.9), 5000, 5);
        let out = simulate(&sp).unwrap();
        let t = MomentTargets { forward: vec![5], aggregated: vec![3] };
        let sm = simulate_moments(&sp, &t).unwrap();
        let a = sm.aggregated_return(3).unwrap().moments;
        let b = empirical_moments(&out.aggregated_returns[2]).unwrap().moments;
        assert!((a.kurtosis - b.kurtosis).abs() < 1e-10);
        assert!((a.mean - b.mean).abs() < 1e-15);
    }
}
