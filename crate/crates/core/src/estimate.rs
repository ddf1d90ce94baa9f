//! Quasi-maximum-likelihood estimation of GARCH(1,1) and GJR-GARCH(1,1)
//! with normal or standardized Student-t innovations, and rolling-window
//! re-estimation.
//!
//! The optimizer works on an unconstrained vector that maps smoothly onto
//! the feasible set: persistence `φ ∈ (0,1)` through a logistic, its split
//! into `α`, `λ·F(0)` and `β` through a softmax, `ω` relative to the
//! variance-targeting value, and `ν = 2.05 + exp(·)`. Every vector the
//! simplex visits is therefore a valid model.

use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::GjrParams;

/// Minimum series length accepted by [`fit`].
pub const MIN_OBSERVATIONS: usize = 250;
/// Simplex iteration cap per run.
pub const MAX_ITERATIONS_PER_RUN: u64 = 5000;
/// Simplex restarts from the best point after the initial ladder.
pub const MAX_RESTARTS: usize = 4;
/// Standard deviation of the simplex costs (mean log-likelihood per
/// observation) at which a run is declared converged.
pub const COST_TOLERANCE: f64 = 1e-13;
/// Lower bound on `ν`, keeping the fourth moment of the innovation finite
/// only when the data say so but the variance always finite.
pub const NU_FLOOR: f64 = 2.05;
/// `F(0)` of both symmetric innovation families.
const F0: f64 = 0.5;

/// Variance equation to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Symmetric GARCH(1,1): `λ` fixed at zero.
    Garch11,
    Gjr,
}

/// Innovation family to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InnovationKind {
    Normal,
    StudentT,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "garch11" => Ok(ModelKind::Garch11),
            "gjr" => Ok(ModelKind::Gjr),
            other => Err(Error::InvalidParams(format!("unknown model {other:?}"))),
        }
    }
}

impl std::str::FromStr for InnovationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(InnovationKind::Normal),
            "student_t" => Ok(InnovationKind::StudentT),
            other => Err(Error::InvalidParams(format!("unknown innovation {other:?}"))),
        }
    }
}

/// What to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    pub model: ModelKind,
    pub innovation: InnovationKind,
    /// Estimate `μ` jointly; otherwise fix it at the sample mean.
    pub estimate_mean: bool,
}

impl FitOptions {
    pub fn new(model: ModelKind, innovation: InnovationKind) -> Self {
        FitOptions { model, innovation, estimate_mean: true }
    }
}

/// Outer-product-of-gradients standard errors; `None` for parameters held
/// fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdErrors {
    pub mu: Option<f64>,
    pub omega: f64,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub beta: f64,
    pub nu: Option<f64>,
}

/// Result of one estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: GjrParams,
    /// Degrees of freedom of the Student-t innovation.
    pub nu: Option<f64>,
    pub loglik: f64,
    pub std_errors: StdErrors,
    pub converged: bool,
    pub iterations: u64,
    /// Conditional variance for the period after the sample, filtered with
    /// the fitted parameters.
    pub h_next: f64,
}

/// Model parameters in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Natural {
    params: GjrParams,
    nu: Option<f64>,
}

/// Sample statistics and settings shared by every likelihood evaluation.
struct Problem<'a> {
    returns: &'a [f64],
    opts: FitOptions,
    mean: f64,
    var: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl<'a> Problem<'a> {
    fn new(returns: &'a [f64], opts: FitOptions) -> Result<Self> {
        if returns.len() < MIN_OBSERVATIONS {
            return Err(Error::TooFewObservations { needed: MIN_OBSERVATIONS, got: returns.len() });
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::InvalidParams(format!("return {i} is not finite")));
        }
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        // A constant series leaves only rounding residue in the variance.
        let scale = returns.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        if !(var > (1e-12 * scale).powi(2)) {
            return Err(Error::DegenerateSeries);
        }
        Ok(Problem { returns, opts, mean, var })
    }

    fn dim(&self) -> usize {
        let mut d = 3; // omega, persistence, alpha share
        if self.opts.estimate_mean {
            d += 1;
        }
        if self.opts.model == ModelKind::Gjr {
            d += 1;
        }
        if self.opts.innovation == InnovationKind::StudentT {
            d += 1;
        }
        d
    }

    /// Maps an unconstrained vector to natural parameters.
    fn to_natural(&self, u: &[f64]) -> Natural {
        let mut it = u.iter().copied();
        let sd = self.var.sqrt();
        let mu = if self.opts.estimate_mean { self.mean + 0.05 * sd * it.next().unwrap() } else { self.mean };
        let log_omega = it.next().unwrap();
        let phi = logistic(it.next().unwrap());
        let ea = it.next().unwrap().exp();
        let el = if self.opts.model == ModelKind::Gjr { it.next().unwrap().exp() } else { 0.0 };
        let nu = (self.opts.innovation == InnovationKind::StudentT).then(|| NU_FLOOR + it.next().unwrap().exp());
        let total = 1.0 + ea + el;
        let alpha = phi * ea / total;
        let lambda = phi * el / total / F0;
        let beta = phi / total;
        let omega = self.var * (1.0 - phi) * log_omega.exp();
        Natural { params: GjrParams::new(mu, omega, alpha, lambda, beta), nu }
    }

    /// Inverse of [`Problem::to_natural`], with zero components nudged inside
    /// the open feasible set.
    fn to_unconstrained(&self, n: &Natural) -> Vec<f64> {
        let p = &n.params;
        let floor = 1e-6;
        let alpha = p.alpha.max(floor);
        let lf = if self.opts.model == ModelKind::Gjr { (p.lambda * F0).max(floor) } else { 0.0 };
        let beta = p.beta.max(floor);
        let phi = (alpha + lf + beta).min(1.0 - 1e-6);
        let mut u = Vec::with_capacity(self.dim());
        if self.opts.estimate_mean {
            u.push((p.mu - self.mean) / (0.05 * self.var.sqrt()));
        }
        u.push((p.omega / (self.var * (1.0 - phi))).ln());
        u.push((phi / (1.0 - phi)).ln());
        u.push((alpha / beta).ln());
        if self.opts.model == ModelKind::Gjr {
            u.push((lf / beta).ln());
        }
        if self.opts.innovation == InnovationKind::StudentT {
            u.push((n.nu.unwrap_or(8.0) - NU_FLOOR).max(1e-6).ln());
        }
        u
    }

    /// Log-likelihood contribution of every observation, written into `out`,
    /// and the filtered variance for the period after the sample.
    fn contributions(&self, n: &Natural, out: &mut Vec<f64>) -> f64 {
        out.clear();
        let p = &n.params;
        let mut h = self.var;
        let t_const = n.nu.map(|nu| {
            (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (PI * (nu - 2.0)).ln(), nu)
        });
        let normal_const = -0.5 * (2.0 * PI).ln();
        for &r in self.returns {
            let e = r - p.mu;
            let l = match t_const {
                None => normal_const - 0.5 * (h.ln() + e * e / h),
                Some((c, nu)) => c - 0.5 * h.ln() - 0.5 * (nu + 1.0) * (e * e / (h * (nu - 2.0))).ln_1p(),
            };
            out.push(l);
            let a = if e < 0.0 { p.alpha + p.lambda } else { p.alpha };
            h = p.omega + a * e * e + p.beta * h;
        }
        h
    }

    fn loglik(&self, n: &Natural) -> f64 {
        let mut buf = Vec::with_capacity(self.returns.len());
        self.contributions(n, &mut buf);
        let s: f64 = buf.iter().sum();
        if s.is_finite() {
            s
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Negative mean log-likelihood over the unconstrained vector.
struct Objective<'p, 'a>(&'p Problem<'a>);

impl CostFunction for Objective<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let n = self.0.to_natural(u);
        debug_assert!(n.params.omega > 0.0 && n.params.alpha >= 0.0 && n.params.beta >= 0.0);
        let ll = self.0.loglik(&n) / self.0.returns.len() as f64;
        Ok(if ll.is_finite() { -ll } else { f64::MAX })
    }
}

/// Outcome of one simplex run.
struct Run {
    u: Vec<f64>,
    cost: f64,
    converged: bool,
    iterations: u64,
}

fn run_simplex(problem: &Problem, start: &[f64], step: f64) -> Result<Run> {
    let mut simplex = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(COST_TOLERANCE)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let res = Executor::new(Objective(problem), solver)
        .configure(|s| s.max_iters(MAX_ITERATIONS_PER_RUN))
        .run()
        .map_err(|e| Error::InvalidParams(format!("optimizer failed: {e}")))?;
    let state = res.state();
    let u = state.get_best_param().cloned().unwrap_or_else(|| start.to_vec());
    Ok(Run {
        u,
        cost: state.get_best_cost(),
        converged: matches!(state.get_termination_reason(), Some(TerminationReason::SolverConverged)),
        iterations: state.get_iter(),
    })
}

/// Restarts the simplex from the best point until the objective stops
/// improving; a fresh simplex escapes the premature collapse the method is
/// prone to.
fn polish(problem: &Problem, mut best: Run) -> Result<Run> {
    for _ in 0..MAX_RESTARTS {
        let next = run_simplex(problem, &best.u, 0.05)?;
        let improvement = best.cost - next.cost;
        let iterations = best.iterations + next.iterations;
        if next.cost <= best.cost {
            best = Run { iterations, ..next };
        } else {
            best.iterations = iterations;
        }
        if improvement.abs() < COST_TOLERANCE * 10.0 && best.converged {
            break;
        }
    }
    Ok(best)
}

fn starting_ladder(problem: &Problem) -> Vec<Natural> {
    let lambda0 = if problem.opts.model == ModelKind::Gjr { 0.05 } else { 0.0 };
    let nu0 = (problem.opts.innovation == InnovationKind::StudentT).then_some(8.0);
    [(0.03, 0.9), (0.08, 0.9), (0.03, 0.85)]
        .into_iter()
        .map(|(a, b)| {
            let alpha = if lambda0 > 0.0 { a * 0.5 } else { a };
            let phi = alpha + lambda0 * F0 + b;
            Natural {
                params: GjrParams::new(problem.mean, problem.var * (1.0 - phi), alpha, lambda0, b),
                nu: nu0,
            }
        })
        .collect()
}

/// Numerical per-observation scores at `n`, as a `T × k` matrix, over the
/// free natural parameters.
fn opg_std_errors(problem: &Problem, n: &Natural) -> StdErrors {
    #[derive(Clone, Copy)]
    enum Slot {
        Mu,
        Omega,
        Alpha,
        Lambda,
        Beta,
        Nu,
    }
    let opts = problem.opts;
    let mut slots = Vec::new();
    if opts.estimate_mean {
        slots.push(Slot::Mu);
    }
    slots.extend([Slot::Omega, Slot::Alpha]);
    if opts.model == ModelKind::Gjr {
        slots.push(Slot::Lambda);
    }
    slots.push(Slot::Beta);
    if opts.innovation == InnovationKind::StudentT {
        slots.push(Slot::Nu);
    }
    let sd = problem.var.sqrt();
    let get = |n: &Natural, s: Slot| match s {
        Slot::Mu => n.params.mu,
        Slot::Omega => n.params.omega,
        Slot::Alpha => n.params.alpha,
        Slot::Lambda => n.params.lambda,
        Slot::Beta => n.params.beta,
        Slot::Nu => n.nu.unwrap(),
    };
    let set = |n: &mut Natural, s: Slot, v: f64| match s {
        Slot::Mu => n.params.mu = v,
        Slot::Omega => n.params.omega = v,
        Slot::Alpha => n.params.alpha = v,
        Slot::Lambda => n.params.lambda = v,
        Slot::Beta => n.params.beta = v,
        Slot::Nu => n.nu = Some(v),
    };
    let t = problem.returns.len();
    let k = slots.len();
    let mut scores = DMatrix::<f64>::zeros(t, k);
    let (mut up, mut down) = (Vec::with_capacity(t), Vec::with_capacity(t));
    for (j, &s) in slots.iter().enumerate() {
        let x = get(n, s);
        let typical = match s {
            Slot::Mu => 0.01 * sd,
            Slot::Omega => x,
            Slot::Alpha | Slot::Lambda | Slot::Beta => 0.01,
            Slot::Nu => x,
        };
        let mut step = 1e-5 * x.abs().max(typical);
        if matches!(s, Slot::Omega | Slot::Alpha | Slot::Beta) && x > 0.0 {
            step = step.min(0.5 * x);
        }
        let mut a = *n;
        set(&mut a, s, x + step);
        problem.contributions(&a, &mut up);
        let mut b = *n;
        set(&mut b, s, x - step);
        problem.contributions(&b, &mut down);
        for i in 0..t {
            scores[(i, j)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    let info = scores.transpose() * &scores;
    let diag: DVector<f64> = match info.try_inverse() {
        Some(cov) => cov.diagonal().map(|v| if v > 0.0 { v.sqrt() } else { f64::NAN }),
        None => DVector::from_element(k, f64::NAN),
    };
    let pick = |target: fn(&Slot) -> bool| slots.iter().position(target).map(|i| diag[i]);
    StdErrors {
        mu: pick(|s| matches!(s, Slot::Mu)),
        omega: pick(|s| matches!(s, Slot::Omega)).unwrap(),
        alpha: pick(|s| matches!(s, Slot::Alpha)).unwrap(),
        lambda: pick(|s| matches!(s, Slot::Lambda)),
        beta: pick(|s| matches!(s, Slot::Beta)).unwrap(),
        nu: pick(|s| matches!(s, Slot::Nu)),
    }
}

fn finish(problem: &Problem, run: Run) -> Result<FitResult> {
    let n = problem.to_natural(&run.u);
    let mut buf = Vec::with_capacity(problem.returns.len());
    let h_next = problem.contributions(&n, &mut buf);
    let loglik: f64 = buf.iter().sum();
    if !run.converged || !loglik.is_finite() {
        return Err(Error::NonConvergence { iterations: run.iterations as usize, loglik, best: flatten(&n) });
    }
    Ok(FitResult {
        params: n.params,
        nu: n.nu,
        loglik,
        std_errors: opg_std_errors(problem, &n),
        converged: true,
        iterations: run.iterations,
        h_next,
    })
}

fn flatten(n: &Natural) -> Vec<f64> {
    let p = &n.params;
    let mut v = vec![p.mu, p.omega, p.alpha, p.lambda, p.beta];
    v.extend(n.nu);
    v
}

/// Maximizes the conditional log-likelihood, with the variance recursion
/// started at the sample variance.
pub fn fit(returns: &[f64], opts: FitOptions) -> Result<FitResult> {
    let problem = Problem::new(returns, opts)?;
    let mut best: Option<Run> = None;
    for start in starting_ladder(&problem) {
        let run = run_simplex(&problem, &problem.to_unconstrained(&start), 0.5)?;
        let total = best.as_ref().map_or(0, |b| b.iterations) + run.iterations;
        best = Some(match best {
            Some(b) if b.cost <= run.cost => Run { iterations: total, ..b },
            _ => Run { iterations: total, ..run },
        });
    }
    let run = polish(&problem, best.expect("non-empty ladder"))?;
    finish(&problem, run)
}

/// Fits starting from a previous estimate only.
pub fn fit_from(returns: &[f64], opts: FitOptions, start: &FitResult) -> Result<FitResult> {
    let problem = Problem::new(returns, opts)?;
    let natural = Natural { params: start.params, nu: start.nu };
    let run = run_simplex(&problem, &problem.to_unconstrained(&natural), 0.1)?;
    let run = polish(&problem, run)?;
    finish(&problem, run)
}

/// Log-likelihood of given parameters on a series, with the same variance
/// initialization as [`fit`].
pub fn log_likelihood(returns: &[f64], params: &GjrParams, nu: Option<f64>) -> Result<f64> {
    let opts = FitOptions::new(
        ModelKind::Gjr,
        if nu.is_some() { InnovationKind::StudentT } else { InnovationKind::Normal },
    );
    let problem = Problem::new(returns, opts)?;
    Ok(problem.loglik(&Natural { params: *params, nu }))
}

/// Re-estimates on every window `[k·step, k·step + window)`. Windows are fitted in
/// order, each warm-started from the previous estimate, falling back to the
/// full starting ladder when the warm start fails. Failures are recorded
/// per window.
pub fn rolling_fit(returns: &[f64], window: usize, step: usize, opts: FitOptions) -> Result<Vec<Result<FitResult>>> {
    if window > returns.len() || window == 0 {
        return Err(Error::InvalidParams(format!("window {window} must lie in 1..={}", returns.len())));
    }
    if step == 0 {
        return Err(Error::InvalidParams("step must be at least 1".into()));
    }
    let count = (returns.len() - window) / step + 1;
    let mut out: Vec<Result<FitResult>> = Vec::with_capacity(count);
    for k in 0..count {
        let slice = &returns[k * step..k * step + window];
        let previous = out.iter().rev().find_map(|r| r.as_ref().ok());
        let res = match previous {
            Some(prev) => fit_from(slice, opts, prev).or_else(|_| fit(slice, opts)),
            None => fit(slice, opts),
        };
        out.push(res);
    }
    Ok(out)
}
