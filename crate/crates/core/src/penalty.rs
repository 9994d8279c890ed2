//! Outer penalty loop.
//!
//! Each outer iteration minimises the penalized problem for the current weight
//! `sigma_k = sigma0 * gamma^k`, warm-started at the previous iterate, and stops
//! as soon as the lower-level duality gap `|c^T (y - y_s)|` drops below
//! `outer_tol`. Three inner solvers are available:
//!
//! * `Pbdc`: the boosted DC iteration,
//! * `Pdc`: the classical DC iteration,
//! * `Pdg`: alternating minimisation of the explicit duality-gap penalty
//!   `f + sigma (c^T y - (A x - b)^T u)` over `(x, y)` and the lower-level dual `u`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::dc::{
    dc_split, solve_dc, DcDecomposition, DcParams, DcVariant, LineSearchParams, TraceEntry,
    START_FEAS_TOL,
};
use crate::error::{Error, Result};
use crate::instance::BilevelInstance;
use crate::stationarity::{stationarity_residual, DEFAULT_ACTIVE_TOL};
use crate::subsolvers::{solve_lp, solve_qp_spd, AffineSystem, LpStatus, QpStatus, SpdMatrix};
use crate::value_function::{eval_theta, ThetaEval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Pbdc,
    Pdc,
    Pdg,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pbdc, Method::Pdc, Method::Pdg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pbdc => "PBDC",
            Method::Pdc => "PDC",
            Method::Pdg => "PDG",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pbdc" => Ok(Method::Pbdc),
            "pdc" => Ok(Method::Pdc),
            "pdg" => Ok(Method::Pdg),
            _ => Err(Error::parse(
                "method",
                format!("unknown method `{s}` (expected pbdc, pdc or pdg)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub sigma0: f64,
    pub gamma: f64,
    /// Stop when `|c^T (y - y_s)|` is at most this.
    pub outer_tol: f64,
    pub outer_cap: usize,
    pub inner_cap: usize,
    pub inner_tol: f64,
    pub line_search: LineSearchParams,
    /// Objective-change tolerance of the alternating PDG solver.
    pub pdg_tol: f64,
    pub pdg_cap: usize,
    pub active_tol: f64,
    /// After the stopping test fires, the DC methods continue at the final
    /// `sigma` with inner tolerance `polish_tol` (0 disables the phase).
    pub polish_tol: f64,
    pub polish_cap: usize,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            gamma: 1.2,
            outer_tol: 1e-7,
            outer_cap: 200,
            inner_cap: 100,
            inner_tol: 1e-4,
            line_search: LineSearchParams::default(),
            pdg_tol: 1e-8,
            pdg_cap: 50,
            active_tol: DEFAULT_ACTIVE_TOL,
            polish_tol: 1e-9,
            polish_cap: 1000,
        }
    }
}

impl PenaltyParams {
    /// `sigma0 * gamma^k`.
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma0 * self.gamma.powi(k as i32)
    }

    /// Apply one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|e| Error::parse(format!("--params {key}"), e.to_string()))
        };
        let count = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|e| Error::parse(format!("--params {key}"), e.to_string()))
        };
        match key {
            "sigma0" => self.sigma0 = float()?,
            "gamma" => self.gamma = float()?,
            "outer_tol" => self.outer_tol = float()?,
            "outer_cap" => self.outer_cap = count()?,
            "inner_cap" => self.inner_cap = count()?,
            "inner_tol" => self.inner_tol = float()?,
            "lambda_bar" => self.line_search.lambda_bar = float()?,
            "alpha" => self.line_search.alpha = float()?,
            "beta" => self.line_search.beta = float()?,
            "max_trials" => self.line_search.max_trials = count()?,
            "pdg_tol" => self.pdg_tol = float()?,
            "pdg_cap" => self.pdg_cap = count()?,
            "active_tol" => self.active_tol = float()?,
            "polish_tol" => self.polish_tol = float()?,
            "polish_cap" => self.polish_cap = count()?,
            _ => {
                return Err(Error::parse(
                    "--params",
                    format!("unknown parameter `{key}`"),
                ))
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::parse("--params", what.to_string()));
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad("sigma0 must be positive");
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad("gamma must exceed 1");
        }
        if !(self.line_search.beta > 0.0 && self.line_search.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.outer_tol >= 0.0
            && self.inner_tol >= 0.0
            && self.pdg_tol >= 0.0
            && self.active_tol >= 0.0
            && self.polish_tol >= 0.0)
        {
            return bad("tolerances must be nonnegative");
        }
        Ok(())
    }

    fn dc_params(&self) -> DcParams {
        DcParams {
            tol: self.inner_tol,
            max_iter: self.inner_cap,
            line_search: self.line_search,
        }
    }
}

/// Scalars of one inner DC step; the iterates themselves are not retained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub objective: f64,
    pub subproblem_objective: f64,
    pub direction_norm: f64,
    pub step: f64,
    pub next_objective: f64,
}

impl From<&TraceEntry> for StepRecord {
    fn from(e: &TraceEntry) -> Self {
        Self {
            objective: e.objective,
            subproblem_objective: e.subproblem_objective,
            direction_norm: e.direction_norm,
            step: e.step,
            next_objective: e.next_objective,
        }
    }
}

impl StepRecord {
    /// The sufficient-decrease inequality for an accepted step, as tested.
    pub fn replays(&self, alpha: f64) -> bool {
        self.step == 0.0
            || self.next_objective
                <= self.subproblem_objective
                    - alpha * self.step * self.step * self.direction_norm.powi(2)
    }
}

#[derive(Debug, Clone)]
pub struct OuterRecord {
    pub sigma: f64,
    pub w: DVector<f64>,
    pub inner_iters: usize,
    pub gap: f64,
    /// Empty for PDG.
    pub steps: Vec<StepRecord>,
    /// PDG only: bilinear objective after each alternation.
    pub pdg_objectives: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    pub start: DVector<f64>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub final_value: f64,
    pub outer_iters: usize,
    pub total_inner_iters: usize,
    pub final_gap: f64,
    /// `NaN` if the residual LP could not be evaluated at the final point.
    pub stationarity_residual: f64,
    pub terminated: bool,
    pub sigma_final: f64,
    pub wall_time: Duration,
    pub history: Vec<OuterRecord>,
    /// Continuation at the final `sigma` with the tight inner tolerance; its
    /// point replaces the final iterate only if it also passes the stopping test.
    pub polish: Option<OuterRecord>,
}

fn gap_of(instance: &BilevelInstance, y: &DVector<f64>, theta: &ThetaEval) -> Result<f64> {
    match theta {
        ThetaEval::Finite { value, .. } => Ok(instance.lower.cost.dot(y) - value),
        ThetaEval::Infinite => Err(Error::Domain),
    }
}

pub fn run_penalty(
    instance: &BilevelInstance,
    start: &DVector<f64>,
    method: Method,
    params: &PenaltyParams,
) -> Result<RunReport> {
    params.validate()?;
    let sys = instance.feasible_set();
    if start.len() != sys.nvars() {
        return Err(Error::Dimension {
            what: "start point".into(),
            expected: sys.nvars(),
            found: start.len(),
        });
    }
    let viol = sys.max_violation(start);
    if viol > START_FEAS_TOL {
        return Err(Error::InfeasibleStart(viol));
    }
    let clock = Instant::now();
    let wrap = |k: usize, sigma: f64| {
        move |e: Error| Error::Run {
            outer: k + 1,
            sigma,
            source: Box::new(e),
        }
    };

    let mut w = start.clone();
    let mut history = Vec::new();
    let mut terminated = false;
    let mut gap = f64::NAN;
    let mut sigma = params.sigma0;
    let mut polish = None;

    match method {
        Method::Pbdc | Method::Pdc => {
            let base = dc_split(&instance.objective)?;
            let variant = if method == Method::Pbdc {
                DcVariant::Boosted
            } else {
                DcVariant::Classical
            };
            let dc_params = params.dc_params();
            for k in 0..params.outer_cap {
                sigma = params.sigma(k);
                let dec = base
                    .clone()
                    .with_penalty(sigma, &instance.lower)
                    .map_err(wrap(k, sigma))?;
                let state =
                    solve_dc(instance, &dec, &w, variant, &dc_params).map_err(wrap(k, sigma))?;
                w = state.w;
                let (_, y) = instance.split(&w);
                gap = gap_of(instance, &y, &state.theta).map_err(wrap(k, sigma))?;
                history.push(OuterRecord {
                    sigma,
                    w: w.clone(),
                    inner_iters: state.iterations,
                    gap,
                    steps: state.trace.iter().map(StepRecord::from).collect(),
                    pdg_objectives: Vec::new(),
                });
                if gap.abs() <= params.outer_tol {
                    terminated = true;
                    polish =
                        polish_dc(instance, &dec, &w, variant, params).map_err(wrap(k, sigma))?;
                    if let Some(p) = polish.as_ref().filter(|p| p.gap.abs() <= params.outer_tol) {
                        w = p.w.clone();
                        gap = p.gap;
                    }
                    break;
                }
            }
        }
        Method::Pdg => {
            let mut u = init_dual(instance)?;
            for k in 0..params.outer_cap {
                sigma = params.sigma(k);
                let (x, y) = instance.split(&w);
                let out = pdg_subproblem(instance, sigma, (&x, &y, &u), params)
                    .map_err(wrap(k, sigma))?;
                w = instance.join(&out.x, &out.y);
                u = out.u;
                let theta = eval_theta(&instance.lower, &out.x).map_err(wrap(k, sigma))?;
                gap = gap_of(instance, &out.y, &theta).map_err(wrap(k, sigma))?;
                history.push(OuterRecord {
                    sigma,
                    w: w.clone(),
                    inner_iters: out.alternations,
                    gap,
                    steps: Vec::new(),
                    pdg_objectives: out.objectives,
                });
                if gap.abs() <= params.outer_tol {
                    terminated = true;
                    break;
                }
            }
        }
    }

    let (x, y) = instance.split(&w);
    let residual = stationarity_residual(instance, &x, &y, params.active_tol)
        .map(|c| c.residual)
        .unwrap_or(f64::NAN);
    Ok(RunReport {
        method,
        start: start.clone(),
        final_value: instance.upper_value(&w),
        x,
        y,
        outer_iters: history.len(),
        total_inner_iters: history.iter().map(|h| h.inner_iters).sum(),
        final_gap: gap,
        stationarity_residual: residual,
        terminated,
        sigma_final: sigma,
        wall_time: clock.elapsed(),
        history,
        polish,
    })
}

fn polish_dc(
    instance: &BilevelInstance,
    dec: &DcDecomposition,
    w: &DVector<f64>,
    variant: DcVariant,
    params: &PenaltyParams,
) -> Result<Option<OuterRecord>> {
    if params.polish_tol <= 0.0 || params.polish_cap == 0 {
        return Ok(None);
    }
    let dc_params = DcParams {
        tol: params.polish_tol,
        max_iter: params.polish_cap,
        line_search: params.line_search,
    };
    let state = solve_dc(instance, dec, w, variant, &dc_params)?;
    let (_, y) = instance.split(&state.w);
    let gap = gap_of(instance, &y, &state.theta)?;
    Ok(Some(OuterRecord {
        sigma: dec.sigma(),
        inner_iters: state.iterations,
        gap,
        steps: state.trace.iter().map(StepRecord::from).collect(),
        pdg_objectives: Vec::new(),
        w: state.w,
    }))
}

/// `{u >= 0 : B^T u = -c}` as a system over `u`.
fn dual_polyhedron(instance: &BilevelInstance) -> Result<AffineSystem> {
    let p = instance.p();
    AffineSystem::with_equalities(
        -DMatrix::identity(p, p),
        DVector::zeros(p),
        instance.lower.b.transpose(),
        -&instance.lower.cost,
    )
}

/// Dual-feasible `u` of minimal `e^T u`.
pub fn init_dual(instance: &BilevelInstance) -> Result<DVector<f64>> {
    let sys = dual_polyhedron(instance)?;
    let sol = solve_lp(&DVector::from_element(instance.p(), 1.0), &sys)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x.map(|v| v.max(0.0))),
        LpStatus::Infeasible => Err(Error::DualInfeasible),
        LpStatus::Unbounded => unreachable!("nonnegative cost over the nonnegative orthant"),
    }
}

#[derive(Debug, Clone)]
pub struct PdgOutcome {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub u: DVector<f64>,
    pub alternations: usize,
    /// `f + sigma (c^T y - (A x - b)^T u)` after each alternation.
    pub objectives: Vec<f64>,
}

/// `f(w) + sigma (c^T y - (A x - b)^T u)`.
pub fn pdg_objective(
    instance: &BilevelInstance,
    sigma: f64,
    w: &DVector<f64>,
    u: &DVector<f64>,
) -> f64 {
    let (x, y) = instance.split(w);
    let ax_b = &instance.lower.a * &x - &instance.lower.rhs;
    instance.upper_value(w) + sigma * (instance.lower.cost.dot(&y) - ax_b.dot(u))
}

/// Alternating convex search on the duality-gap penalty subproblem.
///
/// Step (i) fixes `u` and minimises the objective plus `rho/2 ||w - w_cur||^2`
/// over `Z_u ∩ Z_l`; step (ii) fixes `w` and maximises `(A x - b)^T u` over the
/// dual polyhedron. Both steps never increase the objective.
pub fn pdg_subproblem(
    instance: &BilevelInstance,
    sigma: f64,
    warm: (&DVector<f64>, &DVector<f64>, &DVector<f64>),
    params: &PenaltyParams,
) -> Result<PdgOutcome> {
    let (x0, y0, u0) = warm;
    let (n, m, p) = (instance.n(), instance.m(), instance.p());
    if u0.len() != p {
        return Err(Error::Dimension {
            what: "PDG dual warm start".into(),
            expected: p,
            found: u0.len(),
        });
    }
    let dual_sys = dual_polyhedron(instance)?;
    if dual_sys.max_violation(u0) > 1e-8 {
        return Err(Error::InfeasiblePoint(dual_sys.max_violation(u0)));
    }
    let sys = instance.feasible_set();
    let q = instance.objective.hessian();
    let rho = (-crate::subsolvers::smallest_eigenvalue(q)).max(0.0) + 1.0;
    let h = SpdMatrix::new(q + DMatrix::identity(n + m, n + m) * rho)?;

    let mut w = instance.join(x0, y0);
    let mut u = u0.clone();
    let mut current = pdg_objective(instance, sigma, &w, &u);
    let mut objectives = Vec::new();
    let mut alternations = 0;

    while alternations < params.pdg_cap {
        alternations += 1;
        // (i) w-step with proximal term
        let mut lin = instance.objective.linear() - &w * rho;
        let au = instance.lower.a.tr_mul(&u) * sigma;
        for i in 0..n {
            lin[i] -= au[i];
        }
        for j in 0..m {
            lin[n + j] += sigma * instance.lower.cost[j];
        }
        let sol = solve_qp_spd(&h, &lin, sys)?;
        if sol.status == QpStatus::Infeasible {
            return Err(Error::Infeasible);
        }
        w = sol.x;

        // (ii) u-step: max (A x - b)^T u
        let (x, _) = instance.split(&w);
        let ax_b = &instance.lower.a * &x - &instance.lower.rhs;
        let lp = solve_lp(&(-&ax_b), &dual_sys)?;
        match lp.status {
            LpStatus::Optimal => u = lp.x.map(|v| v.max(0.0)),
            LpStatus::Infeasible => return Err(Error::DualInfeasible),
            LpStatus::Unbounded => return Err(Error::Domain),
        }
        let next = pdg_objective(instance, sigma, &w, &u);
        objectives.push(next);
        let change = (current - next).abs();
        current = next;
        if change <= params.pdg_tol {
            break;
        }
    }
    let (x, y) = instance.split(&w);
    Ok(PdgOutcome {
        x,
        y,
        u,
        alternations,
        objectives,
    })
}
