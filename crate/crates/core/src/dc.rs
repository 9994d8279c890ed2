//! DC decomposition of the penalized objective and the inner DC solvers.
//!
//! For a penalty weight `sigma` the inner problem is
//!
//! ```text
//!     min  phi(w) = f(w) + sigma * (c^T y - theta(x))   over  Z_u ∩ Z_l
//! ```
//!
//! and is written as `phi = g - h` with
//!
//! ```text
//!     g(w) = 1/2 w^T (Q + rho I) w + q^T w + const + sigma c^T y
//!     h(w) = rho/2 ||w||^2 + sigma theta(x)
//! ```
//!
//! where `rho = max(0, -lambda_min(Q)) + 1`, so both parts are strongly convex.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::BilevelInstance;
use crate::subsolvers::{smallest_eigenvalue, solve_qp_spd, AffineSystem, QpStatus, SpdMatrix};
use crate::value_function::{eval_theta, LowerLevel, ThetaEval};

const SYMMETRY_TOL: f64 = 1e-12;

/// Trial points of the line search must satisfy the constraints to this
/// tolerance; it is tighter than the lower-level feasibility tolerance so
/// that accepted points always have finite `theta`.
pub const TRIAL_FEAS_TOL: f64 = 1e-10;

/// Tolerance for the start-point feasibility check.
pub const START_FEAS_TOL: f64 = 1e-9;

/// `1/2 w^T Q w + q^T w + const`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadObjective {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl QuadObjective {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        if !hessian.is_square() || hessian.nrows() != linear.len() {
            return Err(Error::Dimension {
                what: "quadratic objective".into(),
                expected: linear.len(),
                found: hessian.nrows(),
            });
        }
        if hessian.iter().chain(linear.iter()).any(|v| !v.is_finite()) || !constant.is_finite() {
            return Err(Error::NonFinite("quadratic objective".into()));
        }
        if (&hessian - hessian.transpose()).amax() > SYMMETRY_TOL * (1.0 + hessian.amax()) {
            return Err(Error::NotSpd(f64::NAN));
        }
        Ok(Self {
            hessian,
            linear,
            constant,
        })
    }

    pub fn linear_only(linear: DVector<f64>, constant: f64) -> Self {
        let n = linear.len();
        Self {
            hessian: DMatrix::zeros(n, n),
            linear,
            constant,
        }
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.hessian * w)) + self.linear.dot(w) + self.constant
    }

    pub fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.hessian * w + &self.linear
    }

    /// The objective multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            hessian: &self.hessian * t,
            linear: &self.linear * t,
            constant: self.constant * t,
        }
    }
}

/// `phi = g - h` for a fixed penalty weight.
///
/// `lower` is absent for the plain split of `f`, in which case `sigma = 0`.
#[derive(Debug, Clone)]
pub struct DcDecomposition {
    q_g: SpdMatrix,
    q_lin: DVector<f64>,
    constant: f64,
    rho: f64,
    sigma: f64,
    lower: Option<LowerLevel>,
}

/// Split `f` with `sigma = 0`; attach the penalty with [`DcDecomposition::with_penalty`].
pub fn dc_split(obj: &QuadObjective) -> Result<DcDecomposition> {
    let n = obj.dim();
    let lambda_min = smallest_eigenvalue(obj.hessian());
    let rho = (-lambda_min).max(0.0) + 1.0;
    let q_g = SpdMatrix::new(obj.hessian() + DMatrix::identity(n, n) * rho)?;
    Ok(DcDecomposition {
        q_g,
        q_lin: obj.linear().clone(),
        constant: obj.constant(),
        rho,
        sigma: 0.0,
        lower: None,
    })
}

impl DcDecomposition {
    /// Add `sigma * (c^T y - theta(x))`; `w = (x, y)` with `x` of length `lower.n()`.
    pub fn with_penalty(mut self, sigma: f64, lower: &LowerLevel) -> Result<Self> {
        let n = lower.n();
        let m = lower.m();
        if n + m != self.dim() {
            return Err(Error::Dimension {
                what: "penalized DC split".into(),
                expected: self.dim(),
                found: n + m,
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::NonFinite("penalty weight".into()));
        }
        let base = match &self.lower {
            Some(prev) => self.q_lin.rows(n, m) - &prev.cost * self.sigma,
            None => self.q_lin.rows(n, m).clone_owned(),
        };
        self.q_lin
            .rows_mut(n, m)
            .copy_from(&(base + &lower.cost * sigma));
        self.sigma = sigma;
        self.lower = Some(lower.clone());
        Ok(self)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn q_g(&self) -> &DMatrix<f64> {
        self.q_g.matrix()
    }

    /// Linear part of `g`, including `sigma * (0, c)`.
    pub fn q_lin(&self) -> &DVector<f64> {
        &self.q_lin
    }

    pub fn dim(&self) -> usize {
        self.q_lin.len()
    }

    fn n_upper(&self) -> usize {
        self.lower.as_ref().map_or(0, |l| l.n())
    }

    pub fn g(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(self.q_g.matrix() * w)) + self.q_lin.dot(w) + self.constant
    }

    pub fn grad_g(&self, w: &DVector<f64>) -> DVector<f64> {
        self.q_g.matrix() * w + &self.q_lin
    }

    /// `h(w)` given an evaluation of `theta` at `x(w)`; `None` when `theta(x) = +inf`.
    pub fn h_with(&self, w: &DVector<f64>, theta: &ThetaEval) -> Option<f64> {
        let quad = 0.5 * self.rho * w.norm_squared();
        if self.lower.is_none() {
            return Some(quad);
        }
        theta.value().map(|t| quad + self.sigma * t)
    }

    /// `theta` at the `x`-block of `w`; `Infinite` placeholder for the plain split.
    pub fn theta_at(&self, w: &DVector<f64>) -> Result<ThetaEval> {
        match &self.lower {
            Some(ll) => eval_theta(ll, &w.rows(0, ll.n()).clone_owned()),
            None => Ok(ThetaEval::Infinite),
        }
    }

    pub fn h(&self, w: &DVector<f64>) -> Result<Option<f64>> {
        Ok(self.h_with(w, &self.theta_at(w)?))
    }

    /// `phi(w) = g(w) - h(w)`; `None` outside the domain of `theta`.
    pub fn phi_with(&self, w: &DVector<f64>, theta: &ThetaEval) -> Option<f64> {
        self.h_with(w, theta).map(|h| self.g(w) - h)
    }

    pub fn phi(&self, w: &DVector<f64>) -> Result<Option<f64>> {
        Ok(self.phi_with(w, &self.theta_at(w)?))
    }

    /// `rho w + sigma (A^T lambda', 0)`, an element of the subdifferential of `h`.
    pub fn h_subgradient(&self, w: &DVector<f64>, theta: &ThetaEval) -> Result<DVector<f64>> {
        let mut xi = w * self.rho;
        if let Some(ll) = &self.lower {
            match theta {
                ThetaEval::Finite { dual, .. } => {
                    let s = ll.a.tr_mul(dual) * self.sigma;
                    let mut head = xi.rows_mut(0, self.n_upper());
                    head += s;
                }
                ThetaEval::Infinite => return Err(Error::Domain),
            }
        }
        Ok(xi)
    }
}

/// Minimiser of `g(w) - xi^T w` over `sys`.
pub fn dc_subproblem(
    dec: &DcDecomposition,
    xi: &DVector<f64>,
    sys: &AffineSystem,
) -> Result<DVector<f64>> {
    if xi.len() != dec.dim() {
        return Err(Error::Dimension {
            what: "DC subproblem linearisation".into(),
            expected: dec.dim(),
            found: xi.len(),
        });
    }
    let sol = solve_qp_spd(&dec.q_g, &(&dec.q_lin - xi), sys)?;
    match sol.status {
        QpStatus::Optimal => Ok(sol.x),
        QpStatus::Infeasible => Err(Error::Infeasible),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    pub lambda_bar: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_trials: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            lambda_bar: 1.0,
            alpha: 1e-2,
            beta: 0.1,
            max_trials: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    /// Accepted step, 0 if no trial qualified.
    pub step: f64,
    /// `phi(z + step d)`; equals `phi(z)` when `step = 0`.
    pub phi_end: f64,
    pub trials: usize,
}

/// Backtracking along `d` from `z`: the first `lambda_bar * beta^j` whose trial
/// point is feasible and satisfies `phi(z + t d) <= phi(z) - alpha t^2 ||d||^2`.
///
/// `phi` returns `None` where it cannot be evaluated; such trials are rejected.
pub fn boosted_line_search<F>(
    mut phi: F,
    z: &DVector<f64>,
    phi_z: f64,
    d: &DVector<f64>,
    sys: &AffineSystem,
    params: &LineSearchParams,
) -> LineSearchOutcome
where
    F: FnMut(&DVector<f64>) -> Option<f64>,
{
    let none = LineSearchOutcome {
        step: 0.0,
        phi_end: phi_z,
        trials: 0,
    };
    let dd = d.norm_squared();
    if dd.sqrt() <= 1e-12 {
        return none;
    }
    let mut t = params.lambda_bar;
    for j in 0..params.max_trials {
        let trial = z + d * t;
        if sys.is_feasible(&trial, TRIAL_FEAS_TOL) {
            if let Some(v) = phi(&trial) {
                if v <= phi_z - params.alpha * t * t * dd {
                    return LineSearchOutcome {
                        step: t,
                        phi_end: v,
                        trials: j + 1,
                    };
                }
            }
        }
        t *= params.beta;
    }
    LineSearchOutcome {
        trials: params.max_trials,
        ..none
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcVariant {
    Classical,
    Boosted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcParams {
    pub tol: f64,
    pub max_iter: usize,
    pub line_search: LineSearchParams,
}

impl Default for DcParams {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 100,
            line_search: LineSearchParams::default(),
        }
    }
}

/// One inner iteration `w^k -> z^k -> w^{k+1} = z^k + step (z^k - w^k)`.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub iterate: DVector<f64>,
    pub objective: f64,
    pub subproblem: DVector<f64>,
    pub subproblem_objective: f64,
    pub direction_norm: f64,
    pub step: f64,
    pub next_objective: f64,
}

impl TraceEntry {
    /// Re-check the sufficient-decrease inequality recorded for this step.
    pub fn replays(&self, alpha: f64) -> bool {
        self.step == 0.0
            || self.next_objective
                <= self.subproblem_objective
                    - alpha * self.step * self.step * self.direction_norm.powi(2)
    }
}

#[derive(Debug, Clone)]
pub struct DcState {
    pub w: DVector<f64>,
    pub objective: f64,
    /// `theta` at the final `x`, reused by the penalty loop.
    pub theta: ThetaEval,
    pub trace: Vec<TraceEntry>,
    pub iterations: usize,
    /// The last step met `||z - w|| <= tol`.
    pub converged: bool,
}

/// Relative roundoff allowance on the objective decrease of one DC step.
pub const MONOTONE_SLACK: f64 = 1e-13;

/// Absolute cap on that allowance.
pub const MONOTONE_CAP: f64 = 1e-10;

/// Run the DC iteration from `start` until `||z - w|| <= tol` or `max_iter` subproblems.
///
/// The objective trace is nonincreasing up to
/// `min(MONOTONE_SLACK * (1 + |g| + |h|), MONOTONE_CAP)`: a subproblem solution
/// that raises `phi` by more (only possible through rounding) is not taken and
/// the iteration stops.
pub fn solve_dc(
    instance: &BilevelInstance,
    dec: &DcDecomposition,
    start: &DVector<f64>,
    variant: DcVariant,
    params: &DcParams,
) -> Result<DcState> {
    let sys = instance.feasible_set();
    if start.len() != sys.nvars() {
        return Err(Error::Dimension {
            what: "DC start point".into(),
            expected: sys.nvars(),
            found: start.len(),
        });
    }
    let viol = sys.max_violation(start);
    if viol > START_FEAS_TOL {
        return Err(Error::InfeasibleStart(viol));
    }
    let eval = |w: &DVector<f64>| -> Result<(ThetaEval, f64)> {
        let theta = dec.theta_at(w)?;
        let phi = dec.phi_with(w, &theta).ok_or(Error::Domain)?;
        Ok((theta, phi))
    };

    let mut w = start.clone();
    let (mut theta_w, mut phi_w) = eval(&w)?;
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..params.max_iter {
        let xi = dec.h_subgradient(&w, &theta_w)?;
        let z = dc_subproblem(dec, &xi, sys)?;
        let d = &z - &w;
        let dnorm = d.norm();
        let (theta_z, phi_z) = eval(&z)?;

        // phi(z) <= phi(w) holds in exact arithmetic. phi = g - h cancels two
        // large terms, so roundoff scales with |g| + |h|; a larger increase
        // means the subproblem solve has hit its accuracy floor: keep w and stop
        let g_w = dec.g(&w);
        let scale = 1.0 + g_w.abs() + (g_w - phi_w).abs();
        let stalled = phi_z > phi_w + (MONOTONE_SLACK * scale).min(MONOTONE_CAP);
        let mut step = 0.0;
        let mut next = if stalled {
            (w.clone(), theta_w.clone(), phi_w)
        } else {
            (z.clone(), theta_z, phi_z)
        };
        if variant == DcVariant::Boosted && dnorm > params.tol && !stalled {
            let mut last: Option<ThetaEval> = None;
            let ls = boosted_line_search(
                |p| {
                    let th = dec.theta_at(p).ok()?;
                    let v = dec.phi_with(p, &th);
                    last = Some(th);
                    v
                },
                &z,
                phi_z,
                &d,
                sys,
                &params.line_search,
            );
            if ls.step > 0.0 {
                // the accepted trial is the last one evaluated
                step = ls.step;
                next = (
                    &z + &d * step,
                    last.expect("accepted trial was evaluated"),
                    ls.phi_end,
                );
            }
        }

        trace.push(TraceEntry {
            iterate: w.clone(),
            objective: phi_w,
            subproblem: z,
            subproblem_objective: phi_z,
            direction_norm: dnorm,
            step,
            next_objective: next.2,
        });
        (w, theta_w, phi_w) = next;
        if dnorm <= params.tol || stalled {
            converged = dnorm <= params.tol;
            break;
        }
    }

    Ok(DcState {
        w,
        objective: phi_w,
        theta: theta_w,
        iterations: trace.len(),
        trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn split_examples() {
        let lin = QuadObjective::linear_only(DVector::from_vec(vec![-2.0, 1.0, 0.5, 0.0]), 0.0);
        let d = dc_split(&lin).unwrap();
        assert_eq!(d.rho(), 1.0);
        assert_eq!(d.q_g(), &DMatrix::<f64>::identity(4, 4));

        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0]));
        let d = dc_split(&QuadObjective::new(q, DVector::zeros(2), 0.0).unwrap()).unwrap();
        assert_relative_eq!(d.rho(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(d.q_g()[(0, 0)], 5.0, epsilon = 1e-12);
        assert_relative_eq!(d.q_g()[(1, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn subproblem_clamps() {
        let d = dc_split(&QuadObjective::linear_only(DVector::zeros(2), 0.0)).unwrap();
        // g = 1/2 ||w||^2 after the unit shift
        let sys = AffineSystem::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let z = dc_subproblem(&d, &DVector::zeros(2), &sys).unwrap();
        assert!(z.amax() < 1e-12);
        let z = dc_subproblem(&d, &DVector::from_vec(vec![3.0, 0.0]), &sys).unwrap();
        assert_relative_eq!(z, DVector::from_vec(vec![1.0, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn line_search_examples() {
        let sys = AffineSystem::boxed(&[0.0], &[2.0]).unwrap();
        let p = LineSearchParams::default();
        let z = DVector::from_element(1, 0.5);
        // phi(t) = -t on the segment
        let d = DVector::from_element(1, 0.5);
        let out = boosted_line_search(|w| Some(-w[0]), &z, -0.5, &d, &sys, &p);
        assert_eq!(out.step, 1.0);
        assert_eq!(out.trials, 1);

        let zero = DVector::zeros(1);
        assert_eq!(
            boosted_line_search(|w| Some(-w[0]), &z, -0.5, &zero, &sys, &p).step,
            0.0
        );

        // on the upper boundary, pointing outward: every trial infeasible
        let z = DVector::from_element(1, 2.0);
        let out = boosted_line_search(|w| Some(-w[0]), &z, -2.0, &d, &sys, &p);
        assert_eq!(out.step, 0.0);
        assert_eq!(out.trials, 10);
    }

    #[test]
    fn penalty_is_replaceable() {
        let ll = LowerLevel::new(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, -1.0),
            DVector::zeros(1),
            DVector::from_element(1, 2.0),
        )
        .unwrap();
        let base = dc_split(&QuadObjective::linear_only(
            DVector::from_vec(vec![1.0, 1.0]),
            0.0,
        ))
        .unwrap();
        let d = base
            .with_penalty(3.0, &ll)
            .unwrap()
            .with_penalty(5.0, &ll)
            .unwrap();
        assert_relative_eq!(d.q_lin()[1], 1.0 + 10.0, epsilon = 1e-12);
    }
}
