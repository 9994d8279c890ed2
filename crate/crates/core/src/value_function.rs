//! Optimal value function of the parametric lower-level LP
//!
//! ```text
//!     theta(x) = inf_y { c^T y | A x + B y <= b }
//! ```
//!
//! `theta` is convex and piecewise affine. Every dual solution `lambda` of the
//! lower level at `x` gives the subgradient `A^T lambda`, so one LP solve yields
//! the value, a lower-level solution and a subgradient at the same time.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::subsolvers::{solve_lp, AffineSystem, LpStatus};

/// Feasibility tolerance used when checking a given lower-level point.
pub const FEAS_TOL: f64 = 1e-9;

/// Lower-level data `min_y { cost^T y | a x + b y <= rhs }`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerLevel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub cost: DVector<f64>,
}

impl LowerLevel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        rhs: DVector<f64>,
        cost: DVector<f64>,
    ) -> Result<Self> {
        let p = rhs.len();
        for (what, rows, found) in [("A rows", p, a.nrows()), ("B rows", p, b.nrows())] {
            if rows != found {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected: rows,
                    found,
                });
            }
        }
        if b.ncols() != cost.len() {
            return Err(Error::Dimension {
                what: "B columns".into(),
                expected: cost.len(),
                found: b.ncols(),
            });
        }
        if a.iter()
            .chain(b.iter())
            .chain(rhs.iter())
            .chain(cost.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("lower-level data".into()));
        }
        Ok(Self { a, b, rhs, cost })
    }

    /// Number of upper-level variables `x`.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Number of lower-level variables `y`.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Number of lower-level constraint rows.
    pub fn p(&self) -> usize {
        self.rhs.len()
    }

    fn check_x(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::Dimension {
                what: "upper-level point".into(),
                expected: self.n(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Feasible set of `P(x)` as a system over `y`.
    pub fn system_at(&self, x: &DVector<f64>) -> Result<AffineSystem> {
        self.check_x(x)?;
        AffineSystem::new(self.b.clone(), &self.rhs - &self.a * x)
    }

    /// `max_i (A x + B y - b)_i`, clipped at zero.
    pub fn violation(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.a * x + &self.b * y - &self.rhs)
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(*v))
    }
}

/// Value of `theta` at a point together with its certificates.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaEval {
    /// `P(x)` is feasible: `value = cost^T y_opt = (A x - b)^T dual`.
    Finite {
        value: f64,
        dual: DVector<f64>,
        y_opt: DVector<f64>,
    },
    /// `P(x)` is infeasible, `theta(x) = +inf`.
    Infinite,
}

impl ThetaEval {
    pub fn is_finite(&self) -> bool {
        matches!(self, ThetaEval::Finite { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ThetaEval::Finite { value, .. } => Some(*value),
            ThetaEval::Infinite => None,
        }
    }
}

pub fn eval_theta(ll: &LowerLevel, x: &DVector<f64>) -> Result<ThetaEval> {
    let sys = ll.system_at(x)?;
    let sol = solve_lp(&ll.cost, &sys)?;
    match sol.status {
        LpStatus::Infeasible => Ok(ThetaEval::Infinite),
        LpStatus::Unbounded => Err(Error::LowerLevelUnbounded),
        LpStatus::Optimal => Ok(ThetaEval::Finite {
            value: sol.objective,
            dual: sol.dual_ub,
            y_opt: sol.x,
        }),
    }
}

/// One element `A^T lambda` of the convex subdifferential of `theta` at `x`.
pub fn subgradient_theta(ll: &LowerLevel, x: &DVector<f64>) -> Result<DVector<f64>> {
    match eval_theta(ll, x)? {
        ThetaEval::Finite { dual, .. } => Ok(ll.a.tr_mul(&dual)),
        ThetaEval::Infinite => Err(Error::Domain),
    }
}

/// Some `y` in the lower-level solution set at `x`.
pub fn lower_level_solve(ll: &LowerLevel, x: &DVector<f64>) -> Result<DVector<f64>> {
    match eval_theta(ll, x)? {
        ThetaEval::Finite { y_opt, .. } => Ok(y_opt),
        ThetaEval::Infinite => Err(Error::Domain),
    }
}

/// `cost^T y - theta(x)` for a lower-level feasible pair.
pub fn duality_gap(ll: &LowerLevel, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    ll.check_x(x)?;
    if y.len() != ll.m() {
        return Err(Error::Dimension {
            what: "lower-level point".into(),
            expected: ll.m(),
            found: y.len(),
        });
    }
    let viol = ll.violation(x, y);
    if viol > FEAS_TOL {
        return Err(Error::InfeasiblePoint(viol));
    }
    match eval_theta(ll, x)? {
        ThetaEval::Finite { value, .. } => Ok(ll.cost.dot(y) - value),
        // unreachable for a feasible pair but kept total
        ThetaEval::Infinite => Err(Error::Domain),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex2() -> LowerLevel {
        LowerLevel::new(
            DMatrix::from_row_slice(3, 1, &[-1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(3, 2, &[-1.0, -1.0, -1.0, 0.0, 0.0, -1.0]),
            DVector::from_vec(vec![-1.0, 0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn ex2_value_and_subgradient() {
        let ll = ex2();
        for xv in [0.0, 0.3, 0.5, 1.7] {
            let x = DVector::from_element(1, xv);
            let ThetaEval::Finite { value, dual, y_opt } = eval_theta(&ll, &x).unwrap() else {
                panic!("finite expected");
            };
            assert!(value.abs() < 1e-12);
            assert!(y_opt[0].abs() < 1e-12);
            assert!((ll.b.tr_mul(&dual) + &ll.cost).amax() < 1e-12);
            assert!(subgradient_theta(&ll, &x).unwrap()[0].abs() < 1e-12);
        }
    }

    #[test]
    fn gap_examples() {
        let ll = ex2();
        let x = DVector::from_element(1, 0.0);
        let g = duality_gap(&ll, &x, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        let bad = duality_gap(&ll, &x, &DVector::from_vec(vec![0.0, 0.0]));
        assert!(matches!(bad, Err(Error::InfeasiblePoint(_))));
    }

    #[test]
    fn unbounded_lower_level_is_an_error() {
        // min -y s.t. -y <= 0
        let ll = LowerLevel::new(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, -1.0),
            DVector::zeros(1),
            DVector::from_element(1, -1.0),
        )
        .unwrap();
        assert!(matches!(
            eval_theta(&ll, &DVector::zeros(1)),
            Err(Error::LowerLevelUnbounded)
        ));
    }

    #[test]
    fn shape_validation() {
        let r = LowerLevel::new(
            DMatrix::zeros(2, 1),
            DMatrix::zeros(3, 2),
            DVector::zeros(2),
            DVector::zeros(2),
        );
        assert!(r.is_err());
    }
}
