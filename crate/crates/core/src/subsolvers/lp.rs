//! Dense two-phase revised simplex.
//!
//! The problem `min c^T x  s.t.  M_ub x <= g_ub, M_eq x = g_eq` over free `x` is
//! brought into standard form with split variables `x = x+ - x-` and one slack
//! per inequality row. Pricing is Dantzig's rule until a run of degenerate
//! pivots is observed, after which the phase finishes under Bland's rule. The
//! basis inverse is kept explicitly and refactorised periodically.

use nalgebra::{DMatrix, DVector};

use super::affine::AffineSystem;
use crate::error::{Error, Result};

/// Primal feasibility tolerance.
pub const PRIMAL_TOL: f64 = 1e-9;
/// Reduced-cost (dual feasibility) tolerance.
pub const DUAL_TOL: f64 = 1e-9;
/// Smallest admissible pivot.
pub const PIVOT_TOL: f64 = 1e-12;

const RATIO_PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 40;
const DEGENERATE_STREAK: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`].
///
/// `dual_ub >= 0` and `dual_eq` satisfy `c + M_ub^T dual_ub + M_eq^T dual_eq = 0`,
/// so the dual objective is `-(g_ub^T dual_ub + g_eq^T dual_eq)`. They are only
/// meaningful when `status == Optimal`.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub dual_ub: DVector<f64>,
    pub dual_eq: DVector<f64>,
    /// Standard-form column indices of the final basis. Columns `0..n` are
    /// `x+`, `n..2n` are `x-`, then one slack per inequality row, then
    /// artificials.
    pub basis: Vec<usize>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn dual_objective(&self, sys: &AffineSystem) -> f64 {
        -(sys.g_ub().dot(&self.dual_ub) + sys.g_eq().dot(&self.dual_eq))
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

struct Simplex {
    a: DMatrix<f64>,
    rhs: DVector<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    since_refactor: usize,
}

impl Simplex {
    fn refactor(&mut self) -> Result<()> {
        let m = self.rhs.len();
        if m == 0 {
            return Ok(());
        }
        let mut b = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            b.set_column(k, &self.a.column(j));
        }
        let lu = b.lu();
        let u = lu.u();
        let min_piv = u
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if min_piv < PIVOT_TOL {
            return Err(Error::NumericDegeneracy(min_piv));
        }
        self.binv = lu.try_inverse().ok_or(Error::NumericDegeneracy(0.0))?;
        self.xb = &self.binv * &self.rhs;
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -PRIMAL_TOL {
                *v = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Simplex multipliers `y = B^{-T} c_B`.
    fn multipliers(&self, cost: &[f64]) -> DVector<f64> {
        let m = self.rhs.len();
        let mut y = DVector::zeros(m);
        for (k, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[(k, i)];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[f64], y: &DVector<f64>, j: usize) -> f64 {
        cost[j] - self.a.column(j).dot(y)
    }

    fn pivot(&mut self, row: usize, entering: usize, alpha: &DVector<f64>, step: f64) {
        let m = self.rhs.len();
        for i in 0..m {
            if i != row {
                self.xb[i] -= step * alpha[i];
                if self.xb[i] < 0.0 && self.xb[i] > -PRIMAL_TOL {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[row] = step;
        let piv = alpha[row];
        for c in 0..m {
            self.binv[(row, c)] /= piv;
        }
        for i in 0..m {
            if i != row && alpha[i] != 0.0 {
                let f = alpha[i];
                for c in 0..m {
                    let v = self.binv[(row, c)];
                    self.binv[(i, c)] -= f * v;
                }
            }
        }
        let leaving = self.basis[row];
        self.in_basis[leaving] = false;
        self.in_basis[entering] = true;
        self.basis[row] = entering;
        self.since_refactor += 1;
    }

    /// Run simplex iterations for `cost` over the columns accepted by `allowed`.
    fn run(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<PhaseOutcome> {
        let m = self.rhs.len();
        let ncols = self.a.ncols();
        let max_iter = 200 * (m + ncols) + 1000;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        let mut verified = false;

        for _ in 0..max_iter {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.multipliers(cost);

            let mut entering = None;
            let mut best = -DUAL_TOL;
            for j in 0..ncols {
                if self.in_basis[j] || !allowed(j) {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, j);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }

            let Some(q) = entering else {
                // confirm optimality against a fresh factorisation once
                if !verified && self.since_refactor > 0 {
                    self.refactor()?;
                    verified = true;
                    continue;
                }
                return Ok(PhaseOutcome::Optimal);
            };
            verified = false;

            let alpha = &self.binv * self.a.column(q);

            let mut row = None;
            let mut min_ratio = f64::INFINITY;
            for i in 0..m {
                if alpha[i] > RATIO_PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / alpha[i];
                    min_ratio = min_ratio.min(ratio);
                }
            }
            if min_ratio.is_infinite() {
                return Ok(PhaseOutcome::Unbounded);
            }
            let tie = 1e-12 * (1.0 + min_ratio);
            for i in 0..m {
                if alpha[i] > RATIO_PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / alpha[i];
                    if ratio <= min_ratio + tie {
                        row = match row {
                            None => Some(i),
                            Some(r) if bland && self.basis[i] < self.basis[r] => Some(i),
                            Some(r) if !bland && alpha[i] > alpha[r] => Some(i),
                            keep => keep,
                        };
                    }
                }
            }
            let r = row.expect("ratio test found a finite minimum");
            if alpha[r].abs() < PIVOT_TOL {
                return Err(Error::NumericDegeneracy(alpha[r].abs()));
            }

            if min_ratio <= PIVOT_TOL {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q, &alpha, min_ratio);
        }
        Err(Error::IterationLimit("simplex"))
    }
}

/// Solve `min cost^T x` over `sys` with free variables.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input and
/// numerical breakdown.
pub fn solve_lp(cost: &DVector<f64>, sys: &AffineSystem) -> Result<LpSolution> {
    let n = sys.nvars();
    if cost.len() != n {
        return Err(Error::Dimension {
            what: "LP cost vector".into(),
            expected: n,
            found: cost.len(),
        });
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LP cost vector".into()));
    }
    let m_ub = sys.n_ub();
    let m_eq = sys.n_eq();
    let m = m_ub + m_eq;

    // rows are flipped so that every right-hand side is nonnegative
    let mut flip = vec![1.0; m];
    let mut rhs = DVector::zeros(m);
    for i in 0..m_ub {
        let g = sys.g_ub()[i];
        if g < 0.0 {
            flip[i] = -1.0;
        }
        rhs[i] = flip[i] * g;
    }
    for i in 0..m_eq {
        let g = sys.g_eq()[i];
        if g < 0.0 {
            flip[m_ub + i] = -1.0;
        }
        rhs[m_ub + i] = flip[m_ub + i] * g;
    }

    let needs_artificial: Vec<usize> = (0..m).filter(|&i| i >= m_ub || flip[i] < 0.0).collect();
    let art_start = 2 * n + m_ub;
    let ncols = art_start + needs_artificial.len();

    let mut a = DMatrix::zeros(m, ncols);
    for i in 0..m {
        for j in 0..n {
            let v = if i < m_ub {
                sys.m_ub()[(i, j)]
            } else {
                sys.m_eq()[(i - m_ub, j)]
            };
            a[(i, j)] = flip[i] * v;
            a[(i, n + j)] = -flip[i] * v;
        }
        if i < m_ub {
            a[(i, 2 * n + i)] = flip[i];
        }
    }
    let mut basis = vec![0usize; m];
    for i in 0..m_ub {
        basis[i] = 2 * n + i;
    }
    for (k, &i) in needs_artificial.iter().enumerate() {
        a[(i, art_start + k)] = 1.0;
        basis[i] = art_start + k;
    }
    let mut in_basis = vec![false; ncols];
    for &j in &basis {
        in_basis[j] = true;
    }

    let mut simplex = Simplex {
        a,
        rhs: rhs.clone(),
        basis,
        in_basis,
        binv: DMatrix::identity(m, m),
        xb: rhs,
        since_refactor: 0,
    };

    let infeasible = |m_ub: usize| LpSolution {
        status: LpStatus::Infeasible,
        x: DVector::zeros(n),
        objective: f64::INFINITY,
        dual_ub: DVector::zeros(m_ub),
        dual_eq: DVector::zeros(m_eq),
        basis: vec![],
    };

    if !needs_artificial.is_empty() {
        let mut phase1 = vec![0.0; ncols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        simplex.run(&phase1, &|_| true)?;
        simplex.refactor()?;
        let infeas: f64 = simplex
            .basis
            .iter()
            .zip(simplex.xb.iter())
            .filter(|(&j, _)| j >= art_start)
            .map(|(_, &v)| v)
            .sum();
        let scale = 1.0 + simplex.rhs.amax();
        if infeas > PRIMAL_TOL * scale {
            return Ok(infeasible(m_ub));
        }
        // drive artificials out of the basis where possible
        for r in 0..m {
            if simplex.basis[r] < art_start {
                continue;
            }
            let row = simplex.binv.row(r).clone_owned();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art_start {
                if simplex.in_basis[j] {
                    continue;
                }
                let v = (row.clone() * simplex.a.column(j))[0];
                if v.abs() > 1e-7 && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((j, v.abs()));
                }
            }
            if let Some((j, _)) = best {
                let alpha = &simplex.binv * simplex.a.column(j);
                simplex.xb[r] = 0.0;
                simplex.pivot(r, j, &alpha, 0.0);
            }
        }
        simplex.refactor()?;
    }

    let mut phase2 = vec![0.0; ncols];
    for j in 0..n {
        phase2[j] = cost[j];
        phase2[n + j] = -cost[j];
    }
    let outcome = simplex.run(&phase2, &|j| j < art_start)?;

    let mut xs = vec![0.0; ncols];
    for (k, &j) in simplex.basis.iter().enumerate() {
        xs[j] = simplex.xb[k];
    }
    let x = DVector::from_iterator(n, (0..n).map(|j| xs[j] - xs[n + j]));
    let objective = cost.dot(&x);

    match outcome {
        PhaseOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            objective: f64::NEG_INFINITY,
            dual_ub: DVector::zeros(m_ub),
            dual_eq: DVector::zeros(m_eq),
            basis: simplex.basis,
        }),
        PhaseOutcome::Optimal => {
            let y = simplex.multipliers(&phase2);
            let mut dual_ub = DVector::zeros(m_ub);
            for i in 0..m_ub {
                let v = -flip[i] * y[i];
                // clamp roundoff negatives, including -0.0, to +0.0
                dual_ub[i] = if v <= 0.0 && v > -DUAL_TOL { 0.0 } else { v };
            }
            let dual_eq =
                DVector::from_iterator(m_eq, (0..m_eq).map(|i| -flip[m_ub + i] * y[m_ub + i]));
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
                dual_ub,
                dual_eq,
                basis: simplex.basis,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rows: &[&[f64]], rhs: &[f64]) -> AffineSystem {
        let n = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        AffineSystem::new(
            DMatrix::from_row_slice(rows.len(), n, &flat),
            DVector::from_row_slice(rhs),
        )
        .unwrap()
    }

    #[test]
    fn small_lower_level_vertex() {
        let s = sys(
            &[&[1.0, -1.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]],
            &[1.5, 0.0, 0.0, 0.0],
        );
        let sol = solve_lp(&DVector::from_vec(vec![-4.0, 1.0]), &s).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.5).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
        assert!((sol.objective + 6.0).abs() < 1e-12);
        assert!((sol.dual_objective(&s) - sol.objective).abs() < 1e-10);
    }

    #[test]
    fn origin_vertex() {
        let s = sys(&[&[-1.0]], &[0.0]);
        let sol = solve_lp(&DVector::from_vec(vec![1.0]), &s).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
        assert!((sol.dual_ub[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let s = sys(&[&[1.0], &[-1.0]], &[-1.0, -2.0]);
        let sol = solve_lp(&DVector::from_vec(vec![1.0]), &s).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);

        let s = sys(&[&[-1.0]], &[0.0]);
        let sol = solve_lp(&DVector::from_vec(vec![-1.0]), &s).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_duals() {
        // min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0  ->  x = (1, 0)
        let s = AffineSystem::with_equalities(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            DVector::from_vec(vec![0.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        let c = DVector::from_vec(vec![1.0, 2.0]);
        let sol = solve_lp(&c, &s).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        let stat = &c + s.m_ub().transpose() * &sol.dual_ub + s.m_eq().transpose() * &sol.dual_eq;
        assert!(stat.amax() < 1e-12);
        assert!((sol.dual_objective(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_rows() {
        let s = AffineSystem::free(2);
        let sol = solve_lp(&DVector::zeros(2), &s).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let sol = solve_lp(&DVector::from_vec(vec![1.0, 0.0]), &s).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn cost_length_checked() {
        let s = AffineSystem::free(2);
        assert!(solve_lp(&DVector::zeros(3), &s).is_err());
    }
}
