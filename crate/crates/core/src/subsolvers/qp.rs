//! Strictly convex quadratic programs by the dual active-set method of
//! Goldfarb and Idnani, followed by a direct KKT solve on the final working
//! set to tighten the multipliers.

use nalgebra::{DMatrix, DVector};

use super::affine::AffineSystem;
use crate::error::{Error, Result};

/// Smallest eigenvalue accepted as positive definite.
pub const SPD_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

/// Minimiser of `1/2 x^T Q x + q^T x` over an [`AffineSystem`].
///
/// On success `Q x + q + M_ub^T multipliers + M_eq^T multipliers_eq = 0`, with
/// `multipliers >= 0` supported on `active_set`.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub active_set: Vec<usize>,
    pub multipliers: DVector<f64>,
    pub multipliers_eq: DVector<f64>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    /// `|| Q x + q + M^T lambda ||_inf`.
    pub fn kkt_residual(&self, q_mat: &DMatrix<f64>, q: &DVector<f64>, sys: &AffineSystem) -> f64 {
        (q_mat * &self.x
            + q
            + sys.m_ub().transpose() * &self.multipliers
            + sys.m_eq().transpose() * &self.multipliers_eq)
            .amax()
    }
}

/// A validated symmetric positive definite Hessian with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    q: DMatrix<f64>,
    l: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl SpdMatrix {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Dimension {
                what: "QP Hessian".into(),
                expected: q.nrows(),
                found: q.ncols(),
            });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("QP Hessian".into()));
        }
        let scale = 1.0 + q.amax();
        if (&q - q.transpose()).amax() > SYMMETRY_TOL * scale {
            return Err(Error::NotSpd(f64::NAN));
        }
        let min_eigenvalue = smallest_eigenvalue(&q);
        if min_eigenvalue.is_nan() || min_eigenvalue <= SPD_TOL {
            return Err(Error::NotSpd(min_eigenvalue));
        }
        let l = q
            .clone()
            .cholesky()
            .ok_or(Error::NotSpd(min_eigenvalue))?
            .unpack();
        Ok(Self {
            q,
            l,
            min_eigenvalue,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }
}

/// Smallest eigenvalue of a symmetric matrix (0 for the empty matrix).
pub fn smallest_eigenvalue(q: &DMatrix<f64>) -> f64 {
    if q.nrows() == 0 {
        return 0.0;
    }
    let sym = (q + q.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Solve `min 1/2 x^T Q x + q^T x` over `sys`; `Q` must be SPD.
pub fn solve_qp(q_mat: &DMatrix<f64>, q: &DVector<f64>, sys: &AffineSystem) -> Result<QpSolution> {
    let h = SpdMatrix::new(q_mat.clone())?;
    solve_qp_spd(&h, q, sys)
}

/// Euclidean projection of `w0` onto `sys`.
pub fn project_polyhedron(w0: &DVector<f64>, sys: &AffineSystem) -> Result<DVector<f64>> {
    let n = w0.len();
    let h = SpdMatrix::new(DMatrix::identity(n, n))?;
    let sol = solve_qp_spd(&h, &(-w0), sys)?;
    match sol.status {
        QpStatus::Optimal => Ok(sol.x),
        QpStatus::Infeasible => Err(Error::Infeasible),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Row {
    Eq(usize),
    Ub(usize),
}

/// Working-set factorisation: `J^T Q J = I` and the leading `R` block
/// triangularises the active normals in the `J` basis.
struct Factors {
    n: usize,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    active: Vec<Row>,
    u: Vec<f64>,
    r_norm: f64,
}

fn hypot(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

impl Factors {
    fn iq(&self) -> usize {
        self.active.len()
    }

    fn compute_d(&self, np: &DVector<f64>) -> DVector<f64> {
        self.j.tr_mul(np)
    }

    fn step_direction(&self, d: &DVector<f64>) -> DVector<f64> {
        let iq = self.iq();
        let mut z = DVector::zeros(self.n);
        for k in iq..self.n {
            if d[k] != 0.0 {
                z.axpy(d[k], &self.j.column(k), 1.0);
            }
        }
        z
    }

    fn dual_direction(&self, d: &DVector<f64>) -> Vec<f64> {
        let iq = self.iq();
        let mut r = vec![0.0; iq];
        for i in (0..iq).rev() {
            let mut s = d[i];
            for k in (i + 1)..iq {
                s -= self.r[(i, k)] * r[k];
            }
            r[i] = s / self.r[(i, i)];
        }
        r
    }

    /// Append a normal whose `J`-coordinates are `d`; false if it is
    /// numerically dependent on the current working set.
    fn add(&mut self, mut d: DVector<f64>, row: Row, u: f64) -> bool {
        let n = self.n;
        let iq = self.iq();
        for jj in ((iq + 1)..n).rev() {
            let mut cc = d[jj - 1];
            let mut ss = d[jj];
            let h = hypot(cc, ss);
            if h == 0.0 {
                continue;
            }
            d[jj] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[jj - 1] = -h;
            } else {
                d[jj - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, jj - 1)];
                let t2 = self.j[(k, jj)];
                let new = t1 * cc + t2 * ss;
                self.j[(k, jj - 1)] = new;
                self.j[(k, jj)] = xny * (t1 + new) - t2;
            }
        }
        if iq >= n || d[iq].abs() <= f64::EPSILON * self.r_norm.max(1.0) * 10.0 {
            return false;
        }
        for i in 0..=iq {
            self.r[(i, iq)] = d[i];
        }
        self.r_norm = self.r_norm.max(d[iq].abs());
        self.active.push(row);
        self.u.push(u);
        true
    }

    fn remove(&mut self, pos: usize) {
        let n = self.n;
        let iq = self.iq();
        for c in pos..iq - 1 {
            for i in 0..n {
                self.r[(i, c)] = self.r[(i, c + 1)];
            }
        }
        for i in 0..n {
            self.r[(i, iq - 1)] = 0.0;
        }
        self.active.remove(pos);
        self.u.remove(pos);
        let iq = iq - 1;
        for jj in pos..iq {
            let mut cc = self.r[(jj, jj)];
            let mut ss = self.r[(jj + 1, jj)];
            let h = hypot(cc, ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(jj + 1, jj)] = 0.0;
            if cc < 0.0 {
                self.r[(jj, jj)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(jj, jj)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in (jj + 1)..iq {
                let t1 = self.r[(jj, k)];
                let t2 = self.r[(jj + 1, k)];
                let new = t1 * cc + t2 * ss;
                self.r[(jj, k)] = new;
                self.r[(jj + 1, k)] = xny * (t1 + new) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, jj)];
                let t2 = self.j[(k, jj + 1)];
                let new = t1 * cc + t2 * ss;
                self.j[(k, jj)] = new;
                self.j[(k, jj + 1)] = xny * (new + t1) - t2;
            }
        }
    }
}

/// Solve with a pre-validated Hessian.
pub fn solve_qp_spd(h: &SpdMatrix, q: &DVector<f64>, sys: &AffineSystem) -> Result<QpSolution> {
    let n = h.dim();
    if q.len() != n || sys.nvars() != n {
        return Err(Error::Dimension {
            what: "QP linear term / constraint columns".into(),
            expected: n,
            found: if q.len() != n { q.len() } else { sys.nvars() },
        });
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("QP linear term".into()));
    }
    let m_ub = sys.n_ub();
    let m_eq = sys.n_eq();
    let normal = |row: Row| -> DVector<f64> {
        match row {
            Row::Eq(i) => sys.m_eq().row(i).transpose(),
            Row::Ub(i) => -sys.m_ub().row(i).transpose(),
        }
    };
    // n^T x - b >= 0 form
    let slack = |row: Row, x: &DVector<f64>| -> f64 {
        match row {
            Row::Eq(i) => sys.m_eq().row(i).dot(&x.transpose()) - sys.g_eq()[i],
            Row::Ub(i) => sys.g_ub()[i] - sys.m_ub().row(i).dot(&x.transpose()),
        }
    };

    let linv =
        h.l.clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::NotSpd(h.min_eigenvalue))?;
    let mut f = Factors {
        n,
        j: linv.transpose(),
        r: DMatrix::zeros(n, n.max(1)),
        active: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        r_norm: 1.0,
    };
    // unconstrained minimiser
    let mut x = -(&f.j * f.j.tr_mul(q));

    let infeasible = |x: DVector<f64>| QpSolution {
        status: QpStatus::Infeasible,
        x,
        objective: f64::INFINITY,
        active_set: vec![],
        multipliers: DVector::zeros(m_ub),
        multipliers_eq: DVector::zeros(m_eq),
    };

    let scale_b = 1.0 + sys.g_ub().amax().max(sys.g_eq().amax());
    let feas_tol = 1e-12 * scale_b;

    for i in 0..m_eq {
        let row = Row::Eq(i);
        let np = normal(row);
        let d = f.compute_d(&np);
        let z = f.step_direction(&d);
        let r = f.dual_direction(&d);
        let s = slack(row, &x);
        let znp = z.dot(&np);
        if z.norm_squared() <= 1e-24 || znp.abs() <= 1e-14 {
            // dependent on earlier rows: fine if consistent
            if s.abs() > 1e-9 * scale_b {
                return Ok(infeasible(x));
            }
            continue;
        }
        let t2 = -s / znp;
        x.axpy(t2, &z, 1.0);
        for (k, uk) in f.u.iter_mut().enumerate() {
            *uk -= t2 * r[k];
        }
        if !f.add(d, row, t2) {
            return Ok(infeasible(x));
        }
    }

    let mut excluded = vec![false; m_ub];
    let max_iter = 50 * (n + m_ub + m_eq) + 100;
    let mut iter = 0;
    'outer: loop {
        iter += 1;
        if iter > max_iter {
            return Err(Error::IterationLimit("Goldfarb-Idnani QP"));
        }
        let mut p = None;
        let mut worst = -feas_tol;
        for i in 0..m_ub {
            if excluded[i] || f.active.contains(&Row::Ub(i)) {
                continue;
            }
            let s = slack(Row::Ub(i), &x);
            if s < worst {
                worst = s;
                p = Some(i);
            }
        }
        let Some(p) = p else {
            break;
        };
        let row = Row::Ub(p);
        let np = normal(row);
        let mut u_plus = 0.0;
        let saved = (
            x.clone(),
            f.active.clone(),
            f.u.clone(),
            f.j.clone(),
            f.r.clone(),
        );

        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::IterationLimit("Goldfarb-Idnani QP"));
            }
            let d = f.compute_d(&np);
            let z = f.step_direction(&d);
            let r = f.dual_direction(&d);

            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (k, &rk) in r.iter().enumerate() {
                if matches!(f.active[k], Row::Ub(_)) && rk > 1e-14 {
                    let ratio = f.u[k] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(k);
                    }
                }
            }
            let znp = z.dot(&np);
            let t2 = if z.norm_squared() > 1e-24 && znp > 1e-14 {
                -slack(row, &x) / znp
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if t.is_infinite() {
                return Ok(infeasible(x));
            }
            if t2.is_infinite() {
                for (k, uk) in f.u.iter_mut().enumerate() {
                    *uk -= t * r[k];
                }
                u_plus += t;
                f.remove(drop.expect("finite partial step has a blocking row"));
                continue;
            }
            x.axpy(t, &z, 1.0);
            for (k, uk) in f.u.iter_mut().enumerate() {
                *uk -= t * r[k];
            }
            u_plus += t;
            if t2 <= t1 {
                if !f.add(d, row, u_plus) {
                    // dependent row: restore and try another violated row
                    excluded[p] = true;
                    x = saved.0;
                    f.active = saved.1;
                    f.u = saved.2;
                    f.j = saved.3;
                    f.r = saved.4;
                }
                continue 'outer;
            }
            f.remove(drop.expect("partial step has a blocking row"));
        }
    }
    if excluded.iter().any(|&e| e) {
        // excluded rows must still be satisfied
        let viol = (0..m_ub)
            .filter(|&i| excluded[i])
            .map(|i| -slack(Row::Ub(i), &x))
            .fold(0.0_f64, f64::max);
        if viol > 1e-9 * scale_b {
            return Ok(infeasible(x));
        }
    }

    let mut multipliers = DVector::zeros(m_ub);
    let mut multipliers_eq = DVector::zeros(m_eq);
    for (row, &uk) in f.active.iter().zip(f.u.iter()) {
        match *row {
            Row::Ub(i) => multipliers[i] = uk.max(0.0),
            Row::Eq(i) => multipliers_eq[i] = -uk,
        }
    }
    let mut sol = QpSolution {
        status: QpStatus::Optimal,
        objective: 0.0,
        active_set: Vec::new(),
        x,
        multipliers,
        multipliers_eq,
    };
    polish(h, q, sys, &f.active, &mut sol);
    sol.active_set = f
        .active
        .iter()
        .filter_map(|r| match *r {
            Row::Ub(i) => Some(i),
            Row::Eq(_) => None,
        })
        .collect();
    sol.active_set.sort_unstable();
    sol.objective = 0.5 * sol.x.dot(&(h.matrix() * &sol.x)) + q.dot(&sol.x);
    Ok(sol)
}

/// Re-solve the equality-constrained KKT system on the final working set and
/// keep the result when it is at least as good.
fn polish(
    h: &SpdMatrix,
    q: &DVector<f64>,
    sys: &AffineSystem,
    active: &[Row],
    sol: &mut QpSolution,
) {
    let n = h.dim();
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(h.matrix());
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-q));
    for (c, row) in active.iter().enumerate() {
        let (a, g) = match *row {
            Row::Ub(i) => (sys.m_ub().row(i), sys.g_ub()[i]),
            Row::Eq(i) => (sys.m_eq().row(i), sys.g_eq()[i]),
        };
        for j in 0..n {
            kkt[(n + c, j)] = a[j];
            kkt[(j, n + c)] = a[j];
        }
        rhs[n + c] = g;
    }
    let Some(solution) = kkt.lu().solve(&rhs) else {
        return;
    };
    let x = solution.rows(0, n).clone_owned();
    let mut mult = sol.multipliers.clone();
    let mut mult_eq = sol.multipliers_eq.clone();
    for (c, row) in active.iter().enumerate() {
        match *row {
            Row::Ub(i) => {
                if solution[n + c] < -1e-9 {
                    return;
                }
                mult[i] = solution[n + c].max(0.0);
            }
            Row::Eq(i) => mult_eq[i] = solution[n + c],
        }
    }
    let kkt_res = |x: &DVector<f64>, m: &DVector<f64>, me: &DVector<f64>| {
        (h.matrix() * x + q + sys.m_ub().transpose() * m + sys.m_eq().transpose() * me).amax()
    };
    let old = kkt_res(&sol.x, &sol.multipliers, &sol.multipliers_eq).max(sys.max_violation(&sol.x));
    let new = kkt_res(&x, &mult, &mult_eq).max(sys.max_violation(&x));
    if new <= old {
        sol.x = x;
        sol.multipliers = mult;
        sol.multipliers_eq = mult_eq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_scalar() {
        let sys = AffineSystem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let sol = solve_qp(
            &DMatrix::identity(1, 1),
            &DVector::from_element(1, -3.0),
            &sys,
        )
        .unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14);
        assert_eq!(sol.active_set, vec![0]);
        assert!((sol.multipliers[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn componentwise_clamp() {
        let sys = AffineSystem::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let q = DVector::from_vec(vec![-2.0, 3.0]);
        let sol = solve_qp(&DMatrix::identity(2, 2), &q, &sys).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] + 1.0).abs() < 1e-14);
        assert!(sol.kkt_residual(&DMatrix::identity(2, 2), &q, &sys) < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let sys = AffineSystem::free(2);
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            solve_qp(&q, &DVector::zeros(2), &sys),
            Err(Error::NotSpd(_))
        ));
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            solve_qp(&q, &DVector::zeros(2), &sys),
            Err(Error::NotSpd(_))
        ));
    }

    #[test]
    fn detects_infeasible() {
        let sys = AffineSystem::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_vec(vec![-1.0, -2.0]),
        )
        .unwrap();
        let sol = solve_qp(&DMatrix::identity(1, 1), &DVector::zeros(1), &sys).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
        assert!(matches!(
            project_polyhedron(&DVector::zeros(1), &sys),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn equality_constrained() {
        // min 1/2|x|^2 s.t. x1 + x2 = 2 -> (1, 1), multiplier -1
        let sys = AffineSystem::with_equalities(
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![2.0]),
        )
        .unwrap();
        let sol = solve_qp(&DMatrix::identity(2, 2), &DVector::zeros(2), &sys).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] - 1.0).abs() < 1e-14);
        assert!((sol.multipliers_eq[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_simplex_corner() {
        let sys = AffineSystem::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 1.0, -1.0, 0.0, 0.0, -1.0]),
            DVector::from_vec(vec![2.0, 0.0, 0.0]),
        )
        .unwrap();
        let p = project_polyhedron(&DVector::from_vec(vec![2.0, 2.0]), &sys).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-14 && (p[1] - 1.0).abs() < 1e-14);
        let p = project_polyhedron(&DVector::from_vec(vec![-1.0, 0.5]), &sys).unwrap();
        assert!(p[0].abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
    }
}
