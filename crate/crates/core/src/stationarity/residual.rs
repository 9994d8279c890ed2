use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::BilevelInstance;
use crate::subsolvers::{solve_lp, AffineSystem, LpStatus};

pub const DEFAULT_ACTIVE_TOL: f64 = 1e-6;

/// Upper bound on the penalty multiplier in the residual LP; keeps the LP bounded.
pub const SIGMA_CAP: f64 = 1e6;

/// Residual threshold at which a point counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-5;

/// Best multipliers for the bilevel stationarity system at a point.
///
/// With `r_x = grad_x f + A^T (lambda - nu) + C^T mu` and
/// `r_y = grad_y f + B^T (lambda - nu) + D^T mu`, `residual = ||r_x||_1 + ||r_y||_1`
/// is minimal over nonnegative multipliers supported on active rows subject to
/// `B^T nu + sigma c = 0`. Here `nu` stands for `sigma` times a lower-level dual.
#[derive(Debug, Clone)]
pub struct StationarityCertificate {
    pub residual: f64,
    pub lambda: DVector<f64>,
    pub nu: DVector<f64>,
    pub mu: DVector<f64>,
    pub sigma: f64,
    pub active_ll: Vec<usize>,
    pub active_ul: Vec<usize>,
    /// `sigma = 0` while `nu != 0`: `nu` lies in the dual recession cone.
    pub degenerate: bool,
}

impl StationarityCertificate {
    pub fn is_stationary(&self) -> bool {
        self.residual <= STATIONARY_TOL
    }

    /// `(r_x, r_y)` recomputed from the stored multipliers.
    pub fn gradient_residual(
        &self,
        instance: &BilevelInstance,
        x: &DVector<f64>,
        y: &DVector<f64>,
    ) -> DVector<f64> {
        let diff = &self.lambda - &self.nu;
        let rx = instance.lower.a.tr_mul(&diff) + instance.c.tr_mul(&self.mu);
        let ry = instance.lower.b.tr_mul(&diff) + instance.d.tr_mul(&self.mu);
        instance.objective.gradient(&instance.join(x, y)) + instance.join(&rx, &ry)
    }
}

pub fn stationarity_residual(
    instance: &BilevelInstance,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol_active: f64,
) -> Result<StationarityCertificate> {
    let (n, m, p, q) = (instance.n(), instance.m(), instance.p(), instance.q());
    if x.len() != n || y.len() != m {
        return Err(Error::Dimension {
            what: "stationarity point".into(),
            expected: n + m,
            found: x.len() + y.len(),
        });
    }
    let w = instance.join(x, y);
    let sys = instance.feasible_set();
    let viol = sys.max_violation(&w);
    if viol > tol_active {
        return Err(Error::InfeasiblePoint(viol));
    }
    let slack = sys.slack(&w);
    let active_ll: Vec<usize> = (0..p).filter(|&i| slack[i] <= tol_active).collect();
    let active_ul: Vec<usize> = (0..q).filter(|&i| slack[p + i] <= tol_active).collect();
    let (na, nu_len) = (active_ll.len(), active_ul.len());

    // variable layout: lambda | nu | mu | sigma | t
    let nv = 2 * na + nu_len + 1 + (n + m);
    let (o_nu, o_mu, o_sigma, o_t) = (na, 2 * na, 2 * na + nu_len, 2 * na + nu_len + 1);

    // r = grad + K v with K the multiplier-to-residual map
    let mut k = DMatrix::zeros(n + m, nv);
    let ab = |row: usize| -> DVector<f64> {
        DVector::from_iterator(
            n + m,
            instance
                .lower
                .a
                .row(row)
                .iter()
                .chain(instance.lower.b.row(row).iter())
                .copied(),
        )
    };
    for (j, &row) in active_ll.iter().enumerate() {
        let col = ab(row);
        k.column_mut(j).copy_from(&col);
        k.column_mut(o_nu + j).copy_from(&(-col));
    }
    for (j, &row) in active_ul.iter().enumerate() {
        let col = DVector::from_iterator(
            n + m,
            instance
                .c
                .row(row)
                .iter()
                .chain(instance.d.row(row).iter())
                .copied(),
        );
        k.column_mut(o_mu + j).copy_from(&col);
    }
    let grad = instance.objective.gradient(&w);

    // r <= t  and  -r <= t, then nonnegativity of multipliers and sigma <= cap
    let n_mult = o_t;
    let rows = 2 * (n + m) + n_mult + 1;
    let mut m_ub = DMatrix::zeros(rows, nv);
    let mut g_ub = DVector::zeros(rows);
    for i in 0..n + m {
        for j in 0..n_mult {
            m_ub[(i, j)] = k[(i, j)];
            m_ub[(n + m + i, j)] = -k[(i, j)];
        }
        m_ub[(i, o_t + i)] = -1.0;
        m_ub[(n + m + i, o_t + i)] = -1.0;
        g_ub[i] = -grad[i];
        g_ub[n + m + i] = grad[i];
    }
    for j in 0..n_mult {
        m_ub[(2 * (n + m) + j, j)] = -1.0;
    }
    m_ub[(rows - 1, o_sigma)] = 1.0;
    g_ub[rows - 1] = SIGMA_CAP;

    // B_act^T nu + sigma c = 0
    let mut m_eq = DMatrix::zeros(m, nv);
    for (j, &row) in active_ll.iter().enumerate() {
        for i in 0..m {
            m_eq[(i, o_nu + j)] = instance.lower.b[(row, i)];
        }
    }
    for i in 0..m {
        m_eq[(i, o_sigma)] = instance.lower.cost[i];
    }
    let lp_sys = AffineSystem::with_equalities(m_ub, g_ub, m_eq, DVector::zeros(m))?;
    let mut cost = DVector::zeros(nv);
    cost.rows_mut(o_t, n + m).fill(1.0);

    let sol = solve_lp(&cost, &lp_sys)?;
    // sigma = nu = lambda = mu = 0 with t = |grad| is always feasible and the
    // objective is bounded below by 0
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericDegeneracy(f64::NAN));
    }
    let v = &sol.x;
    let mut lambda = DVector::zeros(p);
    let mut nu = DVector::zeros(p);
    let mut mu = DVector::zeros(q);
    for (j, &row) in active_ll.iter().enumerate() {
        lambda[row] = v[j].max(0.0);
        nu[row] = v[o_nu + j].max(0.0);
    }
    for (j, &row) in active_ul.iter().enumerate() {
        mu[row] = v[o_mu + j].max(0.0);
    }
    let sigma = v[o_sigma].max(0.0);
    let degenerate = sigma == 0.0 && nu.amax() > 1e-12;
    let mut cert = StationarityCertificate {
        residual: 0.0,
        lambda,
        nu,
        mu,
        sigma,
        active_ll,
        active_ul,
        degenerate,
    };
    // the residual attained by the returned multipliers, not the LP objective
    cert.residual = cert.gradient_residual(instance, x, y).lp_norm(1);
    Ok(cert)
}
