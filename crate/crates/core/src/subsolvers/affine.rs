use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Polyhedron `{x : M_ub x <= g_ub, M_eq x = g_eq}` over free variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    m_ub: DMatrix<f64>,
    g_ub: DVector<f64>,
    m_eq: DMatrix<f64>,
    g_eq: DVector<f64>,
}

fn check_block(what: &str, m: &DMatrix<f64>, g: &DVector<f64>, nvars: usize) -> Result<()> {
    if m.nrows() != g.len() {
        return Err(Error::Dimension {
            what: format!("{what} right-hand side"),
            expected: m.nrows(),
            found: g.len(),
        });
    }
    if m.nrows() > 0 && m.ncols() != nvars {
        return Err(Error::Dimension {
            what: format!("{what} columns"),
            expected: nvars,
            found: m.ncols(),
        });
    }
    if m.iter().chain(g.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

impl AffineSystem {
    /// Inequality-only system.
    pub fn new(m_ub: DMatrix<f64>, g_ub: DVector<f64>) -> Result<Self> {
        let n = m_ub.ncols();
        Self::with_equalities(m_ub, g_ub, DMatrix::zeros(0, n), DVector::zeros(0))
    }

    pub fn with_equalities(
        m_ub: DMatrix<f64>,
        g_ub: DVector<f64>,
        m_eq: DMatrix<f64>,
        g_eq: DVector<f64>,
    ) -> Result<Self> {
        let n = m_ub.ncols().max(m_eq.ncols());
        check_block("inequality block", &m_ub, &g_ub, n)?;
        check_block("equality block", &m_eq, &g_eq, n)?;
        // normalise empty blocks to the right column count
        let m_ub = if m_ub.nrows() == 0 {
            DMatrix::zeros(0, n)
        } else {
            m_ub
        };
        let m_eq = if m_eq.nrows() == 0 {
            DMatrix::zeros(0, n)
        } else {
            m_eq
        };
        Ok(Self {
            m_ub,
            g_ub,
            m_eq,
            g_eq,
        })
    }

    /// Unconstrained space of dimension `n`.
    pub fn free(n: usize) -> Self {
        Self {
            m_ub: DMatrix::zeros(0, n),
            g_ub: DVector::zeros(0),
            m_eq: DMatrix::zeros(0, n),
            g_eq: DVector::zeros(0),
        }
    }

    /// Box `lo <= x <= hi` written as `2n` inequality rows.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                what: "box bounds".into(),
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let n = lo.len();
        let mut m = DMatrix::zeros(2 * n, n);
        let mut g = DVector::zeros(2 * n);
        for i in 0..n {
            m[(i, i)] = 1.0;
            g[i] = hi[i];
            m[(n + i, i)] = -1.0;
            g[n + i] = -lo[i];
        }
        Self::new(m, g)
    }

    pub fn nvars(&self) -> usize {
        self.m_ub.ncols()
    }

    pub fn n_ub(&self) -> usize {
        self.m_ub.nrows()
    }

    pub fn n_eq(&self) -> usize {
        self.m_eq.nrows()
    }

    pub fn m_ub(&self) -> &DMatrix<f64> {
        &self.m_ub
    }

    pub fn g_ub(&self) -> &DVector<f64> {
        &self.g_ub
    }

    pub fn m_eq(&self) -> &DMatrix<f64> {
        &self.m_eq
    }

    pub fn g_eq(&self) -> &DVector<f64> {
        &self.g_eq
    }

    /// `g_ub - M_ub x`; nonnegative entries mean satisfied rows.
    pub fn slack(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.g_ub - &self.m_ub * x
    }

    /// Largest violation over all rows (0 for feasible points).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let ub = self.slack(x).iter().fold(0.0_f64, |acc, s| acc.max(-s));
        let eq = (&self.m_eq * x - &self.g_eq)
            .iter()
            .fold(0.0_f64, |acc, r| acc.max(r.abs()));
        ub.max(eq)
    }

    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Stack the inequality rows of `other` below those of `self`.
    pub fn intersect(&self, other: &AffineSystem) -> Result<Self> {
        if self.nvars() != other.nvars() {
            return Err(Error::Dimension {
                what: "intersected systems".into(),
                expected: self.nvars(),
                found: other.nvars(),
            });
        }
        let n = self.nvars();
        let stack = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(a.nrows() + b.nrows(), n);
            m.rows_mut(0, a.nrows()).copy_from(a);
            m.rows_mut(a.nrows(), b.nrows()).copy_from(b);
            m
        };
        let stackv = |a: &DVector<f64>, b: &DVector<f64>| {
            DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
        };
        Self::with_equalities(
            stack(&self.m_ub, &other.m_ub),
            stackv(&self.g_ub, &other.g_ub),
            stack(&self.m_eq, &other.m_eq),
            stackv(&self.g_eq, &other.g_eq),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_rhs() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let g = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            AffineSystem::new(m, g),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_nan() {
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        let g = DVector::from_vec(vec![1.0]);
        assert!(matches!(AffineSystem::new(m, g), Err(Error::NonFinite(_))));
    }

    #[test]
    fn box_violation() {
        let sys = AffineSystem::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sys.n_ub(), 4);
        assert_eq!(sys.max_violation(&DVector::from_vec(vec![0.5, -0.5])), 0.0);
        assert!((sys.max_violation(&DVector::from_vec(vec![1.5, 0.0])) - 0.5).abs() < 1e-15);
    }
}
