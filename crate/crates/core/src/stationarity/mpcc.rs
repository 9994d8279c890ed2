//! Complementarity-constrained programs
//!
//! ```text
//!     min f(z)  s.t.  g(z) <= 0,  h(z) = 0,  0 <= G(z) ⊥ H(z) >= 0
//! ```
//!
//! with the complementarity rows written as `min(G_i(z), H_i(z)) = 0`, and
//! checks of the asymptotic stationarity conditions along a given sequence.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Biactive/nonbiactive partition of the complementarity indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MpccIndexSets {
    pub i_plus0: Vec<usize>,
    pub i_0plus: Vec<usize>,
    pub i_00: Vec<usize>,
}

impl MpccIndexSets {
    pub fn len(&self) -> usize {
        self.i_plus0.len() + self.i_0plus.len() + self.i_00.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Values within `tol` of zero count as zero.
pub fn mpcc_index_sets(
    g_vals: &DVector<f64>,
    h_vals: &DVector<f64>,
    tol: f64,
) -> Result<MpccIndexSets> {
    if g_vals.len() != h_vals.len() {
        return Err(Error::Dimension {
            what: "complementarity values".into(),
            expected: g_vals.len(),
            found: h_vals.len(),
        });
    }
    let mut sets = MpccIndexSets::default();
    for (i, (&g, &h)) in g_vals.iter().zip(h_vals.iter()).enumerate() {
        if !(g.min(h).abs() <= tol && g >= -tol && h >= -tol) {
            return Err(Error::InfeasibleComplementarity { index: i, g, h });
        }
        match (g > tol, h > tol) {
            (true, _) => sets.i_plus0.push(i),
            (false, true) => sets.i_0plus.push(i),
            (false, false) => sets.i_00.push(i),
        }
    }
    Ok(sets)
}

/// Smooth data of a complementarity-constrained program. Jacobians have one
/// row per constraint.
pub trait MpccProblem {
    fn dim(&self) -> usize;
    fn grad_f(&self, z: &DVector<f64>) -> DVector<f64>;
    fn g(&self, z: &DVector<f64>) -> DVector<f64>;
    fn jac_g(&self, z: &DVector<f64>) -> DMatrix<f64>;
    fn h(&self, z: &DVector<f64>) -> DVector<f64>;
    fn jac_h(&self, z: &DVector<f64>) -> DMatrix<f64>;
    fn big_g(&self, z: &DVector<f64>) -> DVector<f64>;
    fn jac_big_g(&self, z: &DVector<f64>) -> DMatrix<f64>;
    fn big_h(&self, z: &DVector<f64>) -> DVector<f64>;
    fn jac_big_h(&self, z: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpccMultipliers {
    pub g: DVector<f64>,
    pub h: DVector<f64>,
    pub big_g: DVector<f64>,
    pub big_h: DVector<f64>,
}

impl MpccMultipliers {
    pub fn zeros(mg: usize, mh: usize, mcc: usize) -> Self {
        Self {
            g: DVector::zeros(mg),
            h: DVector::zeros(mh),
            big_g: DVector::zeros(mcc),
            big_h: DVector::zeros(mcc),
        }
    }
}

/// Gradient in `z` of `f + lg^T g + lh^T h + lG^T G + lH^T H`.
pub fn lagrangian_gradient(
    problem: &dyn MpccProblem,
    z: &DVector<f64>,
    mult: &MpccMultipliers,
) -> DVector<f64> {
    problem.grad_f(z)
        + problem.jac_g(z).tr_mul(&mult.g)
        + problem.jac_h(z).tr_mul(&mult.h)
        + problem.jac_big_g(z).tr_mul(&mult.big_g)
        + problem.jac_big_h(z).tr_mul(&mult.big_h)
}

/// One element `(z^k, multipliers^k, eps^k)` of an asymptotic sequence.
#[derive(Debug, Clone)]
pub struct MpccSample {
    pub point: DVector<f64>,
    pub multipliers: MpccMultipliers,
    pub epsilon: DVector<f64>,
    /// `||eps^k - grad L(z^k, multipliers^k)||_inf`.
    pub gradient_residual: f64,
}

impl MpccSample {
    pub fn evaluate(
        problem: &dyn MpccProblem,
        point: DVector<f64>,
        multipliers: MpccMultipliers,
        epsilon: DVector<f64>,
    ) -> Self {
        let gradient_residual =
            (&epsilon - lagrangian_gradient(problem, &point, &multipliers)).amax();
        Self {
            point,
            multipliers,
            epsilon,
            gradient_residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AstatMode {
    /// Sign condition `lG * lH >= 0` on biactive indices.
    Clarke,
    /// Sign condition `lG, lH < 0` or `lG * lH = 0` on biactive indices.
    Limiting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AstatTolerances {
    /// Slack for the per-sample equalities.
    pub tol: f64,
    /// `||eps||` must end below this value.
    pub tol_limit: f64,
}

impl Default for AstatTolerances {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            tol_limit: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AstatVerdict {
    pub per_sample: Vec<bool>,
    /// All samples pass and `||eps^k||` decreases monotonically over the tail
    /// (the second half of the samples) to below `tol_limit`.
    pub limit: bool,
}

/// Check the asymptotic stationarity conditions at a limit point `z_bar`
/// whose inequality values are `g_bar` and whose index sets are `sets`.
pub fn check_mpcc_astat(
    samples: &[MpccSample],
    sets: &MpccIndexSets,
    g_bar: &DVector<f64>,
    mode: AstatMode,
    tols: AstatTolerances,
) -> AstatVerdict {
    let tol = tols.tol;
    let sample_ok = |s: &MpccSample| -> bool {
        let m = &s.multipliers;
        let compl_g = m.g.len() == g_bar.len()
            && m.g
                .iter()
                .zip(g_bar.iter())
                .all(|(&l, &gi)| l.min(-gi).abs() <= tol);
        let plus0 = sets.i_plus0.iter().all(|&i| m.big_g[i].abs() <= tol);
        let zero_plus = sets.i_0plus.iter().all(|&i| m.big_h[i].abs() <= tol);
        let biactive = sets.i_00.iter().all(|&i| {
            let (a, b) = (m.big_g[i], m.big_h[i]);
            match mode {
                AstatMode::Clarke => a * b >= -tol,
                AstatMode::Limiting => (a < 0.0 && b < 0.0) || (a * b).abs() <= tol,
            }
        });
        compl_g && plus0 && zero_plus && biactive && s.gradient_residual <= tol
    };
    let per_sample: Vec<bool> = samples.iter().map(sample_ok).collect();

    let norms: Vec<f64> = samples.iter().map(|s| s.epsilon.norm()).collect();
    let tail = &norms[norms.len() / 2..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    let limit = !samples.is_empty()
        && per_sample.iter().all(|&b| b)
        && monotone
        && tail.last().is_some_and(|&e| e <= tols.tol_limit);
    AstatVerdict { per_sample, limit }
}
