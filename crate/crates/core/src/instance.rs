//! Bilevel instances: data, validation, the JSON file format and the
//! built-in benchmark problems.
//!
//! Variables are stacked as `w = (x, y)` with `x` in `R^n` (upper level) and
//! `y` in `R^m` (lower level). The lower level is `min_y {c^T y | A x + B y <= b}`,
//! the upper-level constraints are `C x + D y <= d`, and the upper-level
//! objective is the quadratic `1/2 w^T Q w + q^T w + const`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dc::QuadObjective;
use crate::error::{Error, Result};
use crate::subsolvers::{solve_lp, AffineSystem, LpStatus};
use crate::value_function::LowerLevel;

#[derive(Debug, Clone)]
pub struct BilevelInstance {
    pub name: String,
    pub lower: LowerLevel,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub d_rhs: DVector<f64>,
    pub objective: QuadObjective,
    /// Sampling interval per coordinate of `w`.
    pub start_box: Vec<(f64, f64)>,
    pub f_star: Option<f64>,
    feasible: AffineSystem,
}

impl BilevelInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        lower: LowerLevel,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        d_rhs: DVector<f64>,
        objective: QuadObjective,
        start_box: Vec<(f64, f64)>,
        f_star: Option<f64>,
    ) -> Result<Self> {
        let n = lower.n();
        let m = lower.m();
        let q = d_rhs.len();
        let dim = |field: &str, expected: usize, found: usize| -> Result<()> {
            if expected != found {
                Err(Error::parse(
                    field,
                    format!("expected dimension {expected}, found {found}"),
                ))
            } else {
                Ok(())
            }
        };
        if q > 0 {
            dim("C rows", q, c.nrows())?;
            dim("C columns", n, c.ncols())?;
            dim("D rows", q, d.nrows())?;
            dim("D columns", m, d.ncols())?;
        }
        dim("Q rows", n + m, objective.hessian().nrows())?;
        dim("q", n + m, objective.linear().len())?;
        dim("start_box", n + m, start_box.len())?;
        for (i, &(lo, hi)) in start_box.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::parse(
                    "start_box",
                    format!("interval {i} = [{lo}, {hi}] is not a finite nonempty interval"),
                ));
            }
        }
        let c = if q == 0 { DMatrix::zeros(0, n) } else { c };
        let d = if q == 0 { DMatrix::zeros(0, m) } else { d };

        let p = lower.p();
        let mut m_ub = DMatrix::zeros(p + q, n + m);
        m_ub.view_mut((0, 0), (p, n)).copy_from(&lower.a);
        m_ub.view_mut((0, n), (p, m)).copy_from(&lower.b);
        m_ub.view_mut((p, 0), (q, n)).copy_from(&c);
        m_ub.view_mut((p, n), (q, m)).copy_from(&d);
        let g_ub = DVector::from_iterator(p + q, lower.rhs.iter().chain(d_rhs.iter()).copied());
        let feasible = AffineSystem::new(m_ub, g_ub)?;

        let probe = solve_lp(&DVector::zeros(n + m), &feasible)?;
        if probe.status == LpStatus::Infeasible {
            return Err(Error::InfeasibleInstance);
        }
        Ok(Self {
            name: name.into(),
            lower,
            c,
            d,
            d_rhs,
            objective,
            start_box,
            f_star,
            feasible,
        })
    }

    pub fn n(&self) -> usize {
        self.lower.n()
    }

    pub fn m(&self) -> usize {
        self.lower.m()
    }

    pub fn p(&self) -> usize {
        self.lower.p()
    }

    pub fn q(&self) -> usize {
        self.d_rhs.len()
    }

    /// `Z_u ∩ Z_l` as one system over `w = (x, y)`; lower-level rows first.
    pub fn feasible_set(&self) -> &AffineSystem {
        &self.feasible
    }

    pub fn split(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.n();
        (
            w.rows(0, n).clone_owned(),
            w.rows(n, self.m()).clone_owned(),
        )
    }

    pub fn join(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
    }

    pub fn upper_value(&self, w: &DVector<f64>) -> f64 {
        self.objective.value(w)
    }

    /// Load a built-in (`ex1`, `ex2`, `ex3`) or a JSON instance file.
    pub fn load(source: &str) -> Result<Self> {
        if let Some(inst) = crate::builtins::builtin(source) {
            return inst;
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| source.to_string());
        Self::from_json(&name, &text)
    }

    pub fn from_json(name: &str, text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("JSON (line {})", e.line()), e.to_string()))?;
        file.into_instance(name)
    }

    pub fn to_json(&self) -> String {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        let file = InstanceFile {
            a: rows(&self.lower.a),
            b_mat: rows(&self.lower.b),
            b: self.lower.rhs.iter().copied().collect(),
            c_mat: rows(&self.c),
            d_mat: rows(&self.d),
            d: self.d_rhs.iter().copied().collect(),
            c: self.lower.cost.iter().copied().collect(),
            q_mat: rows(self.objective.hessian()),
            q: self.objective.linear().iter().copied().collect(),
            constant: self.objective.constant(),
            start_box: self.start_box.iter().map(|&(a, b)| [a, b]).collect(),
            f_star: self.f_star,
        };
        serde_json::to_string_pretty(&file).expect("instance serialises")
    }
}

/// On-disk instance format: one JSON object, matrices as row-major nested
/// arrays. Dimensions are inferred from `B` (`p x m`) and `A` (`p x n`).
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b_mat: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(rename = "C", default)]
    c_mat: Vec<Vec<f64>>,
    #[serde(rename = "D", default)]
    d_mat: Vec<Vec<f64>>,
    #[serde(default)]
    d: Vec<f64>,
    c: Vec<f64>,
    #[serde(rename = "Q")]
    q_mat: Vec<Vec<f64>>,
    q: Vec<f64>,
    #[serde(rename = "const", default)]
    constant: f64,
    start_box: Vec<[f64; 2]>,
    #[serde(default)]
    f_star: Option<f64>,
}

fn matrix(field: &str, rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::parse(
                field,
                format!("row {i} has {} columns, expected {ncols}", r.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl InstanceFile {
    fn into_instance(self, name: &str) -> Result<BilevelInstance> {
        let p = self.b.len();
        let m = self.c.len();
        let n = self.a.first().map_or(0, |r| r.len());
        let check_rows = |field: &str, found: usize, expected: usize| -> Result<()> {
            if found != expected {
                Err(Error::parse(
                    field,
                    format!("has {found} rows, expected {expected}"),
                ))
            } else {
                Ok(())
            }
        };
        check_rows("A", self.a.len(), p)?;
        check_rows("B", self.b_mat.len(), p)?;
        let a = matrix("A", &self.a, n)?;
        let b_mat = matrix("B", &self.b_mat, m)?;
        let q = self.d.len();
        check_rows("C", self.c_mat.len(), q)?;
        check_rows("D", self.d_mat.len(), q)?;
        let c_mat = matrix("C", &self.c_mat, n)?;
        let d_mat = matrix("D", &self.d_mat, m)?;
        check_rows("Q", self.q_mat.len(), n + m)?;
        let q_mat = matrix("Q", &self.q_mat, n + m)?;
        if self.q.len() != n + m {
            return Err(Error::parse(
                "q",
                format!("has length {}, expected {}", self.q.len(), n + m),
            ));
        }
        let lower = LowerLevel::new(
            a,
            b_mat,
            DVector::from_vec(self.b),
            DVector::from_vec(self.c),
        )
        .map_err(|e| Error::parse("lower level", e.to_string()))?;
        let objective = QuadObjective::new(q_mat, DVector::from_vec(self.q), self.constant)
            .map_err(|e| Error::parse("Q", e.to_string()))?;
        BilevelInstance::new(
            name,
            lower,
            c_mat,
            d_mat,
            DVector::from_vec(self.d),
            objective,
            self.start_box.into_iter().map(|[a, b]| (a, b)).collect(),
            self.f_star,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_of_builtins() {
        for name in ["ex1", "ex2", "ex3"] {
            let inst = BilevelInstance::load(name).unwrap();
            let back = BilevelInstance::from_json(name, &inst.to_json()).unwrap();
            assert_eq!(back.lower, inst.lower);
            assert_eq!(back.feasible_set(), inst.feasible_set());
            assert_eq!(back.f_star, inst.f_star);
        }
    }

    #[test]
    fn mismatched_b_columns_names_the_field() {
        let text = r#"{"A": [[1.0]], "B": [[1.0, 2.0]], "b": [1.0], "c": [1.0],
                       "Q": [[0,0],[0,0]], "q": [0,0], "start_box": [[0,1],[0,1]]}"#;
        let err = BilevelInstance::from_json("bad", text).unwrap_err();
        match err {
            Error::Parse { field, .. } => assert_eq!(field, "B"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = BilevelInstance::from_json("bad", "{\n\"A\": [[1.0]],\n oops }").unwrap_err();
        match err {
            Error::Parse { field, .. } => assert!(field.contains("line 3"), "{field}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_feasible_set_rejected() {
        // y <= -1 and y >= 0
        let text = r#"{"A": [[0.0],[0.0]], "B": [[1.0],[-1.0]], "b": [-1.0, 0.0], "c": [1.0],
                       "Q": [[0,0],[0,0]], "q": [0,0], "start_box": [[0,1],[0,1]]}"#;
        assert!(matches!(
            BilevelInstance::from_json("empty", text),
            Err(Error::InfeasibleInstance)
        ));
    }
}
