//! Random starts, batch runs and the CSV tables.
//!
//! Starting points are drawn uniformly from the instance's `start_box` with
//! SplitMix64 (64-bit state, seeded directly by the user seed) and projected
//! onto `Z_u ∩ Z_l`. All methods share the same starts.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::BilevelInstance;
use crate::penalty::{run_penalty, Method, PenaltyParams, RunReport};
use crate::subsolvers::project_polyhedron;

pub const RESULTS_HEADER: [&str; 10] = [
    "method",
    "start",
    "seed",
    "fval",
    "outer",
    "inner",
    "gap",
    "resid",
    "terminated",
    "wall_ms",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "method",
    "average function value",
    "average number of outer iterations",
    "average lower level duality gap",
    "average number of inner iterations",
    "terminated",
    "runs",
];

/// `count` points of `Z_u ∩ Z_l`, reproducible from `seed`.
///
/// A sample that is already feasible is returned unchanged.
pub fn random_starts(
    instance: &BilevelInstance,
    count: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let sys = instance.feasible_set();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = DVector::from_iterator(
            instance.start_box.len(),
            instance.start_box.iter().map(|&(lo, hi)| {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..=hi)
                }
            }),
        );
        if sys.max_violation(&raw) == 0.0 {
            out.push(raw);
        } else {
            out.push(project_polyhedron(&raw, sys)?);
        }
    }
    Ok(out)
}

/// One line of `results.csv`, plus the in-memory run data when available.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: Method,
    pub start: usize,
    pub seed: u64,
    pub fval: f64,
    pub outer: usize,
    pub inner: usize,
    pub gap: f64,
    pub resid: f64,
    pub terminated: bool,
    pub wall_ms: f64,
    pub start_point: Option<DVector<f64>>,
    pub error: Option<String>,
    pub report: Option<Box<RunReport>>,
}

impl BenchRow {
    fn from_result(
        method: Method,
        start: usize,
        seed: u64,
        w0: &DVector<f64>,
        res: Result<RunReport>,
    ) -> Self {
        match res {
            Ok(r) => Self {
                method,
                start,
                seed,
                fval: r.final_value,
                outer: r.outer_iters,
                inner: r.total_inner_iters,
                gap: r.final_gap,
                resid: r.stationarity_residual,
                terminated: r.terminated,
                wall_ms: r.wall_time.as_secs_f64() * 1e3,
                start_point: Some(w0.clone()),
                error: None,
                report: Some(Box::new(r)),
            },
            Err(e) => Self {
                method,
                start,
                seed,
                fval: f64::NAN,
                outer: 0,
                inner: 0,
                gap: f64::NAN,
                resid: f64::NAN,
                terminated: false,
                wall_ms: 0.0,
                start_point: Some(w0.clone()),
                error: Some(e.to_string()),
                report: None,
            },
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchTable {
    pub instance: String,
    pub seed: u64,
    /// Ordered by start index, then by method in request order.
    pub rows: Vec<BenchRow>,
}

/// Means over terminated rows of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub avg_fval: f64,
    pub avg_outer: f64,
    pub avg_gap: f64,
    pub avg_inner: f64,
    pub terminated: usize,
    pub runs: usize,
}

impl BenchTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut ms: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        ms.sort();
        ms.dedup();
        ms
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// One entry per method present, in the order PBDC, PDC, PDG.
    pub fn summary(&self) -> Vec<MethodSummary> {
        self.methods()
            .into_iter()
            .map(|method| {
                let rows: Vec<&BenchRow> = self.rows_for(method).collect();
                let ok: Vec<&&BenchRow> = rows.iter().filter(|r| r.terminated).collect();
                let mean = |f: &dyn Fn(&BenchRow) -> f64| -> f64 {
                    if ok.is_empty() {
                        f64::NAN
                    } else {
                        ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                    }
                };
                MethodSummary {
                    method,
                    avg_fval: mean(&|r| r.fval),
                    avg_outer: mean(&|r| r.outer as f64),
                    avg_gap: mean(&|r| r.gap),
                    avg_inner: mean(&|r| r.inner as f64),
                    terminated: ok.len(),
                    runs: rows.len(),
                }
            })
            .collect()
    }
}

/// Run every method from `n_runs` shared starts, in parallel.
///
/// A failing run becomes a row with `terminated = false` and the error text.
pub fn run_benchmark(
    instance: &BilevelInstance,
    methods: &[Method],
    n_runs: usize,
    seed: u64,
    params: &PenaltyParams,
) -> Result<BenchTable> {
    let starts = random_starts(instance, n_runs, seed)?;
    let jobs: Vec<(usize, Method)> = (0..n_runs)
        .flat_map(|s| methods.iter().map(move |&m| (s, m)))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(s, m)| {
            let res = run_penalty(instance, &starts[s], m, params);
            if let Err(e) = &res {
                log::warn!("{} start {s}: {e}", m.name());
            }
            BenchRow::from_result(m, s, seed, &starts[s], res)
        })
        .collect();
    Ok(BenchTable {
        instance: instance.name.clone(),
        seed,
        rows,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Write `results.csv`; `timing = false` writes `wall_ms = 0` so that files are
/// byte-identical across runs.
pub fn write_results(table: &BenchTable, path: &Path, timing: bool) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err(path))?;
    wtr.write_record(RESULTS_HEADER).map_err(csv_err(path))?;
    for r in &table.rows {
        let wall = if timing { r.wall_ms } else { 0.0 };
        wtr.write_record([
            r.method.name().to_string(),
            r.start.to_string(),
            r.seed.to_string(),
            r.fval.to_string(),
            r.outer.to_string(),
            r.inner.to_string(),
            r.gap.to_string(),
            r.resid.to_string(),
            r.terminated.to_string(),
            wall.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    wtr.flush().map_err(io_err(path))
}

pub fn write_summary(table: &BenchTable, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err(path))?;
    wtr.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for s in table.summary() {
        wtr.write_record([
            s.method.name().to_string(),
            s.avg_fval.to_string(),
            s.avg_outer.to_string(),
            s.avg_gap.to_string(),
            s.avg_inner.to_string(),
            s.terminated.to_string(),
            s.runs.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    wtr.flush().map_err(io_err(path))
}

/// Read a `results.csv` back into a table (without start points or reports).
pub fn read_results(path: &Path) -> Result<BenchTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(Error::parse(
            format!("{} header", path.display()),
            format!("expected `{}`", RESULTS_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let field = |i: usize| -> &str { rec.get(i).unwrap_or("") };
        let ctx = |i: usize| {
            format!(
                "{} line {} column {}",
                path.display(),
                line + 2,
                RESULTS_HEADER[i]
            )
        };
        let float = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|e| Error::parse(ctx(i), e.to_string()))
        };
        let count = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|e| Error::parse(ctx(i), e.to_string()))
        };
        rows.push(BenchRow {
            method: field(0)
                .parse()
                .map_err(|_| Error::parse(ctx(0), "unknown method"))?,
            start: count(1)?,
            seed: field(2)
                .parse()
                .map_err(|e: std::num::ParseIntError| Error::parse(ctx(2), e.to_string()))?,
            fval: float(3)?,
            outer: count(4)?,
            inner: count(5)?,
            gap: float(6)?,
            resid: float(7)?,
            terminated: field(8)
                .parse()
                .map_err(|e: std::str::ParseBoolError| Error::parse(ctx(8), e.to_string()))?,
            wall_ms: float(9)?,
            start_point: None,
            error: None,
            report: None,
        });
    }
    let seed = rows.first().map_or(0, |r| r.seed);
    Ok(BenchTable {
        instance: String::new(),
        seed,
        rows,
    })
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn starts_are_deterministic_and_feasible() {
        let inst = builtins::ex1().unwrap();
        let a = random_starts(&inst, 20, 7).unwrap();
        let b = random_starts(&inst, 20, 7).unwrap();
        assert_eq!(a, b);
        for w in &a {
            assert!(inst.feasible_set().max_violation(w) <= 1e-9);
        }
    }

    #[test]
    fn empty_benchmark() {
        let inst = builtins::ex2().unwrap();
        let t = run_benchmark(&inst, &Method::ALL, 0, 1, &PenaltyParams::default()).unwrap();
        assert!(t.is_empty());
    }
}
