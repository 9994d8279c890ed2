//! Performance profiles and report files.
//!
//! For a metric `pi`, offset `theta` and reference `pi_star`, each start `s`
//! and method `a` get the score `Q = max(pi - pi_star, 0) + theta` if the run
//! terminated and `+inf` otherwise. The ratio `r = Q / min_a Q` is taken per
//! start, and the curve of a method is `rho(tau) = #{s : r <= tau} / #S`.
//!
//! A start on which every method failed has no finite minimum; it stays in
//! `#S` but contributes no finite ratio to any curve. If the minimum is 0
//! (possible only for `theta = 0`) the zero scores get ratio 1 and the rest
//! `+inf`.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bench::{ensure_dir, write_results, write_summary, BenchRow, BenchTable};
use crate::error::{Error, Result};
use crate::penalty::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Fval,
    Outer,
    Gap,
    Inner,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Fval, Metric::Outer, Metric::Gap, Metric::Inner];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Fval => "fval",
            Metric::Outer => "outer",
            Metric::Gap => "gap",
            Metric::Inner => "inner",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Metric::Fval => "function values",
            Metric::Outer => "outer iterations",
            Metric::Gap => "duality gap",
            Metric::Inner => "total inner iterations",
        }
    }

    pub fn value(self, row: &BenchRow) -> f64 {
        match self {
            Metric::Fval => row.fval,
            Metric::Outer => row.outer as f64,
            Metric::Gap => row.gap,
            Metric::Inner => row.inner as f64,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fval" => Ok(Metric::Fval),
            "outer" | "outer_iters" => Ok(Metric::Outer),
            "gap" => Ok(Metric::Gap),
            "inner" | "inner_iters" => Ok(Metric::Inner),
            _ => Err(Error::parse(
                "metric",
                format!("unknown metric `{s}` (expected fval, outer, gap or inner)"),
            )),
        }
    }
}

/// Offsets `theta` per metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOffsets {
    pub fval: f64,
    pub outer: f64,
    pub gap: f64,
    pub inner: f64,
}

impl ProfileOffsets {
    /// Offsets used for the shipped instances; unknown names get the `ex1` set.
    pub fn for_instance(name: &str) -> Self {
        let fval = match name {
            "ex2" => 1e-5,
            "ex3" => 1e-2,
            _ => 1e-4,
        };
        Self {
            fval,
            outer: 1.0,
            gap: 1e-6,
            inner: 1.0,
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Fval => self.fval,
            Metric::Outer => self.outer,
            Metric::Gap => self.gap,
            Metric::Inner => self.inner,
        }
    }
}

/// Step function `rho(tau)` of one method: `rho` jumps to `breakpoints[i].1`
/// at `tau = breakpoints[i].0`. The first breakpoint is at `tau = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub method: Method,
    pub metric: Metric,
    pub offset: f64,
    pub breakpoints: Vec<(f64, f64)>,
    pub success_fraction: f64,
    /// Starts on which every method failed.
    pub dropped_starts: usize,
}

impl ProfileCurve {
    pub fn rho(&self, tau: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(t, _)| *t <= tau)
            .last()
            .map_or(0.0, |&(_, r)| r)
    }

    /// Largest finite ratio reached by this method.
    pub fn max_tau(&self) -> f64 {
        self.breakpoints.last().map_or(1.0, |b| b.0)
    }
}

/// Per-start score matrix: `scores[s][a]` for the methods of `table.methods()`.
pub fn profile_scores(
    table: &BenchTable,
    metric: Metric,
    theta: f64,
    pi_star: f64,
) -> (Vec<Method>, Vec<Vec<f64>>) {
    let methods = table.methods();
    let mut starts: Vec<usize> = table.rows.iter().map(|r| r.start).collect();
    starts.sort_unstable();
    starts.dedup();
    let scores = starts
        .iter()
        .map(|&s| {
            methods
                .iter()
                .map(|&m| {
                    table
                        .rows
                        .iter()
                        .find(|r| r.start == s && r.method == m)
                        .filter(|r| r.terminated && metric.value(r).is_finite())
                        .map_or(f64::INFINITY, |r| {
                            (metric.value(r) - pi_star).max(0.0) + theta
                        })
                })
                .collect()
        })
        .collect();
    (methods, scores)
}

/// Ratios `r[s][a] = Q[s][a] / min_a Q[s][a]`; `None` for dropped starts.
pub fn performance_ratios(scores: &[Vec<f64>]) -> Vec<Option<Vec<f64>>> {
    scores
        .iter()
        .map(|q| {
            let best = q.iter().copied().fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                return None;
            }
            Some(
                q.iter()
                    .map(|&v| {
                        if best == 0.0 {
                            if v == 0.0 {
                                1.0
                            } else {
                                f64::INFINITY
                            }
                        } else {
                            v / best
                        }
                    })
                    .collect(),
            )
        })
        .collect()
}

pub fn performance_profile(
    table: &BenchTable,
    metric: Metric,
    theta: f64,
    pi_star: f64,
) -> Result<Vec<ProfileCurve>> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if theta.is_nan() || theta < 0.0 {
        return Err(Error::parse("offset", "theta must be nonnegative"));
    }
    let (methods, scores) = profile_scores(table, metric, theta, pi_star);
    let ratios = performance_ratios(&scores);
    let n_starts = scores.len() as f64;
    let dropped = ratios.iter().filter(|r| r.is_none()).count();
    Ok(methods
        .iter()
        .enumerate()
        .map(|(a, &method)| {
            let mut finite: Vec<f64> = ratios
                .iter()
                .flatten()
                .map(|r| r[a])
                .filter(|v| v.is_finite())
                .collect();
            finite.sort_by(f64::total_cmp);
            let mut breakpoints = vec![(1.0, 0.0)];
            for (i, &tau) in finite.iter().enumerate() {
                let rho = (i + 1) as f64 / n_starts;
                let tau = tau.max(1.0);
                match breakpoints.last_mut() {
                    Some(last) if last.0 == tau => last.1 = rho,
                    _ => breakpoints.push((tau, rho)),
                }
            }
            ProfileCurve {
                method,
                metric,
                offset: theta,
                success_fraction: finite.len() as f64 / n_starts,
                breakpoints,
                dropped_starts: dropped,
            }
        })
        .collect())
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Static SVG 1.1 step plot of the curves of one metric.
pub fn profile_svg(curves: &[ProfileCurve], log_tau: bool) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (60.0, 150.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let tau_max = curves.iter().map(ProfileCurve::max_tau).fold(1.0, f64::max);
    let tau_hi = if log_tau {
        (tau_max * 2.0).max(10.0)
    } else {
        (tau_max * 1.1).max(2.0)
    };
    let sx = |tau: f64| -> f64 {
        let t = if log_tau {
            tau.max(1.0).ln() / tau_hi.ln()
        } else {
            (tau - 1.0) / (tau_hi - 1.0)
        };
        left + pw * t.clamp(0.0, 1.0)
    };
    let sy = |rho: f64| -> f64 { top + ph * (1.0 - rho) };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    if let Some(c) = curves.first() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{} (theta = {:e})</text>"#,
            left + pw / 2.0,
            c.metric.title(),
            c.offset
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let rho = i as f64 / 4.0;
        let y = sy(rho);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{rho:.2}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    let ticks: Vec<f64> = if log_tau {
        let mut t = vec![];
        let mut v = 1.0;
        while v <= tau_hi * 1.0001 {
            t.push(v);
            v *= 10.0;
        }
        t
    } else {
        (0..=4)
            .map(|i| 1.0 + (tau_hi - 1.0) * i as f64 / 4.0)
            .collect()
    };
    for t in ticks {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(t),
            top + ph + 16.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">tau{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        if log_tau { " (log scale)" } else { "" }
    );
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = Vec::new();
        let mut prev = 0.0;
        for &(tau, rho) in &c.breakpoints {
            pts.push((sx(tau), sy(prev)));
            pts.push((sx(tau), sy(rho)));
            prev = rho;
        }
        pts.push((sx(tau_hi), sy(prev)));
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        let ly = top + 20.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            c.method.name()
        );
    }
    if let Some(c) = curves.first().filter(|c| c.dropped_starts > 0) {
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="{}" font-family="sans-serif" font-size="10">{} start(s) failed for every method</text>"#,
            h - 28.0,
            c.dropped_starts
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(t: f64) -> String {
    if t >= 1e4 {
        format!("{t:.0e}")
    } else if (t - t.round()).abs() < 1e-9 {
        format!("{t:.0}")
    } else {
        format!("{t:.2}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    pub log_tau: bool,
    /// Write measured wall times; otherwise `wall_ms = 0` for reproducible files.
    pub timing: bool,
}

#[derive(Debug, Clone, Default)]
pub struct EmittedReports {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Write `results.csv` and `summary.csv` (unless `table` is `None`) and one
/// `profile_<metric>.svg` per metric present in `curves`.
pub fn emit_reports(
    table: Option<&BenchTable>,
    curves: &[ProfileCurve],
    out_dir: &Path,
    opts: ReportOptions,
) -> Result<EmittedReports> {
    let dir = ensure_dir(out_dir)?;
    let mut out = EmittedReports::default();
    if let Some(t) = table {
        let p = dir.join("results.csv");
        write_results(t, &p, opts.timing)?;
        out.files.push(p);
        let p = dir.join("summary.csv");
        write_summary(t, &p)?;
        out.files.push(p);
    }
    if curves.is_empty() {
        out.notes
            .push("no profile curves; SVG output skipped".into());
        return Ok(out);
    }
    for metric in Metric::ALL {
        let group: Vec<ProfileCurve> = curves
            .iter()
            .filter(|c| c.metric == metric)
            .cloned()
            .collect();
        if group.is_empty() {
            continue;
        }
        let p = dir.join(format!("profile_{}.svg", metric.name()));
        fs::write(&p, profile_svg(&group, opts.log_tau)).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
        if group[0].dropped_starts > 0 {
            out.notes.push(format!(
                "{}: {} start(s) failed for every method and were dropped from the ratios",
                metric.name(),
                group[0].dropped_starts
            ));
        }
        out.files.push(p);
    }
    Ok(out)
}
