//! Command-line front end: single solves, benchmarks and performance profiles.
//!
//! Exit status is 0 on success, 1 when a solver or I/O step fails and 2 for
//! usage and parse errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bilevel_dc::bench::{random_starts, read_results, run_benchmark};
use bilevel_dc::profile::{
    emit_reports, performance_profile, Metric, ProfileOffsets, ReportOptions,
};
use bilevel_dc::{run_penalty, BilevelInstance, Error, Method, PenaltyParams};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bilevel-dc",
    version,
    about = "Penalty DC solvers for linear-lower-level bilevel programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ParamArgs {
    /// Solver parameter overrides, e.g. `--params gamma=1.5 inner_tol=1e-6`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<PenaltyParams, Error> {
        let mut p = PenaltyParams::default();
        for kv in &self.params {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::parse("--params", format!("expected KEY=VALUE, found `{kv}`"))
            })?;
            p.set(k.trim(), v.trim())?;
        }
        Ok(p)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance from a seeded random feasible start.
    Solve {
        /// Built-in name (ex1, ex2, ex3) or path to a JSON instance.
        #[arg(long)]
        instance: String,
        #[arg(long, default_value = "pbdc")]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run methods from shared random starts and write CSV tables and profiles.
    Bench {
        #[arg(long)]
        instance: String,
        #[arg(long, value_delimiter = ',', default_value = "pbdc,pdc,pdg")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write `wall_ms = 0` so repeated runs give byte-identical files.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        log_tau: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Build a performance profile from an existing `results.csv`.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "fval")]
        metric: Metric,
        /// Offset added to every score; must be nonnegative.
        #[arg(long)]
        offset: f64,
        /// Reference value subtracted from the metric (the optimum for fval, else 0).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        pistar: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log_tau: bool,
    },
}

/// An unreadable instance source is a usage error, not a solver failure.
fn load_instance(source: &str) -> Result<BilevelInstance, Error> {
    BilevelInstance::load(source).map_err(|e| match e {
        Error::Io { .. } => Error::parse(
            "--instance",
            format!("`{source}` is neither a built-in name nor a readable file"),
        ),
        other => other,
    })
}

fn fmt_vec(v: &nalgebra::DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn solve(instance: &str, method: Method, seed: u64, params: &ParamArgs) -> Result<(), Error> {
    let params = params.resolve()?;
    let inst = load_instance(instance)?;
    let start = random_starts(&inst, 1, seed)?.remove(0);
    let r = run_penalty(&inst, &start, method, &params)?;
    println!("instance        {}", inst.name);
    println!("method          {}", r.method);
    println!("start           {}", fmt_vec(&r.start));
    println!("x               {}", fmt_vec(&r.x));
    println!("y               {}", fmt_vec(&r.y));
    println!("final_value     {:.10e}", r.final_value);
    println!("duality_gap     {:.3e}", r.final_gap);
    println!("stationarity    {:.3e}", r.stationarity_residual);
    println!("outer_iters     {}", r.outer_iters);
    println!("inner_iters     {}", r.total_inner_iters);
    println!("sigma_final     {:.6e}", r.sigma_final);
    println!("terminated      {}", r.terminated);
    if let Some(f) = inst.f_star {
        println!("f_star          {f:.10e}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    instance: &str,
    methods: &[Method],
    runs: usize,
    seed: u64,
    out: &Path,
    timing: bool,
    log_tau: bool,
    params: &ParamArgs,
) -> Result<(), Error> {
    let params = params.resolve()?;
    let inst = load_instance(instance)?;
    let table = run_benchmark(&inst, methods, runs, seed, &params)?;
    let mut curves = Vec::new();
    if !table.is_empty() {
        let offsets = ProfileOffsets::for_instance(&inst.name);
        for metric in Metric::ALL {
            let pi_star = match metric {
                Metric::Fval => inst.f_star.unwrap_or_else(|| {
                    table
                        .rows
                        .iter()
                        .filter(|r| r.terminated)
                        .map(|r| r.fval)
                        .fold(f64::INFINITY, f64::min)
                }),
                _ => 0.0,
            };
            curves.extend(performance_profile(
                &table,
                metric,
                offsets.get(metric),
                pi_star,
            )?);
        }
    }
    let emitted = emit_reports(
        Some(&table),
        &curves,
        out,
        ReportOptions { log_tau, timing },
    )?;
    println!(
        "{:<6} {:>14} {:>10} {:>12} {:>10} {:>6}",
        "method", "avg fval", "avg outer", "avg gap", "avg inner", "term"
    );
    for s in table.summary() {
        println!(
            "{:<6} {:>14.6e} {:>10.2} {:>12.3e} {:>10.2} {:>3}/{}",
            s.method.name(),
            s.avg_fval,
            s.avg_outer,
            s.avg_gap,
            s.avg_inner,
            s.terminated,
            s.runs
        );
    }
    for note in &emitted.notes {
        println!("note: {note}");
    }
    for f in &emitted.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn profile(
    input: &Path,
    metric: Metric,
    offset: f64,
    pistar: f64,
    out: &Path,
    log_tau: bool,
) -> Result<(), Error> {
    let table = read_results(input)?;
    let curves = performance_profile(&table, metric, offset, pistar)?;
    let emitted = emit_reports(
        None,
        &curves,
        out,
        ReportOptions {
            log_tau,
            timing: false,
        },
    )?;
    for c in &curves {
        println!(
            "{:<5} rho(1) = {:.3}  success = {:.3}  max tau = {:.4e}",
            c.method.name(),
            c.rho(1.0),
            c.success_fraction,
            c.max_tau()
        );
    }
    for note in &emitted.notes {
        println!("note: {note}");
    }
    for f in &emitted.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Solve {
            instance,
            method,
            seed,
            params,
        } => solve(instance, *method, *seed, params),
        Command::Bench {
            instance,
            methods,
            runs,
            seed,
            out,
            no_timing,
            log_tau,
            params,
        } => bench(
            instance,
            methods,
            *runs,
            *seed,
            out,
            !*no_timing,
            *log_tau,
            params,
        ),
        Command::Profile {
            input,
            metric,
            offset,
            pistar,
            out,
            log_tau,
        } => profile(input, *metric, *offset, *pistar, out, *log_tau),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
