//! A small benchmark with shared random starts, its summary table and the
//! performance-profile SVGs.
//!
//! `cargo run --release --example benchmark_profiles -- [instance] [runs] [out_dir]`

use std::path::PathBuf;

use bilevel_dc::bench::run_benchmark;
use bilevel_dc::profile::{
    emit_reports, performance_profile, Metric, ProfileOffsets, ReportOptions,
};
use bilevel_dc::{BilevelInstance, Method, PenaltyParams};

fn main() -> bilevel_dc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("ex1", String::as_str);
    let runs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let out = args
        .get(2)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("bilevel-dc-{name}")));

    let inst = BilevelInstance::load(name)?;
    let table = run_benchmark(&inst, &Method::ALL, runs, 42, &PenaltyParams::default())?;
    println!("{name}: {runs} starts x {} methods", Method::ALL.len());
    for s in table.summary() {
        println!(
            "  {:<4} avg f {:>12.6e}  avg outer {:>6.2}  avg gap {:.1e}  avg inner {:>8.2}  terminated {}/{}",
            s.method.name(),
            s.avg_fval,
            s.avg_outer,
            s.avg_gap,
            s.avg_inner,
            s.terminated,
            s.runs
        );
    }

    let offsets = ProfileOffsets::for_instance(name);
    let mut curves = Vec::new();
    for metric in Metric::ALL {
        let pi_star = if metric == Metric::Fval {
            inst.f_star.unwrap_or(0.0)
        } else {
            0.0
        };
        let cs = performance_profile(&table, metric, offsets.get(metric), pi_star)?;
        for c in &cs {
            println!(
                "  {metric:<5} {:<4} rho(1) = {:.2}, success {:.2}",
                c.method.name(),
                c.rho(1.0),
                c.success_fraction
            );
        }
        curves.extend(cs);
    }
    let emitted = emit_reports(Some(&table), &curves, &out, ReportOptions::default())?;
    for f in emitted.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
