//! The three penalty methods on the shipped instances from one shared start.
//!
//! `cargo run --release --example penalty_methods -- ex3` includes the
//! transportation instance (slower).

use bilevel_dc::bench::random_starts;
use bilevel_dc::{run_penalty, BilevelInstance, Method, PenaltyParams};

fn main() -> bilevel_dc::Result<()> {
    let names: Vec<String> = {
        let args: Vec<String> = std::env::args().skip(1).collect();
        if args.is_empty() {
            vec!["ex1".into(), "ex2".into()]
        } else {
            args
        }
    };
    let params = PenaltyParams::default();
    for name in &names {
        let inst = BilevelInstance::load(name)?;
        let w0 = random_starts(&inst, 1, 2024)?.remove(0);
        println!("{name} (reference value {:?})", inst.f_star);
        for method in Method::ALL {
            let r = run_penalty(&inst, &w0, method, &params)?;
            println!(
                "  {:<4} f = {:>12.6e}  gap {:.1e}  stationarity {:.1e}  outer {:>3}  inner {:>5}  sigma {:.3e}  {:.0?}",
                method.name(),
                r.final_value,
                r.final_gap,
                r.stationarity_residual,
                r.outer_iters,
                r.total_inner_iters,
                r.sigma_final,
                r.wall_time
            );
        }
    }
    Ok(())
}
