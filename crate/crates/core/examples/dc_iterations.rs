//! One penalized DC problem solved by the classical and the boosted iteration
//! from the same start, with the objective trace of each.

use bilevel_dc::bench::random_starts;
use bilevel_dc::dc::{dc_split, solve_dc, DcParams, DcVariant};
use bilevel_dc::BilevelInstance;

fn main() -> bilevel_dc::Result<()> {
    let inst = BilevelInstance::load("ex1")?;
    let sigma = 10.0;
    let dec = dc_split(&inst.objective)?.with_penalty(sigma, &inst.lower)?;
    println!("rho = {}, sigma = {}", dec.rho(), dec.sigma());
    let w0 = random_starts(&inst, 1, 5)?.remove(0);
    println!("start {:?}", w0.as_slice());
    for variant in [DcVariant::Classical, DcVariant::Boosted] {
        let st = solve_dc(&inst, &dec, &w0, variant, &DcParams::default())?;
        println!(
            "{variant:?}: {} iterations, converged {}",
            st.iterations, st.converged
        );
        for (k, e) in st.trace.iter().enumerate() {
            println!(
                "  {k:>2}  phi {:>12.6}  ||d|| {:.2e}  step {:.3}  next {:>12.6}",
                e.objective, e.direction_norm, e.step, e.next_objective
            );
        }
        println!("  final w {:?}", st.w.as_slice());
    }
    Ok(())
}
