//! Stationarity certificates at benchmark solutions, and subdifferentials of
//! the min-function behind complementarity constraints.

use bilevel_dc::stationarity::{
    min_subdifferential, stationarity_residual, SubdiffKind, DEFAULT_ACTIVE_TOL,
};
use bilevel_dc::BilevelInstance;
use nalgebra::dvector;

fn main() -> bilevel_dc::Result<()> {
    for (name, x, y) in [
        ("ex1", dvector![2.0, 0.0], dvector![1.5, 0.0]),
        ("ex2", dvector![0.5], dvector![0.0, 0.5]),
        ("ex1", dvector![1.0, 1.0], dvector![0.5, 1.0]),
    ] {
        let inst = BilevelInstance::load(name)?;
        let c = stationarity_residual(&inst, &x, &y, DEFAULT_ACTIVE_TOL)?;
        println!(
            "{name} at x = {:?}, y = {:?}: residual {:.2e} (stationary: {}), sigma {:.3}",
            x.as_slice(),
            y.as_slice(),
            c.residual,
            c.is_stationary(),
            c.sigma
        );
        println!("  lambda {:?}", c.lambda.as_slice());
        println!("  nu     {:?}", c.nu.as_slice());
        println!("  mu     {:?}", c.mu.as_slice());
    }

    // -|z| = min(z, -z) at the kink
    let (g1, g2) = (dvector![1.0], dvector![-1.0]);
    for kind in [
        SubdiffKind::Partial,
        SubdiffKind::Clarke,
        SubdiffKind::PartialOfNegative,
    ] {
        let d = min_subdifferential(&g1, &g2, 0.0, 0.0, kind);
        let pts: Vec<f64> = d.points().iter().map(|p| p[0]).collect();
        let shape = if d.is_convex() {
            "segment between"
        } else {
            "the two points"
        };
        println!(
            "{kind:?}: {shape} {pts:?}, contains 0: {}",
            d.contains(&dvector![0.0], 0.0)
        );
    }
    Ok(())
}
