//! The lower-level optimal value function of the linear benchmark problem:
//! values, subgradients, the duality gap and points outside its domain.

use bilevel_dc::value_function::{duality_gap, eval_theta, subgradient_theta, ThetaEval};
use bilevel_dc::BilevelInstance;
use nalgebra::dvector;

fn main() -> bilevel_dc::Result<()> {
    let inst = BilevelInstance::load("ex1")?;
    let ll = &inst.lower;
    for x in [
        dvector![2.0, 0.0],
        dvector![1.0, 1.0],
        dvector![0.5, 0.5],
        dvector![3.0, 0.0],
    ] {
        match eval_theta(ll, &x)? {
            ThetaEval::Finite { value, dual, y_opt } => {
                let xi = subgradient_theta(ll, &x)?;
                println!(
                    "x = {:?}: theta = {value:.4}, y = {:?}, dual = {:?}, subgradient = {:?}",
                    x.as_slice(),
                    y_opt.as_slice(),
                    dual.as_slice(),
                    xi.as_slice()
                );
            }
            ThetaEval::Infinite => println!(
                "x = {:?}: lower level infeasible, theta = +inf",
                x.as_slice()
            ),
        }
    }
    let x = dvector![2.0, 0.0];
    for y in [dvector![1.5, 0.0], dvector![0.5, 0.0]] {
        println!(
            "gap at x = (2, 0), y = {:?}: {:.4}",
            y.as_slice(),
            duality_gap(ll, &x, &y)?
        );
    }
    Ok(())
}
