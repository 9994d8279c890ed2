//! LP, QP and Euclidean projection on small polyhedra.

use bilevel_dc::subsolvers::{project_polyhedron, solve_lp, solve_qp, AffineSystem};
use nalgebra::{dmatrix, dvector};

fn main() -> bilevel_dc::Result<()> {
    // min -x1 - x2  s.t.  x1 + 2 x2 <= 4,  3 x1 + x2 <= 6,  x >= 0
    let sys = AffineSystem::new(
        dmatrix![1.0, 2.0; 3.0, 1.0; -1.0, 0.0; 0.0, -1.0],
        dvector![4.0, 6.0, 0.0, 0.0],
    )?;
    let lp = solve_lp(&dvector![-1.0, -1.0], &sys)?;
    println!("LP  status {:?}", lp.status);
    println!(
        "    x = {:?}, objective {:.6}",
        lp.x.as_slice(),
        lp.objective
    );
    println!(
        "    duals {:?}, dual objective {:.6}",
        lp.dual_ub.as_slice(),
        lp.dual_objective(&sys)
    );

    // min 1/2 ||x||^2 - 3 x1 - 3 x2 over the same set
    let q = dmatrix![1.0, 0.0; 0.0, 1.0];
    let qp = solve_qp(&q, &dvector![-3.0, -3.0], &sys)?;
    println!("QP  status {:?}", qp.status);
    println!(
        "    x = {:?}, objective {:.6}",
        qp.x.as_slice(),
        qp.objective
    );
    println!(
        "    active set {:?}, KKT residual {:.2e}",
        qp.active_set,
        qp.kkt_residual(&q, &dvector![-3.0, -3.0], &sys)
    );

    let p = project_polyhedron(&dvector![3.0, 3.0], &sys)?;
    let pp = project_polyhedron(&p, &sys)?;
    println!(
        "projection of (3, 3): {:?}; projecting again moves it by {:.1e}",
        p.as_slice(),
        (&pp - &p).norm()
    );
    Ok(())
}
