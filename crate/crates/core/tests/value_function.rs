mod common;

use approx::assert_abs_diff_eq;
use bilevel_dc::builtins::{self, flatten, EX3_COST, EX3_DEMAND, EX3_DESIRED_Y};
use bilevel_dc::subsolvers::{project_polyhedron, AffineSystem};
use bilevel_dc::value_function::{
    duality_gap, eval_theta, lower_level_solve, subgradient_theta, LowerLevel, ThetaEval,
};
use bilevel_dc::{BilevelInstance, Error};
use common::{lp_vertex_oracle, rng};
use nalgebra::{dvector, DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

/// `B y <= b - A x` as an inequality system in `y`.
fn lower_system(ll: &LowerLevel, x: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    (ll.b.clone(), &ll.rhs - &ll.a * x)
}

fn finite(t: &ThetaEval) -> (f64, &DVector<f64>, &DVector<f64>) {
    match t {
        ThetaEval::Finite { value, dual, y_opt } => (*value, dual, y_opt),
        ThetaEval::Infinite => panic!("expected a finite value"),
    }
}

fn check_certificate(ll: &LowerLevel, x: &DVector<f64>, t: &ThetaEval) {
    let (value, dual, y) = finite(t);
    assert!(dual.iter().all(|&l| l >= 0.0));
    assert!((ll.b.tr_mul(dual) + &ll.cost).amax() <= 1e-8);
    assert!((value - ll.cost.dot(y)).abs() <= 1e-8);
    assert!((value - (&ll.a * x - &ll.rhs).dot(dual)).abs() <= 1e-8);
    assert!(ll.violation(x, y) <= 1e-9);
}

#[test]
fn ex1_theta_against_vertex_oracle() {
    let inst = builtins::ex1().unwrap();
    let x = dvector![2.0, 0.0];
    let t = eval_theta(&inst.lower, &x).unwrap();
    let (m, g) = lower_system(&inst.lower, &x);
    let (best, yb) = lp_vertex_oracle(&inst.lower.cost, &m, &g).unwrap();
    let (value, _, y) = finite(&t);
    assert_abs_diff_eq!(value, best, epsilon = 1e-12);
    assert_abs_diff_eq!(value, -6.0, epsilon = 1e-12);
    assert_abs_diff_eq!(*y, yb, epsilon = 1e-12);
    assert_abs_diff_eq!(
        lower_level_solve(&inst.lower, &x).unwrap(),
        dvector![1.5, 0.0],
        epsilon = 1e-12
    );
    check_certificate(&inst.lower, &x, &t);
}

#[test]
fn ex1_infeasible_parameter() {
    let inst = builtins::ex1().unwrap();
    let x = dvector![3.0, 0.0];
    // Farkas certificate: row 2 has no y-part and b_2 - A_2 x < 0
    let (m, g) = lower_system(&inst.lower, &x);
    assert_eq!(m.row(1).amax(), 0.0);
    assert!(g[1] < 0.0);
    assert_eq!(eval_theta(&inst.lower, &x).unwrap(), ThetaEval::Infinite);
    assert!(matches!(
        subgradient_theta(&inst.lower, &x),
        Err(Error::Domain)
    ));
    assert!(matches!(
        lower_level_solve(&inst.lower, &x),
        Err(Error::Domain)
    ));
}

#[test]
fn ex1_subgradient_lies_in_dual_image() {
    let inst = builtins::ex1().unwrap();
    let x = dvector![2.0, 0.0];
    let xi = subgradient_theta(&inst.lower, &x).unwrap();
    // xi = (-5 + t + s, t - 9 - 3 s) with t, s >= 0
    let s = (xi[0] - xi[1] - 4.0) / 4.0;
    let t = xi[0] + 5.0 - s;
    assert!(s >= -1e-9 && t >= -1e-9, "xi = {xi}");
}

#[test]
fn ex2_theta_is_zero() {
    let inst = builtins::ex2().unwrap();
    for &x in &[0.0, 0.25, 0.5, 0.9, 1.0, 1.5, 2.0] {
        let xv = dvector![x];
        let t = eval_theta(&inst.lower, &xv).unwrap();
        let (value, dual, y) = finite(&t);
        assert_abs_diff_eq!(value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*y, dvector![0.0, (1.0 - x).max(0.0)], epsilon = 1e-12);
        assert_abs_diff_eq!(*dual, dvector![0.0, 1.0, 0.0], epsilon = 1e-12);
        assert_abs_diff_eq!(
            subgradient_theta(&inst.lower, &xv).unwrap()[0],
            0.0,
            epsilon = 1e-12
        );
        check_certificate(&inst.lower, &xv, &t);
    }
    assert_abs_diff_eq!(
        lower_level_solve(&inst.lower, &dvector![0.5]).unwrap()[0],
        0.0,
        epsilon = 1e-12
    );
}

#[test]
fn duality_gap_examples() {
    let ex1 = builtins::ex1().unwrap();
    let ex2 = builtins::ex2().unwrap();
    assert_abs_diff_eq!(
        duality_gap(&ex1.lower, &dvector![2.0, 0.0], &dvector![0.0, 0.0]).unwrap(),
        6.0,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        duality_gap(&ex1.lower, &dvector![2.0, 0.0], &dvector![1.5, 0.0]).unwrap(),
        0.0,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        duality_gap(&ex2.lower, &dvector![0.0], &dvector![1.0, 0.0]).unwrap(),
        1.0,
        epsilon = 1e-12
    );
    assert!(matches!(
        duality_gap(&ex2.lower, &dvector![0.0], &dvector![0.0, 0.0]),
        Err(Error::InfeasiblePoint(_))
    ));
}

/// A primal plan and a dual vector for the transportation LP at `x_d = 7.6 e`
/// with equal objective values: together they certify the optimal value.
const EX3_PLAN_AT_XD: [[f64; 7]; 5] = [
    [0.0, 0.0, 0.0, 0.8, 0.4, 6.4, 0.0],
    [0.0, 5.0, 0.0, 1.6, 0.0, 0.0, 1.0],
    [0.0, 0.0, 5.0, 0.0, 0.0, 2.6, 0.0],
    [0.0, 0.0, 0.0, 7.6, 0.0, 0.0, 0.0],
    [5.0, 0.0, 0.0, 0.0, 2.6, 0.0, 0.0],
];
const EX3_SUPPLY_DUAL: [f64; 5] = [0.0382, 0.1021, 0.0, 0.2147, 0.1573];
const EX3_DEMAND_DUAL: [f64; 7] = [0.5422, 0.3957, 0.1127, 0.4772, 0.1873, 0.0665, 0.7673];
const EX3_THETA_AT_XD: f64 = 8.05922;

#[test]
fn ex3_theta_at_desired_offer() {
    let xd = [7.6; 5];
    // primal feasibility and value of the certificate plan
    let mut primal = 0.0;
    for i in 0..5 {
        assert!(EX3_PLAN_AT_XD[i].iter().sum::<f64>() <= xd[i] + 1e-12);
        for j in 0..7 {
            primal += EX3_COST[i][j] * EX3_PLAN_AT_XD[i][j];
        }
    }
    for j in 0..7 {
        assert!((0..5).map(|i| EX3_PLAN_AT_XD[i][j]).sum::<f64>() >= EX3_DEMAND[j] - 1e-12);
    }
    // dual feasibility: reduced costs c_ij + u_i - v_j >= 0
    for i in 0..5 {
        for j in 0..7 {
            assert!(
                EX3_COST[i][j] + EX3_SUPPLY_DUAL[i] - EX3_DEMAND_DUAL[j] >= -1e-12,
                "({i},{j})"
            );
        }
    }
    let dual: f64 = (0..7)
        .map(|j| EX3_DEMAND_DUAL[j] * EX3_DEMAND[j])
        .sum::<f64>()
        - (0..5).map(|i| EX3_SUPPLY_DUAL[i] * xd[i]).sum::<f64>();
    assert_abs_diff_eq!(primal, EX3_THETA_AT_XD, epsilon = 1e-12);
    assert_abs_diff_eq!(dual, EX3_THETA_AT_XD, epsilon = 1e-12);

    let inst = builtins::ex3().unwrap();
    let x = DVector::from_element(5, 7.6);
    let t = eval_theta(&inst.lower, &x).unwrap();
    assert_abs_diff_eq!(t.value().unwrap(), EX3_THETA_AT_XD, epsilon = 1e-8);
    check_certificate(&inst.lower, &x, &t);
    let y = lower_level_solve(&inst.lower, &x).unwrap();
    assert_abs_diff_eq!(inst.lower.cost.dot(&y), EX3_THETA_AT_XD, epsilon = 1e-8);

    // the desired plan is feasible at x_d but not optimal for the shipped
    // cost matrix: it misses the optimum by 0.36
    let yd = flatten(&EX3_DESIRED_Y);
    assert!(inst.lower.violation(&x, &yd) <= 1e-12);
    assert_abs_diff_eq!(
        duality_gap(&inst.lower, &x, &yd).unwrap(),
        0.36,
        epsilon = 1e-8
    );
}

/// Lower-level parameters in the start box of `inst` (for ex3 the box admits
/// no feasible offer, so a wider box is used) at which `theta` is finite.
fn sample_x(inst: &BilevelInstance, r: &mut StdRng) -> DVector<f64> {
    let n = inst.n();
    loop {
        let x = DVector::from_fn(n, |i, _| {
            let (lo, hi) = inst.start_box[i];
            let hi = if inst.name == "ex3" { 2.0 * hi } else { hi };
            r.random_range(lo..=hi)
        });
        if eval_theta(&inst.lower, &x).unwrap().is_finite() {
            return x;
        }
    }
}

#[test]
fn subgradient_inequality_on_builtins() {
    for name in builtins::BUILTIN_NAMES {
        let inst = BilevelInstance::load(name).unwrap();
        let mut r = rng(11);
        let mut worst = f64::INFINITY;
        for _ in 0..1000 {
            let x = sample_x(&inst, &mut r);
            let x2 = sample_x(&inst, &mut r);
            let t = eval_theta(&inst.lower, &x).unwrap();
            check_certificate(&inst.lower, &x, &t);
            let xi = subgradient_theta(&inst.lower, &x).unwrap();
            let lhs = eval_theta(&inst.lower, &x2).unwrap().value().unwrap();
            let slack = lhs - t.value().unwrap() - xi.dot(&(&x2 - &x));
            worst = worst.min(slack);
        }
        assert!(worst >= -1e-8, "{name}: worst slack {worst:e}");
    }
}

#[test]
fn duality_gap_is_nonnegative_on_builtins() {
    for name in builtins::BUILTIN_NAMES {
        let inst = BilevelInstance::load(name).unwrap();
        let ll = &inst.lower;
        let (n, m) = (inst.n(), inst.m());
        let zl = AffineSystem::new(
            DMatrix::from_fn(ll.p(), n + m, |i, j| {
                if j < n {
                    ll.a[(i, j)]
                } else {
                    ll.b[(i, j - n)]
                }
            }),
            ll.rhs.clone(),
        )
        .unwrap();
        let mut r = rng(5);
        for _ in 0..300 {
            let w0 = DVector::from_fn(n + m, |i, _| {
                let (lo, hi) = inst.start_box[i];
                r.random_range(lo..=2.0 * hi)
            });
            let w = project_polyhedron(&w0, &zl).unwrap();
            let (x, y) = inst.split(&w);
            if ll.violation(&x, &y) > 1e-9 {
                continue;
            }
            let gap = duality_gap(ll, &x, &y).unwrap();
            assert!(gap >= -1e-9, "{name}: gap {gap:e}");
        }
    }
}
