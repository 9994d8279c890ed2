//! The three benchmark instances shipped with the crate.
//!
//! * `ex1`: a fully linear bilevel problem in two upper and two lower variables.
//! * `ex2`: a quadratic upper level over a one-parameter lower level with a
//!   non-unique lower-level solution set.
//! * `ex3`: inverse transportation. Five warehouses with unknown offers `x`
//!   serve seven consumers; the upper level fits the plan `y` to a noisy
//!   observation `y_o`. The plan is flattened row-major, `y[i * 7 + j]`.

use nalgebra::{DMatrix, DVector};

use crate::dc::QuadObjective;
use crate::error::Result;
use crate::instance::BilevelInstance;
use crate::value_function::LowerLevel;

pub const BUILTIN_NAMES: [&str; 3] = ["ex1", "ex2", "ex3"];

pub fn builtin(name: &str) -> Option<Result<BilevelInstance>> {
    match name.to_ascii_lowercase().as_str() {
        "ex1" => Some(ex1()),
        "ex2" => Some(ex2()),
        "ex3" => Some(ex3()),
        _ => None,
    }
}

pub fn ex1() -> Result<BilevelInstance> {
    let lower = LowerLevel::new(
        DMatrix::from_row_slice(5, 2, &[-2.0, 0.0, 1.0, 1.0, 1.0, -3.0, 0.0, 0.0, 0.0, 0.0]),
        DMatrix::from_row_slice(5, 2, &[1.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]),
        DVector::from_vec(vec![-2.5, 2.0, 2.0, 0.0, 0.0]),
        DVector::from_vec(vec![-4.0, 1.0]),
    )?;
    BilevelInstance::new(
        "ex1",
        lower,
        -DMatrix::identity(2, 2),
        DMatrix::zeros(2, 2),
        DVector::zeros(2),
        QuadObjective::linear_only(DVector::from_vec(vec![-2.0, 1.0, 0.5, 0.0]), 0.0),
        vec![(0.0, 2.0); 4],
        Some(-3.25),
    )
}

pub fn ex2() -> Result<BilevelInstance> {
    let lower = LowerLevel::new(
        DMatrix::from_row_slice(3, 1, &[-1.0, 0.0, 0.0]),
        DMatrix::from_row_slice(3, 2, &[-1.0, -1.0, -1.0, 0.0, 0.0, -1.0]),
        DVector::from_vec(vec![-1.0, 0.0, 0.0]),
        DVector::from_vec(vec![1.0, 0.0]),
    )?;
    // x^2 + (y1 + y2)^2
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 2.0, 2.0, 0.0, 2.0, 2.0]);
    BilevelInstance::new(
        "ex2",
        lower,
        DMatrix::from_element(1, 1, -1.0),
        DMatrix::zeros(1, 2),
        DVector::from_element(1, -0.5),
        QuadObjective::new(q, DVector::zeros(3), 0.0)?,
        vec![(0.0, 2.0); 3],
        Some(0.5),
    )
}

pub const EX3_WAREHOUSES: usize = 5;
pub const EX3_CONSUMERS: usize = 7;

#[rustfmt::skip]
pub const EX3_COST: [[f64; 7]; 5] = [
    [0.5757, 0.8423, 0.4997, 0.4390, 0.1491, 0.0283, 0.7567],
    [0.7961, 0.2936, 0.1152, 0.3751, 0.8289, 0.8418, 0.6652],
    [0.9601, 0.9431, 0.1127, 0.6483, 0.4808, 0.0665, 0.8978],
    [0.4972, 0.7713, 0.0604, 0.2625, 0.6511, 0.01336, 0.6385],
    [0.3849, 0.7657, 0.6529, 0.3815, 0.0300, 0.3401, 0.9189],
];

pub const EX3_DEMAND: [f64; 7] = [5.0, 5.0, 5.0, 10.0, 3.0, 9.0, 1.0];

#[rustfmt::skip]
pub const EX3_OBSERVED: [[f64; 7]; 5] = [
    [-0.0032,  0.0053, -0.0031,  0.0024,  2.9991,  4.5902,  0.0020],
    [ 0.0020,  5.0030,  1.5969, -0.0001,  0.0040,  0.0078,  0.9911],
    [-0.0080,  0.0030,  3.2053,  0.0098, -0.0075,  4.3973,  0.0035],
    [-0.0025,  0.0073,  0.1958,  7.3927,  0.0035, -0.0059,  0.0074],
    [ 5.0050, -0.0016, -0.0100,  2.5930, -0.0045,  0.0074,  0.0020],
];

/// Reference offer and plan (four significant digits).
pub const EX3_BEST_X: [f64; 5] = [7.5965, 7.5975, 7.6095, 7.5964, 7.6002];

#[rustfmt::skip]
pub const EX3_BEST_Y: [[f64; 7]; 5] = [
    [0.0, 0.0, 0.0,    0.0,    3.0, 4.5965, 0.0],
    [0.0, 5.0, 1.5975, 0.0,    0.0, 0.0,    1.0],
    [0.0, 0.0, 3.2060, 0.0,    0.0, 4.4035, 0.0],
    [0.0, 0.0, 0.1965, 7.3998, 0.0, 0.0,    0.0],
    [5.0, 0.0, 0.0,    2.6002, 0.0, 0.0,    0.0],
];

/// The plan the observation was generated from, paired with `x = 7.6 e`.
#[rustfmt::skip]
pub const EX3_DESIRED_Y: [[f64; 7]; 5] = [
    [0.0, 0.0, 0.0, 0.0, 3.0, 4.6, 0.0],
    [0.0, 5.0, 1.6, 0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, 3.2, 0.0, 0.0, 4.4, 0.0],
    [0.0, 0.0, 0.2, 7.4, 0.0, 0.0, 0.0],
    [5.0, 0.0, 0.0, 2.6, 0.0, 0.0, 0.0],
];

pub fn flatten(rows: &[[f64; 7]; 5]) -> DVector<f64> {
    DVector::from_iterator(35, rows.iter().flat_map(|r| r.iter().copied()))
}

pub fn ex3() -> Result<BilevelInstance> {
    let (n, l) = (EX3_WAREHOUSES, EX3_CONSUMERS);
    let m = n * l;
    let p = n + l + m;
    let mut a = DMatrix::zeros(p, n);
    let mut b = DMatrix::zeros(p, m);
    let mut rhs = DVector::zeros(p);
    // supply: sum_j y_ij - x_i <= 0
    for i in 0..n {
        a[(i, i)] = -1.0;
        for j in 0..l {
            b[(i, i * l + j)] = 1.0;
        }
    }
    // demand: -sum_i y_ij <= -b_j
    for j in 0..l {
        for i in 0..n {
            b[(n + j, i * l + j)] = -1.0;
        }
        rhs[n + j] = -EX3_DEMAND[j];
    }
    for k in 0..m {
        b[(n + l + k, k)] = -1.0;
    }
    let cost = flatten(&EX3_COST);
    let lower = LowerLevel::new(a, b, rhs, cost)?;

    // x >= 0 and e^T x >= e^T b_dem
    let mut c = DMatrix::zeros(n + 1, n);
    for i in 0..n {
        c[(i, i)] = -1.0;
        c[(n, i)] = -1.0;
    }
    let mut d_rhs = DVector::zeros(n + 1);
    d_rhs[n] = -EX3_DEMAND.iter().sum::<f64>();

    let y_o = flatten(&EX3_OBSERVED);
    let mut hess = DMatrix::zeros(n + m, n + m);
    for k in 0..m {
        hess[(n + k, n + k)] = 1.0;
    }
    let mut lin = DVector::zeros(n + m);
    lin.rows_mut(n, m).copy_from(&(-&y_o));
    let objective = QuadObjective::new(hess, lin, 0.5 * y_o.norm_squared())?;

    BilevelInstance::new(
        "ex3",
        lower,
        c,
        DMatrix::zeros(n + 1, m),
        d_rhs,
        objective,
        vec![(0.0, 6.0); n + m],
        Some(5.000776e-4),
    )
}
