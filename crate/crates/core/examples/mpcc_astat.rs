//! Asymptotic stationarity along a sequence for a small complementarity
//! program:
//!
//! ```text
//!     min -z1  s.t.  -z1 <= 0,  -z3 <= 0,  min(G(z), H(z)) = 0,
//!     G = z1^3 + z2 + z3,  H = z1^3 - z2 + z3.
//! ```
//!
//! Along `z^k = ((3k/2)^(-1/2), 0, 0)` the multipliers `(1, k)` and
//! `lG = lH = k/2` cancel the gradient exactly, so the origin is asymptotically
//! stationary in the Clarke sense. Both multipliers are positive, so the
//! limiting sign condition fails.

use bilevel_dc::stationarity::{
    check_mpcc_astat, mpcc_index_sets, AstatMode, AstatTolerances, MpccMultipliers, MpccProblem,
    MpccSample,
};
use nalgebra::{DMatrix, DVector};

struct Cubic;

impl MpccProblem for Cubic {
    fn dim(&self) -> usize {
        3
    }
    fn grad_f(&self, _z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![-1.0, 0.0, 0.0])
    }
    fn g(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![-z[0], -z[2]])
    }
    fn jac_g(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[-1.0, 0.0, 0.0, 0.0, 0.0, -1.0])
    }
    fn h(&self, _z: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }
    fn jac_h(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(0, 3)
    }
    fn big_g(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, z[0].powi(3) + z[1] + z[2])
    }
    fn jac_big_g(&self, z: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 3, &[3.0 * z[0] * z[0], 1.0, 1.0])
    }
    fn big_h(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, z[0].powi(3) - z[1] + z[2])
    }
    fn jac_big_h(&self, z: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 3, &[3.0 * z[0] * z[0], -1.0, 1.0])
    }
}

fn main() -> bilevel_dc::Result<()> {
    let p = Cubic;
    let samples: Vec<MpccSample> = (1..=40)
        .map(|k| {
            let k = k as f64;
            let z = DVector::from_vec(vec![(1.5 * k).powf(-0.5), 0.0, 0.0]);
            let m = MpccMultipliers {
                g: DVector::from_vec(vec![1.0, k]),
                h: DVector::zeros(0),
                big_g: DVector::from_element(1, 0.5 * k),
                big_h: DVector::from_element(1, 0.5 * k),
            };
            MpccSample::evaluate(&p, z, m, DVector::zeros(3))
        })
        .collect();
    let z_bar = DVector::zeros(3);
    let sets = mpcc_index_sets(&p.big_g(&z_bar), &p.big_h(&z_bar), 1e-12)?;
    println!("index sets at the origin: {sets:?}");
    let first = &samples[0];
    println!(
        "first sample z = {:?}, multipliers G/H = {}/{}, ||eps|| = {:.1e}",
        first.point.as_slice(),
        first.multipliers.big_g[0],
        first.multipliers.big_h[0],
        first.epsilon.norm()
    );
    for mode in [AstatMode::Clarke, AstatMode::Limiting] {
        let v = check_mpcc_astat(
            &samples,
            &sets,
            &p.g(&z_bar),
            mode,
            AstatTolerances::default(),
        );
        println!(
            "{mode:?}: every sample passes {}, limit holds {}",
            v.per_sample.iter().all(|b| *b),
            v.limit
        );
    }
    Ok(())
}
