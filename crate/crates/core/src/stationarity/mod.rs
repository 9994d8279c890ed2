//! Certificates of stationarity.
//!
//! * [`stationarity_residual`]: an LP that finds the best multipliers for the
//!   first-order system of the bilevel problem at a given point.
//! * [`min_subdifferential`]: exact subdifferentials of `min(f1, f2)`.
//! * [`mpcc_index_sets`] and [`check_mpcc_astat`]: asymptotic stationarity
//!   along a sequence for complementarity-constrained programs.

mod mpcc;
mod residual;
mod subdiff;

pub use mpcc::{
    check_mpcc_astat, lagrangian_gradient, mpcc_index_sets, AstatMode, AstatTolerances,
    AstatVerdict, MpccIndexSets, MpccMultipliers, MpccProblem, MpccSample,
};
pub use residual::{
    stationarity_residual, StationarityCertificate, DEFAULT_ACTIVE_TOL, SIGMA_CAP, STATIONARY_TOL,
};
pub use subdiff::{min_subdifferential, SubdiffDescription, SubdiffKind};
