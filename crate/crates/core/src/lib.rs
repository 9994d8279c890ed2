//! Penalty-DC methods for optimistic bilevel programs with a linear lower
//! level and affine coupling constraints.
//!
//! The crate is organised bottom-up:
//!
//! * [`subsolvers`]: dense LP (revised simplex) and strictly convex QP solvers.
//! * [`value_function`]: the lower-level optimal value `theta(x)`, its
//!   subgradients and the duality gap.
//! * [`dc`]: the DC split of the penalized objective and the classical and
//!   boosted DC iterations.
//! * [`penalty`]: the outer penalty loop with three inner solvers.
//! * [`stationarity`]: certificates for the first-order system, min-function
//!   subdifferentials and MPCC asymptotic stationarity.
//! * [`instance`], [`builtins`], [`bench`], [`profile`]: problem data, the
//!   benchmark harness and performance profiles.
//!
//! ```
//! use bilevel_dc::bench::random_starts;
//! use bilevel_dc::{run_penalty, BilevelInstance, Method, PenaltyParams};
//!
//! let inst = BilevelInstance::load("ex1")?;
//! let w0 = random_starts(&inst, 1, 7)?.remove(0);
//! let r = run_penalty(&inst, &w0, Method::Pbdc, &PenaltyParams::default())?;
//! assert!(r.terminated && (r.final_value + 3.25).abs() < 1e-3);
//! # Ok::<(), bilevel_dc::Error>(())
//! ```

pub mod bench;
pub mod builtins;
pub mod dc;
pub mod error;
pub mod instance;
pub mod penalty;
pub mod profile;
pub mod stationarity;
pub mod subsolvers;
pub mod value_function;

pub use error::{Error, Result};
pub use instance::BilevelInstance;
pub use penalty::{run_penalty, Method, PenaltyParams, RunReport};
