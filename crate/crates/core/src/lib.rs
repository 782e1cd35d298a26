//! Non-stationary first-order primal-dual methods for composite convex problems
//!
//! ```text
//! minimize  f(x) + g(Kx)            (primal)
//! minimize  f*(-Kᵀy) + g*(y)        (dual)
//! min_x max_y  f(x) + <Kx, y> - g*(y)
//! ```
//!
//! The two main solvers use homotopy schedules for the penalty and step
//! parameters instead of fixed ones:
//!
//! * [`pd_general::Alg1`] for merely convex `f`, `g` with `O(1/k)` guarantees on
//!   the last primal iterate and the averaged dual iterate.
//! * [`pd_strong::Alg2`] for strongly convex `f` with `O(1/k²)` guarantees.
//!
//! Both have literal "raw" counterparts that carry the auxiliary splitting
//! variable `r` explicitly; they serve as equivalence oracles in tests.
//! Constrained specializations, comparison solvers and the metric/certificate
//! machinery live in the remaining modules.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
mod inner;
pub mod linop;
pub mod metrics;
pub mod pd_general;
pub mod pd_strong;
pub mod prox;
pub mod vector;

pub use error::{Error, Result};
pub use linop::LinearMap;
pub use prox::ProxFunction;

/// Anything that advances one iteration at a time and reports a primal/dual pair.
///
/// The reported pair is whatever the method's guarantees are stated for: the
/// last primal iterate and averaged dual iterate for the non-stationary
/// methods, ergodic or last iterates for the baselines.
pub trait IterativeMethod {
    /// Runs one iteration.
    fn step(&mut self) -> Result<()>;
    /// Number of completed iterations.
    fn iteration(&self) -> usize;
    /// Reported primal point.
    fn primal(&self) -> &[f64];
    /// Reported dual point.
    fn dual(&self) -> &[f64];
    /// Short label used in traces and reports.
    fn name(&self) -> String;
}
