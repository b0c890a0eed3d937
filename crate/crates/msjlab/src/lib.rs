//! Performance analysis toolkit for multiserver-job (MSJ) FCFS queues.
//!
//! A multiserver job occupies a job-specific number of servers for its whole
//! service. Under FCFS with head-of-line blocking, jobs enter service in
//! arrival order until one does not fit in the free servers; that job blocks
//! everything behind it. This crate computes performance metrics for such
//! systems three ways:
//!
//! * [`exact1n`]: closed-form throughput, stationary distributions, and
//!   scaled-queue-length limits for the two-class system where jobs need
//!   either one server or all `n`, numerically stable up to `n = 10^8`.
//! * [`satoracle`]: a brute-force saturated-system solver for arbitrary
//!   class mixes at small `n`: enumerates the completion chain, solves for
//!   stationary distributions and the relative-completions Poisson equation.
//!   Serves as an independent cross-check for `exact1n`.
//! * [`sim`]: a discrete-event simulator of the open queue, for
//!   heavy-traffic checks and load sweeps in settings with no exact formula.
//!
//! The [`asymptotics`] module adds the large-`n` growth-rate formulas for power-law
//! job mixes `p_n = c·n^(-alpha)` and convergence tables comparing them with
//! the exact values.

pub mod asymptotics;
pub mod exact1n;
pub mod model;
pub mod numeric;
pub mod satoracle;
pub mod sim;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
