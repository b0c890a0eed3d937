use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A system configuration violates one of its invariants.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A JSON config document failed to parse.
    #[error("config parse error at byte {offset} (line {line}, column {column}): {message}")]
    ConfigParse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    /// The operation only applies to canonical 1-and-n systems.
    #[error("not a canonical 1-and-n config: {0}")]
    NotCanonical(String),

    /// The closed-form saturated-system formulas require some n-server jobs.
    #[error("p_n = 0 has no saturated 1-and-n formula; use the oracle or the simulator")]
    NoLargeJobs,

    /// Explicit state or vector materialization would exceed the configured cap.
    #[error("materialization cap exceeded: n = {n} (cap {cap}); use streaming evaluation")]
    MaterializationCap { n: u64, cap: u64 },

    /// Saturated-chain enumeration grew past the configured state cap.
    #[error("state space exceeds cap: at least {found} states (cap {cap})")]
    StateCapExceeded { found: usize, cap: usize },

    /// A stationary or Poisson linear solve did not reach its residual target.
    #[error("linear solve failed: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    /// An always-on internal cross-check between two computation routes failed.
    #[error("internal consistency check failed: {0}")]
    ConsistencyCheck(String),

    /// The stationary solve put zero mass on a reachable state.
    #[error("chain appears reducible: zero stationary mass on reachable state {state}")]
    ReducibleChain { state: usize },

    /// The simulated queue grew past the configured bound.
    #[error("apparent instability: queue exceeded {bound} jobs at t = {time:.3}")]
    ApparentInstability { bound: usize, time: f64 },

    /// A simulation run was configured inconsistently.
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
}
