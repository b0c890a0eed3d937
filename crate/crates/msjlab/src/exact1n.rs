//! Closed-form saturated-system quantities for the canonical 1-and-n mix.
//!
//! In the saturated two-class system (jobs need one server with probability
//! `1 - p_n`, all `n` servers with probability `p_n`), the state is a pair
//! (number of n-server jobs present, number of 1-server jobs present) and all
//! three stationary views (transition-average, time-average, and
//! completion-average) have explicit geometric forms. This module evaluates
//! them, the throughput, and the relative-completions expectation that gives
//! the heavy-traffic scaled mean queue length, using streaming O(n) passes
//! with compensated accumulation so that `n = 10^8` stays accurate.

use crate::model::SystemConfig;
use crate::numeric::{positive, KahanSum};
use crate::{Error, Result};

/// Default cap on explicit vector materialization (states or Δ̃ entries).
/// Streaming evaluation has no such limit.
pub const DEFAULT_MATERIALIZATION_CAP: u64 = 10_000_000;

/// Powers below this are flushed to zero: they can no longer contribute, and
/// flushing lets the streaming loops terminate early.
const UNDERFLOW_FLUSH: f64 = 1e-320;

/// State of the saturated 1-and-n system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SatState1n {
    /// n-server jobs present (0 or 1).
    pub large_jobs: u8,
    /// 1-server jobs present, `0..=n`.
    pub small_jobs: u64,
}

impl SatState1n {
    pub fn new(large_jobs: u8, small_jobs: u64) -> Self {
        Self {
            large_jobs,
            small_jobs,
        }
    }

    /// The completion state with one-dimensional index `i` (number of
    /// 1-server jobs in service): `(1, i)` for `i < n`, `(0, n)` for `i = n`.
    pub fn completion(n: u64, i: u64) -> Self {
        if i < n {
            Self::new(1, i)
        } else {
            Self::new(0, n)
        }
    }
}

impl std::fmt::Display for SatState1n {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.large_jobs, self.small_jobs)
    }
}

/// A probability vector over an explicit support.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution<S> {
    pub support: Vec<S>,
    pub mass: Vec<f64>,
}

impl<S> StateDistribution<S> {
    pub fn total_mass(&self) -> f64 {
        self.mass.iter().copied().collect::<KahanSum>().value()
    }

    /// Nonnegative masses summing to 1 within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        if let Some(m) = self.mass.iter().find(|m| !(**m).is_finite() || **m < 0.0) {
            return Err(Error::ConsistencyCheck(format!(
                "negative probability mass {m}"
            )));
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > tol {
            return Err(Error::ConsistencyCheck(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

impl<S: PartialEq> StateDistribution<S> {
    pub fn mass_at(&self, state: &S) -> Option<f64> {
        self.support
            .iter()
            .position(|s| s == state)
            .map(|i| self.mass[i])
    }
}

/// Parameters of the canonical 1-and-n system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canonical1n {
    pub n: u64,
    /// Probability an arriving job needs all `n` servers.
    pub p_n: f64,
    /// Service rate of 1-server jobs.
    pub mu1: f64,
    /// Service rate of n-server jobs.
    pub mun: f64,
}

impl Canonical1n {
    pub fn new(n: u64, p_n: f64, mu1: f64, mun: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidConfig("server count must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&p_n) {
            return Err(Error::InvalidConfig(format!("p_n = {p_n} outside [0,1]")));
        }
        if !positive(mu1) || !positive(mun) {
            return Err(Error::InvalidConfig(format!(
                "service rates must be positive, got mu1 = {mu1}, mun = {mun}"
            )));
        }
        Ok(Self { n, p_n, mu1, mun })
    }

    /// Extract canonical parameters from a two-class (or degenerate
    /// single-class) system with needs `{1, n}`.
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        crate::model::validate_config(config)?;
        let describe = || {
            let needs: Vec<u64> = config.classes.iter().map(|c| c.need).collect();
            format!("needs {needs:?} with n = {}", config.n)
        };
        match config.classes.as_slice() {
            [one, big] if one.need == 1 && big.need == config.n => {
                Self::new(config.n, big.prob, one.rate, big.rate)
            }
            [only] if only.need == config.n => {
                // All jobs occupy the whole system; mu1 never enters.
                Self::new(config.n, 1.0, 1.0, only.rate)
            }
            [only] if only.need == 1 => Self::new(config.n, 0.0, only.rate, 1.0),
            _ => Err(Error::NotCanonical(describe())),
        }
    }

    fn p1(&self) -> f64 {
        1.0 - self.p_n
    }

    fn require_large_jobs(&self) -> Result<()> {
        if self.p_n > 0.0 {
            Ok(())
        } else {
            Err(Error::NoLargeJobs)
        }
    }
}

/// Exact saturated-system results for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    /// Saturated throughput; the open system is stable iff `lambda < mu`.
    pub mu: f64,
    /// Completion rate of n-server jobs, `mu · p_n`.
    pub c_prime: f64,
    /// Relative completions pinned at the empty-of-small-jobs state,
    /// indexed by the one-dimensional completion index; `None` above the
    /// materialization cap.
    pub delta_tilde: Option<Vec<f64>>,
    /// Expectation of the relative-completions function over the
    /// completion-average distribution.
    pub mean_delta_yd: f64,
    /// Heavy-traffic limit of E[Q(1-rho)]: `mean_delta_yd + 1`.
    pub scaled_queue_limit: f64,
}

/// Throughput `mu` and the n-server completion rate `C' = mu·p_n`.
///
/// `1/C'` decomposes into the three phases of an n-server job's cycle: its
/// own service, the full-of-small-jobs phase, and the drain phase while it
/// blocks the head of the line.
pub fn throughput_exact(params: &Canonical1n) -> Result<(f64, f64)> {
    params.require_large_jobs()?;
    if params.p_n == 1.0 {
        // Every job takes the whole system; cycles are just n-server services.
        return Ok((params.mun, params.mun));
    }
    let c_prime = 1.0 / cycle_time(params);
    let mu = c_prime / params.p_n;
    Ok((mu, c_prime))
}

/// Expected time per n-server-job completion, `1/C'`: its own service plus
/// the full-of-small-jobs phase plus the head-of-line drain sum.
fn cycle_time(params: &Canonical1n) -> f64 {
    let &Canonical1n { n, p_n, mu1, mun } = params;
    let p1 = params.p1();
    let mut drain = KahanSum::new();
    let mut p1_pow = 1.0f64;
    for b in 1..n {
        p1_pow *= p1;
        if p1_pow < UNDERFLOW_FLUSH {
            p1_pow = 0.0;
            break;
        }
        drain.add(p1_pow / (b as f64 * mu1));
    }
    let full_phase = p1_pow * p1 / (n as f64 * mu1 * p_n);
    1.0 / mun + full_phase + drain.value()
}

/// Transition-average stationary distribution over both arrival and
/// completion states of the embedded per-transition chain.
pub fn transition_dist(params: &Canonical1n, cap: u64) -> Result<StateDistribution<SatState1n>> {
    params.require_large_jobs()?;
    let n = params.n;
    if n > cap.saturating_sub(1) / 2 {
        return Err(Error::MaterializationCap { n, cap });
    }
    let p1 = params.p1();
    let mut support = Vec::with_capacity(2 * n as usize + 1);
    let mut mass = Vec::with_capacity(2 * n as usize + 1);
    // Arrival and the two boundary states (0, n-1), (0, n).
    let mut p1_pow = 1.0f64;
    for b in 0..=n {
        support.push(SatState1n::new(0, b));
        // The two topmost arrival weights carry the 1/p_n factor from the
        // boundary balance at the full state.
        let weight = if b < n - 1 {
            p1_pow
        } else {
            p1_pow / params.p_n
        };
        mass.push(weight);
        p1_pow *= p1;
        if p1_pow < UNDERFLOW_FLUSH {
            p1_pow = 0.0;
        }
    }
    // Completion states with the n-server job present.
    let mut p1_pow = 1.0f64;
    for b in 0..n {
        support.push(SatState1n::new(1, b));
        mass.push(p1_pow);
        p1_pow *= p1;
        if p1_pow < UNDERFLOW_FLUSH {
            p1_pow = 0.0;
        }
    }
    normalize(&mut mass);
    Ok(StateDistribution { support, mass })
}

/// Time-average stationary distribution; the support is the completion
/// states only, in one-dimensional index order.
pub fn time_avg_dist(params: &Canonical1n, cap: u64) -> Result<StateDistribution<SatState1n>> {
    params.require_large_jobs()?;
    let &Canonical1n { n, p_n, mu1, mun } = params;
    if n >= cap {
        return Err(Error::MaterializationCap { n, cap });
    }
    let p1 = params.p1();
    let mut support = Vec::with_capacity(n as usize + 1);
    let mut mass = Vec::with_capacity(n as usize + 1);
    support.push(SatState1n::new(1, 0));
    mass.push(1.0 / mun);
    let mut p1_pow = 1.0f64;
    for b in 1..n {
        p1_pow *= p1;
        if p1_pow < UNDERFLOW_FLUSH {
            p1_pow = 0.0;
        }
        support.push(SatState1n::new(1, b));
        mass.push(p1_pow / (b as f64 * mu1));
    }
    support.push(SatState1n::new(0, n));
    mass.push(p1_pow * p1 / (n as f64 * mu1 * p_n));
    normalize(&mut mass);
    Ok(StateDistribution { support, mass })
}

/// Completion-average stationary distribution (law of the state seen at
/// completion epochs), in one-dimensional index order.
pub fn completion_dist(params: &Canonical1n, cap: u64) -> Result<StateDistribution<SatState1n>> {
    params.require_large_jobs()?;
    let n = params.n;
    if n >= cap {
        return Err(Error::MaterializationCap { n, cap });
    }
    let p1 = params.p1();
    let mut support = Vec::with_capacity(n as usize + 1);
    let mut mass = Vec::with_capacity(n as usize + 1);
    let mut p1_pow = 1.0f64;
    for b in 0..n {
        support.push(SatState1n::new(1, b));
        mass.push(p1_pow * params.p_n);
        p1_pow *= p1;
        if p1_pow < UNDERFLOW_FLUSH {
            p1_pow = 0.0;
        }
    }
    support.push(SatState1n::new(0, n));
    mass.push(p1_pow);
    normalize(&mut mass);
    Ok(StateDistribution { support, mass })
}

fn normalize(mass: &mut [f64]) {
    let total = mass.iter().copied().collect::<KahanSum>().value();
    for m in mass.iter_mut() {
        *m /= total;
    }
}

/// Relative completions pinned so the first entry is zero, for the given
/// throughput `mu` (from [`throughput_exact`]).
pub fn delta_tilde(params: &Canonical1n, mu: f64, cap: u64) -> Result<Vec<f64>> {
    params.require_large_jobs()?;
    if params.p_n == 1.0 {
        return Ok(vec![0.0]);
    }
    let &Canonical1n { n, p_n, mu1, .. } = params;
    if n >= cap {
        return Err(Error::MaterializationCap { n, cap });
    }
    let mut values = Vec::with_capacity(n as usize + 1);
    values.push(0.0);
    let mut harmonic = 0.0f64;
    for i in 1..n {
        harmonic += 1.0 / i as f64;
        values.push(i as f64 - (mu / mu1) * harmonic);
    }
    // The full-of-small-jobs state: leaving it requires an n-server draw.
    values.push((n - 1) as f64 + 1.0 / p_n - (mu / mu1) * harmonic - mu / (n as f64 * p_n * mu1));
    Ok(values)
}

/// Full exact evaluation: throughput, relative completions (materialized
/// when `n` fits under `cap`), and the scaled-queue-length limit.
///
/// The expectation is accumulated two ways: pointwise weight differences
/// per state, and the difference of the completion-average and
/// time-average expectations. The routes must agree to 1e-9 relative.
pub fn evaluate(params: &Canonical1n, cap: u64) -> Result<ExactResult> {
    params.require_large_jobs()?;
    if params.p_n == 1.0 {
        return Ok(ExactResult {
            mu: params.mun,
            c_prime: params.mun,
            delta_tilde: Some(vec![0.0]),
            mean_delta_yd: 0.0,
            scaled_queue_limit: 1.0,
        });
    }
    let (mu, c_prime) = throughput_exact(params)?;
    let &Canonical1n { n, p_n, mu1, .. } = params;
    let p1 = params.p1();

    let mut pointwise_route = KahanSum::new();
    let mut completion_route = KahanSum::new();
    let mut time_route = KahanSum::new();
    let mut magnitude = KahanSum::new();
    let mut p1_pow = 1.0f64;
    let mut harmonic = 0.0f64;
    let mut reached_end = n == 1;
    for i in 1..n {
        p1_pow *= p1;
        if p1_pow < UNDERFLOW_FLUSH {
            // Every remaining term, including the boundary one, carries a
            // dead p1 power.
            p1_pow = 0.0;
            break;
        }
        harmonic += 1.0 / i as f64;
        let dtil = i as f64 - (mu / mu1) * harmonic;
        let completion_weight = p1_pow * p_n;
        let time_weight = mu * p1_pow * p_n / (i as f64 * mu1);
        pointwise_route.add(completion_weight * (1.0 - mu / (i as f64 * mu1)) * dtil);
        completion_route.add(completion_weight * dtil);
        time_route.add(time_weight * dtil);
        magnitude.add((completion_weight + time_weight) * dtil.abs());
        if i == n - 1 {
            reached_end = true;
        }
    }
    if reached_end {
        let p1_pow_n = p1_pow * p1;
        let dtil_n =
            (n - 1) as f64 + 1.0 / p_n - (mu / mu1) * harmonic - mu / (n as f64 * p_n * mu1);
        let completion_weight = p1_pow_n;
        let time_weight = mu * p1_pow_n / (n as f64 * mu1);
        pointwise_route.add(completion_weight * (1.0 - mu / (n as f64 * mu1)) * dtil_n);
        completion_route.add(completion_weight * dtil_n);
        time_route.add(time_weight * dtil_n);
        magnitude.add((completion_weight + time_weight) * dtil_n.abs());
    }

    let mean = pointwise_route.value();
    let alt = completion_route.value() - time_route.value();
    let scale = magnitude.value().max(mean.abs()).max(1e-300);
    if (mean - alt).abs() > 1e-9 * scale {
        return Err(Error::ConsistencyCheck(format!(
            "relative-completions expectation routes disagree: {mean} vs {alt}"
        )));
    }

    let delta = if n < cap {
        Some(delta_tilde(params, mu, cap)?)
    } else {
        None
    };
    Ok(ExactResult {
        mu,
        c_prime,
        delta_tilde: delta,
        mean_delta_yd: mean,
        scaled_queue_limit: mean + 1.0,
    })
}

/// [`evaluate`] with the default materialization cap.
pub fn mean_delta_yd(params: &Canonical1n) -> Result<ExactResult> {
    evaluate(params, DEFAULT_MATERIALIZATION_CAP)
}
