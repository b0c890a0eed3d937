//! Brute-force saturated-system solver for arbitrary class mixes.
//!
//! The saturated system replaces the arrival process with an infinite
//! backlog: after every completion, jobs are drawn i.i.d. from the class mix
//! and admitted until either all servers are occupied or a drawn job does
//! not fit, in which case it blocks the head of the line. Between
//! completions nothing changes, so the embedded completion chain together
//! with per-state service rates determines everything: throughput, the
//! time-average and completion-average stationary laws, and the
//! relative-completions Poisson equation.
//!
//! This module enumerates that chain explicitly and solves it numerically.
//! It is exponential-state-space in general and is meant for small systems:
//! it cross-checks the closed forms in [`crate::exact1n`] and covers class
//! mixes (half-size and three-class settings) with no known linear-size
//! formula.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::exact1n::StateDistribution;
use crate::model::SystemConfig;
use crate::numeric::KahanSum;
use crate::{Error, Result};

/// A stored (completion) state of the saturated system: how many jobs of
/// each class are in service, plus the class blocking the head of the line,
/// if any. Stored states always have at least one job in service, and
/// `head = None` implies zero free servers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SatState {
    /// Jobs in service, indexed like `config.classes`.
    pub in_service: Vec<u32>,
    /// Class index of the blocked head-of-line job.
    pub head: Option<u8>,
}

impl SatState {
    pub fn occupied(&self, config: &SystemConfig) -> u64 {
        self.in_service
            .iter()
            .zip(&config.classes)
            .map(|(&m, c)| m as u64 * c.need)
            .sum()
    }
}

impl std::fmt::Display for SatState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.in_service)?;
        match self.head {
            Some(c) => write!(f, "+head{c}"),
            None => Ok(()),
        }
    }
}

/// One outcome of a refill: the multiset of admitted jobs and the class that
/// ended the refill by not fitting (if any).
#[derive(Debug, Clone, PartialEq)]
pub struct RefillOutcome {
    /// Admitted jobs per class.
    pub admitted: Vec<u32>,
    /// Class blocked at the head of the line after the refill.
    pub head: Option<u8>,
    pub prob: f64,
}

/// The enumerated completion chain of a saturated system.
///
/// Every transition of this chain is a completion, so each state's
/// completion rate equals its total transition rate `nu`.
#[derive(Debug, Clone)]
pub struct SatChain {
    pub config: SystemConfig,
    pub states: Vec<SatState>,
    /// Total service (= transition) rate out of each state.
    pub nu: Vec<f64>,
    /// Sparse transition-probability rows of the embedded completion DTMC.
    pub kernel: Vec<Vec<(u32, f64)>>,
}

/// Solver knobs; the defaults match ordinary oracle use.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Hard cap on enumerated states (and on refill-table entries).
    pub state_cap: usize,
    /// Dense LU is used up to this many states, sweep refinement above.
    pub dense_cap: usize,
    /// Iteration budget for the sweep-refinement solvers.
    pub max_sweeps: usize,
    /// Target sup-norm residual for the stationary solve.
    pub stationary_tol: f64,
    /// Target per-state residual for the Poisson solve.
    pub poisson_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            state_cap: 2_000_000,
            dense_cap: 2_000,
            max_sweeps: 500_000,
            // The sweep target is far below the 1e-12 acceptance residual:
            // the Poisson solvability defect scales with the stationary
            // error, so the stationary vector must be driven near machine
            // precision for the downstream 1e-10 Poisson gate to hold.
            stationary_tol: 1e-15,
            poisson_tol: 1e-11,
        }
    }
}

/// Stationary solution of a [`SatChain`], indexed like `chain.states`.
#[derive(Debug, Clone)]
pub struct StationarySolution {
    /// Time-average stationary distribution.
    pub time_avg: Vec<f64>,
    /// Completion-average stationary distribution (embedded DTMC).
    pub completion_avg: Vec<f64>,
    /// Throughput: time-average completion rate.
    pub mu: f64,
}

/// Relative-completions solution, shifted to the time-average-zero
/// convention.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    /// Relative completions per state.
    pub delta: Vec<f64>,
    /// Expectation of `delta` under the completion-average distribution.
    pub mean_delta_yd: f64,
}

/// Everything the oracle knows about one configuration.
#[derive(Debug, Clone)]
pub struct SatSolution {
    pub chain: SatChain,
    pub stationary: StationarySolution,
    pub poisson: PoissonSolution,
}

impl SatSolution {
    pub fn mu(&self) -> f64 {
        self.stationary.mu
    }

    pub fn mean_delta_yd(&self) -> f64 {
        self.poisson.mean_delta_yd
    }

    pub fn scaled_queue_limit(&self) -> f64 {
        self.poisson.mean_delta_yd + 1.0
    }

    pub fn time_avg_distribution(&self) -> StateDistribution<SatState> {
        StateDistribution {
            support: self.chain.states.clone(),
            mass: self.stationary.time_avg.clone(),
        }
    }

    pub fn completion_distribution(&self) -> StateDistribution<SatState> {
        StateDistribution {
            support: self.chain.states.clone(),
            mass: self.stationary.completion_avg.clone(),
        }
    }
}

/// Memoized refill-law table for one configuration.
struct RefillTable<'a> {
    config: &'a SystemConfig,
    /// Outcomes of a refill starting with `free` servers and no head.
    by_free: Vec<Option<Vec<RefillOutcome>>>,
    /// Total stored outcome entries, guarded against the state cap.
    entries: usize,
    cap: usize,
}

impl<'a> RefillTable<'a> {
    fn new(config: &'a SystemConfig, cap: usize) -> Self {
        Self {
            config,
            by_free: vec![None; config.n as usize + 1],
            entries: 0,
            cap,
        }
    }

    /// Refill law with an optional blocked head: the head is admitted first
    /// whenever it fits, then i.i.d. draws continue until the servers fill
    /// or a drawn job blocks.
    fn distribution(&mut self, free: u64, head: Option<u8>) -> Result<Vec<RefillOutcome>> {
        match head {
            Some(h) => {
                let need = self.config.classes[h as usize].need;
                if need > free {
                    // Still blocked: nothing enters.
                    return Ok(vec![RefillOutcome {
                        admitted: vec![0; self.config.classes.len()],
                        head: Some(h),
                        prob: 1.0,
                    }]);
                }
                let mut outcomes = self.no_head(free - need)?.to_vec();
                for outcome in &mut outcomes {
                    outcome.admitted[h as usize] += 1;
                }
                Ok(outcomes)
            }
            None => Ok(self.no_head(free)?.to_vec()),
        }
    }

    /// Headless refill law, built bottom-up over the free-server count so
    /// deep class mixes cannot overflow the stack.
    fn no_head(&mut self, free: u64) -> Result<&Vec<RefillOutcome>> {
        let target = free as usize;
        for f in 0..=target {
            if self.by_free[f].is_some() {
                continue;
            }
            let mut acc: BTreeMap<(Vec<u32>, Option<u8>), f64> = BTreeMap::new();
            if f == 0 {
                acc.insert((vec![0; self.config.classes.len()], None), 1.0);
            } else {
                for (c, class) in self.config.classes.iter().enumerate() {
                    if class.need <= f as u64 {
                        let sub = self.by_free[f - class.need as usize]
                            .as_ref()
                            .expect("filled in ascending order");
                        for outcome in sub {
                            let mut admitted = outcome.admitted.clone();
                            admitted[c] += 1;
                            *acc.entry((admitted, outcome.head)).or_insert(0.0) +=
                                class.prob * outcome.prob;
                        }
                    } else {
                        *acc.entry((vec![0; self.config.classes.len()], Some(c as u8)))
                            .or_insert(0.0) += class.prob;
                    }
                }
            }
            self.entries += acc.len();
            if self.entries > self.cap {
                return Err(Error::StateCapExceeded {
                    found: self.entries,
                    cap: self.cap,
                });
            }
            self.by_free[f] = Some(
                acc.into_iter()
                    .map(|((admitted, head), prob)| RefillOutcome {
                        admitted,
                        head,
                        prob,
                    })
                    .collect(),
            );
        }
        Ok(self.by_free[target].as_ref().unwrap())
    }
}

/// Exact refill law from `free` idle servers with an optionally blocked
/// head-of-line class. Outcome probabilities sum to 1.
pub fn refill_distribution(
    free: u64,
    head: Option<u8>,
    config: &SystemConfig,
) -> Result<Vec<RefillOutcome>> {
    crate::model::validate_config(config)?;
    if free > config.n {
        return Err(Error::InvalidConfig(format!(
            "free = {free} exceeds n = {}",
            config.n
        )));
    }
    let opts = SolverOptions::default();
    RefillTable::new(config, opts.state_cap).distribution(free, head)
}

/// Enumerate the reachable completion chain with default options.
pub fn enumerate_chain(config: &SystemConfig) -> Result<SatChain> {
    enumerate_chain_with(config, &SolverOptions::default())
}

/// Enumerate all completion states reachable from the all-smallest-class
/// saturated start and assemble the embedded transition kernel.
pub fn enumerate_chain_with(config: &SystemConfig, opts: &SolverOptions) -> Result<SatChain> {
    crate::model::validate_config(config)?;
    let n = config.n;
    let class_count = config.classes.len();
    let mut refill = RefillTable::new(config, opts.state_cap);

    let mut states: Vec<SatState> = Vec::new();
    let mut index: HashMap<SatState, u32> = HashMap::new();
    let intern = |state: SatState,
                  states: &mut Vec<SatState>,
                  index: &mut HashMap<SatState, u32>|
     -> Result<u32> {
        if let Some(&i) = index.get(&state) {
            return Ok(i);
        }
        if states.len() >= opts.state_cap {
            return Err(Error::StateCapExceeded {
                found: states.len() + 1,
                cap: opts.state_cap,
            });
        }
        let i = states.len() as u32;
        index.insert(state.clone(), i);
        states.push(state);
        Ok(i)
    };

    // Seed: fill the system with the smallest class when it divides n;
    // otherwise seed with every outcome of a refill from empty.
    let min_need = config.classes.iter().map(|c| c.need).min().unwrap();
    let smallest = config
        .classes
        .iter()
        .position(|c| c.need == min_need)
        .unwrap();
    if n.is_multiple_of(min_need) {
        let mut in_service = vec![0u32; class_count];
        in_service[smallest] = (n / min_need) as u32;
        intern(
            SatState {
                in_service,
                head: None,
            },
            &mut states,
            &mut index,
        )?;
    } else {
        for outcome in refill.distribution(n, None)? {
            intern(
                SatState {
                    in_service: outcome.admitted,
                    head: outcome.head,
                },
                &mut states,
                &mut index,
            )?;
        }
    }

    let mut nu: Vec<f64> = Vec::new();
    let mut kernel: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut cursor = 0usize;
    while cursor < states.len() {
        let state = states[cursor].clone();
        let occupied = state.occupied(config);
        let total_rate: f64 = state
            .in_service
            .iter()
            .zip(&config.classes)
            .map(|(&m, c)| m as f64 * c.rate)
            .sum();
        if total_rate <= 0.0 {
            return Err(Error::ConsistencyCheck(format!(
                "stored state {state} has no job in service"
            )));
        }
        let mut row: BTreeMap<u32, f64> = BTreeMap::new();
        for (c, class) in config.classes.iter().enumerate() {
            if state.in_service[c] == 0 {
                continue;
            }
            let complete_prob = state.in_service[c] as f64 * class.rate / total_rate;
            let free_after = n - occupied + class.need;
            for outcome in refill.distribution(free_after, state.head)? {
                let mut in_service = state.in_service.clone();
                in_service[c] -= 1;
                for (m, extra) in in_service.iter_mut().zip(&outcome.admitted) {
                    *m += extra;
                }
                let next = SatState {
                    in_service,
                    head: outcome.head,
                };
                let i = intern(next, &mut states, &mut index)?;
                *row.entry(i).or_insert(0.0) += complete_prob * outcome.prob;
            }
        }
        nu.push(total_rate);
        kernel.push(row.into_iter().collect());
        cursor += 1;
    }

    Ok(SatChain {
        config: config.clone(),
        states,
        nu,
        kernel,
    })
}

impl SatChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Completion rate of one class in one state, `m_c · rate_c`; these sum
    /// to `nu[state]`.
    pub fn class_completion_rate(&self, state: usize, class: usize) -> f64 {
        self.states[state].in_service[class] as f64 * self.config.classes[class].rate
    }

    /// Sup-norm of `x·K - x`.
    fn stationary_residual(&self, x: &[f64]) -> f64 {
        let mut image = vec![0.0f64; x.len()];
        for (i, row) in self.kernel.iter().enumerate() {
            for &(j, p) in row {
                image[j as usize] += x[i] * p;
            }
        }
        image
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Per-state residual of the Poisson equation `delta = r + K·delta`.
    fn poisson_residual(&self, reward: &[f64], delta: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.kernel.iter().enumerate() {
            let mut acc = reward[i] - delta[i];
            for &(j, p) in row {
                acc += p * delta[j as usize];
            }
            worst = worst.max(acc.abs());
        }
        worst
    }
}

/// Solve for the stationary distributions and throughput with defaults.
pub fn solve_stationary(chain: &SatChain) -> Result<StationarySolution> {
    solve_stationary_with(chain, &SolverOptions::default())
}

/// Stationary solve: completion-average law of the kernel, time-average law
/// by holding-time weighting, and throughput `mu = (Σ pi_d/nu)^{-1}`.
pub fn solve_stationary_with(chain: &SatChain, opts: &SolverOptions) -> Result<StationarySolution> {
    let m = chain.len();
    let mut completion_avg = if m <= opts.dense_cap {
        stationary_dense(chain)?
    } else {
        stationary_sweeps(chain, opts)?
    };

    // Clean up solver noise, then guard irreducibility: a reachable state
    // with no stationary mass means the seed closure was not one
    // communicating class.
    for mass in completion_avg.iter_mut() {
        if *mass < 0.0 {
            if *mass < -1e-10 {
                return Err(Error::SolverFailure {
                    residual: mass.abs(),
                    iterations: 0,
                });
            }
            *mass = 0.0;
        }
    }
    let total: f64 = completion_avg.iter().copied().collect::<KahanSum>().value();
    for mass in completion_avg.iter_mut() {
        *mass /= total;
    }
    if let Some(dead) = completion_avg.iter().position(|&p| p == 0.0) {
        return Err(Error::ReducibleChain { state: dead });
    }

    let residual = chain.stationary_residual(&completion_avg);
    if residual > opts.stationary_tol.max(1e-12) {
        return Err(Error::SolverFailure {
            residual,
            iterations: 0,
        });
    }

    let mut holding = KahanSum::new();
    for (pd, nu) in completion_avg.iter().zip(&chain.nu) {
        holding.add(pd / nu);
    }
    let mu = 1.0 / holding.value();
    let time_avg: Vec<f64> = completion_avg
        .iter()
        .zip(&chain.nu)
        .map(|(pd, nu)| pd / nu * mu)
        .collect();

    Ok(StationarySolution {
        time_avg,
        completion_avg,
        mu,
    })
}

/// Dense path: LU on the transposed balance equations with the last row
/// replaced by normalization.
fn stationary_dense(chain: &SatChain) -> Result<Vec<f64>> {
    let m = chain.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, row) in chain.kernel.iter().enumerate() {
        for &(j, p) in row {
            a[(j as usize, i)] += p;
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let solved = a.lu().solve(&b).ok_or(Error::SolverFailure {
        residual: f64::INFINITY,
        iterations: 0,
    })?;
    Ok(solved.iter().copied().collect())
}

/// Iterative path: in-place sweeps of `x <- x·K` over incoming edges with
/// renormalization. Sweeps alternate direction so updates propagate with the
/// chain's flow whichever way the enumeration ordered it; the caller's
/// residual gate decides whether the best effort was good enough.
fn stationary_sweeps(chain: &SatChain, opts: &SolverOptions) -> Result<Vec<f64>> {
    let m = chain.len();
    let mut incoming: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
    for (i, row) in chain.kernel.iter().enumerate() {
        for &(j, p) in row {
            incoming[j as usize].push((i as u32, p));
        }
    }
    let update = |x: &mut Vec<f64>, j: usize| {
        let mut acc = 0.0;
        for &(i, p) in &incoming[j] {
            acc += x[i as usize] * p;
        }
        x[j] = acc;
    };
    let mut x = vec![1.0 / m as f64; m];
    let mut sweeps = 0usize;
    while sweeps < opts.max_sweeps {
        for _ in 0..8 {
            for j in 0..m {
                update(&mut x, j);
            }
            for j in (0..m).rev() {
                update(&mut x, j);
            }
            let total: f64 = x.iter().copied().collect::<KahanSum>().value();
            for v in x.iter_mut() {
                *v /= total;
            }
            sweeps += 1;
        }
        if chain.stationary_residual(&x) <= opts.stationary_tol {
            break;
        }
    }
    Ok(x)
}

/// Solve the relative-completions Poisson equation with defaults.
pub fn solve_poisson(chain: &SatChain, stationary: &StationarySolution) -> Result<PoissonSolution> {
    solve_poisson_with(chain, stationary, &SolverOptions::default())
}

/// Relative completions: solve `delta(y) = (mu_y - mu)/nu_y + Σ K(y,y')
/// delta(y')` (here `mu_y = nu_y`), pin one state, then shift to the
/// time-average-zero convention and take the completion-average expectation.
pub fn solve_poisson_with(
    chain: &SatChain,
    stationary: &StationarySolution,
    opts: &SolverOptions,
) -> Result<PoissonSolution> {
    let m = chain.len();
    let mu = stationary.mu;
    let reward: Vec<f64> = chain.nu.iter().map(|nu| (nu - mu) / nu).collect();

    // Pin the heaviest state: the redundant balance row lands there, where
    // the stationary weight damps the solvability defect best.
    let pin = stationary
        .completion_avg
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mut delta = if m <= opts.dense_cap {
        poisson_dense(chain, &reward, pin)?
    } else {
        poisson_sweeps(chain, &reward, pin, opts)?
    };

    let residual = chain.poisson_residual(&reward, &delta);
    if residual > opts.poisson_tol.max(1e-10) {
        return Err(Error::SolverFailure {
            residual,
            iterations: 0,
        });
    }

    // Shift to E[delta(Y)] = 0 under the time average.
    let mut time_mean = KahanSum::new();
    for (d, p) in delta.iter().zip(&stationary.time_avg) {
        time_mean.add(d * p);
    }
    let shift = time_mean.value();
    for d in delta.iter_mut() {
        *d -= shift;
    }

    let mut completion_mean = KahanSum::new();
    for (d, p) in delta.iter().zip(&stationary.completion_avg) {
        completion_mean.add(d * p);
    }
    Ok(PoissonSolution {
        delta,
        mean_delta_yd: completion_mean.value(),
    })
}

fn poisson_dense(chain: &SatChain, reward: &[f64], pin: usize) -> Result<Vec<f64>> {
    let m = chain.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, row) in chain.kernel.iter().enumerate() {
        if i == pin {
            continue;
        }
        a[(i, i)] += 1.0;
        for &(j, p) in row {
            if j as usize != pin {
                a[(i, j as usize)] -= p;
            }
        }
        b[i] = reward[i];
    }
    a[(pin, pin)] = 1.0;
    b[pin] = 0.0;
    let solved = a.lu().solve(&b).ok_or(Error::SolverFailure {
        residual: f64::INFINITY,
        iterations: 0,
    })?;
    Ok(solved.iter().copied().collect())
}

fn poisson_sweeps(
    chain: &SatChain,
    reward: &[f64],
    pin: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let m = chain.len();
    let update = |delta: &mut Vec<f64>, i: usize| {
        if i == pin {
            return;
        }
        let mut acc = reward[i];
        for &(j, p) in &chain.kernel[i] {
            if j as usize != pin {
                acc += p * delta[j as usize];
            }
        }
        delta[i] = acc;
    };
    let mut delta = vec![0.0f64; m];
    let mut sweeps = 0usize;
    while sweeps < opts.max_sweeps {
        for _ in 0..8 {
            for i in 0..m {
                update(&mut delta, i);
            }
            for i in (0..m).rev() {
                update(&mut delta, i);
            }
            sweeps += 1;
        }
        if chain.poisson_residual(reward, &delta) <= opts.poisson_tol {
            break;
        }
    }
    Ok(delta)
}

/// One-shot solve of a configuration: enumerate, stationary, Poisson.
pub fn solve_config(config: &SystemConfig) -> Result<SatSolution> {
    solve_config_with(config, &SolverOptions::default())
}

pub fn solve_config_with(config: &SystemConfig, opts: &SolverOptions) -> Result<SatSolution> {
    let chain = enumerate_chain_with(config, opts)?;
    let stationary = solve_stationary_with(&chain, opts)?;
    let poisson = solve_poisson_with(&chain, &stationary, opts)?;
    Ok(SatSolution {
        chain,
        stationary,
        poisson,
    })
}
