//! Discrete-event simulation of the open MSJ FCFS queue with head-of-line
//! blocking, plus the saturated-backlog variant used for throughput
//! cross-checks.
//!
//! Service and interarrival times are all exponential, so the simulator
//! never schedules per-job timers: each step samples one race over the total
//! event rate (arrival rate plus the aggregate service rate) and picks the
//! event category, making a step O(number of classes). Statistics are
//! time-weighted over the post-warmup period, with batch-means confidence
//! intervals.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::exact1n::{self, Canonical1n};
use crate::model::{JobClass, SystemConfig};
use crate::satoracle;
use crate::{Error, Result};

/// RNG algorithm identifier recorded in emitted outputs: ChaCha with 8
/// rounds, one independent stream per grid point or replication.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "MSJLAB_THREADS";

/// Simulation run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub system: SystemConfig,
    /// Poisson arrival rate.
    pub lambda: f64,
    /// Total completed-job budget, including warmup.
    pub jobs: u64,
    /// Completions discarded before statistics start.
    pub warmup_jobs: u64,
    /// Batch count for the batch-means confidence intervals.
    pub batches: u32,
    pub seed: u64,
    /// Queue length at which the run is abandoned as apparently unstable.
    pub queue_bound: usize,
}

impl SimConfig {
    /// Conventional defaults: 10% warmup, 20 batches, 10^7 queue bound.
    pub fn new(system: SystemConfig, lambda: f64, jobs: u64, seed: u64) -> Self {
        Self {
            system,
            lambda,
            jobs,
            warmup_jobs: jobs / 10,
            batches: 20,
            seed,
            queue_bound: 10_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        crate::model::validate_config(&self.system)?;
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::InvalidSimConfig(format!(
                "arrival rate must be positive, got {}",
                self.lambda
            )));
        }
        if self.jobs <= self.warmup_jobs {
            return Err(Error::InvalidSimConfig(format!(
                "job budget {} must exceed warmup {}",
                self.jobs, self.warmup_jobs
            )));
        }
        if self.batches < 2 {
            return Err(Error::InvalidSimConfig(format!(
                "need at least 2 batches, got {}",
                self.batches
            )));
        }
        if (self.jobs - self.warmup_jobs) < self.batches as u64 {
            return Err(Error::InvalidSimConfig(
                "fewer post-warmup completions than batches".into(),
            ));
        }
        Ok(())
    }
}

/// Steady-state estimates from one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    /// Time-average number of jobs waiting (not in service).
    pub mean_q_wait: f64,
    /// Time-average number of jobs in the system.
    pub mean_n_sys: f64,
    /// 95% half-widths from batch means.
    pub ci_q_wait: f64,
    pub ci_n_sys: f64,
    /// Time-average fraction of busy servers.
    pub util: f64,
    /// Completions per unit time over the measured period.
    pub throughput: f64,
    /// Mean response (sojourn) time of measured completions.
    pub mean_response: f64,
    pub ci_response: f64,
    /// Load fraction `lambda/mu` when the caller knows the threshold.
    pub rho: Option<f64>,
    /// Measured (post-warmup) completions.
    pub completed: u64,
}

#[derive(Debug, Clone, Copy)]
struct QueuedJob {
    class: u8,
    arrival: f64,
    seq: u64,
}

/// Running integrals over one measurement window.
#[derive(Debug, Clone, Copy, Default)]
struct Window {
    start_time: f64,
    q_wait_area: f64,
    n_sys_area: f64,
    busy_area: f64,
    responses: f64,
    completions: u64,
}

impl Window {
    fn open(t: f64) -> Self {
        Window {
            start_time: t,
            ..Default::default()
        }
    }

    fn duration(&self, now: f64) -> f64 {
        now - self.start_time
    }
}

struct Engine<'a> {
    config: &'a SimConfig,
    needs: Vec<u64>,
    rates: Vec<f64>,
    probs: Vec<f64>,
    rng: ChaCha8Rng,
    time: f64,
    free: u64,
    queue: VecDeque<QueuedJob>,
    /// Arrival times of jobs in service, per class; completion picks
    /// uniformly within a class (exponential services are exchangeable).
    in_service: Vec<Vec<f64>>,
    service_rate: f64,
    next_seq: u64,
    started: u64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        Engine {
            config,
            needs: config.system.classes.iter().map(|c| c.need).collect(),
            rates: config.system.classes.iter().map(|c| c.rate).collect(),
            probs: config.system.classes.iter().map(|c| c.prob).collect(),
            rng,
            time: 0.0,
            free: config.system.n,
            queue: VecDeque::new(),
            in_service: vec![Vec::new(); config.system.classes.len()],
            service_rate: 0.0,
            next_seq: 0,
            started: 0,
        }
    }

    fn draw_class(&mut self) -> usize {
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (c, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return c;
            }
        }
        self.probs.len() - 1
    }

    fn exp_sample(&mut self, rate: f64) -> f64 {
        let u: f64 = self.rng.gen();
        -(1.0 - u).ln() / rate
    }

    fn jobs_in_service(&self) -> u64 {
        self.in_service.iter().map(|v| v.len() as u64).sum()
    }

    fn busy(&self) -> u64 {
        self.config.system.n - self.free
    }

    /// Admit from the queue head while the next job fits.
    fn admit(&mut self) {
        while let Some(front) = self.queue.front() {
            let need = self.needs[front.class as usize];
            if need > self.free {
                break;
            }
            let job = self.queue.pop_front().unwrap();
            // FCFS: service starts strictly in arrival order.
            debug_assert_eq!(job.seq, self.started);
            self.started += 1;
            self.free -= need;
            self.service_rate += self.rates[job.class as usize];
            self.in_service[job.class as usize].push(job.arrival);
        }
        debug_assert_eq!(
            self.busy(),
            self.in_service
                .iter()
                .zip(&self.needs)
                .map(|(v, need)| v.len() as u64 * need)
                .sum::<u64>()
        );
    }

    /// Pick the completing class proportional to its aggregate rate, then a
    /// uniform job within it. Returns (class, arrival time).
    fn complete_one(&mut self, target: f64) -> (usize, f64) {
        let mut acc = 0.0;
        let mut class = usize::MAX;
        for (c, jobs) in self.in_service.iter().enumerate() {
            acc += jobs.len() as f64 * self.rates[c];
            if target < acc {
                class = c;
                break;
            }
        }
        if class == usize::MAX {
            class = self
                .in_service
                .iter()
                .rposition(|v| !v.is_empty())
                .expect("completion raced with empty service set");
        }
        let idx = self.rng.gen_range(0..self.in_service[class].len());
        let arrival = self.in_service[class].swap_remove(idx);
        self.free += self.needs[class];
        self.service_rate -= self.rates[class];
        if self.in_service[class].is_empty() {
            // Kill drift in the aggregate rate when a class empties.
            self.service_rate = self
                .in_service
                .iter()
                .zip(&self.rates)
                .map(|(v, r)| v.len() as f64 * r)
                .sum();
        }
        (class, arrival)
    }
}

/// Run one simulation.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    simulate_on_stream(config, 0)
}

/// Run one simulation on a specific RNG stream of the configured seed.
/// Sweeps give every grid point its own stream.
pub fn simulate_on_stream(config: &SimConfig, stream: u64) -> Result<SimResult> {
    config.validate()?;
    let mut eng = Engine::new(config, stream);
    let lambda = config.lambda;
    let measured_budget = config.jobs - config.warmup_jobs;
    let batch_size = (measured_budget / config.batches as u64).max(1);

    let mut completions = 0u64;
    let mut warm = false;
    let mut overall = Window::open(0.0);
    let mut batch = Window::open(0.0);
    let mut batch_q = Vec::with_capacity(config.batches as usize);
    let mut batch_n = Vec::with_capacity(config.batches as usize);
    let mut batch_resp = Vec::with_capacity(config.batches as usize);

    while completions < config.jobs {
        let total_rate = lambda + eng.service_rate;
        let dt = eng.exp_sample(total_rate);
        if warm {
            let q = eng.queue.len() as f64;
            let in_service = eng.jobs_in_service() as f64;
            let busy = eng.busy() as f64;
            overall.q_wait_area += q * dt;
            overall.n_sys_area += (q + in_service) * dt;
            overall.busy_area += busy * dt;
            batch.q_wait_area += q * dt;
            batch.n_sys_area += (q + in_service) * dt;
            batch.busy_area += busy * dt;
        }
        eng.time += dt;

        let pick: f64 = eng.rng.gen::<f64>() * total_rate;
        if pick < lambda {
            let class = eng.draw_class() as u8;
            let seq = eng.next_seq;
            eng.next_seq += 1;
            eng.queue.push_back(QueuedJob {
                class,
                arrival: eng.time,
                seq,
            });
            eng.admit();
            if eng.queue.len() > config.queue_bound {
                return Err(Error::ApparentInstability {
                    bound: config.queue_bound,
                    time: eng.time,
                });
            }
        } else {
            let (_, arrival) = eng.complete_one(pick - lambda);
            completions += 1;
            if warm {
                let response = eng.time - arrival;
                overall.responses += response;
                overall.completions += 1;
                batch.responses += response;
                batch.completions += 1;
                let done_in_batches = completions - config.warmup_jobs;
                let batch_idx = batch_q.len() as u64;
                let last_batch = batch_idx + 1 >= config.batches as u64;
                if (!last_batch && done_in_batches == (batch_idx + 1) * batch_size)
                    || completions == config.jobs
                {
                    let dur = batch.duration(eng.time);
                    batch_q.push(batch.q_wait_area / dur);
                    batch_n.push(batch.n_sys_area / dur);
                    batch_resp.push(batch.responses / batch.completions.max(1) as f64);
                    batch = Window::open(eng.time);
                }
            } else if completions == config.warmup_jobs {
                warm = true;
                overall = Window::open(eng.time);
                batch = Window::open(eng.time);
            }
            eng.admit();
        }
    }

    let span = overall.duration(eng.time);
    let half = |means: &[f64]| ci_halfwidth(means);
    Ok(SimResult {
        mean_q_wait: overall.q_wait_area / span,
        mean_n_sys: overall.n_sys_area / span,
        ci_q_wait: half(&batch_q),
        ci_n_sys: half(&batch_n),
        util: overall.busy_area / (span * config.system.n as f64),
        throughput: overall.completions as f64 / span,
        mean_response: overall.responses / overall.completions as f64,
        ci_response: half(&batch_resp),
        rho: None,
        completed: overall.completions,
    })
}

/// 95% half-width from batch means (Student t on the batch count).
fn ci_halfwidth(means: &[f64]) -> f64 {
    let k = means.len();
    if k < 2 {
        return f64::INFINITY;
    }
    let mean = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64)
        .expect("valid dof")
        .inverse_cdf(0.975);
    t * (var / k as f64).sqrt()
}

/// Saturated-backlog throughput estimate: arrivals are replaced by an
/// infinite queue, so the run follows the saturated completion process
/// directly. Returns the estimate and its 95% half-width.
pub fn saturated_throughput(
    system: &SystemConfig,
    completions_budget: u64,
    warmup: u64,
    batches: u32,
    seed: u64,
) -> Result<(f64, f64)> {
    crate::model::validate_config(system)?;
    if completions_budget <= warmup || batches < 2 {
        return Err(Error::InvalidSimConfig(
            "saturated run needs budget > warmup and >= 2 batches".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let needs: Vec<u64> = system.classes.iter().map(|c| c.need).collect();
    let rates: Vec<f64> = system.classes.iter().map(|c| c.rate).collect();
    let probs: Vec<f64> = system.classes.iter().map(|c| c.prob).collect();
    let mut in_service = vec![0u64; system.classes.len()];
    let mut head: Option<usize> = None;
    let mut free = system.n;

    let draw_class = |rng: &mut ChaCha8Rng| -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (c, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return c;
            }
        }
        probs.len() - 1
    };
    let refill = |rng: &mut ChaCha8Rng,
                  in_service: &mut Vec<u64>,
                  head: &mut Option<usize>,
                  free: &mut u64| {
        if let Some(h) = *head {
            if needs[h] > *free {
                return;
            }
            in_service[h] += 1;
            *free -= needs[h];
            *head = None;
        }
        while *free > 0 {
            let c = draw_class(rng);
            if needs[c] <= *free {
                in_service[c] += 1;
                *free -= needs[c];
            } else {
                *head = Some(c);
                return;
            }
        }
    };

    refill(&mut rng, &mut in_service, &mut head, &mut free);
    let mut time = 0.0f64;
    let mut completions = 0u64;
    let batch_size = ((completions_budget - warmup) / batches as u64).max(1);
    let mut batch_start = 0.0f64;
    let mut batch_completions = 0u64;
    let mut batch_rates: Vec<f64> = Vec::with_capacity(batches as usize);
    let mut measured_start = 0.0;

    while completions < completions_budget {
        let nu: f64 = in_service
            .iter()
            .zip(&rates)
            .map(|(&m, r)| m as f64 * r)
            .sum();
        let u: f64 = rng.gen();
        time += -(1.0 - u).ln() / nu;
        let mut target = rng.gen::<f64>() * nu;
        let mut class = in_service.iter().rposition(|&m| m > 0).unwrap();
        for (c, (&m, r)) in in_service.iter().zip(&rates).enumerate() {
            target -= m as f64 * r;
            if target < 0.0 {
                class = c;
                break;
            }
        }
        in_service[class] -= 1;
        free += needs[class];
        refill(&mut rng, &mut in_service, &mut head, &mut free);
        completions += 1;
        if completions == warmup {
            measured_start = time;
            batch_start = time;
            batch_completions = 0;
        } else if completions > warmup {
            batch_completions += 1;
            let is_last = batch_rates.len() as u32 + 1 >= batches;
            if (!is_last && batch_completions == batch_size) || completions == completions_budget {
                batch_rates.push(batch_completions as f64 / (time - batch_start));
                batch_start = time;
                batch_completions = 0;
            }
        }
    }
    let mu_hat = (completions_budget - warmup) as f64 / (time - measured_start);
    Ok((mu_hat, ci_halfwidth(&batch_rates)))
}

/// One point of a heavy-traffic scaling check.
#[derive(Debug, Clone, Copy)]
pub struct HeavyTrafficRow {
    pub rho: f64,
    pub lambda: f64,
    /// Simulated `E[Q]·(1-rho)` with jobs in system as Q.
    pub scaled_n_sys: f64,
    /// Same scaling with waiting jobs only.
    pub scaled_q_wait: f64,
    pub ci_scaled_n_sys: f64,
    /// The predicted limit `E[Delta(Y_d)] + 1`.
    pub limit: f64,
    pub result: SimResult,
}

/// Simulate the canonical system at each load fraction of the grid and
/// scale the mean queue length toward the heavy-traffic limit.
pub fn heavy_traffic_check(
    params: &Canonical1n,
    rho_grid: &[f64],
    template: &SimConfig,
) -> Result<Vec<HeavyTrafficRow>> {
    let exact = exact1n::mean_delta_yd(params)?;
    let limit = exact.scaled_queue_limit;
    let system = SystemConfig::two_class(params.n, params.p_n, params.mu1, params.mun)?;
    for &rho in rho_grid {
        if !(0.0 < rho && rho < 1.0) {
            return Err(Error::InvalidSimConfig(format!(
                "load fraction {rho} outside (0,1)"
            )));
        }
    }
    let points: Vec<(usize, f64)> = rho_grid.iter().copied().enumerate().collect();
    let rows = run_parallel(points, |(idx, rho)| {
        let lambda = rho * exact.mu;
        let mut config = template.clone();
        config.system = system.clone();
        config.lambda = lambda;
        let mut result = simulate_on_stream(&config, idx as u64)?;
        result.rho = Some(rho);
        Ok(HeavyTrafficRow {
            rho,
            lambda,
            scaled_n_sys: result.mean_n_sys * (1.0 - rho),
            scaled_q_wait: result.mean_q_wait * (1.0 - rho),
            ci_scaled_n_sys: result.ci_n_sys * (1.0 - rho),
            limit,
            result,
        })
    })?;
    rows.into_iter().collect()
}

/// Job-mix family being swept: the main two-class system, its
/// duration-scaled variant, half-size large jobs, or three classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSetting {
    /// Needs {1, n}, unit rates.
    Original,
    /// Needs {1, n}; 1-server jobs complete at rate n.
    DurationScaled,
    /// Needs {1, n/2}, unit rates.
    HalfSize,
    /// Needs {1, n/2, n}, unit rates, the two large classes equally likely.
    ThreeClass,
}

impl SweepSetting {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepSetting::Original => "original",
            SweepSetting::DurationScaled => "duration-scaled",
            SweepSetting::HalfSize => "half-size",
            SweepSetting::ThreeClass => "three-class",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(SweepSetting::Original),
            "duration-scaled" | "duration_scaled" => Ok(SweepSetting::DurationScaled),
            "half-size" | "half_size" => Ok(SweepSetting::HalfSize),
            "three-class" | "three_class" => Ok(SweepSetting::ThreeClass),
            other => Err(Error::InvalidSimConfig(format!(
                "unknown sweep setting '{other}'"
            ))),
        }
    }

    /// Large-job probability decays as `n^(-alpha)`; the three-class setting
    /// splits it evenly across its two large classes.
    pub fn system(&self, n: u64, alpha: f64) -> Result<SystemConfig> {
        let p = (n as f64).powf(-alpha);
        let config = match self {
            SweepSetting::Original => SystemConfig::two_class(n, p, 1.0, 1.0)?,
            SweepSetting::DurationScaled => SystemConfig::two_class(n, p, n as f64, 1.0)?,
            SweepSetting::HalfSize => {
                require_even(n)?;
                SystemConfig {
                    n,
                    classes: prune(vec![
                        JobClass {
                            need: 1,
                            prob: 1.0 - p,
                            rate: 1.0,
                        },
                        JobClass {
                            need: n / 2,
                            prob: p,
                            rate: 1.0,
                        },
                    ]),
                }
            }
            SweepSetting::ThreeClass => {
                require_even(n)?;
                let half = p / 2.0;
                SystemConfig {
                    n,
                    classes: prune(vec![
                        JobClass {
                            need: 1,
                            prob: 1.0 - p,
                            rate: 1.0,
                        },
                        JobClass {
                            need: n / 2,
                            prob: half,
                            rate: 1.0,
                        },
                        JobClass {
                            need: n,
                            prob: half,
                            rate: 1.0,
                        },
                    ]),
                }
            }
        };
        crate::model::validate_config(&config)?;
        Ok(config)
    }

    /// Stability threshold of the setting's system at this point.
    pub fn stability_threshold(&self, n: u64, alpha: f64) -> Result<f64> {
        match self {
            SweepSetting::Original | SweepSetting::DurationScaled => {
                let system = self.system(n, alpha)?;
                let params = Canonical1n::from_config(&system)?;
                Ok(exact1n::throughput_exact(&params)?.0)
            }
            SweepSetting::HalfSize | SweepSetting::ThreeClass => {
                let system = self.system(n, alpha)?;
                Ok(satoracle::solve_config(&system)?.mu())
            }
        }
    }
}

fn require_even(n: u64) -> Result<()> {
    if n.is_multiple_of(2) {
        Ok(())
    } else {
        Err(Error::InvalidSimConfig(format!(
            "setting needs an even server count, got {n}"
        )))
    }
}

fn prune(classes: Vec<JobClass>) -> Vec<JobClass> {
    classes.into_iter().filter(|c| c.prob > 0.0).collect()
}

/// How a sweep chooses the arrival rate at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// `lambda = fraction · mu`: a fixed fraction of the stability region.
    StabilityFraction,
    /// `lambda` chosen so the demanded-work capacity fraction equals the
    /// target, mirroring constant-capacity load curves.
    CapacityFraction,
}

impl LoadMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LoadMode::StabilityFraction => "stability-fraction",
            LoadMode::CapacityFraction => "capacity-fraction",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stability" | "stability-fraction" => Ok(LoadMode::StabilityFraction),
            "capacity" | "capacity-fraction" => Ok(LoadMode::CapacityFraction),
            other => Err(Error::InvalidSimConfig(format!(
                "unknown load mode '{other}'"
            ))),
        }
    }
}

/// One point of an alpha sweep. Unstable or failed points carry the error
/// description instead of a result.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub setting: SweepSetting,
    pub alpha: f64,
    /// Large-job probability at this point.
    pub p_large: f64,
    pub fraction: f64,
    pub load_mode: LoadMode,
    pub lambda: f64,
    /// Stability threshold of this point's system.
    pub mu_threshold: f64,
    pub rho: f64,
    pub result: Option<SimResult>,
    pub error: Option<String>,
}

/// Sweep mean queue length over a grid of decay exponents and load
/// fractions. Each point runs on its own RNG stream; unstable points are
/// flagged in their row rather than failing the sweep.
pub fn alpha_sweep(
    n: u64,
    alpha_grid: &[f64],
    fractions: &[f64],
    setting: SweepSetting,
    load_mode: LoadMode,
    template: &SimConfig,
) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &alpha in alpha_grid {
        let system = setting.system(n, alpha)?;
        let mu = setting.stability_threshold(n, alpha)?;
        for &fraction in fractions {
            if !(0.0 < fraction && fraction < 1.0) {
                return Err(Error::InvalidSimConfig(format!(
                    "load fraction {fraction} outside (0,1)"
                )));
            }
            points.push((alpha, system.clone(), mu, fraction));
        }
    }
    let indexed: Vec<(usize, (f64, SystemConfig, f64, f64))> =
        points.into_iter().enumerate().collect();
    run_parallel(indexed, |(idx, (alpha, system, mu, fraction))| {
        let lambda = match load_mode {
            LoadMode::StabilityFraction => fraction * mu,
            LoadMode::CapacityFraction => fraction * system.n as f64 / system.mean_work_per_job(),
        };
        let p_large = (n as f64).powf(-alpha);
        let rho = lambda / mu;
        let mut row = SweepRow {
            setting,
            alpha,
            p_large,
            fraction,
            load_mode,
            lambda,
            mu_threshold: mu,
            rho,
            result: None,
            error: None,
        };
        if rho >= 1.0 {
            row.error = Some(format!("unstable: lambda {lambda} >= mu {mu}"));
            return Ok(row);
        }
        let mut config = template.clone();
        config.system = system;
        config.lambda = lambda;
        match simulate_on_stream(&config, idx as u64) {
            Ok(mut result) => {
                result.rho = Some(rho);
                row.result = Some(result);
            }
            Err(Error::ApparentInstability { bound, time }) => {
                row.error = Some(format!(
                    "apparent instability: queue exceeded {bound} at t = {time:.1}"
                ));
            }
            Err(other) => return Err(other),
        }
        Ok(row)
    })?
    .into_iter()
    .collect()
}

/// Run independent points, optionally in parallel, preserving input order.
/// `MSJLAB_THREADS` caps the worker count; 1 disables parallelism.
fn run_parallel<P, R, F>(points: Vec<P>, f: F) -> Result<Vec<Result<R>>>
where
    P: Send,
    R: Send,
    F: Fn(P) -> Result<R> + Sync + Send,
{
    use rayon::prelude::*;
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0);
    match threads {
        Some(1) => Ok(points.into_iter().map(f).collect()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidSimConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(|| points.into_par_iter().map(f).collect()))
        }
        None => Ok(points.into_par_iter().map(f).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::JobClass;

    fn mm_system(n: u64, need: u64, rate: f64) -> SystemConfig {
        SystemConfig {
            n,
            classes: vec![JobClass {
                need,
                prob: 1.0,
                rate,
            }],
        }
    }

    /// Independent M/M/c oracle: mean jobs in system via the Erlang-C
    /// waiting probability.
    fn erlang_mean_n_sys(c: u64, lambda: f64, mu: f64) -> f64 {
        let a = lambda / mu;
        let rho = a / c as f64;
        assert!(rho < 1.0);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..c {
            term *= a / k as f64;
            sum += term;
        }
        let tail = term * a / c as f64 / (1.0 - rho);
        let p_wait = tail / (sum + tail);
        p_wait * rho / (1.0 - rho) + a
    }

    #[test]
    fn erlang_oracle_frozen_values() {
        // M/M/1 at rho = 0.5 and M/M/2 at a = 1.
        assert!((erlang_mean_n_sys(1, 0.5, 1.0) - 1.0).abs() < 1e-12);
        assert!((erlang_mean_n_sys(2, 1.0, 1.0) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mm1_mean_jobs_in_system() {
        // Whole-system class on any n is an M/M/1.
        let config = SimConfig::new(mm_system(4, 4, 1.0), 0.5, 400_000, 42);
        let res = simulate(&config).unwrap();
        let expected = erlang_mean_n_sys(1, 0.5, 1.0);
        assert!(
            (res.mean_n_sys - expected).abs() < 3.0 * res.ci_n_sys.max(0.01),
            "{} vs {expected} (ci {})",
            res.mean_n_sys,
            res.ci_n_sys
        );
        assert!((res.util - 0.5).abs() < 0.02);
        assert!((res.throughput - 0.5).abs() < 0.02);
    }

    #[test]
    fn mm2_matches_erlang_oracle() {
        let config = SimConfig::new(mm_system(2, 1, 1.0), 1.0, 400_000, 7);
        let res = simulate(&config).unwrap();
        let expected = erlang_mean_n_sys(2, 1.0, 1.0);
        assert!(
            (res.mean_n_sys - expected).abs() < 3.0 * res.ci_n_sys.max(0.01),
            "{} vs {expected}",
            res.mean_n_sys
        );
    }

    #[test]
    fn littles_law_within_cis() {
        let system = SystemConfig::two_class(4, 0.3, 1.0, 0.7).unwrap();
        let mu = exact1n::throughput_exact(&Canonical1n::from_config(&system).unwrap())
            .unwrap()
            .0;
        let config = SimConfig::new(system, 0.7 * mu, 300_000, 11);
        let res = simulate(&config).unwrap();
        let gap = (res.mean_n_sys - config.lambda * res.mean_response).abs();
        let combined = res.ci_n_sys + config.lambda * res.ci_response;
        assert!(gap <= combined + 1e-9, "gap {gap} > combined {combined}");
    }

    #[test]
    fn reruns_are_bit_identical() {
        let system = SystemConfig::two_class(3, 0.4, 1.0, 1.0).unwrap();
        let config = SimConfig::new(system, 0.5, 50_000, 123);
        let a = simulate(&config).unwrap();
        let b = simulate(&config).unwrap();
        assert_eq!(a, b);
        let c = simulate_on_stream(&config, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn heavy_traffic_scaling_near_limit() {
        // lambda = 0.98·mu: scaled mean queue length lands near the limit.
        let params = Canonical1n::new(2, 0.5, 1.0, 1.0).unwrap();
        let system = SystemConfig::two_class(2, 0.5, 1.0, 1.0).unwrap();
        let mu = 8.0 / 7.0;
        let config = SimConfig::new(system, 0.98 * mu, 3_000_000, 9);
        let res = simulate(&config).unwrap();
        let limit = exact1n::mean_delta_yd(&params).unwrap().scaled_queue_limit;
        let scaled_sys = res.mean_n_sys * 0.02;
        let scaled_wait = res.mean_q_wait * 0.02;
        assert!(
            (scaled_sys - limit).abs() / limit < 0.15,
            "scaled {scaled_sys} vs limit {limit}"
        );
        assert!(
            (scaled_wait - limit).abs() / limit < 0.15,
            "scaled wait {scaled_wait} vs limit {limit}"
        );
    }

    #[test]
    fn heavy_traffic_rows_and_empty_grid() {
        let params = Canonical1n::new(2, 1.0, 1.0, 1.0).unwrap();
        let template = SimConfig::new(mm_system(2, 2, 1.0), 1.0, 400_000, 3);
        let rows = heavy_traffic_check(&params, &[0.9, 0.95], &template).unwrap();
        assert_eq!(rows.len(), 2);
        // M/M/1 limit: E[Delta] = 0, so the limit is 1.
        assert_eq!(rows[0].limit, 1.0);
        for row in &rows {
            assert!((row.scaled_n_sys - 1.0).abs() < 0.2, "{}", row.scaled_n_sys);
        }
        assert!((rows[1].scaled_n_sys - 1.0).abs() <= (rows[0].scaled_n_sys - 1.0).abs() + 0.1);

        let rows = heavy_traffic_check(&params, &[], &template).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn saturated_run_matches_oracle() {
        for &(n, p_n, mu1, mun, seed) in &[
            (2u64, 0.5, 1.0, 1.0, 17),
            (4, 0.4, 1.0, 2.0, 18),
            (8, 0.15, 3.0, 1.0, 19),
        ] {
            let system = SystemConfig::two_class(n, p_n, mu1, mun).unwrap();
            let oracle_mu = satoracle::solve_config(&system).unwrap().mu();
            let (mu_hat, ci) = saturated_throughput(&system, 400_000, 40_000, 20, seed).unwrap();
            assert!(
                (mu_hat - oracle_mu).abs() < 3.0 * ci.max(0.003 * oracle_mu),
                "n={n}: {mu_hat} vs {oracle_mu} (ci {ci})"
            );
        }
    }

    #[test]
    fn instability_detected() {
        let system = mm_system(1, 1, 1.0);
        let mut config = SimConfig::new(system, 3.0, 10_000_000, 1);
        config.queue_bound = 3_000;
        match simulate(&config) {
            Err(Error::ApparentInstability { bound, .. }) => assert_eq!(bound, 3_000),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn sweep_flags_unstable_points() {
        let template = SimConfig::new(mm_system(2, 2, 1.0), 1.0, 60_000, 5);
        let rows = alpha_sweep(
            10,
            &[0.5],
            &[0.5],
            SweepSetting::Original,
            LoadMode::StabilityFraction,
            &template,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].result.is_some());
        assert!((rows[0].rho - 0.5).abs() < 1e-12);

        // Capacity fraction above the stability boundary: flagged, not fatal.
        let rows = alpha_sweep(
            10,
            &[0.3],
            &[0.9],
            SweepSetting::Original,
            LoadMode::CapacityFraction,
            &template,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].result.is_none());
        assert!(rows[0].error.as_deref().unwrap().contains("unstable"));
    }

    #[test]
    fn sweep_settings_build_expected_mixes() {
        let half = SweepSetting::HalfSize.system(10, 1.0).unwrap();
        assert_eq!(half.classes[1].need, 5);
        assert!((half.classes[1].prob - 0.1).abs() < 1e-15);

        let three = SweepSetting::ThreeClass.system(10, 1.0).unwrap();
        assert_eq!(three.classes.len(), 3);
        assert!((three.classes[1].prob - 0.05).abs() < 1e-15);
        assert!((three.classes[2].prob - 0.05).abs() < 1e-15);

        let scaled = SweepSetting::DurationScaled.system(10, 2.0).unwrap();
        assert_eq!(scaled.classes[0].rate, 10.0);

        assert!(SweepSetting::HalfSize.system(9, 1.0).is_err());
    }
}
