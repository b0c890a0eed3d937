use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use msjlab::model::{JobClass, PowerLawFamily, SystemConfig};
use msjlab::sim::{LoadMode, SimConfig, SweepSetting};

use msjlab_cli::run::{self, OutputFormat, OutputSpec};
use msjlab_cli::{grid, CliError};

/// Performance metrics for multiserver-job FCFS queues: closed forms for
/// the 1-and-n system, asymptotic growth rates, a brute-force saturated
/// oracle, and discrete-event simulation. Set MSJLAB_THREADS to cap sweep
/// parallelism.
#[derive(Parser)]
#[command(name = "msjlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output path prefix: CSV goes to PREFIX.csv, plots to PREFIX-*.svg.
    /// Without it, CSV prints to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, svg, or both (CSV is always written)
    #[arg(long, default_value = "csv")]
    format: String,
}

impl OutputArgs {
    fn spec(&self) -> Result<OutputSpec, CliError> {
        Ok(OutputSpec {
            out: self.out.clone(),
            format: OutputFormat::parse(&self.format)?,
        })
    }
}

#[derive(Args)]
struct CanonicalArgs {
    /// JSON config document; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Server count
    #[arg(long)]
    n: Option<u64>,
    /// Probability a job needs all n servers
    #[arg(long)]
    pn: Option<f64>,
    /// Service rate of 1-server jobs
    #[arg(long)]
    mu1: Option<f64>,
    /// Service rate of n-server jobs
    #[arg(long)]
    mun: Option<f64>,
}

#[derive(Args)]
struct SimArgs {
    /// Completed-job budget
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    jobs: u64,
    /// Completions discarded before measurement (default: jobs/10)
    #[arg(long, value_parser = parse_count)]
    warmup: Option<u64>,
    /// Batch count for confidence intervals
    #[arg(long, default_value_t = 20)]
    batches: u32,
    /// RNG seed (chacha8; sweeps use one stream per grid point)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Queue length treated as apparent instability
    #[arg(long, default_value = "1e7", value_parser = parse_count)]
    queue_bound: u64,
}

impl SimArgs {
    fn template(&self, system: SystemConfig, lambda: f64) -> SimConfig {
        SimConfig {
            system,
            lambda,
            jobs: self.jobs,
            warmup_jobs: self.warmup.unwrap_or(self.jobs / 10),
            batches: self.batches,
            seed: self.seed,
            queue_bound: self.queue_bound as usize,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form saturated-system metrics for the 1-and-n system
    Exact {
        #[command(flatten)]
        params: CanonicalArgs,
        /// Cap on materializing the relative-completions vector
        #[arg(long, default_value = "1e7", value_parser = parse_count)]
        cap: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Leading-order asymptotic formulas for a power-law family
    Asymptotic {
        #[arg(long)]
        n: u64,
        /// Decay exponent of p_n = c·n^(-alpha)
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        mu1: f64,
        #[arg(long, default_value_t = 1.0)]
        mun: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact vs asymptotic values along an n grid (log-log plots)
    Compare {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Server-count grid, e.g. 1e2:1e8:log
        #[arg(long = "n-grid")]
        n_grid: String,
        #[arg(long, default_value_t = 1.0)]
        mu1: f64,
        #[arg(long, default_value_t = 1.0)]
        mun: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Brute-force saturated-chain solve for an arbitrary class mix
    SaturatedSolve {
        /// JSON config document
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<u64>,
        /// Per-class server needs, e.g. 1,5,10
        #[arg(long)]
        needs: Option<String>,
        /// Per-class probabilities, e.g. 0.7,0.15,0.15
        #[arg(long)]
        probs: Option<String>,
        /// Per-class service rates, e.g. 1,1,1
        #[arg(long)]
        rates: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate the open FCFS queue at one arrival rate
    Simulate {
        #[command(flatten)]
        params: CanonicalArgs,
        /// Poisson arrival rate
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep simulated queue length over decay exponents and load fractions
    Sweep {
        /// original, duration-scaled, half-size, or three-class
        #[arg(long)]
        setting: String,
        #[arg(long, default_value_t = 10)]
        n: u64,
        /// Decay-exponent grid, e.g. 0.2:3.0:0.2
        #[arg(long = "alpha-grid", default_value = "0.2:3.0:0.2")]
        alpha_grid: String,
        /// Load fractions in (0,1), e.g. 0.5,0.7,0.9
        #[arg(long, default_value = "0.9")]
        fractions: String,
        /// stability (lambda = f·mu) or capacity (demanded-work fraction)
        #[arg(long = "load-mode", default_value = "stability")]
        load_mode: String,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (1.0..=1e18).contains(&v) && (v - v.round()).abs() < 1e-6 * v.max(1.0) {
        Ok(v.round() as u64)
    } else {
        Err(format!("'{s}' is not a positive integer count"))
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad {what} entry '{part}'")))
        })
        .collect()
}

fn resolve_system(
    config: Option<&PathBuf>,
    n: Option<u64>,
    needs: Option<&String>,
    probs: Option<&String>,
    rates: Option<&String>,
) -> Result<SystemConfig, CliError> {
    if let Some(path) = config {
        let doc = run::load_config(path)?;
        return Ok(SystemConfig {
            n: doc.n,
            classes: doc.classes,
        });
    }
    let (n, needs, probs) = match (n, needs, probs) {
        (Some(n), Some(needs), Some(probs)) => (n, needs, probs),
        _ => {
            return Err(CliError::Usage(
                "provide --config, or --n with --needs and --probs".into(),
            ))
        }
    };
    let needs = parse_list(needs, "need")?;
    let probs = parse_list(probs, "prob")?;
    let rates = match rates {
        Some(r) => parse_list(r, "rate")?,
        None => vec![1.0; needs.len()],
    };
    if needs.len() != probs.len() || needs.len() != rates.len() {
        return Err(CliError::Usage(
            "--needs, --probs, and --rates must have equal lengths".into(),
        ));
    }
    let classes: Vec<JobClass> = needs
        .iter()
        .zip(&probs)
        .zip(&rates)
        .map(|((&need, &prob), &rate)| JobClass {
            need: need as u64,
            prob,
            rate,
        })
        .collect();
    let mut system = SystemConfig { n, classes };
    system.classes.sort_by_key(|c| c.need);
    msjlab::model::validate_config(&system)?;
    Ok(system)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Exact {
            params,
            cap,
            output,
        } => {
            let canonical = run::resolve_canonical(
                params.config.as_deref(),
                params.n,
                params.pn,
                params.mu1,
                params.mun,
            )?;
            output.spec()?.emit(&run::run_exact(&canonical, cap)?)
        }
        Command::Asymptotic {
            n,
            alpha,
            c,
            mu1,
            mun,
            output,
        } => {
            let family = PowerLawFamily::new(c, alpha)?;
            output
                .spec()?
                .emit(&run::run_asymptotic(n, &family, mu1, mun)?)
        }
        Command::Compare {
            alpha,
            c,
            n_grid,
            mu1,
            mun,
            output,
        } => {
            let family = PowerLawFamily::new(c, alpha)?;
            let grid = grid::parse_n_grid(&n_grid)?;
            output
                .spec()?
                .emit(&run::run_compare(&family, &grid, mu1, mun)?)
        }
        Command::SaturatedSolve {
            config,
            n,
            needs,
            probs,
            rates,
            output,
        } => {
            let system = resolve_system(
                config.as_ref(),
                n,
                needs.as_ref(),
                probs.as_ref(),
                rates.as_ref(),
            )?;
            output.spec()?.emit(&run::run_saturated(&system)?)
        }
        Command::Simulate {
            params,
            lambda,
            sim,
            output,
        } => {
            let system = match (&params.config, params.n, params.pn) {
                (Some(path), _, _) => {
                    let doc = run::load_config(path)?;
                    let mut system = SystemConfig {
                        n: doc.n,
                        classes: doc.classes,
                    };
                    if let Some(n) = params.n {
                        system.n = n;
                    }
                    system
                }
                (None, Some(n), Some(pn)) => SystemConfig::two_class(
                    n,
                    pn,
                    params.mu1.unwrap_or(1.0),
                    params.mun.unwrap_or(1.0),
                )?,
                _ => return Err(CliError::Usage("provide --config, or --n with --pn".into())),
            };
            let config = sim.template(system, lambda);
            output.spec()?.emit(&run::run_simulate(&config)?)
        }
        Command::Sweep {
            setting,
            n,
            alpha_grid,
            fractions,
            load_mode,
            sim,
            output,
        } => {
            let setting = SweepSetting::parse(&setting)?;
            let load_mode = LoadMode::parse(&load_mode)?;
            let alphas = grid::parse_grid(&alpha_grid)?;
            let fracs = parse_list(&fractions, "fraction")?;
            // The template's system and lambda are replaced per point.
            let placeholder = SystemConfig::two_class(n.max(2), 0.5, 1.0, 1.0)?;
            let template = sim.template(placeholder, 1.0);
            output.spec()?.emit(&run::run_sweep(
                n, &alphas, &fracs, setting, load_mode, &template,
            )?)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
