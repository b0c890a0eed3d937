//! Subcommand runners: pure functions from resolved parameters to CSV rows
//! and optional plots, plus the output plumbing shared by all of them.

use std::path::{Path, PathBuf};

use serde_json::json;

use msjlab::asymptotics;
use msjlab::exact1n::{self, Canonical1n};
use msjlab::model::{self, PowerLawFamily, SystemConfig};
use msjlab::satoracle;
use msjlab::sim::{self, LoadMode, SimConfig, SweepSetting};

use crate::csvout::{self, Row};
use crate::svg::{Marker, Plot, Series, GREEN, ORANGE, PALETTE, PURPLE};
use crate::{CliError, Result};

const SIM_METHOD: &str = "sim:chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            "both" => Ok(OutputFormat::Both),
            other => Err(CliError::Usage(format!(
                "unknown format '{other}' (expected csv, svg, or both)"
            ))),
        }
    }

    fn wants_svg(&self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::Both)
    }
}

/// Where and how results leave the process.
#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

/// What one subcommand produced: a CSV document and named plots.
pub struct CommandOutput {
    pub csv: String,
    /// (file suffix, svg document), e.g. ("mu", "<svg...") -> `PREFIX-mu.svg`.
    pub plots: Vec<(String, String)>,
}

impl OutputSpec {
    pub fn emit(&self, output: &CommandOutput) -> Result<()> {
        match &self.out {
            Some(prefix) => {
                let csv_path = with_suffix(prefix, None, "csv");
                write_file(&csv_path, &output.csv)?;
                if self.format.wants_svg() {
                    if output.plots.is_empty() {
                        eprintln!("note: this subcommand defines no plot; wrote CSV only");
                    }
                    for (name, svg) in &output.plots {
                        let path = with_suffix(prefix, Some(name), "svg");
                        write_file(&path, svg)?;
                    }
                }
            }
            None => {
                if self.format.wants_svg() {
                    return Err(CliError::Usage(
                        "svg output needs --out PREFIX to name the files".into(),
                    ));
                }
                print!("{}", output.csv);
            }
        }
        Ok(())
    }
}

fn with_suffix(prefix: &Path, name: Option<&str>, ext: &str) -> PathBuf {
    let stem = prefix.to_string_lossy();
    match name {
        Some(n) => PathBuf::from(format!("{stem}-{n}.{ext}")),
        None => PathBuf::from(format!("{stem}.{ext}")),
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, content).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read and validate a JSON config document from disk.
pub fn load_config(path: &Path) -> Result<model::ConfigDoc> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(model::parse_config(&text)?)
}

/// Resolve canonical 1-and-n parameters from an optional config file plus
/// flag overrides; flags win.
pub fn resolve_canonical(
    config: Option<&Path>,
    n: Option<u64>,
    p_n: Option<f64>,
    mu1: Option<f64>,
    mun: Option<f64>,
) -> Result<Canonical1n> {
    let base = match config {
        Some(path) => {
            let doc = load_config(path)?;
            let system = SystemConfig {
                n: doc.n,
                classes: doc.classes,
            };
            Some(Canonical1n::from_config(&system)?)
        }
        None => None,
    };
    let require = |v: Option<u64>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--{flag} is required without --config")))
    };
    match base {
        Some(b) => Ok(Canonical1n::new(
            n.unwrap_or(b.n),
            p_n.unwrap_or(b.p_n),
            mu1.unwrap_or(b.mu1),
            mun.unwrap_or(b.mun),
        )?),
        None => {
            let n = require(n, "n")?;
            let p_n =
                p_n.ok_or_else(|| CliError::Usage("--pn is required without --config".into()))?;
            Ok(Canonical1n::new(
                n,
                p_n,
                mu1.unwrap_or(1.0),
                mun.unwrap_or(1.0),
            )?)
        }
    }
}

fn canonical_row(params: &Canonical1n) -> Row {
    Row {
        setting: "1-and-n".into(),
        n: Some(params.n),
        p_n: Some(params.p_n),
        mu1: Some(params.mu1),
        mun: Some(params.mun),
        ..Default::default()
    }
}

/// `exact`: closed-form canonical metrics.
pub fn run_exact(params: &Canonical1n, cap: u64) -> Result<CommandOutput> {
    let result = exact1n::evaluate(params, cap)?;
    let resolved = json!({
        "subcommand": "exact",
        "n": params.n, "p_n": params.p_n, "mu1": params.mu1, "mun": params.mun,
        "materialization_cap": cap,
    });
    let base = canonical_row(params);
    let metrics = [
        ("mu", result.mu),
        ("c_prime", result.c_prime),
        ("mean_delta_yd", result.mean_delta_yd),
        ("scaled_queue_limit", result.scaled_queue_limit),
    ];
    let rows: Vec<Row> = metrics
        .into_iter()
        .map(|(metric, value)| Row {
            metric: metric.into(),
            value,
            method: "exact1n".into(),
            ..base.clone()
        })
        .collect();
    Ok(CommandOutput {
        csv: csvout::render(&resolved, &rows),
        plots: vec![],
    })
}

/// `asymptotic`: leading-order regime formulas at one point.
pub fn run_asymptotic(
    n: u64,
    family: &PowerLawFamily,
    mu1: f64,
    mun: f64,
) -> Result<CommandOutput> {
    let regime = asymptotics::classify_regime(family);
    let p_n = family.p_n(n)?;
    let mu = asymptotics::throughput_asym(n, family, mu1, mun)?;
    let delta = asymptotics::delta_asym(n, family)?;
    let resolved = json!({
        "subcommand": "asymptotic",
        "n": n, "c": family.c, "alpha": family.alpha,
        "mu1": mu1, "mun": mun, "regime": regime.as_str(),
    });
    let base = Row {
        setting: regime.as_str().into(),
        n: Some(n),
        alpha: Some(family.alpha),
        p_n: Some(p_n),
        mu1: Some(mu1),
        mun: Some(mun),
        method: "asymptotics".into(),
        ..Default::default()
    };
    let rows = vec![
        Row {
            metric: "mu_asym".into(),
            value: mu,
            ..base.clone()
        },
        Row {
            metric: "delta_asym".into(),
            value: delta,
            ..base
        },
    ];
    Ok(CommandOutput {
        csv: csvout::render(&resolved, &rows),
        plots: vec![],
    })
}

/// `compare`: exact vs asymptotic curves along an n grid, with log-log
/// plots carrying the exact curve and both asymptotic branches.
pub fn run_compare(
    family: &PowerLawFamily,
    n_grid: &[u64],
    mu1: f64,
    mun: f64,
) -> Result<CommandOutput> {
    let regime = asymptotics::classify_regime(family);
    let table = asymptotics::convergence_table(family, n_grid, mu1, mun)?;
    let resolved = json!({
        "subcommand": "compare",
        "c": family.c, "alpha": family.alpha, "mu1": mu1, "mun": mun,
        "n_grid": n_grid, "regime": regime.as_str(),
    });
    let mut rows = Vec::new();
    for row in &table {
        let base = Row {
            setting: regime.as_str().into(),
            n: Some(row.n),
            alpha: Some(family.alpha),
            p_n: Some(row.p_n),
            mu1: Some(mu1),
            mun: Some(mun),
            ..Default::default()
        };
        let entries = [
            ("mu_exact", row.exact_mu, "exact1n"),
            ("mu_asym", row.asym_mu, "asymptotics"),
            ("mu_ratio", row.mu_ratio, "ratio"),
            ("delta_exact", row.exact_delta, "exact1n"),
            ("delta_asym", row.asym_delta, "asymptotics"),
            ("delta_ratio", row.delta_ratio, "ratio"),
        ];
        for (metric, value, method) in entries {
            rows.push(Row {
                metric: metric.into(),
                value,
                method: method.into(),
                ..base.clone()
            });
        }
    }

    // Both asymptotic branches, like the comparison figures: the
    // head-blocking branch and the all-servers-busy branch.
    let drain_mu: Vec<(f64, f64)> = table
        .iter()
        .map(|r| {
            (
                r.n as f64,
                asymptotics::throughput_asym_n_dominated(r.p_n, mu1),
            )
        })
        .collect();
    let busy_mu: Vec<(f64, f64)> = table
        .iter()
        .map(|r| {
            (
                r.n as f64,
                asymptotics::throughput_asym_one_server_dominated(r.n, family.alpha, mu1, mun),
            )
        })
        .collect();
    let exact_mu: Vec<(f64, f64)> = table.iter().map(|r| (r.n as f64, r.exact_mu)).collect();
    let mu_plot = Plot {
        title: format!("throughput vs n (alpha = {})", family.alpha),
        x_label: "n".into(),
        y_label: "mu".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                label: "exact".into(),
                color: PURPLE,
                marker: Marker::Square,
                points: exact_mu,
            },
            Series {
                label: "asym: head blocking".into(),
                color: ORANGE,
                marker: Marker::TriangleDown,
                points: drain_mu,
            },
            Series {
                label: "asym: servers busy".into(),
                color: GREEN,
                marker: Marker::TriangleUp,
                points: busy_mu,
            },
        ],
    };

    let drain_delta: Vec<(f64, f64)> = table
        .iter()
        .map(|r| (r.n as f64, asymptotics::delta_asym_n_dominated(r.p_n)))
        .collect();
    let busy_delta: Vec<(f64, f64)> = table
        .iter()
        .map(|r| {
            (
                r.n as f64,
                asymptotics::delta_asym_one_server_dominated(r.n, family.alpha),
            )
        })
        .collect();
    let exact_delta: Vec<(f64, f64)> = table.iter().map(|r| (r.n as f64, r.exact_delta)).collect();
    let delta_plot = Plot {
        title: format!("relative completions vs n (alpha = {})", family.alpha),
        x_label: "n".into(),
        y_label: "E[Delta(Y_d)]".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                label: "exact".into(),
                color: PURPLE,
                marker: Marker::Square,
                points: exact_delta,
            },
            Series {
                label: "asym: head blocking".into(),
                color: ORANGE,
                marker: Marker::TriangleDown,
                points: drain_delta,
            },
            Series {
                label: "asym: servers busy".into(),
                color: GREEN,
                marker: Marker::TriangleUp,
                points: busy_delta,
            },
        ],
    };

    Ok(CommandOutput {
        csv: csvout::render(&resolved, &rows),
        plots: vec![
            ("mu".into(), mu_plot.render()),
            ("delta".into(), delta_plot.render()),
        ],
    })
}

/// `saturated-solve`: brute-force oracle metrics for an arbitrary mix.
pub fn run_saturated(config: &SystemConfig) -> Result<CommandOutput> {
    let solution = satoracle::solve_config(config)?;
    let resolved = json!({
        "subcommand": "saturated-solve",
        "n": config.n,
        "classes": config.classes,
        "states": solution.chain.len(),
    });
    let base = Row {
        setting: "saturated".into(),
        n: Some(config.n),
        method: "satoracle".into(),
        ..Default::default()
    };
    let rows = vec![
        Row {
            metric: "mu".into(),
            value: solution.mu(),
            ..base.clone()
        },
        Row {
            metric: "mean_delta_yd".into(),
            value: solution.mean_delta_yd(),
            ..base.clone()
        },
        Row {
            metric: "scaled_queue_limit".into(),
            value: solution.scaled_queue_limit(),
            ..base.clone()
        },
        Row {
            metric: "states".into(),
            value: solution.chain.len() as f64,
            ..base
        },
    ];
    Ok(CommandOutput {
        csv: csvout::render(&resolved, &rows),
        plots: vec![],
    })
}

/// `simulate`: one open-queue run.
pub fn run_simulate(config: &SimConfig) -> Result<CommandOutput> {
    let mut result = sim::simulate(config)?;
    // Attach the load fraction and mix parameters when the config is
    // canonical.
    let canonical = Canonical1n::from_config(&config.system).ok();
    if let Some(params) = &canonical {
        if let Ok((mu, _)) = exact1n::throughput_exact(params) {
            result.rho = Some(config.lambda / mu);
        }
    }
    let resolved = json!({
        "subcommand": "simulate",
        "n": config.system.n,
        "classes": config.system.classes,
        "lambda": config.lambda,
        "jobs": config.jobs,
        "warmup_jobs": config.warmup_jobs,
        "batches": config.batches,
        "seed": config.seed,
        "queue_bound": config.queue_bound,
        "rng": sim::RNG_ALGORITHM,
    });
    let base = Row {
        setting: "open-queue".into(),
        n: Some(config.system.n),
        p_n: canonical.as_ref().map(|p| p.p_n),
        mu1: canonical.as_ref().map(|p| p.mu1),
        mun: canonical.as_ref().map(|p| p.mun),
        lambda: Some(config.lambda),
        rho: result.rho,
        method: SIM_METHOD.into(),
        seed: Some(config.seed),
        ..Default::default()
    };
    let rows = sim_rows(&base, &result);
    Ok(CommandOutput {
        csv: csvout::render(&resolved, &rows),
        plots: vec![],
    })
}

fn sim_rows(base: &Row, result: &sim::SimResult) -> Vec<Row> {
    let ci = |value: f64, half: f64| (Some(value - half), Some(value + half));
    let mut rows = Vec::new();
    let (lo, hi) = ci(result.mean_q_wait, result.ci_q_wait);
    rows.push(Row {
        metric: "mean_q_wait".into(),
        value: result.mean_q_wait,
        ci_low: lo,
        ci_high: hi,
        ..base.clone()
    });
    let (lo, hi) = ci(result.mean_n_sys, result.ci_n_sys);
    rows.push(Row {
        metric: "mean_n_sys".into(),
        value: result.mean_n_sys,
        ci_low: lo,
        ci_high: hi,
        ..base.clone()
    });
    let (lo, hi) = ci(result.mean_response, result.ci_response);
    rows.push(Row {
        metric: "mean_response".into(),
        value: result.mean_response,
        ci_low: lo,
        ci_high: hi,
        ..base.clone()
    });
    rows.push(Row {
        metric: "util".into(),
        value: result.util,
        ..base.clone()
    });
    rows.push(Row {
        metric: "throughput".into(),
        value: result.throughput,
        ..base.clone()
    });
    rows
}

/// `sweep`: mean queue length over (alpha, load fraction) grids for one of
/// the extension settings, with a bell-curve plot per fraction.
pub fn run_sweep(
    n: u64,
    alpha_grid: &[f64],
    fractions: &[f64],
    setting: SweepSetting,
    load_mode: LoadMode,
    template: &SimConfig,
) -> Result<CommandOutput> {
    let sweep = sim::alpha_sweep(n, alpha_grid, fractions, setting, load_mode, template)?;
    let resolved = json!({
        "subcommand": "sweep",
        "setting": setting.as_str(),
        "n": n,
        "alpha_grid": alpha_grid,
        "fractions": fractions,
        "load_mode": load_mode.as_str(),
        "jobs": template.jobs,
        "warmup_jobs": template.warmup_jobs,
        "batches": template.batches,
        "seed": template.seed,
        "rng": sim::RNG_ALGORITHM,
    });
    let mut rows = Vec::new();
    for point in &sweep {
        let base = Row {
            setting: setting.as_str().into(),
            n: Some(n),
            alpha: Some(point.alpha),
            p_n: Some(point.p_large),
            lambda: Some(point.lambda),
            rho: Some(point.rho),
            method: SIM_METHOD.into(),
            seed: Some(template.seed),
            ..Default::default()
        };
        rows.push(Row {
            metric: "mu_threshold".into(),
            value: point.mu_threshold,
            method: match setting {
                SweepSetting::Original | SweepSetting::DurationScaled => "exact1n".into(),
                _ => "satoracle".into(),
            },
            ..base.clone()
        });
        match (&point.result, &point.error) {
            (Some(result), _) => rows.extend(sim_rows(&base, result)),
            (None, Some(reason)) => {
                eprintln!(
                    "note: {} alpha={} fraction={}: {reason}",
                    setting.as_str(),
                    point.alpha,
                    point.fraction
                );
                rows.push(Row {
                    metric: "unstable".into(),
                    value: 1.0,
                    ..base
                });
            }
            (None, None) => unreachable!("sweep row without result or error"),
        }
    }

    // One bell-curve series per load fraction.
    let mut series = Vec::new();
    for (i, &fraction) in fractions.iter().enumerate() {
        let points: Vec<(f64, f64)> = sweep
            .iter()
            .filter(|p| p.fraction == fraction)
            .filter_map(|p| p.result.as_ref().map(|r| (p.alpha, r.mean_n_sys)))
            .collect();
        let (color, marker) = PALETTE[i % PALETTE.len()];
        series.push(Series {
            label: format!("{} = {fraction}", load_mode.as_str()),
            color,
            marker,
            points,
        });
    }
    let plot = Plot {
        title: format!(
            "mean jobs in system vs alpha ({}, n = {n})",
            setting.as_str()
        ),
        x_label: "alpha".into(),
        y_label: "E[jobs in system]".into(),
        log_x: false,
        log_y: true,
        series,
    };
    Ok(CommandOutput {
        csv: csvout::render(&resolved, &rows),
        plots: vec![("queue".into(), plot.render())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rows_have_known_values() {
        let params = Canonical1n::new(2, 0.5, 1.0, 1.0).unwrap();
        let out = run_exact(&params, exact1n::DEFAULT_MATERIALIZATION_CAP).unwrap();
        assert!(out.csv.contains("mu,1.1428571428571428e0"));
        assert!(out.csv.contains("mean_delta_yd,8.1632653061224"));
        assert!(out.csv.lines().nth(1).unwrap().starts_with("setting,"));
    }

    #[test]
    fn compare_emits_ratio_rows_and_plots() {
        let family = PowerLawFamily::new(1.0, 2.0).unwrap();
        let out = run_compare(&family, &[100, 1000], 1.0, 1.0).unwrap();
        assert_eq!(out.plots.len(), 2);
        assert!(out.csv.contains("mu_ratio"));
        assert!(out.csv.contains("delta_ratio"));
        assert!(out.plots[0].1.contains("polyline"));
    }

    #[test]
    fn saturated_rows_include_state_count() {
        let config = SystemConfig::two_class(2, 0.5, 1.0, 1.0).unwrap();
        let out = run_saturated(&config).unwrap();
        assert!(out.csv.contains("states,3.0000000000000000e0"));
        assert!(out.csv.contains("mu,1.1428571428571428e0"));
    }

    #[test]
    fn resolve_canonical_requires_inputs() {
        assert!(resolve_canonical(None, None, Some(0.5), None, None).is_err());
        assert!(resolve_canonical(None, Some(4), None, None, None).is_err());
        let p = resolve_canonical(None, Some(4), Some(0.25), None, None).unwrap();
        assert_eq!(p.mu1, 1.0);
        assert_eq!(p.mun, 1.0);
    }
}
