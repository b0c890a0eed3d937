//! Grid specifications for sweep axes.
//!
//! Three forms are accepted:
//! * `start:stop:log`: decade-spaced points from `start` up to `stop`
//!   (both positive), matching log-x figure grids: `1e2:1e5:log` gives
//!   `[100, 1000, 10000, 100000]`.
//! * `start:stop:step`: arithmetic grid with positive `step`, endpoint
//!   included when it lands within rounding.
//! * `a,b,c`: an explicit comma-separated list.

use crate::{CliError, Result};

/// Refuse absurd grids instead of allocating them.
const MAX_POINTS: usize = 100_000;

pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(CliError::Grid("empty spec".into()));
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Grid(format!(
                "'{spec}' must be start:stop:log or start:stop:step"
            )));
        }
        let start = parse_number(parts[0])?;
        let stop = parse_number(parts[1])?;
        if parts[2].eq_ignore_ascii_case("log") {
            log_grid(start, stop)
        } else {
            arithmetic_grid(start, stop, parse_number(parts[2])?)
        }
    } else {
        spec.split(',').map(parse_number).collect()
    }
}

/// Parse a grid of server counts; every point must be a positive integer.
pub fn parse_n_grid(spec: &str) -> Result<Vec<u64>> {
    parse_grid(spec)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v <= u64::MAX as f64 && (v - v.round()).abs() < 1e-6 * v.max(1.0) {
                Ok(v.round() as u64)
            } else {
                Err(CliError::Grid(format!("'{v}' is not a positive integer n")))
            }
        })
        .collect()
}

fn parse_number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Grid(format!("'{s}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Grid(format!("'{s}' is not finite")))
    }
}

fn log_grid(start: f64, stop: f64) -> Result<Vec<f64>> {
    if start <= 0.0 || stop <= 0.0 {
        return Err(CliError::Grid("log grid needs positive endpoints".into()));
    }
    if stop < start {
        return Err(CliError::Grid("log grid stop below start".into()));
    }
    let decades = (stop / start).log10();
    if !decades.is_finite() || decades > MAX_POINTS as f64 - 2.0 {
        return Err(CliError::Grid("grid too large".into()));
    }
    let mut points = Vec::new();
    let mut exponent = 0;
    loop {
        let v = start * 10f64.powi(exponent);
        if v > stop * (1.0 + 1e-9) {
            break;
        }
        points.push(v);
        exponent += 1;
    }
    Ok(points)
}

fn arithmetic_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 {
        return Err(CliError::Grid("step must be positive".into()));
    }
    if stop < start {
        return Err(CliError::Grid("stop below start".into()));
    }
    let count = ((stop - start) / step).floor();
    if !count.is_finite() || count > MAX_POINTS as f64 - 2.0 {
        return Err(CliError::Grid("grid too large".into()));
    }
    let mut points = Vec::new();
    let mut k = 0u64;
    loop {
        let v = start + k as f64 * step;
        if v > stop + 1e-9 * step {
            break;
        }
        points.push(v);
        k += 1;
    }
    Ok(points)
}
