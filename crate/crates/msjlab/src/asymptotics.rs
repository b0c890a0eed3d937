//! Large-n growth rates for power-law job mixes `p_n = c·n^(-alpha)`, and
//! convergence tables comparing them against the exact formulas.
//!
//! Three regimes of the joint limit `n -> inf`, `p_n -> 0` behave
//! differently. When n-server jobs carry the dominant load (alpha < 1) and
//! in the balanced case (alpha = 1), throughput comes from 1-server jobs
//! served while an n-server job blocks the head of the line; when 1-server
//! jobs dominate (alpha > 1), throughput approaches the all-servers-busy
//! rate `n·mu1`. The formulas here drop the vanishing corrections except
//! where the 1-server-dominated throughput keeps its explicit lower-order
//! terms.

use crate::exact1n::{self, Canonical1n};
use crate::model::PowerLawFamily;
use crate::Result;

/// Asymptotic regime of a decay family.
///
/// The log-boundary and general tags cover declared non-power-law sequences
/// around `p_n = 1/(n ln n)`; power-law families always classify into the
/// first three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `p_n` decays slower than `1/n`: load dominated by n-server jobs.
    NServerDominated,
    /// `p_n = c/n`: both job types carry comparable load.
    Balanced,
    /// `p_n = c/n^alpha` with `alpha > 1`: load dominated by 1-server jobs.
    OneServerDominatedPolynomial,
    /// `p_n` comparable to `1/(n ln n)`: both throughput formulas matter.
    OneServerDominatedLogBoundary,
    /// Other declared `p_n = o(1/n)` sequences.
    OneServerDominatedGeneral,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NServerDominated => "n-server-dominated",
            Regime::Balanced => "balanced",
            Regime::OneServerDominatedPolynomial => "1-server-dominated",
            Regime::OneServerDominatedLogBoundary => "1-server-dominated-log-boundary",
            Regime::OneServerDominatedGeneral => "1-server-dominated-general",
        }
    }
}

/// Classify a power-law family by its exponent. Total and deterministic.
pub fn classify_regime(family: &PowerLawFamily) -> Regime {
    if family.alpha < 1.0 {
        Regime::NServerDominated
    } else if family.alpha == 1.0 {
        Regime::Balanced
    } else {
        // Also satisfies p_n = o(1/(n ln n)), the fast-decay side of the
        // general 1-server-dominated split.
        Regime::OneServerDominatedPolynomial
    }
}

/// Throughput growth rate when n-server jobs dominate or balance the load:
/// `mu1 / (p_n · ln(1/p_n))`.
pub fn throughput_asym_n_dominated(p_n: f64, mu1: f64) -> f64 {
    mu1 / (p_n * (1.0 / p_n).ln())
}

/// Throughput in the polynomial 1-server-dominated regime, keeping the
/// stated lower-order terms: `mu1·(n - n^(2-alpha)·(ln n + mu1/mun - 1))`.
pub fn throughput_asym_one_server_dominated(n: u64, alpha: f64, mu1: f64, mun: f64) -> f64 {
    let nf = n as f64;
    mu1 * (nf - nf.powf(2.0 - alpha) * (nf.ln() + mu1 / mun - 1.0))
}

/// Relative-completions growth rate in the n-server-dominated and balanced
/// regimes: `1/(2 p_n)`. Independent of the balanced-regime constant.
pub fn delta_asym_n_dominated(p_n: f64) -> f64 {
    1.0 / (2.0 * p_n)
}

/// Relative-completions growth rate in the polynomial 1-server-dominated
/// regime: `(1/2)·n^(2-alpha)·ln²n`.
pub fn delta_asym_one_server_dominated(n: u64, alpha: f64) -> f64 {
    let nf = n as f64;
    0.5 * nf.powf(2.0 - alpha) * nf.ln().powi(2)
}

/// General 1-server-dominated throughput when `p_n = o(1/(n ln n))`: the
/// all-servers-busy rate `n·mu1`.
pub fn throughput_asym_sub_log_boundary(n: u64, mu1: f64) -> f64 {
    n as f64 * mu1
}

/// General 1-server-dominated throughput in the window between `1/(n ln n)`
/// and `1/n`: `mu1/(p_n · ln n)`.
pub fn throughput_asym_above_log_boundary(n: u64, p_n: f64, mu1: f64) -> f64 {
    mu1 / (p_n * (n as f64).ln())
}

/// At `p_n = θ(1/(n ln n))` both mechanisms contribute; returns both
/// candidate values (all-servers-busy, head-of-line drain).
pub fn throughput_asym_log_boundary(n: u64, p_n: f64, mu1: f64) -> (f64, f64) {
    (
        throughput_asym_sub_log_boundary(n, mu1),
        throughput_asym_above_log_boundary(n, p_n, mu1),
    )
}

/// Leading-order throughput for the family's regime.
pub fn throughput_asym(n: u64, family: &PowerLawFamily, mu1: f64, mun: f64) -> Result<f64> {
    let p_n = family.p_n(n)?;
    Ok(match classify_regime(family) {
        Regime::NServerDominated | Regime::Balanced => throughput_asym_n_dominated(p_n, mu1),
        _ => throughput_asym_one_server_dominated(n, family.alpha, mu1, mun),
    })
}

/// Leading-order relative-completions expectation for the family's regime.
pub fn delta_asym(n: u64, family: &PowerLawFamily) -> Result<f64> {
    let p_n = family.p_n(n)?;
    Ok(match classify_regime(family) {
        Regime::NServerDominated | Regime::Balanced => delta_asym_n_dominated(p_n),
        _ => delta_asym_one_server_dominated(n, family.alpha),
    })
}

/// One comparison point: exact values against the regime-correct asymptotic
/// formulas, with their ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub p_n: f64,
    pub exact_mu: f64,
    pub asym_mu: f64,
    pub mu_ratio: f64,
    pub exact_delta: f64,
    pub asym_delta: f64,
    pub delta_ratio: f64,
}

/// Evaluate exact and asymptotic throughput and relative completions along
/// an ascending grid of server counts.
pub fn convergence_table(
    family: &PowerLawFamily,
    n_grid: &[u64],
    mu1: f64,
    mun: f64,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let p_n = family.p_n(n)?;
        let params = Canonical1n::new(n, p_n, mu1, mun)?;
        let exact = exact1n::evaluate(&params, 0)?;
        let asym_mu = throughput_asym(n, family, mu1, mun)?;
        let asym_delta = delta_asym(n, family)?;
        rows.push(ConvergenceRow {
            n,
            p_n,
            exact_mu: exact.mu,
            asym_mu,
            mu_ratio: exact.mu / asym_mu,
            exact_delta: exact.mean_delta_yd,
            asym_delta,
            delta_ratio: exact.mean_delta_yd / asym_delta,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(c: f64, alpha: f64) -> PowerLawFamily {
        PowerLawFamily::new(c, alpha).unwrap()
    }

    #[test]
    fn classification_is_total_on_power_laws() {
        assert_eq!(classify_regime(&family(1.0, 0.5)), Regime::NServerDominated);
        assert_eq!(classify_regime(&family(1.0, 1.0)), Regime::Balanced);
        assert_eq!(classify_regime(&family(2.5, 1.0)), Regime::Balanced);
        assert_eq!(
            classify_regime(&family(1.0, 2.0)),
            Regime::OneServerDominatedPolynomial
        );
        assert_eq!(classify_regime(&family(1.0, 0.0)), Regime::NServerDominated);
    }

    #[test]
    fn throughput_spot_values() {
        // alpha = 0.5 at n = 10^4: p_n = 0.01.
        let v = throughput_asym(10_000, &family(1.0, 0.5), 1.0, 1.0).unwrap();
        assert!((v - 1.0 / (0.01 * 100.0f64.ln())).abs() < 1e-9);
        assert!((v - 21.71472409516259).abs() < 1e-6);

        // alpha = 2 at n = 100: n - ln n.
        let v = throughput_asym(100, &family(1.0, 2.0), 1.0, 1.0).unwrap();
        assert!((v - (100.0 - 100.0f64.ln())).abs() < 1e-9);
        assert!((v - 95.39482981388309).abs() < 1e-6);

        // Balanced at n = 10^6: n / ln n.
        let v = throughput_asym(1_000_000, &family(1.0, 1.0), 1.0, 1.0).unwrap();
        assert!((v - 1e6 / 1e6f64.ln()).abs() < 1e-6);
        assert!((v - 72382.41365).abs() < 1e-3);
    }

    #[test]
    fn delta_spot_values() {
        let v = delta_asym(10_000, &family(1.0, 0.5)).unwrap();
        assert!((v - 50.0).abs() < 1e-9);

        let v = delta_asym(100, &family(1.0, 2.0)).unwrap();
        assert!((v - 0.5 * 100.0f64.ln().powi(2)).abs() < 1e-9);
        assert!((v - 10.603796).abs() < 1e-5);

        let v = delta_asym(1000, &family(1.0, 1.0)).unwrap();
        assert!((v - 500.0).abs() < 1e-9);
    }

    #[test]
    fn balanced_delta_ignores_coefficient() {
        // Families with equal p_n at a given n give equal values.
        let n = 1000u64;
        let f1 = family(1.0, 1.0);
        let f2 = family(1000.0 * 0.001, 1.0);
        assert_eq!(delta_asym(n, &f1).unwrap(), delta_asym(n, &f2).unwrap());
    }

    #[test]
    fn one_server_dominated_stays_below_capacity() {
        for &n in &[3u64, 10, 100, 10_000, 1_000_000] {
            for &alpha in &[1.1, 1.5, 2.0, 3.0] {
                for &(mu1, mun) in &[(1.0, 1.0), (10.0, 1.0), (1.0, 10.0)] {
                    let v = throughput_asym_one_server_dominated(n, alpha, mu1, mun);
                    assert!(v < n as f64 * mu1, "n={n} alpha={alpha}");
                }
            }
        }
    }

    #[test]
    fn log_boundary_returns_both_candidates() {
        let n = 1_000_000u64;
        let p_n = 1.0 / (n as f64 * (n as f64).ln());
        let (busy, drain) = throughput_asym_log_boundary(n, p_n, 1.0);
        assert_eq!(busy, 1e6);
        assert!((drain - 1.0 / (p_n * (n as f64).ln())).abs() < 1e-6);
    }

    #[test]
    fn convergence_ratio_shrinks_one_server_dominated() {
        let rows = convergence_table(
            &family(1.0, 2.0),
            &[100, 1_000, 10_000, 100_000, 1_000_000],
            1.0,
            1.0,
        )
        .unwrap();
        for pair in rows.windows(2) {
            let gap_before = (pair[0].mu_ratio - 1.0).abs();
            let gap_after = (pair[1].mu_ratio - 1.0).abs();
            assert!(
                gap_after < gap_before,
                "n = {}: {gap_after} !< {gap_before}",
                pair[1].n
            );
        }
    }

    #[test]
    fn convergence_delta_ratio_balanced() {
        let rows = convergence_table(&family(1.0, 1.0), &[1_000, 1_000_000], 1.0, 1.0).unwrap();
        let early = (rows[0].delta_ratio - 1.0).abs();
        let late = (rows[1].delta_ratio - 1.0).abs();
        assert!(late < early, "{late} !< {early}");
    }

    #[test]
    fn single_point_grid() {
        let rows = convergence_table(&family(1.0, 0.5), &[100], 1.0, 1.0).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].mu_ratio > 0.0 && rows[0].delta_ratio > 0.0);
    }
}
