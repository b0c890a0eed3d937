//! System configurations: job classes, server counts, and power-law families.

use serde::{Deserialize, Serialize};

use crate::numeric::positive;
use crate::{Error, Result};

/// Tolerance for "class probabilities sum to 1".
pub const PROB_SUM_TOL: f64 = 1e-12;

/// One job class: how many servers a job of this class occupies, the
/// probability an arriving job belongs to the class, and its exponential
/// service rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobClass {
    /// Servers occupied simultaneously for the whole service, `1..=n`.
    pub need: u64,
    /// Probability an arriving job is of this class.
    pub prob: f64,
    /// Exponential service rate (1/time).
    pub rate: f64,
}

/// A multiserver-job system: `n` identical servers and a finite class mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: u64,
    pub classes: Vec<JobClass>,
}

/// Power-law decay family `p_n = c·n^(-alpha)`, clamped to (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFamily {
    pub c: f64,
    pub alpha: f64,
}

impl PowerLawFamily {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        if !positive(c) {
            return Err(Error::InvalidConfig(format!(
                "power-law coefficient must be positive, got {c}"
            )));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "power-law exponent must be nonnegative, got {alpha}"
            )));
        }
        Ok(Self { c, alpha })
    }

    /// Evaluate `p_n = c·n^(-alpha)`.
    ///
    /// Errors if the value falls outside (0, 1) for this `n`, since a
    /// probability of exactly 0 or 1 degenerates the two-class system.
    pub fn p_n(&self, n: u64) -> Result<f64> {
        let p = self.c * (n as f64).powf(-self.alpha);
        if p > 0.0 && p < 1.0 {
            Ok(p)
        } else {
            Err(Error::InvalidConfig(format!(
                "p_n = {p} outside (0,1) for c = {}, alpha = {}, n = {n}",
                self.c, self.alpha
            )))
        }
    }
}

/// JSON config document: a system plus an optional declared decay family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub n: u64,
    pub classes: Vec<JobClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<PowerLawFamily>,
}

/// Parse and validate a JSON config document.
pub fn parse_config(input: &str) -> Result<ConfigDoc> {
    let doc: ConfigDoc = serde_json::from_str(input).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        Error::ConfigParse {
            offset: byte_offset(input, line, column),
            line,
            column,
            message: e.to_string(),
        }
    })?;
    let mut system = SystemConfig {
        n: doc.n,
        classes: doc.classes,
    };
    system.classes.sort_by_key(|c| c.need);
    validate_config(&system)?;
    if let Some(f) = doc.family {
        PowerLawFamily::new(f.c, f.alpha)?;
    }
    Ok(ConfigDoc {
        n: system.n,
        classes: system.classes,
        family: doc.family,
    })
}

fn byte_offset(input: &str, line: usize, column: usize) -> usize {
    // serde_json reports 1-based line/column; column counts bytes within the line.
    let mut offset = 0;
    for (i, l) in input.split('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    input.len()
}

impl SystemConfig {
    /// Build the canonical 1-and-n two-class system: 1-server jobs with
    /// probability `1 - p_n` and rate `mu1`, n-server jobs with probability
    /// `p_n` and rate `mun`. The degenerate endpoints `p_n ∈ {0, 1}` collapse
    /// to a single class so sweeps over the decay exponent can touch them.
    pub fn two_class(n: u64, p_n: f64, mu1: f64, mun: f64) -> Result<Self> {
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
        let classes = if p_n == 0.0 {
            vec![JobClass {
                need: 1,
                prob: 1.0,
                rate: mu1,
            }]
        } else if p_n == 1.0 {
            vec![JobClass {
                need: n,
                prob: 1.0,
                rate: mun,
            }]
        } else if n == 1 {
            return Err(Error::InvalidConfig(
                "n = 1 makes the 1-server and n-server classes collide".into(),
            ));
        } else {
            vec![
                JobClass {
                    need: 1,
                    prob: 1.0 - p_n,
                    rate: mu1,
                },
                JobClass {
                    need: n,
                    prob: p_n,
                    rate: mun,
                },
            ]
        };
        let config = Self { n, classes };
        validate_config(&config)?;
        Ok(config)
    }

    /// True when this is the canonical two-class system with needs `{1, n}`
    /// (or a degenerate single class at either endpoint).
    pub fn is_canonical_1n(&self) -> bool {
        match self.classes.as_slice() {
            [a, b] => (a.need == 1 && b.need == self.n) || (b.need == 1 && a.need == self.n),
            [only] => only.need == 1 || only.need == self.n,
            _ => false,
        }
    }

    /// Mean demanded work per job, `Σ prob·need/rate` (server·time).
    pub fn mean_work_per_job(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.prob * c.need as f64 / c.rate)
            .sum()
    }
}

/// Check every invariant of a [`SystemConfig`]; returns the config untouched
/// if all hold, otherwise the first violation.
pub fn validate_config(config: &SystemConfig) -> Result<&SystemConfig> {
    if config.n < 1 {
        return Err(Error::InvalidConfig("server count must be >= 1".into()));
    }
    if config.classes.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one job class required".into(),
        ));
    }
    let mut prob_sum = 0.0;
    for class in &config.classes {
        if class.need < 1 {
            return Err(Error::InvalidConfig(format!(
                "class need must be >= 1, got {}",
                class.need
            )));
        }
        if class.need > config.n {
            return Err(Error::InvalidConfig(format!(
                "need exceeds server count: need {} with n = {}",
                class.need, config.n
            )));
        }
        if !positive(class.rate) {
            return Err(Error::InvalidConfig(format!(
                "service rate must be positive, got {}",
                class.rate
            )));
        }
        if !(0.0..=1.0).contains(&class.prob) {
            return Err(Error::InvalidConfig(format!(
                "class probability {} outside [0,1]",
                class.prob
            )));
        }
        prob_sum += class.prob;
    }
    for pair in config.classes.windows(2) {
        if pair[0].need == pair[1].need {
            return Err(Error::InvalidConfig(format!(
                "duplicate class need {}",
                pair[0].need
            )));
        }
    }
    let mut sorted: Vec<u64> = config.classes.iter().map(|c| c.need).collect();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != config.classes.len() {
        return Err(Error::InvalidConfig("duplicate class need".into()));
    }
    if (prob_sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidConfig(format!(
            "probabilities sum to {prob_sum}"
        )));
    }
    Ok(config)
}

/// Fraction of system capacity demanded at arrival rate `lambda`:
/// `lambda · Σ_c prob_c·need_c/rate_c / n` (demanded work rate over capacity).
pub fn offered_load_fraction(lambda: f64, config: &SystemConfig) -> Result<f64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "arrival rate must be nonnegative, got {lambda}"
        )));
    }
    validate_config(config)?;
    Ok(lambda * config.mean_work_per_job() / config.n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_class_direct_construction() {
        let cfg = SystemConfig::two_class(2, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(cfg.n, 2);
        assert_eq!(
            cfg.classes,
            vec![
                JobClass {
                    need: 1,
                    prob: 0.5,
                    rate: 1.0
                },
                JobClass {
                    need: 2,
                    prob: 0.5,
                    rate: 1.0
                },
            ]
        );
        assert!(cfg.is_canonical_1n());
    }

    #[test]
    fn two_class_degenerate_collapse() {
        let cfg = SystemConfig::two_class(10, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            cfg.classes,
            vec![JobClass {
                need: 10,
                prob: 1.0,
                rate: 1.0
            }]
        );
        let cfg = SystemConfig::two_class(10, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(
            cfg.classes,
            vec![JobClass {
                need: 1,
                prob: 1.0,
                rate: 2.0
            }]
        );
    }

    #[test]
    fn two_class_alpha_sweep_point() {
        // alpha = 0.8 point of the n = 10 sweep.
        let p = 10f64.powf(-0.8);
        let cfg = SystemConfig::two_class(10, p, 1.0, 1.0).unwrap();
        assert_eq!(cfg.classes[1].need, 10);
        assert!((cfg.classes[1].prob - p).abs() < 1e-15);
        assert!((cfg.classes[0].prob - (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn two_class_rejects_bad_inputs() {
        assert!(SystemConfig::two_class(10, -0.1, 1.0, 1.0).is_err());
        assert!(SystemConfig::two_class(10, 1.1, 1.0, 1.0).is_err());
        assert!(SystemConfig::two_class(10, 0.5, 0.0, 1.0).is_err());
        assert!(SystemConfig::two_class(10, 0.5, 1.0, -1.0).is_err());
        assert!(SystemConfig::two_class(0, 0.5, 1.0, 1.0).is_err());
        // n = 1 makes the two needs collide; only the endpoints collapse.
        assert!(SystemConfig::two_class(1, 0.5, 1.0, 1.0).is_err());
        assert!(SystemConfig::two_class(1, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn validate_reports_first_violation() {
        let bad = SystemConfig {
            n: 10,
            classes: vec![
                JobClass {
                    need: 1,
                    prob: 0.5,
                    rate: 1.0,
                },
                JobClass {
                    need: 10,
                    prob: 0.6,
                    rate: 1.0,
                },
            ],
        };
        let err = validate_config(&bad).unwrap_err().to_string();
        assert!(err.contains("probabilities sum to 1.1"), "{err}");

        let bad = SystemConfig {
            n: 10,
            classes: vec![JobClass {
                need: 11,
                prob: 1.0,
                rate: 1.0,
            }],
        };
        let err = validate_config(&bad).unwrap_err().to_string();
        assert!(err.contains("need exceeds server count"), "{err}");

        let bad = SystemConfig {
            n: 10,
            classes: vec![
                JobClass {
                    need: 2,
                    prob: 0.5,
                    rate: 1.0,
                },
                JobClass {
                    need: 2,
                    prob: 0.5,
                    rate: 1.0,
                },
            ],
        };
        let err = validate_config(&bad).unwrap_err().to_string();
        assert!(err.contains("duplicate class need"), "{err}");
    }

    #[test]
    fn offered_load_examples() {
        // Single class occupying the whole system: fraction = lambda/rate.
        let whole = SystemConfig {
            n: 10,
            classes: vec![JobClass {
                need: 10,
                prob: 1.0,
                rate: 1.0,
            }],
        };
        assert!((offered_load_fraction(0.5, &whole).unwrap() - 0.5).abs() < 1e-15);

        let cfg = SystemConfig::two_class(10, 0.1, 1.0, 1.0).unwrap();
        let f = offered_load_fraction(1.0, &cfg).unwrap();
        assert!((f - 0.19).abs() < 1e-15, "{f}");

        assert_eq!(offered_load_fraction(0.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn parse_config_roundtrip_and_errors() {
        let doc = parse_config(
            r#"{"n": 10, "classes": [
                {"need": 10, "prob": 0.1, "rate": 1.0},
                {"need": 1, "prob": 0.9, "rate": 1.0}
            ], "family": {"c": 1.0, "alpha": 1.0}}"#,
        )
        .unwrap();
        // Classes come back sorted by need.
        assert_eq!(doc.classes[0].need, 1);
        assert_eq!(doc.classes[1].need, 10);
        assert!(doc.family.is_some());

        let err = parse_config("{\"n\": 10,").unwrap_err();
        match err {
            Error::ConfigParse { offset, .. } => assert!(offset > 0),
            other => panic!("expected parse error, got {other}"),
        }

        // Valid JSON, invalid config.
        let err = parse_config(r#"{"n": 10, "classes": []}"#).unwrap_err();
        assert!(err.to_string().contains("at least one job class"));
    }

    #[test]
    fn power_law_clamps() {
        let fam = PowerLawFamily::new(1.0, 2.0).unwrap();
        assert!((fam.p_n(10).unwrap() - 0.01).abs() < 1e-15);
        // c so large the value leaves (0,1).
        let fam = PowerLawFamily::new(50.0, 1.0).unwrap();
        assert!(fam.p_n(10).is_err());
        assert!(PowerLawFamily::new(0.0, 1.0).is_err());
        assert!(PowerLawFamily::new(1.0, -0.5).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // offered_load_fraction is linear in lambda.
            #[test]
            fn load_fraction_linear_in_lambda(
                lambda in 0.0..50.0f64,
                p_n in 0.01..0.99f64,
                n in 2u64..100,
            ) {
                let cfg = SystemConfig::two_class(n, p_n, 1.0, 1.0).unwrap();
                let f1 = offered_load_fraction(lambda, &cfg).unwrap();
                let f2 = offered_load_fraction(2.0 * lambda, &cfg).unwrap();
                prop_assert!((f2 - 2.0 * f1).abs() <= 1e-12 * f2.abs().max(1.0));
            }

            // two_class output always validates for interior p_n.
            #[test]
            fn two_class_always_valid(
                p_n in 0.001..0.999f64,
                n in 2u64..1000,
                mu1 in 0.01..100.0f64,
                mun in 0.01..100.0f64,
            ) {
                let cfg = SystemConfig::two_class(n, p_n, mu1, mun).unwrap();
                prop_assert!(validate_config(&cfg).is_ok());
            }
        }
    }
}
