//! Fixed-schema CSV emission.
//!
//! Every subcommand writes the same long-format table so downstream tooling
//! never guesses at columns:
//!
//! `setting,n,alpha,p_n,mu1,mun,lambda,rho,metric,value,ci_low,ci_high,method,seed`
//!
//! Floats are printed with 17 significant digits so reruns are
//! byte-identical and round-trip exactly. A leading `#` comment line echoes
//! the fully resolved run parameters for provenance.

use std::fmt::Write as _;

pub const HEADER: &str =
    "setting,n,alpha,p_n,mu1,mun,lambda,rho,metric,value,ci_low,ci_high,method,seed";

/// One output row; `None` fields print empty.
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub setting: String,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub p_n: Option<f64>,
    pub mu1: Option<f64>,
    pub mun: Option<f64>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub method: String,
    pub seed: Option<u64>,
}

/// 17-significant-digit float form: enough to reproduce any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render the full document: provenance comment, header, rows.
pub fn render(resolved: &serde_json::Value, rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# resolved: {resolved}");
    let _ = writeln!(out, "{HEADER}");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.setting,
            opt_u64(row.n),
            opt_f64(row.alpha),
            opt_f64(row.p_n),
            opt_f64(row.mu1),
            opt_f64(row.mun),
            opt_f64(row.lambda),
            opt_f64(row.rho),
            row.metric,
            fmt_f64(row.value),
            opt_f64(row.ci_low),
            opt_f64(row.ci_high),
            row.method,
            opt_u64(row.seed),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_17_digits_and_roundtrips() {
        let cases = [8.0 / 7.0, 4.0 / 49.0, 1e-300, -0.0, 12345.678];
        for v in cases {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
        assert_eq!(fmt_f64(8.0 / 7.0), "1.1428571428571428e0");
    }

    #[test]
    fn rows_render_with_empty_fields() {
        let row = Row {
            setting: "canonical".into(),
            n: Some(2),
            metric: "mu".into(),
            value: 8.0 / 7.0,
            method: "exact1n".into(),
            ..Default::default()
        };
        let doc = render(&serde_json::json!({"n": 2}), &[row]);
        let mut lines = doc.lines();
        assert!(lines.next().unwrap().starts_with("# resolved: "));
        assert_eq!(lines.next().unwrap(), HEADER);
        let data = lines.next().unwrap();
        assert_eq!(data, "canonical,2,,,,,,,mu,1.1428571428571428e0,,,exact1n,");
    }
}
