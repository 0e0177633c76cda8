//! Machine-readable outputs of the `test` and `bench` commands.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use textsplit_core::entropy_test::{EntropyEstimate, TestOutcome};
use textsplit_core::experiment::CellResult;
use textsplit_core::multisplit::{Method, MultiSplitResult};
use textsplit_core::simgen::CovType;

/// One split of a `test` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSummary {
    pub index: usize,
    pub seed: u64,
    pub lambda: f64,
    pub p_value: f64,
    pub reject: bool,
    pub est_a: EntropyEstimate,
    pub est_b: EntropyEstimate,
    pub train_final_loss: f64,
    pub train_tokens: usize,
}

impl SplitSummary {
    pub fn new(index: usize, o: &TestOutcome) -> Self {
        Self {
            index,
            seed: o.seed,
            lambda: o.lambda,
            p_value: o.p_value,
            reject: o.reject,
            est_a: o.est_a,
            est_b: o.est_b,
            train_final_loss: o.train.final_loss,
            train_tokens: o.train.tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestReport {
    /// Every input that determines the result.
    pub config: serde_json::Value,
    pub p_values: Vec<f64>,
    pub splits: Vec<SplitSummary>,
    pub method: Method,
    pub statistic: f64,
    pub threshold: f64,
    pub rho_hat: Option<f64>,
    pub reject: bool,
    pub alpha: f64,
    pub m: usize,
}

impl TestReport {
    pub fn new(config: serde_json::Value, outcomes: &[TestOutcome], combined: &MultiSplitResult) -> Self {
        Self {
            config,
            p_values: combined.p_values.clone(),
            splits: outcomes.iter().enumerate().map(|(i, o)| SplitSummary::new(i, o)).collect(),
            method: combined.method,
            statistic: combined.statistic,
            threshold: combined.threshold,
            rho_hat: combined.rho_hat,
            reject: combined.reject,
            alpha: combined.alpha,
            m: combined.m,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format {other:?} (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellParams {
    pub cov: CovType,
    pub s: f64,
    pub v: usize,
    pub t: usize,
    pub n: usize,
    pub delta: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub m: usize,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodRate {
    pub rate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellReport {
    pub params: CellParams,
    pub methods: BTreeMap<Method, MethodRate>,
    pub reps: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failure_reasons: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub cells: Vec<CellReport>,
}

fn round_delta(x: f64) -> f64 {
    // θ_A − θ_B picks up rounding noise; grid deltas have few digits.
    (x * 1e9).round() / 1e9
}

impl CellReport {
    pub fn new(r: &CellResult, timings: bool) -> Self {
        let s = &r.cell.sim;
        Self {
            params: CellParams {
                cov: s.cov_type,
                s: s.s_high,
                v: s.v,
                t: s.t_len,
                n: s.n_docs,
                delta: round_delta(s.delta()),
                theta_a: s.theta_a,
                theta_b: s.theta_b,
                m: r.cell.m,
                alpha: r.cell.alpha,
                seed: r.seed,
            },
            methods: r
                .rates
                .iter()
                .map(|(&m, e)| (m, MethodRate { rate: e.rate, se: e.se }))
                .collect(),
            reps: r.reps,
            failures: r.failures,
            failure_reasons: r.failure_reasons.clone(),
            wall_time_secs: timings.then_some(r.wall_time_secs),
        }
    }
}

impl BenchReport {
    pub fn new(results: &[CellResult], config: Option<serde_json::Value>, timings: bool) -> Self {
        Self {
            config,
            cells: results.iter().map(|r| CellReport::new(r, timings)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub const CSV_HEADER: [&'static str; 20] = [
        "cov", "s", "v", "t", "n", "delta", "theta_a", "theta_b", "m", "alpha", "reps", "failures", "single_rate",
        "single_se", "cauchy_rate", "cauchy_se", "mpt1_rate", "mpt1_se", "mpt2_rate", "mpt2_se",
    ];

    /// Fixed columns; rates and standard errors with three decimals, blank
    /// for methods that were not run.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER).expect("in-memory write");
        for c in &self.cells {
            let p = &c.params;
            let mut row = vec![
                p.cov.to_string(),
                p.s.to_string(),
                p.v.to_string(),
                p.t.to_string(),
                p.n.to_string(),
                p.delta.to_string(),
                p.theta_a.to_string(),
                p.theta_b.to_string(),
                p.m.to_string(),
                p.alpha.to_string(),
                c.reps.to_string(),
                c.failures.to_string(),
            ];
            for m in Method::ALL {
                match c.methods.get(&m) {
                    Some(r) => {
                        row.push(format!("{:.3}", r.rate));
                        row.push(format!("{:.3}", r.se));
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Write `results` to `path` as JSON or CSV.
pub fn emit_report(
    results: &[CellResult],
    path: &Path,
    format: ReportFormat,
    config: Option<serde_json::Value>,
    timings: bool,
) -> std::io::Result<()> {
    if results.is_empty() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "no results to report"));
    }
    let report = BenchReport::new(results, config, timings);
    let body = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    f.flush()
}
