//! Structured verification records shared by the oracle suites.

use serde::Serialize;

/// One verification check: an analytic value, the independently computed
/// numeric value, and the absolute error against the pass threshold.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub params: serde_json::Value,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(
        check_id: impl Into<String>,
        params: serde_json::Value,
        analytic: f64,
        numeric: f64,
        tol: f64,
    ) -> Self {
        let abs_err = (analytic - numeric).abs();
        CheckRecord {
            check_id: check_id.into(),
            params,
            analytic,
            numeric,
            abs_err,
            pass: abs_err <= tol,
        }
    }

    /// A boolean check reported through the same schema: numeric is 1.0 when
    /// the condition held, analytic is the expected 1.0.
    pub fn flag(check_id: impl Into<String>, params: serde_json::Value, ok: bool) -> Self {
        CheckRecord {
            check_id: check_id.into(),
            params,
            analytic: 1.0,
            numeric: if ok { 1.0 } else { 0.0 },
            abs_err: if ok { 0.0 } else { 1.0 },
            pass: ok,
        }
    }
}

/// A named batch of checks.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub all_pass: bool,
}

impl Report {
    pub fn new(suite: impl Into<String>, seed: u64, checks: Vec<CheckRecord>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        Report {
            suite: suite.into(),
            seed,
            checks,
            all_pass,
        }
    }
}
