//! Report data model and the two export formats.
//!
//! A run produces one `SuiteReport` per suite, each holding a flat list of
//! checks. The pass rule is uniform: a check passes iff its metric is finite
//! and `|metric| <= tolerance`. Boolean checks are encoded as metric 0 or 1
//! against tolerance 0.5 so the same rule applies. JSON output is byte-stable
//! for identical inputs: field order is fixed by the struct definitions and
//! `wall_time_ms` stays 0 unless timing was explicitly requested.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub metric: f64,
    pub tolerance: f64,
}

impl Check {
    /// Numeric check: pass iff the metric is finite and within tolerance.
    pub fn metric(name: &str, metric: f64, tolerance: f64) -> Check {
        let status = if metric.is_finite() && metric.abs() <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Check {
            name: name.to_string(),
            status,
            metric: clamp_finite(metric),
            tolerance,
        }
    }

    /// Boolean check encoded in the numeric scheme: 0 = ok, 1 = violated.
    pub fn boolean(name: &str, ok: bool) -> Check {
        Check::metric(name, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    /// A check that could not reach a verdict (e.g. a search hit its cap).
    pub fn inconclusive(name: &str, metric: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            status: Status::Inconclusive,
            metric: clamp_finite(metric),
            tolerance,
        }
    }
}

/// serde_json writes non-finite floats as `null`; store the largest finite
/// value instead so every metric stays a schema-valid number.
fn clamp_finite(metric: f64) -> f64 {
    if metric.is_finite() {
        metric
    } else {
        f64::MAX
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub wall_time_ms: u64,
}

impl SuiteReport {
    pub fn has_failure(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}

/// Reports are merged in suite-name order so concurrent or repeated runs
/// serialize identically.
pub fn merge(mut reports: Vec<SuiteReport>) -> Vec<SuiteReport> {
    reports.sort_by(|a, b| a.suite.cmp(&b.suite));
    reports
}

pub fn to_json(reports: &[SuiteReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("report serialization is infallible");
    s.push('\n');
    s
}

/// One row per check; floats use the shortest round-trip decimal form.
pub fn to_csv(reports: &[SuiteReport]) -> String {
    let mut out = String::from("suite,check,status,metric,tolerance\n");
    for r in reports {
        for c in &r.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Inconclusive => "inconclusive",
            };
            writeln!(
                out,
                "{},{},{},{},{}",
                r.suite, c.name, status, c.metric, c.tolerance
            )
            .expect("string write is infallible");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_rule_is_absolute_value_within_tolerance() {
        assert_eq!(Check::metric("a", -1e-12, 1e-10).status, Status::Pass);
        assert_eq!(Check::metric("b", 2e-10, 1e-10).status, Status::Fail);
        assert_eq!(Check::metric("c", f64::NAN, 1e-10).status, Status::Fail);
        assert_eq!(Check::metric("d", f64::INFINITY, 1e10).status, Status::Fail);
        assert_eq!(Check::boolean("e", true).status, Status::Pass);
        assert_eq!(Check::boolean("f", false).status, Status::Fail);
    }

    #[test]
    fn non_finite_metrics_serialize_as_numbers() {
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            let check = Check::metric("g", bad, 1e-10);
            assert_eq!(check.metric, f64::MAX);
            let text = serde_json::to_string(&check).unwrap();
            assert!(!text.contains("null"), "serialized: {text}");
            let back: Check = serde_json::from_str(&text).unwrap();
            assert_eq!(back.metric, f64::MAX);
        }
    }

    #[test]
    fn merge_orders_by_suite_name() {
        let mk = |name: &str| SuiteReport {
            suite: name.to_string(),
            checks: vec![],
            wall_time_ms: 0,
        };
        let merged = merge(vec![mk("spin"), mk("car"), mk("clifford")]);
        let names: Vec<&str> = merged.iter().map(|r| r.suite.as_str()).collect();
        assert_eq!(names, ["car", "clifford", "spin"]);
    }

    #[test]
    fn json_round_trips_and_is_stable() {
        let reports = vec![SuiteReport {
            suite: "demo".to_string(),
            checks: vec![
                Check::metric("m", 1.5e-13, 1e-12),
                Check::boolean("b", true),
            ],
            wall_time_ms: 0,
        }];
        let text = to_json(&reports);
        let back: Vec<SuiteReport> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, reports);
        assert_eq!(to_json(&back), text);
    }

    #[test]
    fn csv_has_one_row_per_check_plus_header() {
        let reports = vec![SuiteReport {
            suite: "demo".to_string(),
            checks: vec![Check::boolean("x", true), Check::boolean("y", false)],
            wall_time_ms: 3,
        }];
        let csv = to_csv(&reports);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().starts_with("demo,y,fail,1,0.5"));
    }
}
