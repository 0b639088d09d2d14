//! Verification reports: named checks with a status, a measured value and
//! an optional tolerance.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// `None` when the measurement is not a finite number.
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn within(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        let status = if measured <= tolerance { Status::Pass } else { Status::Fail };
        Check { name: name.into(), status, measured: finite(measured), tolerance: Some(tolerance) }
    }

    /// An exact check; `measured` records the offending quantity.
    pub fn exact(name: impl Into<String>, ok: bool, measured: f64) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Check { name: name.into(), status, measured: finite(measured), tolerance: Some(0.0) }
    }

    pub fn info(name: impl Into<String>, measured: f64) -> Self {
        Check { name: name.into(), status: Status::Info, measured: finite(measured), tolerance: None }
    }

    /// A check whose computation failed.
    pub fn error(name: impl Into<String>) -> Self {
        Check { name: name.into(), status: Status::Fail, measured: None, tolerance: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
}

/// 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), format_number)
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report { command: command.into(), parameters: BTreeMap::new(), checks: Vec::new(), elapsed_secs: 0.0 }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Records `result` as a check, or a failing check named after the error.
    pub fn push_result(&mut self, name: &str, result: crate::Result<Check>) {
        match result {
            Ok(c) => self.push(c),
            Err(e) => self.push(Check::error(format!("{name}: {e}"))),
        }
    }

    /// Appends another report's checks under `prefix/` and its parameters under `prefix.`.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for (k, v) in other.parameters {
            self.parameters.insert(format!("{prefix}.{k}"), v);
        }
        for mut c in other.checks {
            c.name = format!("{prefix}/{}", c.name);
            self.checks.push(c);
        }
    }

    /// Sorts checks by name and records the time since `start`.
    pub fn finish(mut self, start: Instant) -> Self {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        self.elapsed_secs = start.elapsed().as_secs_f64();
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.command.to_string();
        for (k, v) in &self.parameters {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  {:<4}  {:<width$}  measured {}  tolerance {}",
                c.status.as_str(),
                c.name,
                format_opt(c.measured),
                format_opt(c.tolerance),
            );
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict} ({} checks, {} s)", self.checks.len(), format_number(self.elapsed_secs));
        out
    }

    /// Rows `(command, check, status, measured, tolerance)` without the header.
    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        self.checks
            .iter()
            .map(|c| {
                [
                    self.command.clone(),
                    c.name.clone(),
                    c.status.as_str().to_string(),
                    c.measured.map(format_number).unwrap_or_default(),
                    c.tolerance.map(format_number).unwrap_or_default(),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_and_ordering() {
        let mut r = Report::new("demo").param("k", 3);
        r.push(Check::within("b", 1e-13, 1e-12));
        r.push(Check::info("a", 2.0));
        let r = r.finish(Instant::now());
        assert_eq!(r.checks[0].name, "a");
        assert!(r.passed());
        let mut bad = r.clone();
        bad.push(Check::within("c", f64::NAN, 1.0));
        assert!(!bad.passed());
        assert_eq!(bad.checks[2].measured, None);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_number(std::f64::consts::SQRT_2), "1.4142135623730951e0");
        assert_eq!(format_number(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
