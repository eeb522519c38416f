//! Validation reports shared by every checking operation.
//!
//! A check on a finite grid can only ever say "no violation found on this
//! grid"; reports therefore carry the worst residual and where it occurred,
//! so a verdict is reproducible and auditable.

use serde::Serialize;

/// Outcome of a single named check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Worst residual observed; the residual convention is per-check and
    /// documented by the operation that produced it.
    pub worst_residual: f64,
    /// Human-readable location of the worst residual, when meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_at: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, worst_residual: f64) -> Self {
        Check {
            name: name.into(),
            pass,
            worst_residual,
            worst_at: None,
            detail: None,
        }
    }

    pub fn at(mut self, loc: impl Into<String>) -> Self {
        self.worst_at = Some(loc.into());
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

/// A bundle of named checks; passes iff every check passes.
#[derive(Debug, Clone, Serialize, Default)]
pub struct ValidationReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport {
            pass: true,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass = self.pass && check.pass;
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Worst residual across all checks.
    pub fn worst_residual(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.worst_residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Running maximum that remembers where the maximum occurred.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub value: f64,
    pub location: Option<String>,
}

impl WorstCase {
    pub fn new() -> Self {
        WorstCase {
            value: f64::NEG_INFINITY,
            location: None,
        }
    }

    pub fn observe(&mut self, value: f64, location: impl FnOnce() -> String) {
        if value > self.value {
            self.value = value;
            self.location = Some(location());
        }
    }

    /// Turn into a check that passes iff the maximum stayed at or below `tol`.
    /// An empty observation set passes with residual 0.
    pub fn into_check(self, name: impl Into<String>, tol: f64) -> Check {
        let (value, at) = if self.value == f64::NEG_INFINITY {
            (0.0, None)
        } else {
            (self.value, self.location)
        };
        let mut c = Check::new(name, value <= tol, value);
        c.worst_at = at;
        c
    }
}

impl Default for WorstCase {
    fn default() -> Self {
        Self::new()
    }
}
