//! Machine-readable verification records shared by every construction.

use serde::{Deserialize, Serialize};

/// One verified (or skipped) check: an identifier, the bound it was tested
/// against, the measured value, and the outcome. Skips carry a reason and
/// never count as passes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<String>,
}

impl CheckRecord {
    pub fn pass(id: &str, detail: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            detail: detail.into(),
            bound: None,
            measured: None,
            passed: Some(true),
            skip_reason: None,
        }
    }

    pub fn outcome(
        id: &str,
        detail: impl Into<String>,
        bound: impl ToString,
        measured: impl ToString,
        passed: bool,
    ) -> Self {
        CheckRecord {
            id: id.into(),
            detail: detail.into(),
            bound: Some(bound.to_string()),
            measured: Some(measured.to_string()),
            passed: Some(passed),
            skip_reason: None,
        }
    }

    pub fn skip(id: &str, detail: impl Into<String>, reason: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            detail: detail.into(),
            bound: None,
            measured: None,
            passed: None,
            skip_reason: Some(reason.into()),
        }
    }

    pub fn is_pass(&self) -> bool {
        self.passed == Some(true)
    }

    pub fn is_fail(&self) -> bool {
        self.passed == Some(false)
    }
}

/// A named collection of checks.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new() -> Self {
        Report { checks: vec![] }
    }

    pub fn push(&mut self, c: CheckRecord) {
        self.checks.push(c);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| !c.is_fail())
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| c.is_fail()).collect()
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }
}
