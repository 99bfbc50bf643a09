use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported but not asserted, e.g. a run outside the hypotheses of an
    /// estimate.
    Warn,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Warn => "WARN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub key: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn new(key: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Check {
            key: key.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    pub fn warn(key: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            key: key.into(),
            status: Status::Warn,
            detail: detail.into(),
        }
    }

    /// Pass when `ok`, otherwise a warning.
    pub fn soft(key: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        let mut c = Check::new(key, true, detail);
        if !ok {
            c.status = Status::Warn;
        }
        c
    }
}

/// Everything one command leaves behind in the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub checks: Vec<Check>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub results: serde_json::Value,
}

impl Summary {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Pass).count()
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.key.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let pad = width - c.key.chars().count();
            out.push_str(&format!("{}{}  {}  {}\n", c.key, " ".repeat(pad), c.status, c.detail));
        }
        let warned = self.checks.iter().filter(|c| c.status == Status::Warn).count();
        out.push_str(&format!("{}/{} checks pass", self.passed(), self.checks.len()));
        if warned > 0 {
            out.push_str(&format!(", {warned} warn"));
        }
        out.push('\n');
        out
    }
}
