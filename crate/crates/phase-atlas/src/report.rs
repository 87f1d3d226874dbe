//! Machine-readable reports shared by the library entry points and the CLI.

use std::time::Instant;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "WARN")]
    Warn,
}

/// One named check with a human-readable detail payload and optional
/// structured data.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

impl Check {
    pub fn pass(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check { name: name.into(), status: Status::Pass, detail: detail.into(), data: None }
    }

    pub fn fail(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check { name: name.into(), status: Status::Fail, detail: detail.into(), data: None }
    }

    pub fn warn(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check { name: name.into(), status: Status::Warn, detail: detail.into(), data: None }
    }

    pub fn with_data(mut self, data: serde_json::Value) -> Self {
        self.data = Some(data);
        self
    }
}

/// A command-level report. Exit status 0 iff no check failed.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub checks: Vec<Check>,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn new(command: impl Into<String>) -> ReportBuilder {
        ReportBuilder { command: command.into(), checks: Vec::new(), started: Instant::now() }
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn merged(command: impl Into<String>, parts: Vec<Report>) -> Report {
        let mut checks = Vec::new();
        let mut elapsed = 0;
        for p in parts {
            elapsed = elapsed.max(p.elapsed_ms);
            checks.extend(p.checks);
        }
        Report { command: command.into(), checks, elapsed_ms: elapsed }
    }
}

pub struct ReportBuilder {
    command: String,
    checks: Vec<Check>,
    started: Instant,
}

impl ReportBuilder {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn finish(self) -> Report {
        Report {
            command: self.command,
            checks: self.checks,
            elapsed_ms: self.started.elapsed().as_millis() as u64,
        }
    }
}
