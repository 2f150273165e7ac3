//! The report printed by every command.

use std::collections::BTreeMap;

use coarse_core::certificate::Guarantee;
use coarse_core::{Certificate, Error};
use serde::Serialize;
use serde_json::Value;

/// Exit status and rendered streams of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    /// SHA-256 of every input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    /// `pass`, `fail`, or the error kind.
    pub status: String,
    pub guarantees: Vec<Guarantee>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn new(command: Vec<String>, inputs: BTreeMap<String, String>) -> Self {
        Report {
            command,
            inputs,
            status: "pass".into(),
            guarantees: Vec::new(),
            result: Value::Null,
            error: None,
            wall_time_ms: None,
        }
    }

    pub fn complete(&mut self, cert: Certificate, result: Value) {
        let pass = cert.all_pass();
        self.guarantees = cert.guarantees;
        self.result = result;
        if self.error.is_none() {
            self.status = if pass { "pass" } else { "fail" }.into();
        }
    }

    pub fn fail(&mut self, e: &Error) {
        let (message, witness) = match e {
            Error::ContractViolation { message, witness } => (message.clone(), Some(witness.clone())),
            Error::InvalidInput(m) | Error::ResourceLimit(m) | Error::Internal(m) => (m.clone(), None),
        };
        self.status = e.kind().into();
        self.error = Some(ErrorInfo { kind: e.kind().into(), message, witness });
    }

    /// 0 when every guarantee passed, 2 on a failed guarantee or contract
    /// violation, 1 on invalid input or a resource limit, 70 on an internal error.
    pub fn exit_code(&self) -> i32 {
        match self.status.as_str() {
            "pass" => 0,
            "fail" | "contract-violation" => 2,
            "invalid-input" | "resource-limit" => 1,
            _ => 70,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_summary(&self) -> String {
        let mut out = format!("status: {}\n", self.status);
        if let Some(e) = &self.error {
            out += &format!("error: {} ({})\n", e.message, e.kind);
            if let Some(w) = &e.witness {
                out += &format!("witness: {w}\n");
            }
        }
        for g in &self.guarantees {
            out += &format!(
                "[{}] {}: measured {} claimed {}{}\n",
                if g.pass { "PASS" } else { "FAIL" },
                g.name,
                g.measured,
                g.claimed,
                g.witness.as_ref().map(|w| format!(" ({w})")).unwrap_or_default()
            );
        }
        if let Some(t) = self.wall_time_ms {
            out += &format!("wall time: {t:.1} ms\n");
        }
        out
    }
}
