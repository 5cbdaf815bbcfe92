use std::fmt;

use lmt_core::Error;
use serde_json::{json, Value};

/// A data or state error with a machine-readable diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub violations: Vec<String>,
    pub hint: Option<String>,
}

impl Failure {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
            violations: Vec::new(),
            hint: None,
        }
    }

    pub fn syntax(message: impl Into<String>) -> Self {
        Failure::new("syntax", message)
    }

    pub fn document(message: impl Into<String>) -> Self {
        Failure::new("document", message)
    }

    pub fn io(path: &str, err: std::io::Error) -> Self {
        Failure::new("io", format!("{path}: {err}"))
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Failure::new("not_found", message)
    }

    pub fn state(message: impl Into<String>, hint: &str) -> Self {
        Failure::new("state", message).with_hint(hint)
    }

    pub fn with_hint(mut self, hint: &str) -> Self {
        self.hint = Some(hint.to_string());
        self
    }

    pub fn to_json(&self) -> Value {
        let mut error = json!({"kind": self.kind, "message": self.message});
        if !self.violations.is_empty() {
            error["violations"] = json!(self.violations);
        }
        if let Some(h) = &self.hint {
            error["hint"] = json!(h);
        }
        json!({ "error": error })
    }

    /// HTTP status for the failure class.
    pub fn status(&self) -> u16 {
        match self.kind {
            "not_found" => 404,
            "agreement" | "pivot" | "configuration" | "state" => 409,
            _ => 400,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut out = Failure::new(e.kind(), e.to_string());
        match &e {
            Error::InvalidTree(vs) => out.violations = vs.iter().map(ToString::to_string).collect(),
            Error::Agreement(_) => {
                out.hint = Some("run relabel, or use mode partial or disagree".into());
            }
            Error::Configuration(_) => {
                out.hint = Some("supply embedded trees or set lambda to 1".into());
            }
            _ => {}
        }
        out
    }
}
