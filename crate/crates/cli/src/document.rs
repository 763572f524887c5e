use std::path::Path;

use polycycle::Tolerances;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;

/// Where the numbers came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Input {
    pub path: String,
    pub sha256: String,
    /// Parameter point after defaults and `--set` overrides.
    pub parameters: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format: u32,
    pub tool: String,
    pub command: String,
    pub input: Option<Input>,
    /// Tolerances every number in the payload was computed under.
    pub tolerances: Tolerances,
    pub payload: serde_json::Value,
}

impl ResultDocument {
    pub fn new(command: &str, input: Option<Input>, tolerances: Tolerances, payload: impl Serialize) -> Self {
        Self {
            format: FORMAT_VERSION,
            tool: format!("polycycle {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            input,
            tolerances,
            // NaN and infinities become null.
            payload: serde_json::to_value(payload).unwrap_or(serde_json::Value::Null),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents hold only JSON-representable data");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn input_for(path: &Path, bytes: &[u8], names: &[String], mu: &[f64]) -> Input {
    Input {
        path: path.display().to_string(),
        sha256: sha256_hex(bytes),
        parameters: names.iter().cloned().zip(mu.iter().copied()).collect(),
    }
}
