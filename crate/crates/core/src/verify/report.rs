//! Machine-readable run reports: one JSON object per line, starting with a
//! header that carries the schema version.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Verdict {
    Proved {
        k: usize,
    },
    /// No violation within `k` frames; induction, if tried, did not close.
    SafeUpTo {
        k: usize,
    },
    /// `depth` counts circuit frames, `steps` BIP interactions.
    Cex {
        depth: usize,
        steps: usize,
    },
    ResourceLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitSize {
    pub inputs: usize,
    pub latches: usize,
    pub ands: usize,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header {
        schema: u32,
        tool: String,
        version: String,
        command: String,
        model: String,
        seed: u64,
    },
    Circuit {
        original: CircuitSize,
        reduced: CircuitSize,
    },
    Property {
        name: String,
        verdict: Verdict,
        millis: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vcd: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace: Option<String>,
    },
    Simulation {
        steps: usize,
        /// First step at which each violated property fails.
        violations: Vec<(String, usize)>,
    },
    Summary {
        exit_code: i32,
    },
}

impl Record {
    pub fn header(command: &str, model: &str, seed: u64) -> Record {
        Record::Header {
            schema: SCHEMA_VERSION,
            tool: "bipc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            model: model.into(),
            seed,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("report does not start with a header")]
    MissingHeader,
    #[error("unsupported schema version {0}")]
    Schema(u32),
}

pub fn to_json_lines(records: &[Record]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

pub fn parse_report(text: &str) -> Result<Vec<Record>, ReportError> {
    let records = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            serde_json::from_str(l).map_err(|source| ReportError::Json {
                line: k + 1,
                source,
            })
        })
        .collect::<Result<Vec<Record>, _>>()?;
    match records.first() {
        Some(Record::Header { schema, .. }) if *schema == SCHEMA_VERSION => Ok(records),
        Some(Record::Header { schema, .. }) => Err(ReportError::Schema(*schema)),
        _ => Err(ReportError::MissingHeader),
    }
}
