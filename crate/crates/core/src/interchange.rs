//! Versioned JSON envelope shared by sequences, plans and network models.
//!
//! Every document has the shape `{"schema": "...", "kind": "...", "data": {...}}`
//! and is pretty-printed so golden files diff cleanly.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsd::FsdSequence;
use crate::rational::Fraction;

pub const SCHEMA: &str = "fsd-dilution/v1";

pub const KIND_SEQUENCE: &str = "sequence";
pub const KIND_PLAN: &str = "plan";
pub const KIND_NETWORK: &str = "network";
pub const KIND_APPROXIMATION: &str = "approximation";
pub const KIND_THROUGHPUT: &str = "throughput";

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("unsupported schema {0:?}, expected {SCHEMA:?}")]
    Schema(String),
    #[error("document kind is {found:?}, expected {expected:?}")]
    Kind { expected: String, found: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    kind: String,
    data: T,
}

pub fn to_json<T: Serialize>(kind: &str, data: &T) -> String {
    let env = Envelope {
        schema: SCHEMA.to_string(),
        kind: kind.to_string(),
        data,
    };
    let mut text = serde_json::to_string_pretty(&env).expect("interchange types serialize");
    text.push('\n');
    text
}

pub fn from_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T, InterchangeError> {
    let env: Envelope<serde_json::Value> = serde_json::from_str(text)?;
    if env.schema != SCHEMA {
        return Err(InterchangeError::Schema(env.schema));
    }
    if env.kind != kind {
        return Err(InterchangeError::Kind {
            expected: kind.to_string(),
            found: env.kind,
        });
    }
    Ok(serde_json::from_value(env.data)?)
}

/// A lattice plus the summary figures printed alongside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceDocument {
    pub cardinality: usize,
    pub max_gap: Fraction,
    pub sequence: FsdSequence,
}

impl SequenceDocument {
    pub fn new(sequence: FsdSequence) -> Self {
        SequenceDocument {
            cardinality: sequence.len(),
            max_gap: sequence.max_gap(),
            sequence,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsd::{fsd_sequence, AccuracyLevel};

    #[test]
    fn sequence_round_trip() {
        let doc = SequenceDocument::new(fsd_sequence(AccuracyLevel::new(3).unwrap()));
        let text = to_json(KIND_SEQUENCE, &doc);
        assert!(text.contains(r#""schema": "fsd-dilution/v1""#));
        assert!(text.contains(r#""kind": "fsd""#));
        let back: SequenceDocument = from_json(KIND_SEQUENCE, &text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.cardinality, 21);
    }

    #[test]
    fn envelope_checks() {
        let text = to_json(KIND_SEQUENCE, &1u32);
        assert!(matches!(
            from_json::<u32>(KIND_PLAN, &text),
            Err(InterchangeError::Kind { .. })
        ));
        let other = text.replace(SCHEMA, "fsd-dilution/v0");
        assert!(matches!(
            from_json::<u32>(KIND_SEQUENCE, &other),
            Err(InterchangeError::Schema(_))
        ));
        assert!(from_json::<u32>(KIND_SEQUENCE, "{").is_err());
    }
}
