//! Published JSON schemas for every emitted artifact, and validation
//! against them.

use std::sync::OnceLock;

use jsonschema::Validator;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemaKind {
    Output,
    Edl,
    Overlay,
    Report,
}

impl SchemaKind {
    pub const ALL: [SchemaKind; 4] = [
        SchemaKind::Output,
        SchemaKind::Edl,
        SchemaKind::Overlay,
        SchemaKind::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::Output => "output",
            SchemaKind::Edl => "edl",
            SchemaKind::Overlay => "overlay",
            SchemaKind::Report => "report",
        }
    }

    /// Raw schema text as shipped in `schemas/`.
    pub fn source(self) -> &'static str {
        match self {
            SchemaKind::Output => include_str!("../schemas/output.schema.json"),
            SchemaKind::Edl => include_str!("../schemas/edl.schema.json"),
            SchemaKind::Overlay => include_str!("../schemas/overlay.schema.json"),
            SchemaKind::Report => include_str!("../schemas/report.schema.json"),
        }
    }

    fn validator(self) -> &'static Validator {
        static CELLS: [OnceLock<Validator>; 4] = [const { OnceLock::new() }; 4];
        let i = self as usize;
        CELLS[i].get_or_init(|| {
            let schema: Value = serde_json::from_str(self.source()).expect("bundled schema is JSON");
            jsonschema::validator_for(&schema).expect("bundled schema compiles")
        })
    }
}

/// Validates a parsed document; the error lists up to five violations with
/// their instance paths.
pub fn validate_value(kind: SchemaKind, doc: &Value) -> Result<()> {
    let errors: Vec<String> = kind
        .validator()
        .iter_errors(doc)
        .take(5)
        .map(|e| format!("{} at `{}`", e, e.instance_path))
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::Schema {
            kind: kind.name().into(),
            message: errors.join("; "),
        })
    }
}

pub fn validate_str(kind: SchemaKind, text: &str) -> Result<()> {
    let doc: Value = serde_json::from_str(text)?;
    validate_value(kind, &doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_schemas_compile() {
        for k in SchemaKind::ALL {
            let _ = k.validator();
        }
    }

    #[test]
    fn output_rejects_bad_kit() {
        let bad = serde_json::json!({"metadata": {}, "frame": {}});
        assert!(validate_value(SchemaKind::Output, &bad).is_err());
    }
}
