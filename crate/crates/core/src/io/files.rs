use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_version, from_json, to_canonical_json, IoError, SCHEMA_VERSION};
use crate::decisions::{DecisionTranscript, TranscriptEntry};
use crate::emm::{EmmEvent, EmmTrace};
use crate::mapping::{MappedValue, ValueMapping};
use crate::model::NodeId;
use crate::tree::{TreeEdit, TreeTrace};

pub const EMM_TRACE_KIND: &str = "ends_means_trace";
pub const TREE_TRACE_KIND: &str = "value_tree_trace";

fn load<T: serde::de::DeserializeOwned>(text: &str, version: impl Fn(&T) -> u32) -> Result<T, IoError> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(n) = v.get("schema_version").and_then(serde_json::Value::as_u64) {
        check_version(u32::try_from(n).unwrap_or(u32::MAX))?;
    }
    let doc: T = from_json(text)?;
    check_version(version(&doc))?;
    Ok(doc)
}

/// Concept-to-value mapping. A `null` entry drops the concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fundamental: Option<String>,
    pub entries: BTreeMap<String, Option<MappedValue>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub negation_labels: BTreeMap<String, String>,
}

impl MappingFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        load(text, |d: &MappingFile| d.schema_version)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_canonical_json(self)
    }

    pub fn from_mapping(m: &ValueMapping) -> Self {
        MappingFile {
            schema_version: SCHEMA_VERSION,
            fundamental: m.fundamental.as_ref().map(NodeId::to_string),
            entries: m
                .entries
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            negation_labels: m
                .negation_labels
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        }
    }

    pub fn to_mapping(&self) -> ValueMapping {
        ValueMapping {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (NodeId::from(k.as_str()), v.clone()))
                .collect(),
            negation_labels: self
                .negation_labels
                .iter()
                .map(|(k, v)| (NodeId::from(k.as_str()), v.clone()))
                .collect(),
            fundamental: self.fundamental.as_deref().map(NodeId::from),
        }
    }
}

/// Prepared answers keyed by request id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptFile {
    pub schema_version: u32,
    pub answers: BTreeMap<String, String>,
}

impl ScriptFile {
    pub fn new(answers: BTreeMap<String, String>) -> Self {
        ScriptFile {
            schema_version: SCHEMA_VERSION,
            answers,
        }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        load(text, |d: &ScriptFile| d.schema_version)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_canonical_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptFile {
    pub schema_version: u32,
    pub entries: Vec<TranscriptEntry>,
}

impl TranscriptFile {
    pub fn from_transcript(t: &DecisionTranscript) -> Self {
        TranscriptFile {
            schema_version: SCHEMA_VERSION,
            entries: t.entries().to_vec(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        load(text, |d: &TranscriptFile| d.schema_version)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_canonical_json(self)
    }

    pub fn to_transcript(&self) -> Result<DecisionTranscript, IoError> {
        DecisionTranscript::new(self.entries.clone())
            .map_err(|e| IoError::Structure(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmmTraceFile {
    pub kind: String,
    pub schema_version: u32,
    pub events: Vec<EmmEvent>,
}

impl EmmTraceFile {
    pub fn from_trace(t: &EmmTrace) -> Self {
        EmmTraceFile {
            kind: EMM_TRACE_KIND.into(),
            schema_version: SCHEMA_VERSION,
            events: t.events.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let f = load(text, |d: &EmmTraceFile| d.schema_version)?;
        if f.kind != EMM_TRACE_KIND {
            return Err(IoError::WrongKind {
                expected: EMM_TRACE_KIND.into(),
                found: f.kind,
            });
        }
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_canonical_json(self)
    }

    pub fn to_trace(&self) -> EmmTrace {
        EmmTrace {
            events: self.events.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeTraceFile {
    pub kind: String,
    pub schema_version: u32,
    pub edits: Vec<TreeEdit>,
}

impl TreeTraceFile {
    pub fn from_trace(t: &TreeTrace) -> Self {
        TreeTraceFile {
            kind: TREE_TRACE_KIND.into(),
            schema_version: SCHEMA_VERSION,
            edits: t.edits.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let f = load(text, |d: &TreeTraceFile| d.schema_version)?;
        if f.kind != TREE_TRACE_KIND {
            return Err(IoError::WrongKind {
                expected: TREE_TRACE_KIND.into(),
                found: f.kind,
            });
        }
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_canonical_json(self)
    }

    pub fn to_trace(&self) -> TreeTrace {
        TreeTrace {
            edits: self.edits.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decisions::{AnswerSource, DecisionKind};
    use crate::mapping::PrefixPolicy;

    #[test]
    fn mapping_file_round_trip() {
        let text = r#"{
            "schema_version": 1,
            "fundamental": "dw",
            "entries": {
                "dw": {"label": "valuing democracy and welfare", "prefix": "verbatim"},
                "peace": {"label": "peace"},
                "noise": null
            },
            "negation_labels": {"peace": "valuing war"}
        }"#;
        let f = MappingFile::parse(text).unwrap();
        let m = f.to_mapping();
        assert_eq!(m.entries[&NodeId::from("noise")], None);
        assert_eq!(
            m.entries[&NodeId::from("peace")].as_ref().unwrap().prefix,
            PrefixPolicy::AutoValuing
        );
        assert_eq!(MappingFile::from_mapping(&m), f);
    }

    #[test]
    fn transcript_rejects_duplicates() {
        let e = TranscriptEntry {
            id: "vt-001-000000000000".into(),
            kind: DecisionKind::IndependenceQuestion,
            answer: "dependent".into(),
            source: AnswerSource::Script,
        };
        let f = TranscriptFile {
            schema_version: 1,
            entries: vec![e.clone(), e],
        };
        let text = f.to_json().unwrap();
        assert!(TranscriptFile::parse(&text).unwrap().to_transcript().is_err());
    }

    #[test]
    fn trace_kind_is_checked() {
        let t = TreeTraceFile::from_trace(&TreeTrace::default()).to_json().unwrap();
        assert!(matches!(
            EmmTraceFile::parse(&t),
            Err(IoError::Json(_) | IoError::WrongKind { .. })
        ));
        assert!(TreeTraceFile::parse(&t).is_ok());
    }
}
