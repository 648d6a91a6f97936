//! Concept to value translation: cognitive map in, value cognitive map out.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Digraph;
use crate::model::{CognitiveMap, InfluenceArc, Node, NodeId, ValueCognitiveMap};
use crate::validate::{validate_cognitive_map, validate_vcm, ValidationReport};

pub const VALUING_PREFIX: &str = "valuing ";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixPolicy {
    /// Label becomes `"valuing " + label`.
    #[default]
    AutoValuing,
    /// Label is already phrased as a value and kept as written.
    Verbatim,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappedValue {
    pub label: String,
    #[serde(default)]
    pub prefix: PrefixPolicy,
}

impl MappedValue {
    pub fn valuing(label: impl Into<String>) -> Self {
        MappedValue {
            label: label.into(),
            prefix: PrefixPolicy::AutoValuing,
        }
    }

    pub fn verbatim(label: impl Into<String>) -> Self {
        MappedValue {
            label: label.into(),
            prefix: PrefixPolicy::Verbatim,
        }
    }

    pub fn value_label(&self) -> String {
        match self.prefix {
            PrefixPolicy::AutoValuing => format!("{VALUING_PREFIX}{}", self.label),
            PrefixPolicy::Verbatim => self.label.clone(),
        }
    }
}

/// Analyst-authored translation of every concept: a value, or `None` to drop it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueMapping {
    pub entries: BTreeMap<NodeId, Option<MappedValue>>,
    /// Display labels for negated values, keyed by concept id.
    pub negation_labels: BTreeMap<NodeId, String>,
    pub fundamental: Option<NodeId>,
}

impl ValueMapping {
    /// Maps every concept to its own label under the `valuing` prefix.
    pub fn identity(cm: &CognitiveMap) -> Self {
        ValueMapping {
            entries: cm
                .nodes()
                .iter()
                .map(|n| (n.id.clone(), Some(MappedValue::valuing(n.label.clone()))))
                .collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("cognitive map is invalid:\n{0}")]
    InvalidCognitiveMap(ValidationReport),
    #[error("mapping has no entry for {}", join(.0))]
    MissingEntries(Vec<NodeId>),
    #[error("mapping has entries for unknown concepts {}", join(.0))]
    UnknownEntries(Vec<NodeId>),
    #[error("empty value label for {0}")]
    EmptyValueLabel(NodeId),
    #[error("no fundamental value given")]
    NoFundamental,
    #[error("fundamental {0} is not a concept of the map")]
    UnknownFundamental(NodeId),
    #[error("fundamental {0} is dropped by the mapping")]
    FundamentalDropped(NodeId),
    #[error("mapping disconnects map: stranded components {}", components(.0))]
    Disconnects(Vec<Vec<NodeId>>),
    #[error("mapped value map has an invalid fundamental:\n{0}")]
    InvalidFundamental(ValidationReport),
}

fn join(ids: &[NodeId]) -> String {
    ids.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
}

fn components(parts: &[Vec<NodeId>]) -> String {
    parts
        .iter()
        .map(|c| format!("{{{}}}", join(c)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Translate a cognitive map into a value cognitive map.
///
/// Dropped concepts take their incident arcs with them; nothing is
/// contracted through them. Surviving arcs keep their signs.
pub fn apply_mapping(
    cm: &CognitiveMap,
    mapping: &ValueMapping,
    fundamental: &NodeId,
) -> Result<ValueCognitiveMap, MappingError> {
    let report = validate_cognitive_map(cm);
    if !report.is_valid() {
        return Err(MappingError::InvalidCognitiveMap(report));
    }
    let concepts = cm.node_ids();
    let missing: Vec<NodeId> = concepts
        .iter()
        .filter(|id| !mapping.entries.contains_key(id))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(MappingError::MissingEntries(missing));
    }
    let unknown: Vec<NodeId> = mapping
        .entries
        .keys()
        .filter(|id| !concepts.contains(id))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(MappingError::UnknownEntries(unknown));
    }
    if !concepts.contains(fundamental) {
        return Err(MappingError::UnknownFundamental(fundamental.clone()));
    }

    let mut nodes = Vec::new();
    for concept in cm.nodes() {
        if let Some(value) = &mapping.entries[&concept.id] {
            if value.label.trim().is_empty() {
                return Err(MappingError::EmptyValueLabel(concept.id.clone()));
            }
            nodes.push(Node::new(concept.id.clone(), value.value_label()));
        }
    }
    let kept: BTreeSet<&NodeId> = nodes.iter().map(|n| &n.id).collect();
    if !kept.contains(fundamental) {
        return Err(MappingError::FundamentalDropped(fundamental.clone()));
    }
    let arcs: Vec<InfluenceArc> = cm
        .arcs()
        .iter()
        .filter(|a| kept.contains(&a.from) && kept.contains(&a.to))
        .cloned()
        .collect();

    let g = Digraph::new(
        kept.iter().map(|id| (*id).clone()),
        arcs.iter().map(|a| (a.from.clone(), a.to.clone())),
    )
    .expect("arcs filtered to kept nodes");
    let parts = g.weak_components();
    if parts.len() > 1 {
        return Err(MappingError::Disconnects(parts));
    }

    let negation_labels = mapping
        .negation_labels
        .iter()
        .filter(|(id, _)| kept.contains(id))
        .map(|(id, l)| (id.clone(), l.clone()))
        .collect();
    let vcm = ValueCognitiveMap::new(nodes, arcs, fundamental.clone())
        .with_negation_labels(negation_labels);
    let report = validate_vcm(&vcm);
    if !report.is_valid() {
        return Err(MappingError::InvalidFundamental(report));
    }
    Ok(vcm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InfluenceArc as A, Sign};

    fn chain() -> CognitiveMap {
        CognitiveMap::new(
            vec![
                Node::new("a", "a"),
                Node::new("b", "b"),
                Node::new("c", "c"),
            ],
            vec![A::positive("a", "b"), A::negative("b", "c")],
        )
    }

    #[test]
    fn identity_mapping_keeps_shape() {
        let cm = chain();
        let vcm = apply_mapping(&cm, &ValueMapping::identity(&cm), &"c".into()).unwrap();
        assert_eq!(vcm.arcs(), cm.arcs());
        assert_eq!(vcm.label(&"a".into()), Some("valuing a"));
        assert_eq!(vcm.fundamental().as_str(), "c");
    }

    #[test]
    fn verbatim_labels_are_kept() {
        let cm = chain();
        let mut m = ValueMapping::identity(&cm);
        m.entries
            .insert("a".into(), Some(MappedValue::verbatim("rationality")));
        let vcm = apply_mapping(&cm, &m, &"c".into()).unwrap();
        assert_eq!(vcm.label(&"a".into()), Some("rationality"));
    }

    #[test]
    fn dropping_the_middle_of_a_path_disconnects() {
        let cm = chain();
        let mut m = ValueMapping::identity(&cm);
        m.entries.insert("b".into(), None);
        let err = apply_mapping(&cm, &m, &"c".into()).unwrap_err();
        assert_eq!(
            err,
            MappingError::Disconnects(vec![vec!["a".into()], vec!["c".into()]])
        );
        assert!(err.to_string().starts_with("mapping disconnects map"));
    }

    #[test]
    fn dropping_a_leaf_removes_its_arcs() {
        let cm = chain();
        let mut m = ValueMapping::identity(&cm);
        m.entries.insert("a".into(), None);
        let vcm = apply_mapping(&cm, &m, &"c".into()).unwrap();
        assert_eq!(vcm.nodes().len(), 2);
        assert_eq!(vcm.arcs(), &[A::new("b", "c", Sign::Negative)]);
    }

    #[test]
    fn fundamental_errors() {
        let cm = chain();
        let mut m = ValueMapping::identity(&cm);
        assert!(matches!(
            apply_mapping(&cm, &m, &"b".into()),
            Err(MappingError::InvalidFundamental(_))
        ));
        assert_eq!(
            apply_mapping(&cm, &m, &"zz".into()),
            Err(MappingError::UnknownFundamental("zz".into()))
        );
        m.entries.insert("c".into(), None);
        assert_eq!(
            apply_mapping(&cm, &m, &"c".into()),
            Err(MappingError::FundamentalDropped("c".into()))
        );
    }

    #[test]
    fn mapping_must_be_total() {
        let cm = chain();
        let mut m = ValueMapping::identity(&cm);
        m.entries.remove(&NodeId::from("a"));
        assert_eq!(
            apply_mapping(&cm, &m, &"c".into()),
            Err(MappingError::MissingEntries(vec!["a".into()]))
        );
    }
}
