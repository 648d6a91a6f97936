use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{check_version, from_json, to_canonical_json, IoError, SCHEMA_VERSION};
use crate::model::{
    CognitiveMap, EndsMeansMap, InfluenceArc, LiteralKey, Node, NodeId, Provenance, Sign, Valence,
    ValueCognitiveMap, ValueLiteral, ValueTree, ValueTreeNode,
};

pub const NEGATION_LABELS_KEY: &str = "negation_labels";
pub const DUAL_VALENCE_KEY: &str = "dual_valence";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    CognitiveMap,
    ValueCognitiveMap,
    EndsMeansMap,
    ValueTree,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::CognitiveMap => "cognitive_map",
            MapKind::ValueCognitiveMap => "value_cognitive_map",
            MapKind::EndsMeansMap => "ends_means_map",
            MapKind::ValueTree => "value_tree",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocLiteral {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvenanceKind {
    Original,
    Merged,
    Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocProvenance {
    pub kind: ProvenanceKind,
    pub sources: Vec<DocLiteral>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocNode {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valence: Option<Valence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<DocProvenance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocArc {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
}

/// On-disk form shared by all four map kinds.
///
/// `metadata` is open: keys this crate does not interpret are accepted and
/// ignored, so documents can carry annotations such as source notes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub kind: MapKind,
    pub schema_version: u32,
    pub nodes: Vec<DocNode>,
    pub arcs: Vec<DocArc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fundamental: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, Value>,
}

/// A parsed map of any kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyMap {
    Cognitive(CognitiveMap),
    Value(ValueCognitiveMap),
    EndsMeans(EndsMeansMap),
    Tree(ValueTree),
}

impl AnyMap {
    pub fn kind(&self) -> MapKind {
        match self {
            AnyMap::Cognitive(_) => MapKind::CognitiveMap,
            AnyMap::Value(_) => MapKind::ValueCognitiveMap,
            AnyMap::EndsMeans(_) => MapKind::EndsMeansMap,
            AnyMap::Tree(_) => MapKind::ValueTree,
        }
    }

    /// Run the validator for this kind of map.
    pub fn validate(&self) -> crate::validate::ValidationReport {
        use crate::validate::{validate_cognitive_map, validate_emm, validate_tree, validate_vcm};
        match self {
            AnyMap::Cognitive(m) => validate_cognitive_map(m),
            AnyMap::Value(m) => validate_vcm(m),
            AnyMap::EndsMeans(m) => validate_emm(m),
            AnyMap::Tree(m) => validate_tree(m),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            AnyMap::Cognitive(m) => m.nodes().len(),
            AnyMap::Value(m) => m.nodes().len(),
            AnyMap::EndsMeans(m) => m.len(),
            AnyMap::Tree(m) => m.len(),
        }
    }

    pub fn to_document(&self) -> MapDocument {
        match self {
            AnyMap::Cognitive(m) => MapDocument::from_cognitive_map(m),
            AnyMap::Value(m) => MapDocument::from_value_map(m),
            AnyMap::EndsMeans(m) => MapDocument::from_ends_means_map(m),
            AnyMap::Tree(m) => MapDocument::from_value_tree(m),
        }
    }
}

fn structure(msg: impl Into<String>) -> IoError {
    IoError::Structure(msg.into())
}

fn doc_literal(l: &ValueLiteral) -> DocLiteral {
    DocLiteral {
        id: l.id(),
        label: l.label.clone(),
    }
}

fn influence_arcs(arcs: &[InfluenceArc]) -> Vec<DocArc> {
    arcs.iter()
        .map(|a| DocArc {
            from: a.from.to_string(),
            to: a.to.to_string(),
            sign: Some(a.sign),
        })
        .collect()
}

fn plain_nodes(nodes: &[Node]) -> Vec<DocNode> {
    nodes
        .iter()
        .map(|n| DocNode {
            id: n.id.to_string(),
            label: n.label.clone(),
            valence: None,
            provenance: None,
        })
        .collect()
}

impl MapDocument {
    fn new(kind: MapKind, mut nodes: Vec<DocNode>, mut arcs: Vec<DocArc>) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        arcs.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        MapDocument {
            kind,
            schema_version: SCHEMA_VERSION,
            nodes,
            arcs,
            fundamental: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let probe: Value = serde_json::from_str(text)?;
        if let Some(v) = probe.get("schema_version").and_then(Value::as_u64) {
            check_version(u32::try_from(v).unwrap_or(u32::MAX))?;
        }
        let doc: MapDocument = from_json(text)?;
        check_version(doc.schema_version)?;
        Ok(doc)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_canonical_json(self)
    }

    fn expect(&self, kind: MapKind) -> Result<(), IoError> {
        if self.kind != kind {
            return Err(IoError::WrongKind {
                expected: kind.to_string(),
                found: self.kind.to_string(),
            });
        }
        Ok(())
    }

    fn signed_arcs(&self) -> Result<Vec<InfluenceArc>, IoError> {
        self.arcs
            .iter()
            .map(|a| match a.sign {
                Some(sign) => Ok(InfluenceArc::new(a.from.as_str(), a.to.as_str(), sign)),
                None => Err(structure(format!("arc {} -> {} has no sign", a.from, a.to))),
            })
            .collect()
    }

    fn unsigned_arcs(&self) -> Result<Vec<(String, String)>, IoError> {
        self.arcs
            .iter()
            .map(|a| match a.sign {
                None => Ok((a.from.clone(), a.to.clone())),
                Some(_) => Err(structure(format!(
                    "arc {} -> {} is signed in a {} document",
                    a.from, a.to, self.kind
                ))),
            })
            .collect()
    }

    fn plain(&self) -> Result<Vec<Node>, IoError> {
        self.nodes
            .iter()
            .map(|n| {
                if n.valence.is_some() || n.provenance.is_some() {
                    return Err(structure(format!(
                        "node {} has literal fields in a {} document",
                        n.id, self.kind
                    )));
                }
                Ok(Node::new(n.id.as_str(), n.label.as_str()))
            })
            .collect()
    }

    fn fundamental(&self) -> Result<&str, IoError> {
        self.fundamental
            .as_deref()
            .ok_or_else(|| structure(format!("{} document has no fundamental", self.kind)))
    }

    fn metadata_as<T: serde::de::DeserializeOwned + Default>(
        &self,
        key: &str,
    ) -> Result<T, IoError> {
        match self.metadata.get(key) {
            None => Ok(T::default()),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| structure(format!("metadata.{key}: {e}"))),
        }
    }

    pub fn from_cognitive_map(cm: &CognitiveMap) -> Self {
        MapDocument::new(
            MapKind::CognitiveMap,
            plain_nodes(cm.nodes()),
            influence_arcs(cm.arcs()),
        )
    }

    pub fn to_cognitive_map(&self) -> Result<CognitiveMap, IoError> {
        self.expect(MapKind::CognitiveMap)?;
        if self.fundamental.is_some() {
            return Err(structure("cognitive_map document names a fundamental"));
        }
        Ok(CognitiveMap::new(self.plain()?, self.signed_arcs()?))
    }

    pub fn from_value_map(vcm: &ValueCognitiveMap) -> Self {
        let mut doc = MapDocument::new(
            MapKind::ValueCognitiveMap,
            plain_nodes(vcm.nodes()),
            influence_arcs(vcm.arcs()),
        );
        doc.fundamental = Some(vcm.fundamental().to_string());
        if !vcm.negation_labels().is_empty() {
            doc.metadata.insert(
                NEGATION_LABELS_KEY.into(),
                serde_json::to_value(vcm.negation_labels()).expect("string map"),
            );
        }
        doc
    }

    pub fn to_value_map(&self) -> Result<ValueCognitiveMap, IoError> {
        self.expect(MapKind::ValueCognitiveMap)?;
        let negation: BTreeMap<NodeId, String> = self.metadata_as(NEGATION_LABELS_KEY)?;
        Ok(
            ValueCognitiveMap::new(self.plain()?, self.signed_arcs()?, self.fundamental()?)
                .with_negation_labels(negation),
        )
    }

    pub fn from_ends_means_map(emm: &EndsMeansMap) -> Self {
        let nodes = emm
            .literals()
            .map(|l| DocNode {
                id: l.id(),
                valence: Some(l.valence()),
                label: l.label,
                provenance: None,
            })
            .collect();
        let arcs = emm
            .arcs()
            .iter()
            .map(|(e, m)| DocArc {
                from: e.id(),
                to: m.id(),
                sign: None,
            })
            .collect();
        let mut doc = MapDocument::new(MapKind::EndsMeansMap, nodes, arcs);
        doc.fundamental = Some(emm.fundamental().id());
        if !emm.dual_valence().is_empty() {
            doc.metadata.insert(
                DUAL_VALENCE_KEY.into(),
                serde_json::to_value(emm.dual_valence()).expect("string set"),
            );
        }
        doc
    }

    pub fn to_ends_means_map(&self) -> Result<EndsMeansMap, IoError> {
        self.expect(MapKind::EndsMeansMap)?;
        let mut literals = Vec::new();
        for n in &self.nodes {
            if n.provenance.is_some() {
                return Err(structure(format!("literal {} has a provenance", n.id)));
            }
            let key = LiteralKey::parse(&n.id);
            if n.valence.is_some_and(|v| v != key.valence) {
                return Err(structure(format!(
                    "literal {} disagrees with its valence field",
                    n.id
                )));
            }
            literals.push(ValueLiteral::new(key, n.label.as_str()));
        }
        let arcs = self
            .unsigned_arcs()?
            .into_iter()
            .map(|(e, m)| (LiteralKey::parse(&e), LiteralKey::parse(&m)));
        let dual: BTreeSet<NodeId> = self.metadata_as(DUAL_VALENCE_KEY)?;
        Ok(
            EndsMeansMap::new(literals, arcs, LiteralKey::parse(self.fundamental()?))
                .with_dual_valence(dual),
        )
    }

    pub fn from_value_tree(tree: &ValueTree) -> Self {
        let nodes = tree
            .nodes()
            .map(|n| {
                let sources = n.provenance.sources().iter().map(doc_literal).collect();
                let provenance = match &n.provenance {
                    Provenance::Original(_) => DocProvenance {
                        kind: ProvenanceKind::Original,
                        sources,
                        members: Vec::new(),
                        context: None,
                    },
                    Provenance::Merged { members, .. } => DocProvenance {
                        kind: ProvenanceKind::Merged,
                        sources,
                        members: members.iter().cloned().collect(),
                        context: None,
                    },
                    Provenance::Split { context, .. } => DocProvenance {
                        kind: ProvenanceKind::Split,
                        sources,
                        members: Vec::new(),
                        context: Some(context.clone()),
                    },
                };
                DocNode {
                    id: n.id.clone(),
                    label: n.label.clone(),
                    valence: None,
                    provenance: Some(provenance),
                }
            })
            .collect();
        let arcs = tree
            .arcs()
            .iter()
            .map(|(p, c)| DocArc {
                from: p.clone(),
                to: c.clone(),
                sign: None,
            })
            .collect();
        let mut doc = MapDocument::new(MapKind::ValueTree, nodes, arcs);
        doc.fundamental = Some(tree.root().to_string());
        doc
    }

    pub fn to_value_tree(&self) -> Result<ValueTree, IoError> {
        self.expect(MapKind::ValueTree)?;
        let mut nodes = Vec::new();
        for n in &self.nodes {
            if n.valence.is_some() {
                return Err(structure(format!("tree node {} has a valence", n.id)));
            }
            let p = n
                .provenance
                .as_ref()
                .ok_or_else(|| structure(format!("tree node {} has no provenance", n.id)))?;
            let sources: BTreeSet<ValueLiteral> = p
                .sources
                .iter()
                .map(|s| ValueLiteral::new(LiteralKey::parse(&s.id), s.label.as_str()))
                .collect();
            let provenance = match p.kind {
                ProvenanceKind::Original => {
                    if sources.len() != 1 || !p.members.is_empty() || p.context.is_some() {
                        return Err(structure(format!(
                            "original node {} needs exactly one source and nothing else",
                            n.id
                        )));
                    }
                    Provenance::Original(sources.into_iter().next().expect("one source"))
                }
                ProvenanceKind::Merged => {
                    if p.context.is_some() {
                        return Err(structure(format!("merged node {} has a context", n.id)));
                    }
                    Provenance::Merged {
                        sources,
                        members: p.members.iter().cloned().collect(),
                        label: n.label.clone(),
                    }
                }
                ProvenanceKind::Split => {
                    if !p.members.is_empty() {
                        return Err(structure(format!("split node {} has members", n.id)));
                    }
                    Provenance::Split {
                        sources,
                        context: p.context.clone().unwrap_or_default(),
                    }
                }
            };
            nodes.push(ValueTreeNode {
                id: n.id.clone(),
                label: n.label.clone(),
                provenance,
            });
        }
        Ok(ValueTree::new(nodes, self.unsigned_arcs()?, self.fundamental()?))
    }

    pub fn into_any(self) -> Result<AnyMap, IoError> {
        Ok(match self.kind {
            MapKind::CognitiveMap => AnyMap::Cognitive(self.to_cognitive_map()?),
            MapKind::ValueCognitiveMap => AnyMap::Value(self.to_value_map()?),
            MapKind::EndsMeansMap => AnyMap::EndsMeans(self.to_ends_means_map()?),
            MapKind::ValueTree => AnyMap::Tree(self.to_value_tree()?),
        })
    }
}

/// Parse a map document of any kind.
pub fn parse_map(text: &str) -> Result<AnyMap, IoError> {
    MapDocument::parse(text)?.into_any()
}
