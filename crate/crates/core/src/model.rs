//! Domain types shared by every stage.
//!
//! All maps are plain value objects: once built they are only read, and a
//! stage produces a new map rather than editing its input. Construction does
//! not enforce the definitional invariants; that is the job of
//! [`crate::validate`], which reports violations as data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Prefix marking a negated literal in its textual id.
pub const NEGATION_MARK: char = '~';

/// Characters that may not appear in a node id because derived ids use them.
pub const RESERVED_ID_CHARS: [char; 3] = [NEGATION_MARK, '@', '|'];

/// Opaque node identifier, unique within its map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// A node of a cognitive or value cognitive map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
}

impl Node {
    pub fn new(id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Positive => f.write_str("positive"),
            Sign::Negative => f.write_str("negative"),
        }
    }
}

/// Signed influence: `from` has a positive or negative influence on `to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InfluenceArc {
    pub from: NodeId,
    pub to: NodeId,
    pub sign: Sign,
}

impl InfluenceArc {
    pub fn new(from: impl Into<NodeId>, to: impl Into<NodeId>, sign: Sign) -> Self {
        InfluenceArc {
            from: from.into(),
            to: to.into(),
            sign,
        }
    }

    pub fn positive(from: impl Into<NodeId>, to: impl Into<NodeId>) -> Self {
        Self::new(from, to, Sign::Positive)
    }

    pub fn negative(from: impl Into<NodeId>, to: impl Into<NodeId>) -> Self {
        Self::new(from, to, Sign::Negative)
    }
}

impl fmt::Display for InfluenceArc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.from, self.sign.symbol(), self.to)
    }
}

/// Concepts linked by signed influence arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CognitiveMap {
    nodes: Vec<Node>,
    arcs: Vec<InfluenceArc>,
}

impl CognitiveMap {
    pub fn new(nodes: Vec<Node>, arcs: Vec<InfluenceArc>) -> Self {
        CognitiveMap { nodes, arcs }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[InfluenceArc] {
        &self.arcs
    }

    pub fn label(&self, id: &NodeId) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| &n.id == id)
            .map(|n| n.label.as_str())
    }

    pub fn node_ids(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }
}

/// A cognitive map over values with a designated fundamental value.
///
/// `negation_labels` overrides the display label of a value's negation; values
/// without an override use `"not " + label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueCognitiveMap {
    nodes: Vec<Node>,
    arcs: Vec<InfluenceArc>,
    fundamental: NodeId,
    negation_labels: BTreeMap<NodeId, String>,
}

impl ValueCognitiveMap {
    pub fn new(nodes: Vec<Node>, arcs: Vec<InfluenceArc>, fundamental: impl Into<NodeId>) -> Self {
        ValueCognitiveMap {
            nodes,
            arcs,
            fundamental: fundamental.into(),
            negation_labels: BTreeMap::new(),
        }
    }

    pub fn with_negation_labels(mut self, labels: BTreeMap<NodeId, String>) -> Self {
        self.negation_labels = labels;
        self
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[InfluenceArc] {
        &self.arcs
    }

    pub fn fundamental(&self) -> &NodeId {
        &self.fundamental
    }

    pub fn negation_labels(&self) -> &BTreeMap<NodeId, String> {
        &self.negation_labels
    }

    pub fn node_ids(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn label(&self, id: &NodeId) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| &n.id == id)
            .map(|n| n.label.as_str())
    }

    pub fn literal_labels(&self) -> LiteralLabels {
        LiteralLabels {
            affirmed: self
                .nodes
                .iter()
                .map(|n| (n.id.clone(), n.label.clone()))
                .collect(),
            negated: self.negation_labels.clone(),
        }
    }

    /// View the value map as a plain cognitive map (drops the fundamental).
    pub fn as_cognitive_map(&self) -> CognitiveMap {
        CognitiveMap::new(self.nodes.clone(), self.arcs.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valence {
    Affirmed,
    Negated,
}

impl Valence {
    pub fn flip(self) -> Valence {
        match self {
            Valence::Affirmed => Valence::Negated,
            Valence::Negated => Valence::Affirmed,
        }
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valence::Affirmed => f.write_str("affirmed"),
            Valence::Negated => f.write_str("negated"),
        }
    }
}

/// Identity of a value literal: a value or its negation.
///
/// Its textual id is the base id, prefixed with `~` when negated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiteralKey {
    pub base: NodeId,
    pub valence: Valence,
}

impl LiteralKey {
    pub fn affirmed(base: impl Into<NodeId>) -> Self {
        LiteralKey {
            base: base.into(),
            valence: Valence::Affirmed,
        }
    }

    pub fn negated(base: impl Into<NodeId>) -> Self {
        LiteralKey {
            base: base.into(),
            valence: Valence::Negated,
        }
    }

    pub fn new(base: impl Into<NodeId>, valence: Valence) -> Self {
        LiteralKey {
            base: base.into(),
            valence,
        }
    }

    pub fn negate(&self) -> Self {
        LiteralKey {
            base: self.base.clone(),
            valence: self.valence.flip(),
        }
    }

    pub fn id(&self) -> String {
        match self.valence {
            Valence::Affirmed => self.base.0.clone(),
            Valence::Negated => format!("{NEGATION_MARK}{}", self.base),
        }
    }

    /// Inverse of [`LiteralKey::id`].
    pub fn parse(id: &str) -> Self {
        match id.strip_prefix(NEGATION_MARK) {
            Some(base) => LiteralKey::negated(base),
            None => LiteralKey::affirmed(id),
        }
    }
}

impl fmt::Display for LiteralKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// A literal together with its display label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueLiteral {
    pub key: LiteralKey,
    pub label: String,
}

impl ValueLiteral {
    pub fn new(key: LiteralKey, label: impl Into<String>) -> Self {
        ValueLiteral {
            key,
            label: label.into(),
        }
    }

    pub fn base(&self) -> &NodeId {
        &self.key.base
    }

    pub fn valence(&self) -> Valence {
        self.key.valence
    }

    pub fn id(&self) -> String {
        self.key.id()
    }

    /// Flip the valence, relabelling through `labels`.
    pub fn negate(&self, labels: &LiteralLabels) -> ValueLiteral {
        let key = self.key.negate();
        let label = labels.display(&key);
        ValueLiteral { key, label }
    }
}

/// Display labels for both valences of every value of a map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiteralLabels {
    affirmed: BTreeMap<NodeId, String>,
    negated: BTreeMap<NodeId, String>,
}

impl LiteralLabels {
    pub fn new(affirmed: BTreeMap<NodeId, String>, negated: BTreeMap<NodeId, String>) -> Self {
        LiteralLabels { affirmed, negated }
    }

    pub fn display(&self, key: &LiteralKey) -> String {
        let base = self
            .affirmed
            .get(&key.base)
            .cloned()
            .unwrap_or_else(|| key.base.to_string());
        match key.valence {
            Valence::Affirmed => base,
            Valence::Negated => self
                .negated
                .get(&key.base)
                .cloned()
                .unwrap_or_else(|| format!("not {base}")),
        }
    }

    pub fn literal(&self, key: LiteralKey) -> ValueLiteral {
        let label = self.display(&key);
        ValueLiteral { key, label }
    }
}

/// Literals linked by ends-means arcs, stored as `(end, mean)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndsMeansMap {
    literals: BTreeMap<LiteralKey, String>,
    arcs: BTreeSet<(LiteralKey, LiteralKey)>,
    fundamental: LiteralKey,
    dual_valence: BTreeSet<NodeId>,
}

impl EndsMeansMap {
    pub fn new(
        literals: impl IntoIterator<Item = ValueLiteral>,
        arcs: impl IntoIterator<Item = (LiteralKey, LiteralKey)>,
        fundamental: LiteralKey,
    ) -> Self {
        let literals: BTreeMap<_, _> = literals.into_iter().map(|l| (l.key, l.label)).collect();
        let mut by_base: BTreeMap<&NodeId, usize> = BTreeMap::new();
        for key in literals.keys() {
            *by_base.entry(&key.base).or_default() += 1;
        }
        let dual_valence = by_base
            .into_iter()
            .filter(|(_, n)| *n > 1)
            .map(|(b, _)| b.clone())
            .collect();
        EndsMeansMap {
            literals,
            arcs: arcs.into_iter().collect(),
            fundamental,
            dual_valence,
        }
    }

    /// Replace the computed dual-valence set, e.g. with one read from a file.
    pub fn with_dual_valence(mut self, bases: BTreeSet<NodeId>) -> Self {
        self.dual_valence = bases;
        self
    }

    pub fn literal_keys(&self) -> impl Iterator<Item = &LiteralKey> {
        self.literals.keys()
    }

    pub fn literals(&self) -> impl Iterator<Item = ValueLiteral> + '_ {
        self.literals
            .iter()
            .map(|(k, l)| ValueLiteral::new(k.clone(), l.clone()))
    }

    pub fn literal(&self, key: &LiteralKey) -> Option<ValueLiteral> {
        self.literals
            .get(key)
            .map(|l| ValueLiteral::new(key.clone(), l.clone()))
    }

    pub fn label(&self, key: &LiteralKey) -> Option<&str> {
        self.literals.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &LiteralKey) -> bool {
        self.literals.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn arcs(&self) -> &BTreeSet<(LiteralKey, LiteralKey)> {
        &self.arcs
    }

    pub fn fundamental(&self) -> &LiteralKey {
        &self.fundamental
    }

    /// Bases for which both the value and its negation were labelled.
    pub fn dual_valence(&self) -> &BTreeSet<NodeId> {
        &self.dual_valence
    }
}

/// Where a value tree node comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Original(ValueLiteral),
    /// Several tied ends merged into one node under a client label.
    Merged {
        sources: BTreeSet<ValueLiteral>,
        members: BTreeSet<String>,
        label: String,
    },
    /// One copy of a split mean, dedicated to the end named by `context`.
    Split {
        sources: BTreeSet<ValueLiteral>,
        context: String,
    },
}

impl Provenance {
    pub fn sources(&self) -> BTreeSet<ValueLiteral> {
        match self {
            Provenance::Original(l) => BTreeSet::from([l.clone()]),
            Provenance::Merged { sources, .. } | Provenance::Split { sources, .. } => {
                sources.clone()
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::Original(_) => "original",
            Provenance::Merged { .. } => "merged",
            Provenance::Split { .. } => "split",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTreeNode {
    pub id: String,
    pub label: String,
    pub provenance: Provenance,
}

/// Arborescence of values rooted at the fundamental value; arcs are
/// `(parent, child)`, end to mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTree {
    nodes: BTreeMap<String, ValueTreeNode>,
    arcs: BTreeSet<(String, String)>,
    root: String,
}

impl ValueTree {
    pub fn new(
        nodes: impl IntoIterator<Item = ValueTreeNode>,
        arcs: impl IntoIterator<Item = (String, String)>,
        root: impl Into<String>,
    ) -> Self {
        ValueTree {
            nodes: nodes.into_iter().map(|n| (n.id.clone(), n)).collect(),
            arcs: arcs.into_iter().collect(),
            root: root.into(),
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ValueTreeNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: &str) -> Option<&ValueTreeNode> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn arcs(&self) -> &BTreeSet<(String, String)> {
        &self.arcs
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn parent(&self, id: &str) -> Option<&str> {
        self.arcs
            .iter()
            .find(|(_, c)| c == id)
            .map(|(p, _)| p.as_str())
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.arcs
            .iter()
            .filter(move |(p, _)| p == id)
            .map(|(_, c)| c.as_str())
    }

    pub fn find_by_label(&self, label: &str) -> Option<&ValueTreeNode> {
        self.nodes.values().find(|n| n.label == label)
    }
}
