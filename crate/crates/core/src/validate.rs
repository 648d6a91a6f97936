//! Invariant checks for every map kind. Violations are returned as data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::graph::Digraph;
use crate::model::{
    CognitiveMap, EndsMeansMap, InfluenceArc, Node, NodeId, Provenance, ValueCognitiveMap,
    ValueTree, RESERVED_ID_CHARS,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Violation {
    EmptyGraph,
    EmptyId,
    ReservedIdCharacter { id: String },
    EmptyLabel { id: String },
    DuplicateNode { id: String },
    DanglingEndpoint { ids: Vec<String> },
    Irreflexive { node: String },
    DuplicateArc { from: String, to: String },
    DualSigned { from: String, to: String },
    NotWeaklyConnected { components: Vec<Vec<String>> },
    UnknownFundamental { id: String },
    FundamentalHasOutgoing { fundamental: String, targets: Vec<String> },
    MultipleSinks { sinks: Vec<String> },
    CannotReachFundamental { nodes: Vec<String> },
    Cyclic { cycle: Vec<String> },
    FundamentalHasIncoming { fundamental: String, ends: Vec<String> },
    MultipleSources { sources: Vec<String> },
    UnrecordedDualValence { bases: Vec<String> },
    MultipleParents { node: String, parents: Vec<String> },
    UnreachableFromRoot { nodes: Vec<String> },
    MergedTooFew { node: String },
    UnknownSplitContext { node: String, context: String },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::EmptyGraph => "empty_graph",
            Violation::EmptyId => "empty_id",
            Violation::ReservedIdCharacter { .. } => "reserved_id_character",
            Violation::EmptyLabel { .. } => "empty_label",
            Violation::DuplicateNode { .. } => "duplicate_node",
            Violation::DanglingEndpoint { .. } => "dangling_endpoint",
            Violation::Irreflexive { .. } => "irreflexive",
            Violation::DuplicateArc { .. } => "duplicate_arc",
            Violation::DualSigned { .. } => "dual_signed",
            Violation::NotWeaklyConnected { .. } => "not_weakly_connected",
            Violation::UnknownFundamental { .. } => "unknown_fundamental",
            Violation::FundamentalHasOutgoing { .. } => "fundamental_has_outgoing",
            Violation::MultipleSinks { .. } => "multiple_sinks",
            Violation::CannotReachFundamental { .. } => "cannot_reach_fundamental",
            Violation::Cyclic { .. } => "cyclic",
            Violation::FundamentalHasIncoming { .. } => "fundamental_has_incoming",
            Violation::MultipleSources { .. } => "multiple_sources",
            Violation::UnrecordedDualValence { .. } => "unrecorded_dual_valence",
            Violation::MultipleParents { .. } => "multiple_parents",
            Violation::UnreachableFromRoot { .. } => "unreachable_from_root",
            Violation::MergedTooFew { .. } => "merged_too_few",
            Violation::UnknownSplitContext { .. } => "unknown_split_context",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGraph => write!(f, "graph has no nodes"),
            Violation::EmptyId => write!(f, "node with empty id"),
            Violation::ReservedIdCharacter { id } => {
                write!(f, "node id {id:?} uses a reserved character")
            }
            Violation::EmptyLabel { id } => write!(f, "node {id} has an empty label"),
            Violation::DuplicateNode { id } => write!(f, "duplicate node id {id}"),
            Violation::DanglingEndpoint { ids } => {
                write!(f, "dangling endpoint: arcs reference unknown ids {}", ids.join(", "))
            }
            Violation::Irreflexive { node } => {
                write!(f, "irreflexive: {node} has an arc to itself")
            }
            Violation::DuplicateArc { from, to } => write!(f, "duplicate arc {from} -> {to}"),
            Violation::DualSigned { from, to } => {
                write!(f, "dual-signed pair: {from} -> {to} carries both signs")
            }
            Violation::NotWeaklyConnected { components } => {
                let parts: Vec<String> = components
                    .iter()
                    .map(|c| format!("{{{}}}", c.join(", ")))
                    .collect();
                write!(f, "not weakly connected: components {}", parts.join(" "))
            }
            Violation::UnknownFundamental { id } => write!(f, "fundamental {id} is not a node"),
            Violation::FundamentalHasOutgoing {
                fundamental,
                targets,
            } => write!(
                f,
                "fundamental has outgoing arc: {fundamental} -> {}",
                targets.join(", ")
            ),
            Violation::MultipleSinks { sinks } => {
                write!(
                    f,
                    "fundamental is not the unique node without outgoing arcs: sinks {}",
                    sinks.join(", ")
                )
            }
            Violation::CannotReachFundamental { nodes } => write!(
                f,
                "no directed path to the fundamental from {}",
                nodes.join(", ")
            ),
            Violation::Cyclic { cycle } => write!(f, "cycle through {}", cycle.join(" -> ")),
            Violation::FundamentalHasIncoming { fundamental, ends } => write!(
                f,
                "fundamental {fundamental} is a mean of {}",
                ends.join(", ")
            ),
            Violation::MultipleSources { sources } => {
                write!(f, "multiple nodes without ends: {}", sources.join(", "))
            }
            Violation::UnrecordedDualValence { bases } => write!(
                f,
                "both valences present but not recorded for {}",
                bases.join(", ")
            ),
            Violation::MultipleParents { node, parents } => {
                write!(f, "{node} has several parents: {}", parents.join(", "))
            }
            Violation::UnreachableFromRoot { nodes } => {
                write!(f, "not reachable from the root: {}", nodes.join(", "))
            }
            Violation::MergedTooFew { node } => {
                write!(f, "merged node {node} has fewer than two members")
            }
            Violation::UnknownSplitContext { node, context } => {
                write!(f, "split node {node} names unknown context {context}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code() == code)
    }

    fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{}: {v}", v.code())?;
        }
        Ok(())
    }
}

fn strings<'a, T: fmt::Display + 'a>(items: impl IntoIterator<Item = &'a T>) -> Vec<String> {
    items.into_iter().map(ToString::to_string).collect()
}

/// Node and arc checks shared by both influence map kinds. Returns the graph
/// built from the known nodes and the well-formed arcs.
fn check_influence(
    nodes: &[Node],
    arcs: &[InfluenceArc],
    report: &mut ValidationReport,
) -> Digraph<NodeId> {
    if nodes.is_empty() {
        report.push(Violation::EmptyGraph);
    }
    let mut ids = BTreeSet::new();
    for n in nodes {
        if n.id.as_str().is_empty() {
            report.push(Violation::EmptyId);
        } else if n.id.as_str().contains(RESERVED_ID_CHARS) {
            report.push(Violation::ReservedIdCharacter {
                id: n.id.to_string(),
            });
        }
        if n.label.trim().is_empty() {
            report.push(Violation::EmptyLabel {
                id: n.id.to_string(),
            });
        }
        if !ids.insert(&n.id) {
            report.push(Violation::DuplicateNode {
                id: n.id.to_string(),
            });
        }
    }

    let dangling: BTreeSet<&NodeId> = arcs
        .iter()
        .flat_map(|a| [&a.from, &a.to])
        .filter(|id| !ids.contains(id))
        .collect();
    if !dangling.is_empty() {
        report.push(Violation::DanglingEndpoint {
            ids: strings(dangling),
        });
    }

    let mut signs: BTreeMap<(&NodeId, &NodeId), Vec<_>> = BTreeMap::new();
    for a in arcs {
        if a.from == a.to {
            report.push(Violation::Irreflexive {
                node: a.from.to_string(),
            });
        }
        signs.entry((&a.from, &a.to)).or_default().push(a.sign);
    }
    for ((from, to), s) in &signs {
        let distinct: BTreeSet<_> = s.iter().collect();
        if distinct.len() > 1 {
            report.push(Violation::DualSigned {
                from: from.to_string(),
                to: to.to_string(),
            });
        } else if s.len() > 1 {
            report.push(Violation::DuplicateArc {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
    }

    let mut g = Digraph::new(ids.iter().map(|id| (*id).clone()), []).unwrap();
    for a in arcs {
        if ids.contains(&a.from) && ids.contains(&a.to) && a.from != a.to {
            g.add_arc(a.from.clone(), a.to.clone());
        }
    }
    if !g.is_empty() {
        let components = g.weak_components();
        if components.len() > 1 {
            report.push(Violation::NotWeaklyConnected {
                components: components.iter().map(strings).collect(),
            });
        }
    }
    g
}

pub fn validate_cognitive_map(cm: &CognitiveMap) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_influence(cm.nodes(), cm.arcs(), &mut report);
    report
}

pub fn validate_vcm(vcm: &ValueCognitiveMap) -> ValidationReport {
    let mut report = ValidationReport::default();
    let g = check_influence(vcm.nodes(), vcm.arcs(), &mut report);
    let fundamental = vcm.fundamental();
    if !g.contains(fundamental) {
        report.push(Violation::UnknownFundamental {
            id: fundamental.to_string(),
        });
        return report;
    }
    if g.out_degree(fundamental) > 0 {
        report.push(Violation::FundamentalHasOutgoing {
            fundamental: fundamental.to_string(),
            targets: strings(g.successors(fundamental)),
        });
    }
    let sinks = g.sinks();
    if sinks.len() > 1 || (sinks.len() == 1 && !sinks.contains(fundamental)) {
        report.push(Violation::MultipleSinks {
            sinks: strings(&sinks),
        });
    }
    let reaching = g.distances_to(fundamental).unwrap();
    let stranded: Vec<&NodeId> = g.nodes().filter(|n| !reaching.contains_key(n)).collect();
    if !stranded.is_empty() {
        report.push(Violation::CannotReachFundamental {
            nodes: strings(stranded),
        });
    }
    report
}

/// Ends-means map invariants: irreflexive, acyclic, weakly connected, with the
/// fundamental as the only literal without ends, every literal reachable
/// from it, and dual-valence bases recorded.
pub fn validate_emm(emm: &EndsMeansMap) -> ValidationReport {
    let mut report = ValidationReport::default();
    if emm.is_empty() {
        report.push(Violation::EmptyGraph);
        return report;
    }
    for key in emm.literal_keys() {
        if key.base.as_str().is_empty() {
            report.push(Violation::EmptyId);
        } else if key.base.as_str().contains(RESERVED_ID_CHARS) {
            report.push(Violation::ReservedIdCharacter { id: key.id() });
        }
        if emm.label(key).is_some_and(|l| l.trim().is_empty()) {
            report.push(Violation::EmptyLabel { id: key.id() });
        }
    }
    let dangling: BTreeSet<String> = emm
        .arcs()
        .iter()
        .flat_map(|(e, m)| [e, m])
        .filter(|k| !emm.contains(k))
        .map(|k| k.id())
        .collect();
    if !dangling.is_empty() {
        report.push(Violation::DanglingEndpoint {
            ids: dangling.into_iter().collect(),
        });
        return report;
    }
    for (e, m) in emm.arcs() {
        if e == m {
            report.push(Violation::Irreflexive { node: e.id() });
        }
    }
    let g = crate::graph::ends_means_graph(emm).unwrap();
    if let Some(c) = g.find_cycle() {
        report.push(Violation::Cyclic {
            cycle: strings(&c),
        });
    }
    let components = g.weak_components();
    if components.len() > 1 {
        report.push(Violation::NotWeaklyConnected {
            components: components.iter().map(strings).collect(),
        });
    }
    let fundamental = emm.fundamental();
    if !g.contains(fundamental) {
        report.push(Violation::UnknownFundamental {
            id: fundamental.id(),
        });
        return report;
    }
    if g.in_degree(fundamental) > 0 {
        report.push(Violation::FundamentalHasIncoming {
            fundamental: fundamental.id(),
            ends: strings(g.predecessors(fundamental)),
        });
    }
    let sources = g.sources();
    if sources.len() > 1 {
        report.push(Violation::MultipleSources {
            sources: strings(&sources),
        });
    }
    let reach = g.distances_from(fundamental).unwrap();
    let unreachable: Vec<&_> = g.nodes().filter(|n| !reach.contains_key(n)).collect();
    if !unreachable.is_empty() {
        report.push(Violation::UnreachableFromRoot {
            nodes: strings(unreachable),
        });
    }
    let mut seen = BTreeMap::new();
    for k in emm.literal_keys() {
        *seen.entry(&k.base).or_insert(0) += 1;
    }
    let unrecorded: Vec<String> = seen
        .into_iter()
        .filter(|(b, n)| *n > 1 && !emm.dual_valence().contains(*b))
        .map(|(b, _)| b.to_string())
        .collect();
    if !unrecorded.is_empty() {
        report.push(Violation::UnrecordedDualValence { bases: unrecorded });
    }
    report
}

/// Arborescence invariants: root without parent, one parent everywhere else,
/// acyclic, all nodes reachable from the root.
pub fn validate_tree(tree: &ValueTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    if tree.is_empty() {
        report.push(Violation::EmptyGraph);
        return report;
    }
    for n in tree.nodes() {
        if n.id.is_empty() {
            report.push(Violation::EmptyId);
        }
        if n.label.trim().is_empty() {
            report.push(Violation::EmptyLabel { id: n.id.clone() });
        }
        match &n.provenance {
            Provenance::Merged { members, .. } if members.len() < 2 => {
                report.push(Violation::MergedTooFew { node: n.id.clone() });
            }
            Provenance::Split { context, .. } if context.is_empty() => {
                report.push(Violation::UnknownSplitContext {
                    node: n.id.clone(),
                    context: context.clone(),
                });
            }
            _ => {}
        }
    }
    let dangling: BTreeSet<&String> = tree
        .arcs()
        .iter()
        .flat_map(|(p, c)| [p, c])
        .filter(|id| tree.node(id).is_none())
        .collect();
    if !dangling.is_empty() {
        report.push(Violation::DanglingEndpoint {
            ids: strings(dangling),
        });
        return report;
    }
    for (p, c) in tree.arcs() {
        if p == c {
            report.push(Violation::Irreflexive { node: p.clone() });
        }
    }
    let g = Digraph::new(
        tree.nodes().map(|n| n.id.clone()),
        tree.arcs().iter().cloned(),
    )
    .unwrap();
    let root = tree.root().to_string();
    if !g.contains(&root) {
        report.push(Violation::UnknownFundamental { id: root });
        return report;
    }
    if g.in_degree(&root) > 0 {
        report.push(Violation::FundamentalHasIncoming {
            fundamental: root.clone(),
            ends: strings(g.predecessors(&root)),
        });
    }
    for n in g.nodes() {
        if n != &root && g.in_degree(n) > 1 {
            report.push(Violation::MultipleParents {
                node: n.clone(),
                parents: strings(g.predecessors(n)),
            });
        }
    }
    if let Some(c) = g.find_cycle() {
        report.push(Violation::Cyclic { cycle: c });
    }
    let reach = g.distances_from(&root).unwrap();
    let unreachable: Vec<&String> = g.nodes().filter(|n| !reach.contains_key(*n)).collect();
    if !unreachable.is_empty() {
        report.push(Violation::UnreachableFromRoot {
            nodes: strings(unreachable),
        });
    }
    report
}
