//! Ends-means map to value tree.
//!
//! A node with several predecessors keeps only those on a shortest path from
//! the fundamental value. When two or more such predecessors remain, the
//! client says whether they are independent ends, in which case the node is
//! split into one copy per end, or dependent ones, in which case the ends are
//! merged under a single label. Conflicts are handled shallowest first.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decisions::{
    Asked, ContextArc, ContextNode, Decider, DecisionContext, DecisionError, DecisionKind,
    DecisionRequest, Stage, DEPENDENT, INDEPENDENT,
};
use crate::graph::{Digraph, GraphError};
use crate::model::{EndsMeansMap, Provenance, ValueTree, ValueTreeNode};
use crate::pipeline::Outcome;
use crate::validate::{validate_emm, ValidationReport};

/// A node reached through more than one arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredecessorConflict {
    pub node: String,
    /// Distance of `node` from the root.
    pub layer: usize,
    /// Each predecessor with the length of the shortest root path through it.
    pub predecessors: Vec<(String, usize)>,
}

impl PredecessorConflict {
    pub fn shortest(&self) -> usize {
        self.predecessors.iter().map(|(_, l)| *l).min().unwrap_or(0)
    }

    pub fn tied(&self) -> Vec<&str> {
        let best = self.shortest();
        self.predecessors
            .iter()
            .filter(|(_, l)| *l == best)
            .map(|(p, _)| p.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "edit", rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeEdit {
    Prune {
        round: usize,
        node: String,
        predecessor: String,
        path_length: usize,
        shortest: usize,
    },
    Split {
        round: usize,
        node: String,
        copies: Vec<String>,
        request: String,
    },
    Merge {
        round: usize,
        members: Vec<String>,
        merged: String,
        label: String,
        requests: Vec<String>,
    },
    DropBackArc {
        round: usize,
        from: String,
        to: String,
    },
}

impl TreeEdit {
    pub fn round(&self) -> usize {
        match self {
            TreeEdit::Prune { round, .. }
            | TreeEdit::Split { round, .. }
            | TreeEdit::Merge { round, .. }
            | TreeEdit::DropBackArc { round, .. } => *round,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeTrace {
    pub edits: Vec<TreeEdit>,
}

impl TreeTrace {
    pub fn prunes(&self) -> impl Iterator<Item = &TreeEdit> {
        self.edits
            .iter()
            .filter(|e| matches!(e, TreeEdit::Prune { .. }))
    }

    /// Number of conflict rounds that recorded at least one edit.
    pub fn rounds(&self) -> usize {
        self.edits
            .iter()
            .map(TreeEdit::round)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("ends-means map is invalid:\n{0}")]
    InvalidMap(ValidationReport),
    #[error(
        "no progress after {rounds} rounds: {conflicts} conflicts remain (fewest seen {best})"
    )]
    NoProgress {
        rounds: usize,
        conflicts: usize,
        best: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
}

/// Working state: tree nodes joined by end-to-mean arcs, not yet a tree.
#[derive(Debug, Clone)]
struct Work {
    nodes: BTreeMap<String, ValueTreeNode>,
    graph: Digraph<String>,
    root: String,
}

impl Work {
    fn from_emm(emm: &EndsMeansMap) -> Result<Self, GraphError> {
        let nodes: BTreeMap<String, ValueTreeNode> = emm
            .literals()
            .map(|l| {
                let id = l.id();
                (
                    id.clone(),
                    ValueTreeNode {
                        id,
                        label: l.label.clone(),
                        provenance: Provenance::Original(l),
                    },
                )
            })
            .collect();
        let graph = Digraph::new(
            nodes.keys().cloned(),
            emm.arcs().iter().map(|(e, m)| (e.id(), m.id())),
        )?;
        Ok(Work {
            nodes,
            graph,
            root: emm.fundamental().id(),
        })
    }

    fn label(&self, id: &str) -> &str {
        &self.nodes[id].label
    }

    fn conflicts(&self) -> Result<Vec<PredecessorConflict>, GraphError> {
        let dist = self.graph.distances_from(&self.root)?;
        let depth = |n: &String| dist.get(n).copied().unwrap_or(usize::MAX);
        let mut out: Vec<PredecessorConflict> = self
            .graph
            .nodes()
            .filter(|n| self.graph.in_degree(n) >= 2)
            .map(|n| PredecessorConflict {
                node: n.clone(),
                layer: depth(n),
                predecessors: self
                    .graph
                    .predecessors(n)
                    .map(|p| (p.clone(), depth(p).saturating_add(1)))
                    .collect(),
            })
            .collect();
        out.sort_by(|a, b| (a.layer, &a.node).cmp(&(b.layer, &b.node)));
        Ok(out)
    }

    fn into_tree(self) -> ValueTree {
        let arcs: Vec<(String, String)> = self
            .graph
            .arcs()
            .map(|(p, c)| (p.clone(), c.clone()))
            .collect();
        ValueTree::new(self.nodes.into_values(), arcs, self.root)
    }
}

/// Nodes with two or more predecessors, shallowest first, then by id.
pub fn find_conflicts(emm: &EndsMeansMap) -> Result<Vec<PredecessorConflict>, GraphError> {
    Work::from_emm(emm)?.conflicts()
}

fn context(work: &Work, ids: &[&str], arcs: Vec<(String, String)>) -> DecisionContext {
    DecisionContext {
        nodes: ids
            .iter()
            .map(|id| ContextNode {
                id: id.to_string(),
                label: work.label(id).to_string(),
            })
            .collect(),
        arcs: arcs
            .into_iter()
            .map(|(from, to)| ContextArc { from, to })
            .collect(),
    }
}

fn quoted(work: &Work, ids: &[&str]) -> String {
    ids.iter()
        .map(|id| format!("\"{}\"", work.label(id)))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn merged_id(members: &[&str]) -> String {
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    format!("m({})", sorted.join("|"))
}

pub fn split_id(node: &str, context: &str) -> String {
    format!("{node}@{context}")
}

fn split(work: &mut Work, node: &str, ends: &[&str], round: usize, request: String) -> TreeEdit {
    let original = work.nodes.remove(node).expect("conflict node exists");
    let successors: Vec<String> = work.graph.successors(&node.to_string()).cloned().collect();
    work.graph.remove_node(&node.to_string());
    let mut copies = Vec::new();
    for end in ends {
        let id = split_id(node, end);
        work.nodes.insert(
            id.clone(),
            ValueTreeNode {
                id: id.clone(),
                label: format!("{} for {}", original.label, work.label(end)),
                provenance: Provenance::Split {
                    sources: original.provenance.sources(),
                    context: end.to_string(),
                },
            },
        );
        work.graph.add_node(id.clone());
        work.graph.add_arc(end.to_string(), id.clone());
        for s in &successors {
            work.graph.add_arc(id.clone(), s.clone());
        }
        copies.push(id);
    }
    TreeEdit::Split {
        round,
        node: node.to_string(),
        copies,
        request,
    }
}

fn merge(
    work: &mut Work,
    ends: &[&str],
    label: String,
    round: usize,
    requests: Vec<String>,
) -> Vec<TreeEdit> {
    let id = merged_id(ends);
    let members: BTreeSet<String> = ends.iter().map(|e| e.to_string()).collect();
    let mut sources = BTreeSet::new();
    let mut incoming = BTreeSet::new();
    let mut outgoing = BTreeSet::new();
    for m in &members {
        sources.extend(work.nodes.remove(m).expect("member exists").provenance.sources());
        incoming.extend(
            work.graph
                .predecessors(m)
                .filter(|p| !members.contains(*p))
                .cloned(),
        );
        outgoing.extend(
            work.graph
                .successors(m)
                .filter(|s| !members.contains(*s))
                .cloned(),
        );
        work.graph.remove_node(m);
    }
    work.nodes.insert(
        id.clone(),
        ValueTreeNode {
            id: id.clone(),
            label: label.clone(),
            provenance: Provenance::Merged {
                sources,
                members: members.clone(),
                label: label.clone(),
            },
        },
    );
    work.graph.add_node(id.clone());
    for s in outgoing {
        work.graph.add_arc(id.clone(), s);
    }
    let below = work.graph.distances_from(&id).expect("merged node exists");
    let mut edits = vec![TreeEdit::Merge {
        round,
        members: members.into_iter().collect(),
        merged: id.clone(),
        label,
        requests,
    }];
    for p in incoming {
        if below.contains_key(&p) {
            edits.push(TreeEdit::DropBackArc {
                round,
                from: p,
                to: id.clone(),
            });
        } else {
            work.graph.add_arc(p, id.clone());
        }
    }
    edits
}

/// Resolve the tie at `conflict` after its longer arcs have been pruned.
fn resolve_tie(
    work: &mut Work,
    conflict: &PredecessorConflict,
    round: usize,
    decider: &mut Decider<'_>,
) -> Result<Outcome<Vec<TreeEdit>>, TreeError> {
    let node = conflict.node.as_str();
    let mut ends = conflict.tied();
    ends.sort_unstable();
    let subjects: Vec<String> = std::iter::once(node)
        .chain(ends.iter().copied())
        .map(str::to_string)
        .collect();
    let mut ids = ends.clone();
    ids.push(node);
    let arcs: Vec<(String, String)> = ends
        .iter()
        .map(|e| (e.to_string(), node.to_string()))
        .collect();

    let request = DecisionRequest {
        id: decider.next_id(Stage::Tree, &subjects),
        kind: DecisionKind::IndependenceQuestion,
        prompt: format!(
            "\"{}\" serves {} equally closely. Are these ends independent (the mean \
             is split into one copy per end) or dependent (the ends are merged)?",
            work.label(node),
            quoted(work, &ends)
        ),
        options: vec![INDEPENDENT.to_string(), DEPENDENT.to_string()],
        default: None,
        context: context(work, &ids, arcs.clone()),
    };
    let independence_id = request.id.clone();
    let answer = match decider.ask(request)? {
        Asked::Answer(a, _) => a,
        Asked::Pending(r) => return Ok(Outcome::Pending(r)),
    };
    if answer == INDEPENDENT {
        return Ok(Outcome::Complete(vec![split(
            work,
            node,
            &ends,
            round,
            independence_id,
        )]));
    }

    let suggestion = format!(
        "merged: {}",
        ends.iter()
            .map(|e| work.label(e))
            .collect::<Vec<_>>()
            .join(" + ")
    );
    let request = DecisionRequest {
        id: decider.next_id(Stage::Tree, &subjects),
        kind: DecisionKind::MergeLabel,
        prompt: format!("Label for the value merging {}:", quoted(work, &ends)),
        options: Vec::new(),
        default: Some(suggestion),
        context: context(work, &ids, arcs),
    };
    let label_id = request.id.clone();
    let label = match decider.ask(request)? {
        Asked::Answer(a, _) => a,
        Asked::Pending(r) => return Ok(Outcome::Pending(r)),
    };
    Ok(Outcome::Complete(merge(
        work,
        &ends,
        label,
        round,
        vec![independence_id, label_id],
    )))
}

/// Remove every arc into `conflict.node` from a predecessor off the shortest
/// paths.
fn prune_by_shortest_path(
    work: &mut Work,
    conflict: &PredecessorConflict,
    round: usize,
) -> Vec<TreeEdit> {
    let best = conflict.shortest();
    let mut edits = Vec::new();
    for (p, len) in &conflict.predecessors {
        if *len > best {
            work.graph.remove_arc(p, &conflict.node);
            edits.push(TreeEdit::Prune {
                round,
                node: conflict.node.clone(),
                predecessor: p.clone(),
                path_length: *len,
                shortest: best,
            });
        }
    }
    edits
}

/// Turn an acyclic ends-means map into a value tree.
///
/// Gives up with [`TreeError::NoProgress`] if the number of open conflicts
/// fails to reach a new low for as many consecutive rounds as the map has
/// literals.
pub fn build_value_tree(
    emm: &EndsMeansMap,
    decider: &mut Decider<'_>,
) -> Result<Outcome<(ValueTree, TreeTrace)>, TreeError> {
    let report = validate_emm(emm);
    if !report.is_valid() {
        return Err(TreeError::InvalidMap(report));
    }
    let mut work = Work::from_emm(emm)?;
    let patience = emm.len().max(1);
    let mut trace = TreeTrace::default();
    let mut best = usize::MAX;
    let mut stale = 0;
    let mut round = 0;

    loop {
        let conflicts = work.conflicts()?;
        let Some(conflict) = conflicts.first() else {
            break;
        };
        if conflicts.len() < best {
            best = conflicts.len();
            stale = 0;
        } else {
            stale += 1;
            if stale >= patience {
                return Err(TreeError::NoProgress {
                    rounds: round,
                    conflicts: conflicts.len(),
                    best,
                });
            }
        }
        trace
            .edits
            .extend(prune_by_shortest_path(&mut work, conflict, round));
        if conflict.tied().len() >= 2 {
            match resolve_tie(&mut work, conflict, round, decider)? {
                Outcome::Complete(edits) => trace.edits.extend(edits),
                Outcome::Pending(r) => return Ok(Outcome::Pending(r)),
            }
        }
        round += 1;
    }
    Ok(Outcome::Complete((work.into_tree(), trace)))
}
