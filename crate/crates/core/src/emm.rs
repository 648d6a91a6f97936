//! Value cognitive map to ends-means map.
//!
//! Labelling starts at the fundamental value and spreads against the
//! direction of influence. When a labelled literal is processed, every
//! pending influence arc into its value is consumed and rewritten as an
//! end-to-mean arc by [`transform_rule`]; the mean it names becomes
//! labelled in turn. Processing runs in waves: a wave processes the
//! literals labelled before it started, in key order, and labels the new
//! means once it is done. A negated literal is processed only while its
//! affirmed twin is unlabelled.
//!
//! Once no influence arc is left, literals that were never labelled are
//! discarded and the remaining cycles are broken one at a time.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decisions::{
    AnswerSource, Asked, ContextArc, ContextNode, Decider, DecisionContext, DecisionError,
    DecisionKind, DecisionRequest, Stage,
};
use crate::graph::{Digraph, GraphError, DEFAULT_CYCLE_CEILING};
use crate::model::{
    EndsMeansMap, InfluenceArc, LiteralKey, LiteralLabels, NodeId, Sign, Valence,
    ValueCognitiveMap, ValueLiteral,
};
use crate::pipeline::Outcome;
use crate::validate::{validate_vcm, ValidationReport};

/// One of the four sign and end-valence cases of the rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub sign: Sign,
    pub end: Valence,
}

impl Rule {
    pub const ALL: [Rule; 4] = [
        Rule {
            sign: Sign::Positive,
            end: Valence::Affirmed,
        },
        Rule {
            sign: Sign::Positive,
            end: Valence::Negated,
        },
        Rule {
            sign: Sign::Negative,
            end: Valence::Affirmed,
        },
        Rule {
            sign: Sign::Negative,
            end: Valence::Negated,
        },
    ];

    /// Valence of the mean: kept under a positive influence, flipped under a
    /// negative one.
    pub fn mean(self) -> Valence {
        match self.sign {
            Sign::Positive => self.end,
            Sign::Negative => self.end.flip(),
        }
    }
}

/// Rewrite influence `x -> y` as an ends-means arc whose end is `y` with the
/// given valence. Returns `(end, mean)`.
pub fn transform_rule(arc: &InfluenceArc, end_valence: Valence) -> (LiteralKey, LiteralKey) {
    let rule = Rule {
        sign: arc.sign,
        end: end_valence,
    };
    (
        LiteralKey::new(arc.to.clone(), end_valence),
        LiteralKey::new(arc.from.clone(), rule.mean()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// One arc's tail is strictly farthest from the fundamental value.
    UniqueLongest,
    /// Tied tails; the client picked the arc.
    ClientChoice,
    /// Tied tails; the engine picked the least arc.
    Arbitrary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcRef {
    pub end: String,
    pub mean: String,
}

impl ArcRef {
    fn of(end: &LiteralKey, mean: &LiteralKey) -> Self {
        ArcRef {
            end: end.id(),
            mean: mean.id(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmmEvent {
    RuleApplied {
        wave: usize,
        rule: Rule,
        consumed: InfluenceArc,
        emitted: ArcRef,
        /// The arc had already been emitted by an earlier rule application.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        duplicate: bool,
    },
    Labelled {
        wave: usize,
        literals: Vec<String>,
    },
    Discarded {
        literals: Vec<String>,
    },
    CycleResolved {
        cycle: Vec<String>,
        /// Distance from the fundamental value to the tail of each cycle arc,
        /// in cycle order.
        tail_distances: Vec<usize>,
        eliminated: ArcRef,
        resolution: Resolution,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request: Option<String>,
    },
}

/// Ordered record of a construction run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmmTrace {
    pub events: Vec<EmmEvent>,
}

impl EmmTrace {
    /// Events up to the first cycle resolution.
    pub fn before_cycles(&self) -> &[EmmEvent] {
        let end = self
            .events
            .iter()
            .position(|e| matches!(e, EmmEvent::CycleResolved { .. }))
            .unwrap_or(self.events.len());
        &self.events[..end]
    }

    pub fn rule_applications(&self) -> impl Iterator<Item = &EmmEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, EmmEvent::RuleApplied { .. }))
    }

    pub fn cycle_resolutions(&self) -> impl Iterator<Item = &EmmEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, EmmEvent::CycleResolved { .. }))
    }

    /// Number of labelling waves run.
    pub fn waves(&self) -> usize {
        self.events
            .iter()
            .filter_map(|e| match e {
                EmmEvent::RuleApplied { wave, .. } | EmmEvent::Labelled { wave, .. } => {
                    Some(*wave + 1)
                }
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmmError {
    #[error("value cognitive map is invalid:\n{0}")]
    InvalidMap(ValidationReport),
    #[error("labelling stalled in wave {wave} with {pending} influence arcs left")]
    Stalled { wave: usize, pending: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
}

/// Result of labelling, before any cycle is broken. Fully determined by the
/// input map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labelling {
    pub labelled: BTreeSet<LiteralKey>,
    pub arcs: BTreeSet<(LiteralKey, LiteralKey)>,
    pub trace: EmmTrace,
    pub waves: usize,
}

/// Label propagation and the discard of unlabelled literals.
pub fn propagate_labels(vcm: &ValueCognitiveMap) -> Result<Labelling, EmmError> {
    let report = validate_vcm(vcm);
    if !report.is_valid() {
        return Err(EmmError::InvalidMap(report));
    }
    let root = LiteralKey::affirmed(vcm.fundamental().clone());
    let mut pending: BTreeMap<&NodeId, Vec<&InfluenceArc>> = BTreeMap::new();
    for arc in vcm.arcs() {
        pending.entry(&arc.to).or_default().push(arc);
    }
    let mut remaining = vcm.arcs().len();
    let mut labelled = BTreeSet::from([root]);
    let mut arcs = BTreeSet::new();
    let mut trace = EmmTrace::default();
    let mut wave = 0;

    while remaining > 0 {
        let snapshot = labelled.clone();
        let mut fresh = BTreeSet::new();
        let mut consumed = 0;
        for literal in &snapshot {
            let active = match literal.valence {
                Valence::Affirmed => true,
                Valence::Negated => !snapshot.contains(&literal.negate()),
            };
            if !active {
                continue;
            }
            let Some(incoming) = pending.remove(&literal.base) else {
                continue;
            };
            for arc in incoming {
                let (end, mean) = transform_rule(arc, literal.valence);
                let duplicate = !arcs.insert((end.clone(), mean.clone()));
                trace.events.push(EmmEvent::RuleApplied {
                    wave,
                    rule: Rule {
                        sign: arc.sign,
                        end: literal.valence,
                    },
                    consumed: arc.clone(),
                    emitted: ArcRef::of(&end, &mean),
                    duplicate,
                });
                if !labelled.contains(&mean) {
                    fresh.insert(mean);
                }
                consumed += 1;
            }
        }
        if consumed == 0 {
            return Err(EmmError::Stalled {
                wave,
                pending: remaining,
            });
        }
        remaining -= consumed;
        if !fresh.is_empty() {
            trace.events.push(EmmEvent::Labelled {
                wave,
                literals: fresh.iter().map(LiteralKey::id).collect(),
            });
        }
        labelled.extend(fresh);
        wave += 1;
    }

    let discarded: Vec<String> = vcm
        .nodes()
        .iter()
        .flat_map(|n| [LiteralKey::affirmed(n.id.clone()), LiteralKey::negated(n.id.clone())])
        .filter(|k| &k.base != vcm.fundamental() || k.valence == Valence::Affirmed)
        .filter(|k| !labelled.contains(k))
        .map(|k| k.id())
        .collect();
    if !discarded.is_empty() {
        trace.events.push(EmmEvent::Discarded {
            literals: discarded,
        });
    }

    Ok(Labelling {
        labelled,
        arcs,
        trace,
        waves: wave,
    })
}

/// The arc chosen to break one cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleCut {
    pub end: LiteralKey,
    pub mean: LiteralKey,
    pub resolution: Resolution,
    pub request: Option<String>,
    pub tail_distances: Vec<usize>,
}

fn arc_option(end: &LiteralKey, mean: &LiteralKey) -> String {
    format!("{}->{}", end.id(), mean.id())
}

/// Choose the arc of `cycle` to eliminate.
///
/// Each arc is measured by the distance from `root` to its tail in `graph`.
/// A unique farthest tail decides on its own. Otherwise the tied arcs are
/// put to the client, with the least `(end id, mean id)` as the default.
pub fn resolve_cycle(
    cycle: &[LiteralKey],
    root: &LiteralKey,
    graph: &Digraph<LiteralKey>,
    labels: &LiteralLabels,
    decider: &mut Decider<'_>,
) -> Result<Outcome<CycleCut>, EmmError> {
    let distances = graph.distances_from(root)?;
    let cycle_arcs: Vec<(&LiteralKey, &LiteralKey)> = cycle
        .iter()
        .zip(cycle.iter().cycle().skip(1))
        .collect();
    let tail_distances: Vec<usize> = cycle_arcs
        .iter()
        .map(|(tail, _)| distances.get(*tail).copied().unwrap_or(usize::MAX))
        .collect();
    let farthest = *tail_distances.iter().max().expect("cycle is nonempty");
    let mut tied: Vec<(&LiteralKey, &LiteralKey)> = cycle_arcs
        .iter()
        .zip(&tail_distances)
        .filter(|(_, d)| **d == farthest)
        .map(|(a, _)| *a)
        .collect();
    tied.sort_by_key(|(e, m)| (e.id(), m.id()));

    if let [(end, mean)] = tied.as_slice() {
        return Ok(Outcome::Complete(CycleCut {
            end: (*end).clone(),
            mean: (*mean).clone(),
            resolution: Resolution::UniqueLongest,
            request: None,
            tail_distances,
        }));
    }

    let subjects: Vec<String> = cycle.iter().map(LiteralKey::id).collect();
    let options: Vec<String> = tied.iter().map(|(e, m)| arc_option(e, m)).collect();
    let request = DecisionRequest {
        id: decider.next_id(Stage::Emm, &subjects),
        kind: DecisionKind::CycleArcChoice,
        prompt: format!(
            "The cycle {} has {} arcs whose ends are all at distance {} from the \
             fundamental value. Which arc should be eliminated?",
            subjects.join(" -> "),
            tied.len(),
            farthest
        ),
        default: options.first().cloned(),
        options: options.clone(),
        context: DecisionContext {
            nodes: cycle
                .iter()
                .map(|k| ContextNode {
                    id: k.id(),
                    label: labels.display(k),
                })
                .collect(),
            arcs: cycle_arcs
                .iter()
                .map(|(e, m)| ContextArc {
                    from: e.id(),
                    to: m.id(),
                })
                .collect(),
        },
    };
    let id = request.id.clone();
    let (answer, source) = match decider.ask(request)? {
        Asked::Answer(a, s) => (a, s),
        Asked::Pending(r) => return Ok(Outcome::Pending(r)),
    };
    let choice = options.iter().position(|o| *o == answer).expect("answer checked");
    let (end, mean) = tied[choice];
    Ok(Outcome::Complete(CycleCut {
        end: end.clone(),
        mean: mean.clone(),
        resolution: match source {
            AnswerSource::Auto => Resolution::Arbitrary,
            _ => Resolution::ClientChoice,
        },
        request: Some(id),
        tail_distances,
    }))
}

/// Build the ends-means map of `vcm`.
pub fn run_algorithm1(
    vcm: &ValueCognitiveMap,
    decider: &mut Decider<'_>,
) -> Result<Outcome<(EndsMeansMap, EmmTrace)>, EmmError> {
    build_ends_means_map(vcm, decider, DEFAULT_CYCLE_CEILING)
}

pub fn build_ends_means_map(
    vcm: &ValueCognitiveMap,
    decider: &mut Decider<'_>,
    cycle_ceiling: usize,
) -> Result<Outcome<(EndsMeansMap, EmmTrace)>, EmmError> {
    let Labelling {
        labelled,
        arcs,
        mut trace,
        ..
    } = propagate_labels(vcm)?;
    let labels = vcm.literal_labels();
    let root = LiteralKey::affirmed(vcm.fundamental().clone());
    let mut graph = Digraph::new(labelled.iter().cloned(), arcs)?;

    loop {
        let cycles = graph.elementary_cycles(cycle_ceiling)?;
        let Some(cycle) = cycles.first() else { break };
        let cut = match resolve_cycle(cycle, &root, &graph, &labels, decider)? {
            Outcome::Complete(cut) => cut,
            Outcome::Pending(r) => return Ok(Outcome::Pending(r)),
        };
        graph.remove_arc(&cut.end, &cut.mean);
        trace.events.push(EmmEvent::CycleResolved {
            cycle: cycle.iter().map(LiteralKey::id).collect(),
            tail_distances: cut.tail_distances,
            eliminated: ArcRef::of(&cut.end, &cut.mean),
            resolution: cut.resolution,
            request: cut.request,
        });
    }

    let literals: Vec<ValueLiteral> = labelled.into_iter().map(|k| labels.literal(k)).collect();
    let emm = EndsMeansMap::new(
        literals,
        graph.arcs().map(|(e, m)| (e.clone(), m.clone())),
        root,
    );
    Ok(Outcome::Complete((emm, trace)))
}
