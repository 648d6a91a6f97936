//! Transformation engine from stakeholder cognitive maps to value trees.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`mapping`]: a concept-to-value mapping turns a [`CognitiveMap`] into a
//!    [`ValueCognitiveMap`] with a single fundamental value.
//! 2. [`emm`]: label propagation from the fundamental value rewrites signed
//!    influence arcs into ends-means arcs over value literals, then breaks
//!    any remaining cycles, giving an [`EndsMeansMap`].
//! 3. [`tree`]: multiple-predecessor conflicts are pruned by shortest path or
//!    resolved by splitting or merging nodes, giving a [`ValueTree`].
//!
//! Stages 2 and 3 may need answers from the client. Those are requested
//! through a [`decisions::DecisionProvider`] and recorded in a replayable
//! [`decisions::DecisionTranscript`].

pub mod compare;
pub mod decisions;
pub mod emm;
pub mod graph;
pub mod io;
pub mod mapping;
pub mod model;
pub mod pipeline;
pub mod tree;
pub mod validate;

#[cfg(feature = "testing")]
pub mod testing;

pub use model::{
    CognitiveMap, EndsMeansMap, InfluenceArc, LiteralKey, LiteralLabels, Node, NodeId, Provenance,
    Sign, Valence, ValueCognitiveMap, ValueLiteral, ValueTree, ValueTreeNode,
};
pub use validate::{ValidationReport, Violation};
