//! Stage orchestration.

use std::fmt;

use thiserror::Error;

use crate::decisions::{
    Decider, DecisionError, DecisionProvider, DecisionRequest, DecisionTranscript,
};
use crate::emm::{build_ends_means_map, EmmError, EmmTrace};
use crate::graph::DEFAULT_CYCLE_CEILING;
use crate::mapping::{apply_mapping, MappingError, ValueMapping};
use crate::model::{CognitiveMap, EndsMeansMap, NodeId, ValueCognitiveMap, ValueTree};
use crate::tree::{build_value_tree, TreeError, TreeTrace};

/// A stage either finishes or stops at a question nobody has answered yet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome<T> {
    Complete(T),
    Pending(DecisionRequest),
}

impl<T> Outcome<T> {
    pub fn complete(self) -> Option<T> {
        match self {
            Outcome::Complete(t) => Some(t),
            Outcome::Pending(_) => None,
        }
    }

    pub fn pending(&self) -> Option<&DecisionRequest> {
        match self {
            Outcome::Complete(_) => None,
            Outcome::Pending(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StageName {
    Vcm,
    Emm,
    Tree,
}

impl StageName {
    pub fn name(self) -> &'static str {
        match self {
            StageName::Vcm => "vcm",
            StageName::Emm => "emm",
            StageName::Tree => "tree",
        }
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error("vcm stage: {0}")]
    Mapping(#[from] MappingError),
    #[error("emm stage: {0}")]
    Emm(#[from] EmmError),
    #[error("tree stage: {0}")]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad input: an invalid map, mapping or answer.
    Validation,
    /// A question is unanswered.
    Pending,
    /// The engine gave up or broke one of its own invariants.
    Internal,
}

impl PipelineError {
    pub fn stage(&self) -> StageName {
        match self {
            PipelineError::Mapping(_) => StageName::Vcm,
            PipelineError::Emm(_) => StageName::Emm,
            PipelineError::Tree(_) => StageName::Tree,
        }
    }

    pub fn kind(&self) -> FailureKind {
        fn decision(e: &DecisionError) -> FailureKind {
            match e {
                DecisionError::Unanswered(_) => FailureKind::Pending,
                _ => FailureKind::Validation,
            }
        }
        match self {
            PipelineError::Mapping(_) => FailureKind::Validation,
            PipelineError::Emm(EmmError::InvalidMap(_)) => FailureKind::Validation,
            PipelineError::Emm(EmmError::Decision(e)) => decision(e),
            PipelineError::Emm(_) => FailureKind::Internal,
            PipelineError::Tree(TreeError::InvalidMap(_)) => FailureKind::Validation,
            PipelineError::Tree(TreeError::Decision(e)) => decision(e),
            PipelineError::Tree(_) => FailureKind::Internal,
        }
    }
}

/// Where a run starts.
#[derive(Debug, Clone)]
pub enum Start {
    Cognitive {
        cm: CognitiveMap,
        mapping: ValueMapping,
        fundamental: NodeId,
    },
    Value(ValueCognitiveMap),
    EndsMeans(EndsMeansMap),
}

impl Start {
    pub fn first_stage(&self) -> StageName {
        match self {
            Start::Cognitive { .. } | Start::Value(_) => StageName::Vcm,
            Start::EndsMeans(_) => StageName::Tree,
        }
    }
}

/// Everything a run produced, up to where it stopped.
#[derive(Debug, Clone, Default)]
pub struct PipelineRun {
    pub vcm: Option<ValueCognitiveMap>,
    pub emm: Option<(EndsMeansMap, Option<EmmTrace>)>,
    pub tree: Option<(ValueTree, TreeTrace)>,
    pub transcript: DecisionTranscript,
    pub pending: Option<DecisionRequest>,
    pub failure: Option<PipelineError>,
}

impl PipelineRun {
    pub fn is_complete(&self) -> bool {
        self.pending.is_none() && self.failure.is_none()
    }
}

/// Run from `start` through `last`, asking `provider` whatever needs
/// asking. Stops early on a pending question or a failure; whatever was
/// produced before that is kept.
pub fn run_stages(
    start: Start,
    last: StageName,
    provider: &mut dyn DecisionProvider,
) -> PipelineRun {
    let mut decider = Decider::new(provider);
    let mut run = PipelineRun::default();
    drive(start, last, &mut decider, &mut run);
    run.transcript = decider.into_transcript();
    run
}

fn drive(start: Start, last: StageName, decider: &mut Decider<'_>, run: &mut PipelineRun) {
    let emm = match start {
        Start::EndsMeans(emm) => emm,
        Start::Cognitive {
            cm,
            mapping,
            fundamental,
        } => match apply_mapping(&cm, &mapping, &fundamental) {
            Ok(vcm) => return after_vcm(vcm, last, decider, run),
            Err(e) => {
                run.failure = Some(e.into());
                return;
            }
        },
        Start::Value(vcm) => return after_vcm(vcm, last, decider, run),
    };
    run.emm = Some((emm.clone(), None));
    tree_stage(&emm, decider, run);
}

fn after_vcm(
    vcm: ValueCognitiveMap,
    last: StageName,
    decider: &mut Decider<'_>,
    run: &mut PipelineRun,
) {
    if last == StageName::Vcm {
        run.vcm = Some(vcm);
        return;
    }
    let outcome = build_ends_means_map(&vcm, decider, DEFAULT_CYCLE_CEILING);
    run.vcm = Some(vcm);
    let (emm, trace) = match outcome {
        Err(e) => {
            run.failure = Some(e.into());
            return;
        }
        Ok(Outcome::Pending(r)) => {
            run.pending = Some(r);
            return;
        }
        Ok(Outcome::Complete(done)) => done,
    };
    run.emm = Some((emm.clone(), Some(trace)));
    if last == StageName::Tree {
        tree_stage(&emm, decider, run);
    }
}

fn tree_stage(emm: &EndsMeansMap, decider: &mut Decider<'_>, run: &mut PipelineRun) {
    match build_value_tree(emm, decider) {
        Err(e) => run.failure = Some(e.into()),
        Ok(Outcome::Pending(r)) => run.pending = Some(r),
        Ok(Outcome::Complete(done)) => run.tree = Some(done),
    }
}

/// Run both engine stages from a value map.
pub fn run_from_vcm(vcm: ValueCognitiveMap, provider: &mut dyn DecisionProvider) -> PipelineRun {
    run_stages(Start::Value(vcm), StageName::Tree, provider)
}

/// Run every stage from a cognitive map.
pub fn run_pipeline(
    cm: &CognitiveMap,
    mapping: &ValueMapping,
    fundamental: &NodeId,
    provider: &mut dyn DecisionProvider,
) -> PipelineRun {
    run_stages(
        Start::Cognitive {
            cm: cm.clone(),
            mapping: mapping.clone(),
            fundamental: fundamental.clone(),
        },
        StageName::Tree,
        provider,
    )
}
