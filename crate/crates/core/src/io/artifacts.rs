//! Output file names and contents of a run, shared by every front end so
//! that equal runs write equal bytes.

use super::{to_dot, AnyMap, EmmTraceFile, IoError, TranscriptFile, TreeTraceFile};
use crate::decisions::DecisionTranscript;
use crate::emm::EmmTrace;
use crate::model::{EndsMeansMap, ValueCognitiveMap, ValueTree};
use crate::pipeline::{PipelineRun, StageName};
use crate::tree::TreeTrace;

pub const TRANSCRIPT_FILE: &str = "transcript.transcript.json";

pub fn map_file(stage: StageName) -> String {
    format!("{stage}.map.json")
}

pub fn trace_file(stage: StageName) -> String {
    format!("{stage}.trace.json")
}

pub fn dot_file(stage: StageName) -> String {
    format!("{stage}.dot")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

fn map_artifacts(stage: StageName, map: AnyMap, dot: bool) -> Result<Vec<Artifact>, IoError> {
    let mut out = vec![Artifact {
        name: map_file(stage),
        contents: map.to_document().to_json()?,
    }];
    if dot {
        out.push(Artifact {
            name: dot_file(stage),
            contents: to_dot(&map),
        });
    }
    Ok(out)
}

pub fn vcm_artifacts(vcm: &ValueCognitiveMap, dot: bool) -> Result<Vec<Artifact>, IoError> {
    map_artifacts(StageName::Vcm, AnyMap::Value(vcm.clone()), dot)
}

pub fn emm_artifacts(
    emm: &EndsMeansMap,
    trace: Option<&EmmTrace>,
    dot: bool,
) -> Result<Vec<Artifact>, IoError> {
    let mut out = map_artifacts(StageName::Emm, AnyMap::EndsMeans(emm.clone()), dot)?;
    if let Some(t) = trace {
        out.push(Artifact {
            name: trace_file(StageName::Emm),
            contents: EmmTraceFile::from_trace(t).to_json()?,
        });
    }
    Ok(out)
}

pub fn tree_artifacts(
    tree: &ValueTree,
    trace: &TreeTrace,
    dot: bool,
) -> Result<Vec<Artifact>, IoError> {
    let mut out = map_artifacts(StageName::Tree, AnyMap::Tree(tree.clone()), dot)?;
    out.push(Artifact {
        name: trace_file(StageName::Tree),
        contents: TreeTraceFile::from_trace(trace).to_json()?,
    });
    Ok(out)
}

pub fn transcript_artifact(t: &DecisionTranscript) -> Result<Artifact, IoError> {
    Ok(Artifact {
        name: TRANSCRIPT_FILE.into(),
        contents: TranscriptFile::from_transcript(t).to_json()?,
    })
}

/// Every artifact the run produced, transcript last.
pub fn run_artifacts(run: &PipelineRun, dot: bool) -> Result<Vec<Artifact>, IoError> {
    let mut out = Vec::new();
    if let Some(vcm) = &run.vcm {
        out.extend(vcm_artifacts(vcm, dot)?);
    }
    if let Some((emm, trace)) = &run.emm {
        out.extend(emm_artifacts(emm, trace.as_ref(), dot)?);
    }
    if let Some((tree, trace)) = &run.tree {
        out.extend(tree_artifacts(tree, trace, dot)?);
    }
    out.push(transcript_artifact(&run.transcript)?);
    Ok(out)
}

pub fn parse_stage(name: &str) -> Option<StageName> {
    match name {
        "vcm" => Some(StageName::Vcm),
        "emm" => Some(StageName::Emm),
        "tree" => Some(StageName::Tree),
        _ => None,
    }
}
