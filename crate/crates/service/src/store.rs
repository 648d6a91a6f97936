//! Sessions on disk: one directory per session under the data root.
//!
//! A session directory holds `session.json`, the uploaded input, the
//! transcript so far and each stage's artifacts under the same file names
//! the CLI writes.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::json;
use uuid::Uuid;

use valuetree_core::decisions::{
    replay, AnswerSource, DecisionRequest, DecisionTranscript, PendingProvider, Stage,
    TranscriptEntry,
};
use valuetree_core::io::artifacts::{
    emm_artifacts, map_file, transcript_artifact, tree_artifacts, vcm_artifacts, Artifact,
    TRANSCRIPT_FILE,
};
use valuetree_core::io::{
    read_text, to_canonical_json, AnyMap, MapDocument, MapKind, MappingFile, TranscriptFile,
};
use valuetree_core::mapping::apply_mapping;
use valuetree_core::pipeline::{run_stages, StageName, Start};
use valuetree_core::NodeId;

use crate::error::ApiError;

const SESSION_FILE: &str = "session.json";
const INPUT_FILE: &str = "input.map.json";
const MAPPING_FILE: &str = "input.mapping.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStage {
    Ingested,
    VcmDone,
    EmmPendingDecision,
    EmmDone,
    VtPendingDecision,
    VtDone,
    Failed,
}

impl SessionStage {
    /// Whether the artifacts of `stage` exist once a session is here.
    pub fn reached(self, stage: StageName, input: MapKind) -> bool {
        use SessionStage::*;
        match stage {
            StageName::Vcm => {
                input != MapKind::EndsMeansMap
                    && matches!(self, VcmDone | EmmPendingDecision | EmmDone | VtPendingDecision | VtDone)
            }
            StageName::Emm => matches!(self, EmmDone | VtPendingDecision | VtDone),
            StageName::Tree => self == VtDone,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRecord {
    pub id: String,
    pub input_kind: MapKind,
    pub stage: SessionStage,
    #[serde(default)]
    pub pending: Option<DecisionRequest>,
    #[serde(default)]
    pub error: Option<String>,
}

/// All sessions under one data root.
#[derive(Clone)]
pub struct SessionStore {
    root: PathBuf,
    locks: Arc<Mutex<HashMap<String, Arc<RwLock<()>>>>>,
}

fn io_error(path: &Path, e: std::io::Error) -> ApiError {
    ApiError::internal(format!("{}: {e}", path.display()))
}

/// Write through a temporary file so readers never see half a file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), ApiError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(SessionStore {
            root,
            locks: Arc::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf, ApiError> {
        let parsed = Uuid::parse_str(id)
            .map_err(|_| ApiError::not_found(format!("no session {id}")))?;
        let dir = self.root.join(parsed.to_string());
        if !dir.join(SESSION_FILE).is_file() {
            return Err(ApiError::not_found(format!("no session {id}")));
        }
        Ok(dir)
    }

    fn lock(&self, id: &str) -> Arc<RwLock<()>> {
        self.locks
            .lock()
            .expect("lock table poisoned")
            .entry(id.to_string())
            .or_default()
            .clone()
    }

    /// Run `f` as the only writer of session `id`; a concurrent writer gets
    /// a conflict instead of waiting.
    fn write<T>(
        &self,
        id: &str,
        f: impl FnOnce(&Path) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let dir = self.dir(id)?;
        let lock = self.lock(id);
        let _guard = lock.try_write().map_err(|_| {
            ApiError::conflict("busy", format!("session {id} is being modified"))
        })?;
        f(&dir)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Path) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let dir = self.dir(id)?;
        let lock = self.lock(id);
        let _guard = lock.read().expect("session lock poisoned");
        f(&dir)
    }

    pub fn create(
        &self,
        document: MapDocument,
        mapping: Option<MappingFile>,
    ) -> Result<SessionRecord, ApiError> {
        let map = document.clone().into_any()?;
        let report = map.validate();
        if !report.is_valid() {
            return Err(ApiError::unprocessable("invalid_document", report.to_string())
                .with_details(json!(report.violations)));
        }
        match (&map, &mapping) {
            (AnyMap::Tree(_), _) => {
                return Err(ApiError::unprocessable(
                    "invalid_document",
                    "a value tree is already the last stage",
                ))
            }
            (AnyMap::Cognitive(cm), Some(m)) => {
                let fundamental = fundamental_of(m)?;
                apply_mapping(cm, &m.to_mapping(), &fundamental).map_err(|e| {
                    ApiError::unprocessable("invalid_mapping", e.to_string())
                })?;
            }
            (AnyMap::Cognitive(_), None) => {
                return Err(ApiError::unprocessable(
                    "mapping_required",
                    "a cognitive map needs a mapping",
                ))
            }
            _ => {}
        }

        let id = Uuid::new_v4().to_string();
        let dir = self.root.join(&id);
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        write_atomic(&dir.join(INPUT_FILE), &document.to_json()?)?;
        if let Some(m) = &mapping {
            write_atomic(&dir.join(MAPPING_FILE), &m.to_json()?)?;
        }
        save_transcript(&dir, &DecisionTranscript::default())?;
        let record = SessionRecord {
            id,
            input_kind: document.kind,
            stage: SessionStage::Ingested,
            pending: None,
            error: None,
        };
        save_record(&dir, &record)?;
        Ok(record)
    }

    pub fn get(&self, id: &str) -> Result<SessionRecord, ApiError> {
        self.read(id, load_record)
    }

    pub fn transcript(&self, id: &str) -> Result<String, ApiError> {
        self.read(id, |dir| read_file(&dir.join(TRANSCRIPT_FILE)))
    }

    pub fn artifact(&self, id: &str, stage: StageName, file: &str) -> Result<String, ApiError> {
        self.read(id, |dir| {
            let record = load_record(dir)?;
            if !record.stage.reached(stage, record.input_kind) {
                return Err(ApiError::conflict(
                    "stage_not_reached",
                    format!("session has not completed the {stage} stage"),
                ));
            }
            let path = dir.join(file);
            if !path.is_file() {
                return Err(ApiError::not_found(format!("no {file} for this session")));
            }
            read_file(&path)
        })
    }

    pub fn advance(&self, id: &str) -> Result<SessionRecord, ApiError> {
        self.write(id, advance_in)
    }

    pub fn answer(&self, id: &str, request_id: &str, answer: &str) -> Result<SessionRecord, ApiError> {
        self.write(id, |dir| {
            let mut record = load_record(dir)?;
            let Some(pending) = record.pending.clone() else {
                return Err(ApiError::conflict("no_pending_decision", "nothing is awaiting an answer"));
            };
            if pending.id != request_id {
                return Err(ApiError::conflict(
                    "stale_request",
                    format!("pending decision is {}, not {request_id}", pending.id),
                ));
            }
            pending.check_answer(answer).map_err(|e| {
                ApiError::unprocessable("invalid_answer", e.to_string())
                    .with_details(json!({ "options": pending.options }))
            })?;
            let mut transcript = load_transcript(dir)?;
            transcript.push(TranscriptEntry {
                id: pending.id.clone(),
                kind: pending.kind,
                answer: answer.to_string(),
                source: AnswerSource::Service,
            });
            save_transcript(dir, &transcript)?;
            record.pending = None;
            record.stage = match record.stage {
                SessionStage::EmmPendingDecision => SessionStage::VcmDone,
                _ => SessionStage::EmmDone,
            };
            save_record(dir, &record)?;
            Ok(record)
        })
    }
}

fn fundamental_of(m: &MappingFile) -> Result<NodeId, ApiError> {
    m.fundamental
        .as_deref()
        .map(NodeId::from)
        .ok_or_else(|| ApiError::unprocessable("invalid_mapping", "mapping names no fundamental"))
}

fn read_file(path: &Path) -> Result<String, ApiError> {
    read_text(path).map_err(|e| ApiError::internal(e.to_string()))
}

fn load_record(dir: &Path) -> Result<SessionRecord, ApiError> {
    let text = read_file(&dir.join(SESSION_FILE))?;
    serde_json::from_str(&text).map_err(|e| ApiError::internal(e.to_string()))
}

fn save_record(dir: &Path, record: &SessionRecord) -> Result<(), ApiError> {
    write_atomic(&dir.join(SESSION_FILE), &to_canonical_json(record)?)
}

fn load_transcript(dir: &Path) -> Result<DecisionTranscript, ApiError> {
    let text = read_file(&dir.join(TRANSCRIPT_FILE))?;
    TranscriptFile::parse(&text)?
        .to_transcript()
        .map_err(|e| ApiError::internal(e.to_string()))
}

fn save_transcript(dir: &Path, t: &DecisionTranscript) -> Result<(), ApiError> {
    let a = transcript_artifact(t)?;
    write_atomic(&dir.join(a.name), &a.contents)
}

fn save_artifacts(dir: &Path, artifacts: Vec<Artifact>) -> Result<(), ApiError> {
    for a in artifacts {
        write_atomic(&dir.join(a.name), &a.contents)?;
    }
    Ok(())
}

fn load_map(dir: &Path, file: &str) -> Result<AnyMap, ApiError> {
    Ok(MapDocument::parse(&read_file(&dir.join(file))?)?.into_any()?)
}

/// Run the next stage until it completes or needs an answer.
fn advance_in(dir: &Path) -> Result<SessionRecord, ApiError> {
    let mut record = load_record(dir)?;
    let input = load_map(dir, INPUT_FILE)?;
    match record.stage {
        SessionStage::Ingested => {
            match input {
                AnyMap::Cognitive(cm) => {
                    let m = MappingFile::parse(&read_file(&dir.join(MAPPING_FILE))?)?;
                    let fundamental = fundamental_of(&m)?;
                    match apply_mapping(&cm, &m.to_mapping(), &fundamental) {
                        Ok(vcm) => {
                            save_artifacts(dir, vcm_artifacts(&vcm, true)?)?;
                            record.stage = SessionStage::VcmDone;
                        }
                        Err(e) => fail(&mut record, format!("vcm stage: {e}")),
                    }
                }
                AnyMap::Value(vcm) => {
                    save_artifacts(dir, vcm_artifacts(&vcm, true)?)?;
                    record.stage = SessionStage::VcmDone;
                }
                AnyMap::EndsMeans(emm) => {
                    save_artifacts(dir, emm_artifacts(&emm, None, true)?)?;
                    record.stage = SessionStage::EmmDone;
                }
                AnyMap::Tree(_) => fail(&mut record, "value tree input".into()),
            }
        }
        SessionStage::VcmDone => {
            let AnyMap::Value(vcm) = load_map(dir, &map_file(StageName::Vcm))? else {
                return Err(ApiError::internal("stored vcm has the wrong kind"));
            };
            run_stage(dir, &mut record, Start::Value(vcm), Stage::Emm)?;
        }
        SessionStage::EmmDone => {
            let AnyMap::EndsMeans(emm) = load_map(dir, &map_file(StageName::Emm))? else {
                return Err(ApiError::internal("stored emm has the wrong kind"));
            };
            run_stage(dir, &mut record, Start::EndsMeans(emm), Stage::Tree)?;
        }
        SessionStage::EmmPendingDecision | SessionStage::VtPendingDecision => {
            return Err(ApiError::conflict(
                "pending_decision",
                "answer the pending decision before advancing",
            )
            .with_details(json!({ "pending": record.pending })));
        }
        SessionStage::VtDone => {
            return Err(ApiError::conflict("complete", "session has finished every stage"));
        }
        SessionStage::Failed => {
            return Err(ApiError::conflict(
                "failed",
                record.error.clone().unwrap_or_default(),
            ));
        }
    }
    save_record(dir, &record)?;
    Ok(record)
}

fn fail(record: &mut SessionRecord, message: String) {
    record.stage = SessionStage::Failed;
    record.error = Some(message);
}

/// Re-run one engine stage, replaying the answers already given for it.
fn run_stage(
    dir: &Path,
    record: &mut SessionRecord,
    start: Start,
    stage: Stage,
) -> Result<(), ApiError> {
    let transcript = load_transcript(dir)?;
    let earlier = transcript.for_stage(stage);
    let provider = &mut replay(&earlier).then(PendingProvider);
    let last = match stage {
        Stage::Emm => StageName::Emm,
        Stage::Tree => StageName::Tree,
    };
    let run = run_stages(start, last, provider);

    let mut merged = DecisionTranscript::default();
    for s in [Stage::Emm, Stage::Tree] {
        merged.extend(&if s == stage {
            run.transcript.clone()
        } else {
            transcript.for_stage(s)
        });
    }
    save_transcript(dir, &merged)?;

    if let Some(e) = &run.failure {
        fail(record, e.to_string());
        return Ok(());
    }
    if let Some(r) = run.pending {
        record.stage = match stage {
            Stage::Emm => SessionStage::EmmPendingDecision,
            Stage::Tree => SessionStage::VtPendingDecision,
        };
        record.pending = Some(r);
        return Ok(());
    }
    match stage {
        Stage::Emm => {
            let (emm, trace) = run.emm.as_ref().expect("completed emm stage");
            save_artifacts(dir, emm_artifacts(emm, trace.as_ref(), true)?)?;
            record.stage = SessionStage::EmmDone;
        }
        Stage::Tree => {
            let (tree, trace) = run.tree.as_ref().expect("completed tree stage");
            save_artifacts(dir, tree_artifacts(tree, trace, true)?)?;
            record.stage = SessionStage::VtDone;
        }
    }
    Ok(())
}
