//! Client decisions: requests, providers that answer them, and the
//! transcript that makes a run replayable.
//!
//! A run never talks to the client directly. It builds a [`DecisionRequest`]
//! and hands it to a [`Decider`], which forwards it to a
//! [`DecisionProvider`], validates the reply and appends it to the
//! [`DecisionTranscript`]. A provider may also suspend; the run then stops
//! and can be restarted later with a [`ReplayProvider`] over the transcript
//! so far, which re-answers every earlier request and resumes at the new one.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Value cognitive map to ends-means map.
    Emm,
    /// Ends-means map to value tree.
    Tree,
}

impl Stage {
    pub fn prefix(self) -> &'static str {
        match self {
            Stage::Emm => "emm",
            Stage::Tree => "vt",
        }
    }

    /// Stage of a request id, read from its prefix.
    pub fn of_request(id: &str) -> Option<Stage> {
        match id.split('-').next()? {
            "emm" => Some(Stage::Emm),
            "vt" => Some(Stage::Tree),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    CycleArcChoice,
    IndependenceQuestion,
    MergeLabel,
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionKind::CycleArcChoice => "cycle_arc_choice",
            DecisionKind::IndependenceQuestion => "independence_question",
            DecisionKind::MergeLabel => "merge_label",
        })
    }
}

pub const INDEPENDENT: &str = "independent";
pub const DEPENDENT: &str = "dependent";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextNode {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextArc {
    pub from: String,
    pub to: String,
}

/// The part of the graph a question is about, for display.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionContext {
    pub nodes: Vec<ContextNode>,
    pub arcs: Vec<ContextArc>,
}

impl DecisionContext {
    /// Plain-text sketch: one line per arc, then isolated nodes.
    pub fn sketch(&self) -> String {
        let label = |id: &str| {
            self.nodes
                .iter()
                .find(|n| n.id == id)
                .map_or(id.to_string(), |n| format!("[{}] {}", n.id, n.label))
        };
        let mut out = String::new();
        for a in &self.arcs {
            out.push_str(&format!("  {}\n    --> {}\n", label(&a.from), label(&a.to)));
        }
        for n in &self.nodes {
            if !self.arcs.iter().any(|a| a.from == n.id || a.to == n.id) {
                out.push_str(&format!("  [{}] {}\n", n.id, n.label));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub id: String,
    pub kind: DecisionKind,
    pub prompt: String,
    /// Enumerated answers; empty for free-text kinds.
    pub options: Vec<String>,
    /// Answer used when the client leaves the choice to the engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    pub context: DecisionContext,
}

impl DecisionRequest {
    pub fn stage(&self) -> Option<Stage> {
        Stage::of_request(&self.id)
    }

    pub fn check_answer(&self, answer: &str) -> Result<(), DecisionError> {
        let ok = match self.kind {
            DecisionKind::MergeLabel => !answer.trim().is_empty(),
            _ => self.options.iter().any(|o| o == answer),
        };
        if ok {
            Ok(())
        } else {
            Err(DecisionError::InvalidAnswer {
                id: self.id.clone(),
                answer: answer.to_string(),
                options: self.options.clone(),
            })
        }
    }
}

/// Deterministic request id from the stage, its per-stage ordinal and the
/// sorted ids of the nodes the question is about.
pub fn request_id(stage: Stage, ordinal: u32, subjects: &[String]) -> String {
    let mut sorted: Vec<&str> = subjects.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    let mut h = Sha256::new();
    h.update(stage.prefix().as_bytes());
    h.update([0]);
    h.update(ordinal.to_be_bytes());
    for s in sorted {
        h.update([0]);
        h.update(s.as_bytes());
    }
    let digest = hex::encode(h.finalize());
    format!("{}-{:03}-{}", stage.prefix(), ordinal, &digest[..12])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    Script,
    Interactive,
    Service,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    pub id: String,
    pub kind: DecisionKind,
    pub answer: String,
    pub source: AnswerSource,
}

/// Ordered record of every answer given during a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecisionTranscript {
    entries: Vec<TranscriptEntry>,
}

impl DecisionTranscript {
    pub fn new(entries: Vec<TranscriptEntry>) -> Result<Self, DecisionError> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(DecisionError::DuplicateId(e.id.clone()));
            }
        }
        Ok(DecisionTranscript { entries })
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: TranscriptEntry) {
        self.entries.push(entry);
    }

    /// Entries whose ids belong to `stage`, in order.
    pub fn for_stage(&self, stage: Stage) -> DecisionTranscript {
        DecisionTranscript {
            entries: self
                .entries
                .iter()
                .filter(|e| Stage::of_request(&e.id) == Some(stage))
                .cloned()
                .collect(),
        }
    }

    pub fn extend(&mut self, other: &DecisionTranscript) {
        self.entries.extend(other.entries.iter().cloned());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("unanswered decision {0}")]
    Unanswered(String),
    #[error("answer {answer:?} to {id} is not one of [{}]", .options.join(", "))]
    InvalidAnswer {
        id: String,
        answer: String,
        options: Vec<String>,
    },
    #[error("replay diverged at {found}: transcript expected {expected}")]
    ReplayDivergence { expected: String, found: String },
    #[error("duplicate request id {0} in transcript")]
    DuplicateId(String),
    #[error("input closed while waiting for an answer to {0}")]
    InputClosed(String),
    #[error("terminal i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Answer(String, AnswerSource),
    /// Park the request; the run stops and reports it as pending.
    Suspend,
}

pub trait DecisionProvider {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError>;
}

impl<P: DecisionProvider + ?Sized> DecisionProvider for &mut P {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        (**self).next_answer(request)
    }
}

impl<P: DecisionProvider + ?Sized> DecisionProvider for Box<P> {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        (**self).next_answer(request)
    }
}

/// Applies each request's default. Requests without one (independence
/// questions) are never answered automatically; they suspend.
#[derive(Debug, Clone, Copy, Default)]
pub struct AutoProvider;

impl DecisionProvider for AutoProvider {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        Ok(match &request.default {
            Some(d) => Reply::Answer(d.clone(), AnswerSource::Auto),
            None => Reply::Suspend,
        })
    }
}

/// Always suspends. Used by the session service, which collects answers
/// out of band and resumes by replay.
#[derive(Debug, Clone, Copy, Default)]
pub struct PendingProvider;

impl DecisionProvider for PendingProvider {
    fn next_answer(&mut self, _: &DecisionRequest) -> Result<Reply, DecisionError> {
        Ok(Reply::Suspend)
    }
}

/// Answers from a script keyed by request id.
///
/// In strict mode a missing answer suspends the run, even where a default
/// exists; in lenient mode it falls through to [`AutoProvider`].
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    answers: BTreeMap<String, String>,
    strict: bool,
}

impl ScriptedProvider {
    pub fn strict(answers: BTreeMap<String, String>) -> Self {
        ScriptedProvider {
            answers,
            strict: true,
        }
    }

    pub fn lenient(answers: BTreeMap<String, String>) -> Self {
        ScriptedProvider {
            answers,
            strict: false,
        }
    }
}

impl DecisionProvider for ScriptedProvider {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        match self.answers.get(&request.id) {
            Some(a) => Ok(Reply::Answer(a.clone(), AnswerSource::Script)),
            None if self.strict => Ok(Reply::Suspend),
            None => AutoProvider.next_answer(request),
        }
    }
}

/// Re-answers a transcript in order, then hands over to `then` if given.
pub struct ReplayProvider<'a> {
    entries: Vec<TranscriptEntry>,
    position: usize,
    then: Option<Box<dyn DecisionProvider + 'a>>,
}

impl<'a> ReplayProvider<'a> {
    pub fn then(mut self, next: impl DecisionProvider + 'a) -> Self {
        self.then = Some(Box::new(next));
        self
    }

    /// Entries not yet replayed.
    pub fn remaining(&self) -> usize {
        self.entries.len() - self.position
    }
}

/// A provider that re-answers exactly what `transcript` records.
pub fn replay<'a>(transcript: &DecisionTranscript) -> ReplayProvider<'a> {
    ReplayProvider {
        entries: transcript.entries.clone(),
        position: 0,
        then: None,
    }
}

impl DecisionProvider for ReplayProvider<'_> {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        if let Some(entry) = self.entries.get(self.position) {
            if entry.id != request.id {
                return Err(DecisionError::ReplayDivergence {
                    expected: entry.id.clone(),
                    found: request.id.clone(),
                });
            }
            self.position += 1;
            return Ok(Reply::Answer(entry.answer.clone(), entry.source));
        }
        match &mut self.then {
            Some(next) => next.next_answer(request),
            None => Err(DecisionError::Unanswered(request.id.clone())),
        }
    }
}

/// Prompts on a terminal, re-prompting until the answer is valid.
pub struct InteractiveProvider<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> InteractiveProvider<R, W> {
    pub fn new(input: R, output: W) -> Self {
        InteractiveProvider { input, output }
    }

    fn prompt(&mut self, request: &DecisionRequest) -> std::io::Result<()> {
        let out = &mut self.output;
        writeln!(out, "\n== decision {} ({}) ==", request.id, request.kind)?;
        write!(out, "{}", request.context.sketch())?;
        writeln!(out, "{}", request.prompt)?;
        for (i, o) in request.options.iter().enumerate() {
            writeln!(out, "  {}) {o}", i + 1)?;
        }
        match (&request.kind, &request.default) {
            (DecisionKind::MergeLabel, Some(d)) => write!(out, "label [{d}]: ")?,
            (DecisionKind::MergeLabel, None) => write!(out, "label: ")?,
            _ => write!(out, "choice: ")?,
        }
        out.flush()
    }
}

impl<R: BufRead, W: Write> DecisionProvider for InteractiveProvider<R, W> {
    fn next_answer(&mut self, request: &DecisionRequest) -> Result<Reply, DecisionError> {
        let io = |e: std::io::Error| DecisionError::Io(e.to_string());
        loop {
            self.prompt(request).map_err(io)?;
            let mut line = String::new();
            if self.input.read_line(&mut line).map_err(io)? == 0 {
                return Err(DecisionError::InputClosed(request.id.clone()));
            }
            let line = line.trim();
            let answer = match request.kind {
                DecisionKind::MergeLabel if line.is_empty() => request.default.clone(),
                DecisionKind::MergeLabel => Some(line.to_string()),
                _ => line
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| i.checked_sub(1))
                    .and_then(|i| request.options.get(i).cloned())
                    .or_else(|| request.options.iter().find(|o| *o == line).cloned()),
            };
            match answer {
                Some(a) if request.check_answer(&a).is_ok() => {
                    return Ok(Reply::Answer(a, AnswerSource::Interactive));
                }
                _ => writeln!(self.output, "invalid answer, try again").map_err(io)?,
            }
        }
    }
}

/// Asks questions on behalf of a run and records the answers.
pub struct Decider<'p> {
    provider: &'p mut dyn DecisionProvider,
    transcript: DecisionTranscript,
    ordinals: BTreeMap<Stage, u32>,
}

/// Outcome of asking: an answer, or the request left pending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Asked {
    Answer(String, AnswerSource),
    Pending(DecisionRequest),
}

impl<'p> Decider<'p> {
    pub fn new(provider: &'p mut dyn DecisionProvider) -> Self {
        Decider {
            provider,
            transcript: DecisionTranscript::default(),
            ordinals: BTreeMap::new(),
        }
    }

    /// Next request id for `stage`; advances the stage ordinal.
    pub fn next_id(&mut self, stage: Stage, subjects: &[String]) -> String {
        let ordinal = self.ordinals.entry(stage).or_insert(0);
        *ordinal += 1;
        request_id(stage, *ordinal, subjects)
    }

    pub fn ask(&mut self, request: DecisionRequest) -> Result<Asked, DecisionError> {
        match self.provider.next_answer(&request)? {
            Reply::Suspend => Ok(Asked::Pending(request)),
            Reply::Answer(answer, source) => {
                request.check_answer(&answer)?;
                self.transcript.push(TranscriptEntry {
                    id: request.id.clone(),
                    kind: request.kind,
                    answer: answer.clone(),
                    source,
                });
                Ok(Asked::Answer(answer, source))
            }
        }
    }

    pub fn transcript(&self) -> &DecisionTranscript {
        &self.transcript
    }

    pub fn into_transcript(self) -> DecisionTranscript {
        self.transcript
    }
}
