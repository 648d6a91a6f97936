//! Acceptance run: one PASS or FAIL line per criterion, non-zero exit if
//! anything fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use axum::body::Body;
use axum::http::{header, Request};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use valuetree_core::decisions::{replay, AutoProvider, Decider, ScriptedProvider};
use valuetree_core::emm::{build_ends_means_map, propagate_labels, transform_rule};
use valuetree_core::graph::{Digraph, DEFAULT_CYCLE_CEILING};
use valuetree_core::io::artifacts::run_artifacts;
use valuetree_core::io::{to_dot, AnyMap, MapDocument, MappingFile, ScriptFile};
use valuetree_core::pipeline::{run_from_vcm, run_pipeline, Outcome, PipelineRun};
use valuetree_core::testing::{
    brute_distances, check_arborescence, check_emm_properties, digraph_from_mask,
    enumerate_emm_scripts, random_digraph, random_emm, random_vcm, rng, tied_gadgets,
    RandomProvider,
};
use valuetree_core::tree::{build_value_tree, TreeEdit, TreeError};
use valuetree_core::{InfluenceArc, NodeId, Sign, Valence, ValueCognitiveMap};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(name: &str) -> String {
    fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn random_vcms() -> Vec<ValueCognitiveMap> {
    let mut r = rng(2024);
    (0..200).map(|i| random_vcm(&mut r, 4 + i % 9)).collect()
}

fn rule_table() -> Check {
    let cases = [
        (Sign::Positive, Valence::Affirmed, "y", "x"),
        (Sign::Positive, Valence::Negated, "~y", "~x"),
        (Sign::Negative, Valence::Affirmed, "y", "~x"),
        (Sign::Negative, Valence::Negated, "~y", "x"),
    ];
    for (sign, end, want_end, want_mean) in cases {
        let (e, m) = transform_rule(&InfluenceArc::new("x", "y", sign), end);
        ensure(e.id() == want_end && m.id() == want_mean, || {
            format!("{sign:?}/{end:?} gave ({}, {})", e.id(), m.id())
        })?;
    }
    Ok("4 of 4 cases".into())
}

fn map_invariants(vcms: &[ValueCognitiveMap]) -> Check {
    let start = Instant::now();
    for (i, vcm) in vcms.iter().enumerate() {
        let mut auto = AutoProvider;
        let mut d = Decider::new(&mut auto);
        match build_ends_means_map(vcm, &mut d, DEFAULT_CYCLE_CEILING) {
            Ok(Outcome::Complete((emm, trace))) => {
                check_emm_properties(vcm, &emm, &trace).map_err(|e| format!("map {i}: {e}"))?
            }
            Ok(Outcome::Pending(r)) => return Err(format!("map {i}: {} left open", r.id)),
            Err(e) => return Err(format!("map {i}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{} maps, {secs:.2}s", vcms.len()))
}

fn determinism(vcms: &[ValueCognitiveMap]) -> Check {
    for (i, vcm) in vcms.iter().enumerate() {
        let a = propagate_labels(vcm).map_err(|e| e.to_string())?;
        let b = propagate_labels(vcm).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("map {i}: labelling differs"))?;
        let mut traces = Vec::new();
        for seed in [1, 2] {
            let mut p = RandomProvider::new(rng(seed));
            let mut d = Decider::new(&mut p);
            match build_ends_means_map(vcm, &mut d, DEFAULT_CYCLE_CEILING) {
                Ok(Outcome::Complete((_, t))) => traces.push(t),
                other => return Err(format!("map {i}: {other:?}")),
            }
        }
        ensure(
            traces[0].before_cycles() == traces[1].before_cycles()
                && traces[0].before_cycles() == a.trace.before_cycles(),
            || format!("map {i}: trace prefix differs"),
        )?;
    }
    Ok(format!("{} maps, identical nodes, arcs and trace prefix", vcms.len()))
}

fn tied_cycles() -> Check {
    let mut sizes = Vec::new();
    for (k, want) in [(1, 2), (2, 4)] {
        let e = enumerate_emm_scripts(&tied_gadgets(k))?;
        let products: Vec<usize> = e.option_counts.iter().map(|c| c.iter().product()).collect();
        ensure(e.option_counts.iter().all(|c| c.len() == k), || {
            format!("{k} gadgets asked {:?}", e.option_counts)
        })?;
        ensure(products.iter().all(|p| *p == e.outcomes.len()) && e.outcomes.len() == want, || {
            format!("{k} tied cycles: {} maps, products {products:?}", e.outcomes.len())
        })?;
        sizes.push(e.outcomes.len());
    }
    Ok(format!("distinct maps {sizes:?} for 1 and 2 tied cycles"))
}

fn bfs_oracle() -> Check {
    let same = |g: &Digraph<usize>| {
        g.nodes()
            .all(|&s| g.distances_from(&s).ok() == Some(brute_distances(g, s)))
    };
    let mut graphs = 0u64;
    for n in 1..=5usize {
        for mask in 0..(1u64 << (n * (n - 1))) {
            ensure(same(&digraph_from_mask(n, mask)), || format!("n={n} mask={mask}"))?;
            graphs += 1;
        }
    }
    let mut r = rng(8);
    for i in 0..500 {
        let g = random_digraph(&mut r, 1 + i % 8, [0.15, 0.3, 0.6][i % 3]);
        ensure(same(&g), || format!("random graph {i}"))?;
    }
    Ok(format!("{graphs} exhaustive + 500 random"))
}

fn fixture_run(prefix: &str) -> Result<PipelineRun, String> {
    let cm = MapDocument::parse(&read(&format!("{prefix}.cm.map.json")))
        .and_then(|d| d.to_cognitive_map())
        .map_err(|e| e.to_string())?;
    let m = MappingFile::parse(&read(&format!("{prefix}.mapping.json"))).map_err(|e| e.to_string())?;
    let answers = ScriptFile::parse(&read(&format!("{prefix}.decisions.json")))
        .map_err(|e| e.to_string())?
        .answers;
    let fundamental = NodeId::from(m.fundamental.as_deref().ok_or("no fundamental")?);
    let run = run_pipeline(&cm, &m.to_mapping(), &fundamental, &mut ScriptedProvider::strict(answers));
    ensure(run.is_complete(), || format!("{:?} {:?}", run.pending, run.failure))?;
    Ok(run)
}

fn matches_golden(prefix: &str, run: &PipelineRun) -> Result<usize, String> {
    let mut n = 0;
    for a in run_artifacts(run, true).map_err(|e| e.to_string())? {
        let path = fixtures().join("golden").join(prefix).join(&a.name);
        if !path.exists() {
            continue;
        }
        let golden = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        ensure(golden == a.contents, || format!("{} differs from golden", a.name))?;
        n += 1;
    }
    Ok(n)
}

fn kurdish() -> Check {
    let run = fixture_run("kurdish")?;
    let (tree, trace) = run.tree.as_ref().ok_or("no tree")?;
    check_arborescence(tree)?;
    for label in [
        "valuing resolving general problems",
        "valuing elimination of oppressing policies",
    ] {
        let n = tree.find_by_label(label).ok_or_else(|| format!("no node {label:?}"))?;
        ensure(n.provenance.kind() == "merged", || format!("{label:?} is not merged"))?;
    }
    ensure(
        !tree.arcs().contains(&("kurdish_conflict".into(), "peace_process".into())),
        || "Kurdish conflict still parents the peace process".into(),
    )?;
    ensure(
        trace.edits.iter().any(|e| matches!(e, TreeEdit::Prune { node, predecessor, .. }
            if node == "peace_process" && predecessor == "kurdish_conflict")),
        || "peace process prune missing from trace".into(),
    )?;
    let files = matches_golden("kurdish", &run)?;
    Ok(format!("{} nodes, {files} files equal to golden", tree.len()))
}

fn turkish() -> Check {
    let run = fixture_run("turkish")?;
    let (tree, trace) = run.tree.as_ref().ok_or("no tree")?;
    check_arborescence(tree)?;
    let mut dropped: Vec<(String, String)> = trace
        .edits
        .iter()
        .map(|e| match e {
            TreeEdit::Prune { node, predecessor, .. } => Ok((predecessor.clone(), node.clone())),
            other => Err(format!("unexpected edit {other:?}")),
        })
        .collect::<Result<_, _>>()?;
    dropped.sort();
    let mut want: Vec<(String, String)> = [
        "citizenship",
        "free_speech",
        "human_rights",
        "local_government",
        "mother_tongue",
        "parliament",
        "political_freedom",
        "social_justice",
        "~unemployment",
    ]
    .iter()
    .map(|n| ("~pkk".to_string(), n.to_string()))
    .collect();
    want.push(("counterterrorism".into(), "unitary_state".into()));
    want.sort();
    ensure(dropped == want, || format!("eliminations {dropped:?}"))?;
    let files = matches_golden("turkish", &run)?;
    Ok(format!("10 eliminations, {files} files equal to golden"))
}

fn treeification() -> Check {
    let mut r = rng(99);
    let (mut trees, mut guarded) = (0, 0);
    for i in 0..200 {
        let emm = random_emm(&mut r, 2 + i % 11, i % 13);
        let mut p = RandomProvider::new(rng(i as u64));
        let mut d = Decider::new(&mut p);
        match build_value_tree(&emm, &mut d) {
            Ok(Outcome::Complete((tree, _))) => {
                check_arborescence(&tree).map_err(|e| format!("map {i}: {e}"))?;
                trees += 1;
            }
            Ok(Outcome::Pending(req)) => return Err(format!("map {i}: {} left open", req.id)),
            Err(TreeError::NoProgress { .. }) => guarded += 1,
            Err(e) => return Err(format!("map {i}: {e}")),
        }
    }
    Ok(format!(
        "{trees} arborescences, guard rate {:.1}% ({guarded}/200)",
        guarded as f64 / 2.0
    ))
}

fn replays(vcms: &[ValueCognitiveMap]) -> Check {
    let mut runs: Vec<(String, PipelineRun)> = vec![
        ("kurdish".into(), fixture_run("kurdish")?),
        ("turkish".into(), fixture_run("turkish")?),
    ];
    for (i, vcm) in vcms.iter().enumerate() {
        runs.push((format!("random {i}"), run_from_vcm(vcm.clone(), &mut RandomProvider::new(rng(i as u64)))));
    }
    let mut checked = 0;
    for (name, first) in runs.iter().filter(|(_, r)| r.is_complete()) {
        let again = match name.as_str() {
            "kurdish" | "turkish" => {
                let cm = MapDocument::parse(&read(&format!("{name}.cm.map.json")))
                    .and_then(|d| d.to_cognitive_map())
                    .map_err(|e| e.to_string())?;
                let m = MappingFile::parse(&read(&format!("{name}.mapping.json")))
                    .map_err(|e| e.to_string())?;
                let f = NodeId::from(m.fundamental.as_deref().unwrap_or_default());
                run_pipeline(&cm, &m.to_mapping(), &f, &mut replay(&first.transcript))
            }
            _ => {
                let vcm = first.vcm.clone().ok_or("no vcm")?;
                run_from_vcm(vcm, &mut replay(&first.transcript))
            }
        };
        ensure(
            run_artifacts(first, true).ok() == run_artifacts(&again, true).ok(),
            || format!("{name}: replay differs"),
        )?;
        checked += 1;
    }
    Ok(format!("{checked} completed runs"))
}

fn round_trip() -> Check {
    let mut names = vec!["kurdish.cm.map.json".to_string(), "turkish.cm.map.json".to_string()];
    for prefix in ["kurdish", "turkish"] {
        for stage in ["vcm", "emm", "tree"] {
            names.push(format!("golden/{prefix}/{stage}.map.json"));
        }
    }
    for name in &names {
        let map: AnyMap = MapDocument::parse(&read(name))
            .and_then(|d| d.into_any())
            .map_err(|e| format!("{name}: {e}"))?;
        let emitted = map.to_document().to_json().map_err(|e| e.to_string())?;
        let back = MapDocument::parse(&emitted)
            .and_then(|d| d.into_any())
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(back == map, || format!("{name}: structure changed"))?;
        let again = back.to_document().to_json().map_err(|e| e.to_string())?;
        ensure(again == emitted, || format!("{name}: not a fixpoint"))?;
        graphviz_rust::parse(&to_dot(&map)).map_err(|e| format!("{name}: DOT: {e}"))?;
    }
    Ok(format!("{} documents, DOT parsed", names.len()))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> Result<(u16, String), String> {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(b.to_string())),
        None => builder.body(Body::empty()),
    }
    .map_err(|e| e.to_string())?;
    let resp = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
    Ok((status, String::from_utf8_lossy(&bytes).into_owned()))
}

/// Drive the Kurdish session over HTTP; returns artifacts by file name.
async fn service_run(answers: &BTreeMap<String, String>) -> Result<BTreeMap<String, String>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let app = valuetree_service::router(
        valuetree_service::SessionStore::open(dir.path()).map_err(|e| e.to_string())?,
    );
    let doc: Value = serde_json::from_str(&read("kurdish.cm.map.json")).map_err(|e| e.to_string())?;
    let mapping: Value = serde_json::from_str(&read("kurdish.mapping.json")).map_err(|e| e.to_string())?;
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"document": doc, "mapping": mapping}))).await?;
    ensure(status == 201, || format!("create: {status} {body}"))?;
    let id = serde_json::from_str::<Value>(&body).map_err(|e| e.to_string())?["id"]
        .as_str()
        .ok_or("no id")?
        .to_string();
    for _ in 0..20 {
        let (status, body) = call(&app, "POST", &format!("/sessions/{id}/advance"), Some(json!({}))).await?;
        ensure(status == 200, || format!("advance: {status} {body}"))?;
        let record: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        match record["stage"].as_str() {
            Some("vt_done") => break,
            Some("emm_pending_decision" | "vt_pending_decision") => {
                let rid = record["pending"]["id"].as_str().ok_or("no request id")?;
                let answer = answers.get(rid).ok_or_else(|| format!("no answer for {rid}"))?;
                let (status, body) = call(
                    &app,
                    "POST",
                    &format!("/sessions/{id}/decisions"),
                    Some(json!({"request_id": rid, "answer": answer})),
                )
                .await?;
                ensure(status == 200, || format!("answer: {status} {body}"))?;
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    for stage in ["vcm", "emm", "tree"] {
        for (format, file) in [("json", "map.json"), ("dot", "dot"), ("trace", "trace.json")] {
            if stage == "vcm" && format == "trace" {
                continue;
            }
            let uri = format!("/sessions/{id}/artifacts/{stage}?format={format}");
            let (status, text) = call(&app, "GET", &uri, None).await?;
            ensure(status == 200, || format!("{uri}: {status}"))?;
            out.insert(format!("{stage}.{file}"), text);
        }
    }
    let (_, transcript) = call(&app, "GET", &format!("/sessions/{id}/transcript"), None).await?;
    out.insert("transcript.transcript.json".into(), transcript);
    Ok(out)
}

fn cli_run(extra: &[&str], out: &Path) -> Result<BTreeMap<String, String>, String> {
    let f = fixtures();
    let status = Command::new(env!("CARGO_BIN_EXE_valuetree"))
        .arg("pipeline")
        .arg(f.join("kurdish.cm.map.json"))
        .arg("--mapping")
        .arg(f.join("kurdish.mapping.json"))
        .arg("--out-dir")
        .arg(out)
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(out).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        files.insert(name, fs::read_to_string(&p).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn equivalence() -> Check {
    let answers = ScriptFile::parse(&read("kurdish.decisions.json"))
        .map_err(|e| e.to_string())?
        .answers;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let service = rt.block_on(service_run(&answers))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let transcript = dir.path().join("service.transcript.json");
    fs::write(&transcript, &service["transcript.transcript.json"]).map_err(|e| e.to_string())?;
    let replayed = cli_run(&["--replay", transcript.to_str().unwrap_or_default()], &dir.path().join("replayed"))?;
    ensure(replayed == service, || {
        let differ: Vec<&String> = service
            .keys()
            .filter(|k| replayed.get(*k) != service.get(*k))
            .collect();
        format!("replayed CLI differs in {differ:?}")
    })?;

    let decisions = fixtures().join("kurdish.decisions.json");
    let scripted = cli_run(&["--decisions", decisions.to_str().unwrap_or_default()], &dir.path().join("scripted"))?;
    let same = service
        .iter()
        .filter(|(k, _)| !k.starts_with("transcript"))
        .all(|(k, v)| scripted.get(k) == Some(v));
    ensure(same, || "scripted CLI artifacts differ".into())?;
    Ok(format!("{} files byte-identical", service.len()))
}

fn main() -> ExitCode {
    let vcms = random_vcms();
    let checks: Vec<Criterion> = vec![
        ("rule table", Box::new(rule_table)),
        ("invariants on random value maps", Box::new(|| map_invariants(&vcms))),
        ("labelling determinism", Box::new(|| determinism(&vcms))),
        ("tied cycle enumeration", Box::new(tied_cycles)),
        ("shortest path oracle", Box::new(bfs_oracle)),
        ("kurdish golden", Box::new(kurdish)),
        ("turkish golden", Box::new(turkish)),
        ("treeification on random maps", Box::new(treeification)),
        ("replay determinism", Box::new(|| replays(&vcms))),
        ("round trip and dot grammar", Box::new(round_trip)),
        ("service and cli equivalence", Box::new(equivalence)),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(note) => println!("PASS {name}: {note}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
