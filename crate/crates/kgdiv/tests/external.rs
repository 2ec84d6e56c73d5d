use std::path::Path;
use std::time::{Duration, Instant};

use kgdiv::core::matcher::MatchError;
use kgdiv::core::pipeline::RunConfig;
use kgdiv::core::Error;
use kgdiv::external::{ExternalMatcher, Request};
use kgdiv::orchestrator::execute;
use kgdiv::synthetic::Planted;

const UNIFORM: &str = r#"
import json, sys
req = json.loads(sys.stdin.readline())
scores = {s: [[t, 0.5] for t in c] for s, c in req["candidates"].items()}
print(json.dumps({"subtask_id": req["subtask_id"], "scores": scores}))
"#;

fn script(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    format!("python3 {}", path.display())
}

fn strict_config() -> RunConfig {
    RunConfig { n_subtasks: 2, max_size: 300, iterations: 1, strict: true, ..RunConfig::default() }
}

fn match_error(matcher: &ExternalMatcher) -> MatchError {
    let data = Planted { entities: 120, ..Planted::default() }.generate();
    let err = execute(&strict_config(), &data, None, matcher, |_| {}).unwrap_err();
    match err.downcast::<Error>().expect("engine error") {
        Error::Group { source, .. } => match *source {
            Error::Match(e) => e,
            other => panic!("unexpected {other}"),
        },
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn uniform_scores_give_a_complete_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = Planted { entities: 120, ..Planted::default() }.generate();
    let matcher = ExternalMatcher::new(script(dir.path(), "uniform.py", UNIFORM));
    let cfg = RunConfig { iterations: 2, ..strict_config() };
    let out = execute(&cfg, &data, None, &matcher, |_| {}).unwrap();
    assert_eq!(out.history().len(), 2);
    // Uniform scores leave no strict maximum, so nothing is promoted.
    assert!(out.state.pseudo.is_empty());
    assert!(out.metrics.coverage_recall > 0.0);
}

#[test]
fn requests_carry_the_subtask_by_raw_strings() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("request.json");
    let body = format!(
        "import sys\nline = sys.stdin.readline()\nopen({:?}, 'w').write(line)\n{}",
        dump.display().to_string(),
        UNIFORM.replace("json.loads(sys.stdin.readline())", "json.loads(line)")
    );
    let data = Planted { entities: 120, ..Planted::default() }.generate();
    let matcher = ExternalMatcher::new(script(dir.path(), "dump.py", &body));
    let cfg = RunConfig { n_subtasks: 1, ..strict_config() };
    execute(&cfg, &data, None, &matcher, |_| {}).unwrap();

    let req: Request = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!((req.subtask_id, req.iteration), (0, 1));
    assert!(req.source.entities.iter().all(|e| e.starts_with("src/")));
    assert!(req.target.entities.iter().all(|e| e.starts_with("tgt/")));
    assert!(!req.seeds.is_empty());
    for [s, t] in &req.seeds {
        assert!(req.source.entities.contains(s) && req.target.entities.contains(t));
    }
    assert!(req
        .source
        .triples
        .iter()
        .all(|[h, _, t]| req.source.entities.contains(h) && req.source.entities.contains(t)));
    assert!(req.source.entities.len() + req.target.entities.len() <= 300);
    assert!(req.candidates.keys().all(|s| !req.seeds.iter().any(|[a, _]| a == s)));
}

#[test]
fn unknown_targets_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = UNIFORM.replace("[[t, 0.5] for t in c]", "[[\"nowhere\", 0.5]]");
    let err = match_error(&ExternalMatcher::new(script(dir.path(), "bad.py", &body)));
    assert_eq!(err, MatchError::UnknownEntity("nowhere".into()));
}

#[test]
fn slow_matchers_time_out() {
    let mut m = ExternalMatcher::new("sleep 30");
    m.timeout = Duration::from_millis(300);
    let started = Instant::now();
    assert!(matches!(match_error(&m), MatchError::Timeout(_)));
    assert!(started.elapsed() < Duration::from_secs(10));
}

#[test]
fn exit_status_and_garbage_are_errors() {
    assert_eq!(match_error(&ExternalMatcher::new("cat > /dev/null; exit 3")), MatchError::Exit(3));
    assert!(matches!(match_error(&ExternalMatcher::new("cat > /dev/null; echo not-json")), MatchError::Protocol(_)));
    assert!(matches!(match_error(&ExternalMatcher::new("cat > /dev/null")), MatchError::Protocol(_)));
}
