//! Subprocess matcher speaking one JSON request/response line pair.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use kgdiv_core::context::ContextGraph;
use kgdiv_core::matcher::{MatchError, MatchTask, Matcher, SimilarityMatrix, DEFAULT_TOP_K_STORE};
use kgdiv_core::{EntitySet, KnowledgeGraph};
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

pub const DEFAULT_TIMEOUT_SECS: u64 = 3600;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPayload {
    pub entities: Vec<String>,
    pub triples: Vec<[String; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub subtask_id: usize,
    pub iteration: u32,
    pub source: GraphPayload,
    pub target: GraphPayload,
    pub seeds: Vec<[String; 2]>,
    pub candidates: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub subtask_id: usize,
    pub scores: BTreeMap<String, Vec<(String, f64)>>,
}

fn payload(kg: &KnowledgeGraph, ctx: &ContextGraph) -> GraphPayload {
    GraphPayload {
        entities: ctx.entities.iter().map(|e| kg.entity_label(e).to_owned()).collect(),
        triples: ctx
            .induced_triples
            .iter()
            .map(|t| {
                [
                    kg.entity_label(t.head).to_owned(),
                    kg.relation_label(t.relation).to_owned(),
                    kg.entity_label(t.tail).to_owned(),
                ]
            })
            .collect(),
    }
}

pub fn build_request(task: &MatchTask<'_>) -> Request {
    let st = task.subtask;
    let cands: Vec<String> = st.ranking_targets.iter().map(|t| task.kg_t.entity_label(t).to_owned()).collect();
    Request {
        subtask_id: st.group,
        iteration: task.iteration,
        source: payload(task.kg_s, &st.source),
        target: payload(task.kg_t, &st.target),
        seeds: st
            .seeds
            .iter()
            .map(|&(s, t)| [task.kg_s.entity_label(s).to_owned(), task.kg_t.entity_label(t).to_owned()])
            .collect(),
        candidates: st.unmatched.iter().map(|s| (task.kg_s.entity_label(s).to_owned(), cands.clone())).collect(),
    }
}

/// Converts a response to a matrix, rejecting entities outside the subtask.
pub fn parse_response(
    task: &MatchTask<'_>,
    resp: Response,
    top_k_store: usize,
) -> Result<SimilarityMatrix, MatchError> {
    let st = task.subtask;
    if resp.subtask_id != st.group {
        return Err(MatchError::Protocol(format!(
            "response for subtask {} to a request for subtask {}",
            resp.subtask_id, st.group
        )));
    }
    let allowed: EntitySet = st.ranking_targets.union(&st.target.anchors);
    let mut rows = Vec::with_capacity(resp.scores.len());
    for (source, row) in resp.scores {
        let s = task
            .kg_s
            .entity_id(&source)
            .filter(|&s| st.unmatched.contains(s))
            .ok_or_else(|| MatchError::UnknownEntity(source.clone()))?;
        let mut out = Vec::with_capacity(row.len());
        for (target, score) in row {
            let t = task
                .kg_t
                .entity_id(&target)
                .filter(|&t| allowed.contains(t))
                .ok_or_else(|| MatchError::UnknownEntity(target.clone()))?;
            if !score.is_finite() {
                return Err(MatchError::Protocol(format!("non-finite score for ({source}, {target})")));
            }
            out.push((t, score));
        }
        rows.push((s, out));
    }
    Ok(SimilarityMatrix::from_rows(rows, top_k_store))
}

/// Runs `sh -c <command>` once per subtask.
#[derive(Clone, Debug)]
pub struct ExternalMatcher {
    pub command: String,
    pub timeout: Duration,
    pub top_k_store: usize,
}

impl ExternalMatcher {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            timeout: Duration::from_secs(DEFAULT_TIMEOUT_SECS),
            top_k_store: DEFAULT_TOP_K_STORE,
        }
    }

    fn exchange(&self, request: &Request) -> Result<Response, MatchError> {
        let mut line = serde_json::to_vec(request).map_err(|e| MatchError::Protocol(e.to_string()))?;
        line.push(b'\n');

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| MatchError::Failed(format!("cannot start {:?}: {e}", self.command)))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        // A matcher may exit without reading its input; the broken pipe then
        // surfaces as an exit status or protocol error instead.
        let writer = thread::spawn(move || {
            let _ = stdin.write_all(&line);
        });
        let stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            let mut buf = String::new();
            loop {
                buf.clear();
                match reader.read_line(&mut buf) {
                    Ok(0) => return Ok(None),
                    Ok(_) if buf.trim().is_empty() => continue,
                    Ok(_) => return Ok(Some(std::mem::take(&mut buf))),
                    Err(e) => return Err(e),
                }
            }
        });

        let status = match child.wait_timeout(self.timeout).map_err(|e| MatchError::Failed(e.to_string()))? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(MatchError::Timeout(self.timeout.as_secs()));
            }
        };
        let _ = writer.join();
        let out = reader.join().map_err(|_| MatchError::Failed("reader thread panicked".into()))?;
        if !status.success() {
            return Err(MatchError::Exit(status.code().unwrap_or(-1)));
        }
        let line = out
            .map_err(|e| MatchError::Failed(e.to_string()))?
            .ok_or_else(|| MatchError::Protocol("matcher produced no response".into()))?;
        serde_json::from_str(line.trim()).map_err(|e| MatchError::Protocol(e.to_string()))
    }
}

impl Matcher for ExternalMatcher {
    fn match_subtask(&self, task: &MatchTask<'_>) -> Result<SimilarityMatrix, MatchError> {
        let resp = self.exchange(&build_request(task))?;
        parse_response(task, resp, self.top_k_store)
    }
}
