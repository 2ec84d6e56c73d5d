//! Dataset loading and run-artifact persistence.
//!
//! Inputs are UTF-8, tab-separated, newline-terminated, without headers.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use kgdiv_core::context::Subtask;
use kgdiv_core::metrics::{Metrics, RankingTable};
use kgdiv_core::pipeline::{Dataset, IterationRecord};
use kgdiv_core::{EntityId, KgBuilder, KnowledgeGraph, Mapping, MappingSet, Provenance, Side};
use serde::{Deserialize, Serialize};

pub const SOURCE_TRIPLES: &str = "rel_triples_1";
pub const TARGET_TRIPLES: &str = "rel_triples_2";
pub const TRAIN_LINKS: &str = "ent_links_train";
pub const TEST_LINKS: &str = "ent_links_test";

pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const RANKINGS_FILE: &str = "rankings.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const RUN_FILE: &str = "run.json";
pub const PARTITION_FILE: &str = "partition.tsv";
pub const MANIFEST_DIR: &str = "manifests";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: file contains no records")]
    Empty { path: PathBuf },
    #[error("{path}: {source}")]
    Graph { path: PathBuf, source: kgdiv_core::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> LoadError + '_ {
    move |source| LoadError::Io { path: path.to_owned(), source }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> LoadError {
    LoadError::Parse { path: path.to_owned(), line, msg: msg.into() }
}

/// Iterates over `(line number, tab-separated fields)`, skipping blank lines.
fn for_each_record(
    path: &Path,
    fields: usize,
    mut f: impl FnMut(usize, &[&str]) -> Result<(), LoadError>,
) -> Result<usize, LoadError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut records = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != fields {
            return Err(parse_err(
                path,
                i + 1,
                format!("expected {fields} tab-separated fields, found {}", parts.len()),
            ));
        }
        f(i + 1, &parts)?;
        records += 1;
    }
    Ok(records)
}

pub fn load_kg(path: &Path, side: Side) -> Result<KnowledgeGraph, LoadError> {
    let mut builder = KgBuilder::new(side);
    let records = for_each_record(path, 3, |_, f| {
        builder.add_triple(f[0], f[1], f[2]);
        Ok(())
    })?;
    if records == 0 {
        return Err(LoadError::Empty { path: path.to_owned() });
    }
    builder.build().map_err(|source| LoadError::Graph { path: path.to_owned(), source })
}

/// Reads `source<TAB>target` pairs by raw string, enforcing one-to-one.
pub fn load_mappings(
    path: &Path,
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
    provenance: Provenance,
) -> Result<MappingSet, LoadError> {
    let mut set = MappingSet::new();
    for_each_record(path, 2, |line, f| {
        let s =
            kg_s.entity_id(f[0]).ok_or_else(|| parse_err(path, line, format!("unknown source entity {:?}", f[0])))?;
        let t =
            kg_t.entity_id(f[1]).ok_or_else(|| parse_err(path, line, format!("unknown target entity {:?}", f[1])))?;
        if let Some(prev) = set.target_of(s) {
            return Err(parse_err(
                path,
                line,
                format!("source {:?} already mapped to {:?}", f[0], kg_t.entity_label(prev)),
            ));
        }
        if let Some(prev) = set.source_of(t) {
            return Err(parse_err(
                path,
                line,
                format!("target {:?} already mapped from {:?}", f[1], kg_s.entity_label(prev)),
            ));
        }
        set.insert(Mapping { source: s, target: t, provenance }).map_err(|e| parse_err(path, line, e.to_string()))
    })?;
    Ok(set)
}

/// Loads the four-file dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset, LoadError> {
    let kg_s = load_kg(&dir.join(SOURCE_TRIPLES), Side::Source)?;
    let kg_t = load_kg(&dir.join(TARGET_TRIPLES), Side::Target)?;
    let seeds = load_mappings(&dir.join(TRAIN_LINKS), &kg_s, &kg_t, Provenance::Seed)?;
    let test_path = dir.join(TEST_LINKS);
    let test = load_mappings(&test_path, &kg_s, &kg_t, Provenance::Seed)?;
    if let Some(m) = test.iter().find(|m| seeds.contains_source(m.source) || seeds.contains_target(m.target)) {
        log::warn!(
            "{}: test pair ({}, {}) overlaps the seed mappings",
            test_path.display(),
            kg_s.entity_label(m.source),
            kg_t.entity_label(m.target)
        );
    }
    let test = test.iter().map(|m| (m.source, m.target)).collect();
    Ok(Dataset { kg_s, kg_t, seeds, test })
}

/// Writes a dataset directory; the inverse of [`load_dataset`].
pub fn write_dataset(dir: &Path, data: &Dataset) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (kg, name) in [(&data.kg_s, SOURCE_TRIPLES), (&data.kg_t, TARGET_TRIPLES)] {
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        for (h, r, t) in kg.labelled_triples() {
            writeln!(w, "{h}\t{r}\t{t}")?;
        }
        w.flush()?;
    }
    let seeds: Vec<_> = data.seeds.iter().map(|m| (m.source, m.target)).collect();
    write_pairs(&dir.join(TRAIN_LINKS), &data.kg_s, &data.kg_t, &seeds)?;
    write_pairs(&dir.join(TEST_LINKS), &data.kg_s, &data.kg_t, &data.test)
}

fn write_pairs(
    path: &Path,
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
    pairs: &[(EntityId, EntityId)],
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for &(s, t) in pairs {
        writeln!(w, "{}\t{}", kg_s.entity_label(s), kg_t.entity_label(t))?;
    }
    w.flush()
}

/// Reads `entity<TAB>part` lines; every source entity must be listed once.
pub fn read_partition_file(path: &Path, kg_s: &KnowledgeGraph) -> Result<Vec<u32>, LoadError> {
    let mut assignment: Vec<Option<u32>> = vec![None; kg_s.entity_count()];
    for_each_record(path, 2, |line, f| {
        let e =
            kg_s.entity_id(f[0]).ok_or_else(|| parse_err(path, line, format!("unknown source entity {:?}", f[0])))?;
        let part: u32 =
            f[1].trim().parse().map_err(|_| parse_err(path, line, format!("invalid part index {:?}", f[1])))?;
        if assignment[e as usize].replace(part).is_some() {
            return Err(parse_err(path, line, format!("entity {:?} assigned twice", f[0])));
        }
        Ok(())
    })?;
    assignment
        .into_iter()
        .enumerate()
        .map(|(e, p)| {
            p.ok_or_else(|| parse_err(path, 0, format!("entity {:?} has no part", kg_s.entity_label(e as EntityId))))
        })
        .collect()
}

pub fn write_partition(w: &mut impl Write, kg_s: &KnowledgeGraph, assignment: &[u32]) -> io::Result<()> {
    for (e, p) in assignment.iter().enumerate() {
        writeln!(w, "{}\t{p}", kg_s.entity_label(e as EntityId))?;
    }
    Ok(())
}

/// One line of the rankings file.
///
/// A `targets` record lists a subtask's rankable targets in the order used to
/// complete rankings; `ranking` records carry the scored head for one source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RankingRecord {
    Targets { group: usize, targets: Vec<String> },
    Ranking { group: usize, source: String, head: Vec<String> },
}

pub fn write_rankings(
    path: &Path,
    table: &RankingTable,
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let label_t = |ids: &mut dyn Iterator<Item = EntityId>| ids.map(|t| kg_t.entity_label(t).to_owned()).collect();
    for slot in 0..table.subtask_count() {
        let group = table.subtask_group(slot);
        let rec = RankingRecord::Targets { group, targets: label_t(&mut table.subtask_targets(slot).iter()) };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    for (slot, r) in table.rankings() {
        let rec = RankingRecord::Ranking {
            group: table.subtask_group(slot),
            source: kg_s.entity_label(r.source).to_owned(),
            head: label_t(&mut r.head.iter().copied()),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Rebuilds a ranking table from a rankings file against the original graphs.
pub fn read_rankings(path: &Path, kg_s: &KnowledgeGraph, kg_t: &KnowledgeGraph) -> Result<RankingTable, LoadError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut table = RankingTable::new();
    let mut slots: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let target = |label: &str| {
            kg_t.entity_id(label).ok_or_else(|| parse_err(path, lineno, format!("unknown target entity {label:?}")))
        };
        let rec: RankingRecord = serde_json::from_str(&line).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        match rec {
            RankingRecord::Targets { group, targets } => {
                let ids = targets.iter().map(|l| target(l)).collect::<Result<_, _>>()?;
                slots.insert(group, table.add_subtask(group, ids));
            }
            RankingRecord::Ranking { group, source, head } => {
                let slot = *slots
                    .get(&group)
                    .ok_or_else(|| parse_err(path, lineno, format!("ranking for group {group} before its targets")))?;
                let source = kg_s
                    .entity_id(&source)
                    .ok_or_else(|| parse_err(path, lineno, format!("unknown source entity {source:?}")))?;
                let head = head.iter().map(|l| target(l)).collect::<Result<_, _>>()?;
                table.add_ranking(slot, kgdiv_core::matcher::Ranking { source, head });
            }
        }
    }
    Ok(table)
}

pub fn write_predictions(
    path: &Path,
    predictions: &[(EntityId, EntityId)],
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
) -> io::Result<()> {
    write_pairs(path, kg_s, kg_t, predictions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub metrics: Metrics,
    pub history: Vec<IterationRecord>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LoadError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

/// Context entities and triples of one side, by raw string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextManifest {
    pub entities: Vec<String>,
    pub anchors: Vec<String>,
    pub unmatched: Vec<String>,
    pub triple_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtaskManifest {
    pub subtask_id: usize,
    pub iteration: u32,
    pub size: usize,
    pub source_size: usize,
    pub target_size: usize,
    pub source: ContextManifest,
    pub target: ContextManifest,
    pub seeds: Vec<(String, String)>,
    pub candidates: Vec<String>,
    pub ranking_targets: Vec<String>,
}

impl SubtaskManifest {
    pub fn new(st: &Subtask, kg_s: &KnowledgeGraph, kg_t: &KnowledgeGraph) -> Self {
        let labels = |kg: &KnowledgeGraph, ids: &kgdiv_core::EntitySet| {
            ids.iter().map(|e| kg.entity_label(e).to_owned()).collect()
        };
        let side = |kg: &KnowledgeGraph, c: &kgdiv_core::context::ContextGraph| ContextManifest {
            entities: labels(kg, &c.entities),
            anchors: labels(kg, &c.anchors),
            unmatched: labels(kg, &c.unmatched),
            triple_count: c.induced_triples.len(),
        };
        Self {
            subtask_id: st.group,
            iteration: st.iteration,
            size: st.size(),
            source_size: st.source.len(),
            target_size: st.target.len(),
            source: side(kg_s, &st.source),
            target: side(kg_t, &st.target),
            seeds: st
                .seeds
                .iter()
                .map(|&(s, t)| (kg_s.entity_label(s).to_owned(), kg_t.entity_label(t).to_owned()))
                .collect(),
            candidates: labels(kg_t, &st.candidates),
            ranking_targets: labels(kg_t, &st.ranking_targets),
        }
    }
}

pub fn write_manifests(
    dir: &Path,
    subtasks: &[Subtask],
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for st in subtasks {
        write_json(&dir.join(format!("subtask_{}.json", st.group)), &SubtaskManifest::new(st, kg_s, kg_t))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn two_node_graph() {
        let dir = tempfile::tempdir().unwrap();
        let kg = load_kg(&file(dir.path(), "t", "a\tr\tb\nb\tr\ta\n"), Side::Source).unwrap();
        assert_eq!((kg.entity_count(), kg.relation_count(), kg.triples().len()), (2, 1, 2));
        assert_eq!(kg.neighbors(kg.entity_id("a").unwrap()), &[kg.entity_id("b").unwrap()]);
    }

    #[test]
    fn duplicate_triples_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let kg = load_kg(&file(dir.path(), "t", "a\tr\tb\na\tr\tb\n"), Side::Source).unwrap();
        assert_eq!(kg.triples().len(), 1);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_kg(&file(dir.path(), "t", "a\tr\tb\n\nbad line\n"), Side::Source).unwrap_err();
        assert!(matches!(err, LoadError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn empty_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_kg(&file(dir.path(), "t", ""), Side::Source).unwrap_err();
        assert!(matches!(err, LoadError::Empty { .. }));
    }

    #[test]
    fn mapping_errors_name_the_string() {
        let dir = tempfile::tempdir().unwrap();
        let kg_s = load_kg(&file(dir.path(), "s", "a\tr\tb\n"), Side::Source).unwrap();
        let kg_t = load_kg(&file(dir.path(), "t", "x\tr\ty\n"), Side::Target).unwrap();
        let ok = load_mappings(&file(dir.path(), "m1", "a\tx\nb\ty\n"), &kg_s, &kg_t, Provenance::Seed).unwrap();
        assert_eq!(ok.len(), 2);

        let err = load_mappings(&file(dir.path(), "m2", "a\tx\na\ty\n"), &kg_s, &kg_t, Provenance::Seed).unwrap_err();
        assert!(err.to_string().contains("\"a\""), "{err}");
        let err = load_mappings(&file(dir.path(), "m3", "a\tzzz\n"), &kg_s, &kg_t, Provenance::Seed).unwrap_err();
        assert!(err.to_string().contains("zzz"), "{err}");
    }

    #[test]
    fn partition_file_must_cover_every_entity() {
        let dir = tempfile::tempdir().unwrap();
        let kg = load_kg(&file(dir.path(), "s", "a\tr\tb\nb\tr\tc\n"), Side::Source).unwrap();
        assert_eq!(read_partition_file(&file(dir.path(), "p1", "a\t0\nb\t1\nc\t1\n"), &kg).unwrap(), [0, 1, 1]);
        assert!(read_partition_file(&file(dir.path(), "p2", "a\t0\nb\t1\n"), &kg).is_err());
        assert!(read_partition_file(&file(dir.path(), "p3", "a\t0\nb\tx\nc\t0\n"), &kg).is_err());
    }
}
