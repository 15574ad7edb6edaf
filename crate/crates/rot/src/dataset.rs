//! Benchmark loading into a canonical instance schema.
//!
//! The canonical on-disk form is JSONL, one object per line:
//!
//! ```json
//! {"id": "...", "question": "...",
//!  "table": {"header_paths": [["..."]], "rows": [["..."]]},
//!  "gold_answers": ["..."], "dataset": "wikitq", "qtype": null}
//! ```
//!
//! Per-benchmark adapters convert upstream files into this schema:
//!
//! * WikiTableQuestions: a tab-separated question file whose `context`
//!   column names a per-example CSV/TSV table file (first row of the
//!   table file is the header); multiple gold answers are separated by
//!   `|` in the `targetValue` column.
//! * HiTab-style hierarchical tables: JSONL where each record embeds
//!   `{"texts": [[..]], "header_rows": k}`: the first `k` rows of
//!   `texts` are stacked column headers forming the header path, with
//!   empty segments dropped.
//! * TableBench: JSONL with `question`, `answer`, `qtype`, and a table
//!   as `{"columns": [..], "data": [[..]]}` (either inline or as a JSON
//!   string, as released).
//!
//! Gold answers are always lists; numbers are stringified verbatim and
//! normalization is deferred to scoring.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Table;

/// Which benchmark an instance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTag {
    WikiTq,
    HiTab,
    TableBench,
    Custom,
}

impl DatasetTag {
    /// Tables from HiTab carry hierarchical headers; the rest are flat.
    pub fn is_hierarchical(self) -> bool {
        matches!(self, DatasetTag::HiTab)
    }
}

impl std::fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DatasetTag::WikiTq => "wikitq",
            DatasetTag::HiTab => "hitab",
            DatasetTag::TableBench => "tablebench",
            DatasetTag::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// One question/table/answers evaluation unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAInstance {
    pub id: String,
    pub question: String,
    pub table: Table,
    pub gold_answers: Vec<String>,
    pub dataset: DatasetTag,
    #[serde(default)]
    pub qtype: Option<String>,
}

impl QAInstance {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.gold_answers.is_empty() {
            return Err(format!("instance {}: empty gold_answers", self.id));
        }
        Ok(())
    }
}

/// Load canonical JSONL. Order is preserved; every instance is validated
/// and ids must be unique within the file.
pub fn load_canonical(path: impl AsRef<Path>) -> Result<Vec<QAInstance>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let instance: QAInstance = serde_json::from_str(&line)
            .map_err(|e| Error::schema(&display, lineno, e.to_string()))?;
        instance
            .validate()
            .map_err(|msg| Error::schema(&display, lineno, msg))?;
        if !seen.insert(instance.id.clone()) {
            return Err(Error::schema(
                &display,
                lineno,
                format!("duplicate id {:?}", instance.id),
            ));
        }
        instances.push(instance);
    }
    Ok(instances)
}

/// Write instances as canonical JSONL.
pub fn write_canonical(path: impl AsRef<Path>, instances: &[QAInstance]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for instance in instances {
        let line = serde_json::to_string(instance)
            .map_err(|e| Error::Config(format!("serialize instance: {e}")))?;
        let _ = writeln!(out, "{line}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// WikiTableQuestions adapter: tab-separated question file plus a
/// directory holding the referenced table files.
///
/// The question file must have a header line naming `id`, `utterance`,
/// `context`, and `targetValue` columns; `context` is a path relative to
/// `table_dir`.
pub fn adapt_wikitq(question_file: impl AsRef<Path>, table_dir: impl AsRef<Path>) -> Result<Vec<QAInstance>> {
    let question_file = question_file.as_ref();
    let table_dir = table_dir.as_ref();
    let display = question_file.display().to_string();
    let content =
        std::fs::read_to_string(question_file).map_err(|e| Error::io(question_file, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::schema(&display, 1, "empty question file"))?;
    let columns: Vec<&str> = header.split('\t').collect();
    let col = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::schema(&display, 1, format!("missing column {name:?}")))
    };
    let (id_col, question_col, context_col, target_col) = (
        col("id")?,
        col("utterance")?,
        col("context")?,
        col("targetValue")?,
    );

    let mut instances = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns.len() {
            return Err(Error::schema(
                &display,
                lineno,
                format!("expected {} fields, got {}", columns.len(), fields.len()),
            ));
        }
        let table = read_delimited_table(&table_dir.join(fields[context_col]))?;
        let gold_answers: Vec<String> = fields[target_col]
            .split('|')
            .map(str::to_string)
            .collect();
        let instance = QAInstance {
            id: fields[id_col].to_string(),
            question: fields[question_col].to_string(),
            table,
            gold_answers,
            dataset: DatasetTag::WikiTq,
            qtype: None,
        };
        instance
            .validate()
            .map_err(|msg| Error::schema(&display, lineno, msg))?;
        instances.push(instance);
    }
    Ok(instances)
}

/// Read a CSV (or, by extension, TSV) table file: first record is the
/// header row, the rest are body rows.
fn read_delimited_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let delimiter = match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => b'\t',
        _ => b',',
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .from_reader(file);
    let mut records = reader.records();
    let header = records
        .next()
        .transpose()
        .map_err(|e| Error::MalformedTable(format!("{}: {e}", path.display())))?
        .ok_or_else(|| Error::MalformedTable(format!("{}: empty table file", path.display())))?;
    let header_paths: Vec<Vec<String>> = header.iter().map(|h| vec![h.to_string()]).collect();
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| Error::MalformedTable(format!("{}: {e}", path.display())))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Table::new(header_paths, rows)
        .map_err(|e| Error::MalformedTable(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct HiTabRecord {
    id: String,
    question: String,
    answer: Vec<serde_json::Value>,
    table: HiTabTable,
}

#[derive(Deserialize)]
struct HiTabTable {
    texts: Vec<Vec<serde_json::Value>>,
    header_rows: usize,
}

/// HiTab-style adapter: JSONL of records with hierarchical headers
/// stacked in the first `header_rows` rows of a `texts` matrix.
pub fn adapt_hitab(path: impl AsRef<Path>) -> Result<Vec<QAInstance>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut instances = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let record: HiTabRecord = serde_json::from_str(&line)
            .map_err(|e| Error::schema(&display, lineno, e.to_string()))?;
        if record.table.header_rows == 0 || record.table.texts.len() < record.table.header_rows {
            return Err(Error::schema(
                &display,
                lineno,
                format!(
                    "header_rows {} does not fit a {}-row texts matrix",
                    record.table.header_rows,
                    record.table.texts.len()
                ),
            ));
        }
        let texts: Vec<Vec<String>> = record
            .table
            .texts
            .iter()
            .map(|row| row.iter().map(stringify_value).collect())
            .collect();
        let n_cols = texts.first().map(Vec::len).unwrap_or(0);
        if n_cols == 0 || texts.iter().any(|r| r.len() != n_cols) {
            return Err(Error::schema(&display, lineno, "ragged texts matrix"));
        }
        let mut header_paths = Vec::with_capacity(n_cols);
        let header_rows = &texts[..record.table.header_rows];
        for c in 0..n_cols {
            let segments: Vec<String> = header_rows
                .iter()
                .map(|row| row[c].clone())
                .filter(|s| !s.trim().is_empty())
                .collect();
            if segments.is_empty() {
                return Err(Error::schema(
                    &display,
                    lineno,
                    format!("column {c} has an entirely empty header path"),
                ));
            }
            header_paths.push(segments);
        }
        let rows = texts[record.table.header_rows..].to_vec();
        let table = Table::new(header_paths, rows)
            .map_err(|e| Error::schema(&display, lineno, e.to_string()))?;
        let gold_answers: Vec<String> = record.answer.iter().map(stringify_value).collect();
        let instance = QAInstance {
            id: record.id,
            question: record.question,
            table,
            gold_answers,
            dataset: DatasetTag::HiTab,
            qtype: None,
        };
        instance
            .validate()
            .map_err(|msg| Error::schema(&display, lineno, msg))?;
        instances.push(instance);
    }
    Ok(instances)
}

#[derive(Deserialize)]
struct TableBenchRecord {
    id: String,
    question: String,
    answer: String,
    #[serde(default)]
    qtype: Option<String>,
    table: serde_json::Value,
}

#[derive(Deserialize)]
struct ColumnsData {
    columns: Vec<String>,
    data: Vec<Vec<serde_json::Value>>,
}

/// TableBench adapter: JSONL records whose `table` field is a
/// columns/data object, inline or as a JSON string.
pub fn adapt_tablebench(path: impl AsRef<Path>) -> Result<Vec<QAInstance>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut instances = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let record: TableBenchRecord = serde_json::from_str(&line)
            .map_err(|e| Error::schema(&display, lineno, e.to_string()))?;
        let parsed: ColumnsData = match &record.table {
            serde_json::Value::String(s) => serde_json::from_str(s)
                .map_err(|e| Error::schema(&display, lineno, format!("table string: {e}")))?,
            other => serde_json::from_value(other.clone())
                .map_err(|e| Error::schema(&display, lineno, format!("table object: {e}")))?,
        };
        let header_paths = parsed.columns.iter().map(|c| vec![c.clone()]).collect();
        let rows = parsed
            .data
            .iter()
            .map(|row| row.iter().map(stringify_value).collect())
            .collect();
        let table = Table::new(header_paths, rows)
            .map_err(|e| Error::schema(&display, lineno, e.to_string()))?;
        let instance = QAInstance {
            id: record.id,
            question: record.question,
            table,
            gold_answers: vec![record.answer],
            dataset: DatasetTag::TableBench,
            qtype: record.qtype,
        };
        instance
            .validate()
            .map_err(|msg| Error::schema(&display, lineno, msg))?;
        instances.push(instance);
    }
    Ok(instances)
}

/// Stringify a JSON scalar without reformatting; non-scalars fall back
/// to their JSON text.
fn stringify_value(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Deterministic seeded sample without repetition; stable across runs
/// and platforms for a fixed `(items, n, seed)`.
pub fn sample<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    if n > items.len() {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..items.len()).collect();
    // Partial Fisher-Yates: the first n slots end up uniformly sampled.
    for i in 0..n {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    Ok(indices[..n].iter().map(|&i| items[i].clone()).collect())
}

/// Read a whole file as a string, mapping errors to [`Error::Io`].
pub(crate) fn read_file(path: &Path) -> Result<String> {
    let mut buf = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical_line(id: &str) -> String {
        format!(
            r#"{{"id":"{id}","question":"q?","table":{{"header_paths":[["A"]],"rows":[["1"]]}},"gold_answers":["1"],"dataset":"wikitq","qtype":null}}"#
        )
    }

    #[test]
    fn load_canonical_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(&path, format!("{}\n{}\n", canonical_line("a"), canonical_line("b"))).unwrap();
        let instances = load_canonical(&path).unwrap();
        assert_eq!(instances.len(), 2);
        assert_eq!(instances[0].id, "a");
        assert_eq!(instances[1].id, "b");
    }

    #[test]
    fn load_canonical_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let missing_question = r#"{"id":"x","table":{"header_paths":[["A"]],"rows":[]},"gold_answers":["1"],"dataset":"wikitq"}"#;
        std::fs::write(&path, format!("{}\n{missing_question}\n", canonical_line("a"))).unwrap();
        match load_canonical(&path) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn load_canonical_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_canonical(&path).unwrap().is_empty());
    }

    #[test]
    fn load_canonical_rejects_duplicate_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(&path, format!("{}\n{}\n", canonical_line("a"), canonical_line("a"))).unwrap();
        assert!(matches!(load_canonical(&path), Err(Error::Schema { .. })));
    }

    #[test]
    fn load_canonical_rejects_empty_answers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let no_answers = r#"{"id":"x","question":"q?","table":{"header_paths":[["A"]],"rows":[]},"gold_answers":[],"dataset":"wikitq"}"#;
        std::fs::write(&path, format!("{no_answers}\n")).unwrap();
        assert!(matches!(load_canonical(&path), Err(Error::Schema { .. })));
    }

    #[test]
    fn canonical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let instances = vec![QAInstance {
            id: "r1".into(),
            question: "who?".into(),
            table: Table::flat(&["Name"], &[&["Ada"]]).unwrap(),
            gold_answers: vec!["Ada".into()],
            dataset: DatasetTag::Custom,
            qtype: Some("lookup".into()),
        }];
        write_canonical(&path, &instances).unwrap();
        assert_eq!(load_canonical(&path).unwrap(), instances);
    }

    fn write_wikitq_fixture(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let tables = dir.join("csv");
        std::fs::create_dir_all(&tables).unwrap();
        std::fs::write(
            tables.join("t0.csv"),
            "City,Country,Population\nOslo,Norway,700000\nBergen,Norway,280000\n",
        )
        .unwrap();
        std::fs::write(tables.join("t1.csv"), "Item\npen\nink\n").unwrap();
        let questions = dir.join("questions.tsv");
        std::fs::write(
            &questions,
            "id\tutterance\tcontext\ttargetValue\n\
             nt-0\twhich city is largest?\tcsv/t0.csv\tOslo\n\
             nt-1\twhat items are listed?\tcsv/t1.csv\tpen|ink\n",
        )
        .unwrap();
        (questions, dir.to_path_buf())
    }

    #[test]
    fn wikitq_adapter_reads_tables_and_answers() {
        let dir = tempfile::tempdir().unwrap();
        let (questions, base) = write_wikitq_fixture(dir.path());
        let instances = adapt_wikitq(&questions, &base).unwrap();
        assert_eq!(instances.len(), 2);
        assert_eq!(instances[0].table.n_cols(), 3);
        assert_eq!(instances[0].gold_answers, vec!["Oslo"]);
        assert_eq!(instances[1].gold_answers, vec!["pen", "ink"]);
        assert_eq!(instances[0].dataset, DatasetTag::WikiTq);
    }

    #[test]
    fn wikitq_adapter_missing_table_file() {
        let dir = tempfile::tempdir().unwrap();
        let questions = dir.path().join("questions.tsv");
        std::fs::write(
            &questions,
            "id\tutterance\tcontext\ttargetValue\nnt-0\tq?\tcsv/absent.csv\tx\n",
        )
        .unwrap();
        assert!(matches!(
            adapt_wikitq(&questions, dir.path()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn hitab_adapter_builds_header_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hitab.jsonl");
        let line = r#"{"id":"h-0","question":"which region grew?","answer":["North"],"table":{"header_rows":2,"texts":[["Region","Population","Population"],["","2010","2020"],["North","1200",1350],["South","2100","2080"]]}}"#;
        std::fs::write(&path, format!("{line}\n")).unwrap();
        let instances = adapt_hitab(&path).unwrap();
        assert_eq!(instances.len(), 1);
        let table = &instances[0].table;
        assert_eq!(
            table.header_paths(),
            &[
                vec!["Region".to_string()],
                vec!["Population".to_string(), "2010".to_string()],
                vec!["Population".to_string(), "2020".to_string()],
            ]
        );
        assert_eq!(table.n_rows(), 2);
        assert_eq!(table.rows()[0][2], "1350");
        assert_eq!(instances[0].dataset, DatasetTag::HiTab);
    }

    #[test]
    fn hitab_adapter_stringifies_numeric_answers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hitab.jsonl");
        let line = r#"{"id":"h-1","question":"total?","answer":[3300,"units"],"table":{"header_rows":1,"texts":[["A"],["x"]]}}"#;
        std::fs::write(&path, format!("{line}\n")).unwrap();
        let instances = adapt_hitab(&path).unwrap();
        assert_eq!(instances[0].gold_answers, vec!["3300", "units"]);
    }

    #[test]
    fn hitab_adapter_rejects_empty_header_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hitab.jsonl");
        let line = r#"{"id":"h-2","question":"q?","answer":["x"],"table":{"header_rows":1,"texts":[["",""],["a","b"]]}}"#;
        std::fs::write(&path, format!("{line}\n")).unwrap();
        assert!(matches!(adapt_hitab(&path), Err(Error::Schema { .. })));
    }

    #[test]
    fn tablebench_adapter_inline_and_string_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tb.jsonl");
        let inline = r#"{"id":"tb-0","question":"sum?","answer":"30","qtype":"NumericalReasoning","table":{"columns":["v"],"data":[[10],[20]]}}"#;
        let stringy = r#"{"id":"tb-1","question":"first?","answer":"a, b","table":"{\"columns\":[\"k\"],\"data\":[[\"a\"],[\"b\"]]}"}"#;
        std::fs::write(&path, format!("{inline}\n{stringy}\n")).unwrap();
        let instances = adapt_tablebench(&path).unwrap();
        assert_eq!(instances.len(), 2);
        assert_eq!(instances[0].qtype.as_deref(), Some("NumericalReasoning"));
        assert_eq!(instances[0].table.rows()[1][0], "20");
        assert_eq!(instances[1].gold_answers, vec!["a, b"]);
        assert_eq!(instances[1].table.n_rows(), 2);
    }

    #[test]
    fn tablebench_adapter_missing_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tb.jsonl");
        std::fs::write(&path, "{\"id\":\"tb-2\",\"answer\":\"x\"}\n").unwrap();
        assert!(matches!(adapt_tablebench(&path), Err(Error::Schema { .. })));
    }

    #[test]
    fn sample_full_is_permutation() {
        let xs: Vec<u32> = (0..10).collect();
        let mut sampled = sample(&xs, xs.len(), 42).unwrap();
        sampled.sort_unstable();
        assert_eq!(sampled, xs);
    }

    #[test]
    fn sample_zero_and_determinism() {
        let xs: Vec<u32> = (0..10).collect();
        assert!(sample(&xs, 0, 7).unwrap().is_empty());
        assert_eq!(sample(&xs, 3, 7).unwrap(), sample(&xs, 3, 7).unwrap());
        assert!(matches!(
            sample(&xs, 11, 7),
            Err(Error::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn sample_has_no_duplicates() {
        let xs: Vec<u32> = (0..30).collect();
        for seed in 0..20 {
            let picked = sample(&xs, 12, seed).unwrap();
            let unique: HashSet<_> = picked.iter().collect();
            assert_eq!(unique.len(), picked.len());
        }
    }
}
