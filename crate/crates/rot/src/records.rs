//! Durable, resumable run records.
//!
//! One JSONL file per run, one record per instance, appended with an
//! explicit flush so a crash can at worst leave a partial trailing line
//! (which readers skip with a warning). Enums serialize as lowercase
//! strings and timestamps as RFC 3339. Concurrent runs funnel records
//! through a single appender.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::BackendKind;
use crate::error::{Error, Result};
use crate::metrics::{Score, ScoreKind};
use crate::prompt::MethodSpec;
use crate::trace::ReasoningTrace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: String,
    pub finished: String,
}

impl Timestamps {
    pub fn now_pair(started: chrono::DateTime<chrono::Utc>) -> Self {
        Timestamps {
            started: started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
        }
    }
}

/// Full provenance for one evaluated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub method: MethodSpec,
    pub prompt_hash: String,
    pub raw_output: String,
    pub trace: ReasoningTrace,
    pub scores: Vec<Score>,
    pub table_size: usize,
    #[serde(default)]
    pub qtype: Option<String>,
    pub timestamps: Timestamps,
    pub backend: BackendKind,
}

impl RunRecord {
    /// Value of the score of the given kind, if recorded.
    pub fn score(&self, kind: ScoreKind) -> Option<f64> {
        self.scores.iter().find(|s| s.kind == kind).map(|s| s.value)
    }

    /// The record's headline score: exact match when present, else
    /// Rouge-L. Runs record the kind that suits their dataset.
    pub fn primary_score(&self) -> Option<f64> {
        self.score(ScoreKind::ExactMatch)
            .or_else(|| self.score(ScoreKind::RougeL))
    }

    /// Correctness under the per-dataset convention: exact match must be
    /// 1, a graded Rouge-L score counts as correct at or above 0.5.
    pub fn is_correct(&self) -> bool {
        if let Some(em) = self.score(ScoreKind::ExactMatch) {
            return em == 1.0;
        }
        self.score(ScoreKind::RougeL)
            .map(|v| v >= crate::analysis::ROUGE_CORRECT_THRESHOLD)
            .unwrap_or(false)
    }

    fn validate(&self) -> Result<()> {
        let mut kinds = HashSet::new();
        for score in &self.scores {
            if !kinds.insert(score.kind) {
                return Err(Error::Config(format!(
                    "record {}: duplicate score kind {}",
                    self.instance_id, score.kind
                )));
            }
            let in_range = match score.kind {
                ScoreKind::ExactMatch => score.value == 0.0 || score.value == 1.0,
                ScoreKind::RougeL => (0.0..=1.0).contains(&score.value),
            };
            if !in_range {
                return Err(Error::Config(format!(
                    "record {}: {} score {} out of range",
                    self.instance_id, score.kind, score.value
                )));
            }
        }
        Ok(())
    }
}

/// Append one record as a JSONL line, flushed before returning.
pub fn append_record(path: impl AsRef<Path>, record: &RunRecord) -> Result<()> {
    let path = path.as_ref();
    record.validate()?;
    let line = serde_json::to_string(record)
        .map_err(|e| Error::Config(format!("serialize record: {e}")))?;
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.write_all(line.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}

/// Read all records from a run file.
///
/// A partial trailing line (crash artifact) is skipped with a warning;
/// malformed lines anywhere else are an error.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let mut records = Vec::with_capacity(lines.len());
    let last = lines.len().saturating_sub(1);
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(line) {
            Ok(record) => records.push(record),
            Err(e) if idx == last => {
                log::warn!(
                    "{}: skipping partial trailing line {}: {e}",
                    path.display(),
                    idx + 1
                );
            }
            Err(e) => {
                return Err(Error::schema(path.display().to_string(), idx + 1, e.to_string()));
            }
        }
    }
    Ok(records)
}

/// Instance ids that already have a scored record; a missing file is an
/// empty set, so fresh runs and resumed runs share one code path.
pub fn completed_ids(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(HashSet::new());
    }
    Ok(read_records(path)?
        .into_iter()
        .filter(|r| !r.scores.is_empty())
        .map(|r| r.instance_id)
        .collect())
}

/// Conventional run-file name: `{dataset}.{method}.{unit}.{shots}shot.jsonl`.
pub fn default_run_filename(dataset: &str, spec: &MethodSpec) -> String {
    format!(
        "{dataset}.{}.{}.{}shot.jsonl",
        spec.method, spec.unit, spec.shots
    )
}
