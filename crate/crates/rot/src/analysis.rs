//! Analysis reports over run records: traversal-count distribution,
//! reasoning-length comparison, table-size binning, annotation merging,
//! and cross-run comparison. All reports are permutation-invariant over
//! their input records and render as aligned text tables or CSV.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::RunRecord;

/// Rouge-L value at or above which a graded answer counts as correct
/// when partitioning records into correct/incorrect.
pub const ROUGE_CORRECT_THRESHOLD: f64 = 0.5;

/// Default table-size bin edges.
pub const DEFAULT_SIZE_BIN_EDGES: [usize; 5] = [0, 50, 100, 200, 400];

/// Histogram key: exact traversal counts up to 3, everything at or
/// above 4 pooled into one bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub enum TraversalBucket {
    Exact(usize),
    FourPlus,
}

impl TraversalBucket {
    fn of(count: usize) -> Self {
        if count >= 4 {
            TraversalBucket::FourPlus
        } else {
            TraversalBucket::Exact(count)
        }
    }
}

impl From<TraversalBucket> for String {
    fn from(bucket: TraversalBucket) -> String {
        bucket.to_string()
    }
}

impl std::fmt::Display for TraversalBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraversalBucket::Exact(n) => write!(f, "{n}"),
            TraversalBucket::FourPlus => write!(f, "4+"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketStats {
    /// Fraction of records in this bucket; shares sum to 1.
    pub share: f64,
    pub mean_score: f64,
    pub count: usize,
}

/// Distribution of traversal counts with per-bucket mean score.
pub fn traversal_histogram(
    records: &[RunRecord],
) -> Result<BTreeMap<TraversalBucket, BucketStats>> {
    if records.is_empty() {
        return Err(Error::EmptyAggregate("no records for histogram".into()));
    }
    let mut buckets: BTreeMap<TraversalBucket, (usize, f64)> = BTreeMap::new();
    for record in records {
        let score = record.primary_score().ok_or_else(|| Error::MissingScore {
            instance_id: record.instance_id.clone(),
            kind: crate::metrics::ScoreKind::ExactMatch,
        })?;
        let slot = buckets
            .entry(TraversalBucket::of(record.trace.traversal_count))
            .or_insert((0, 0.0));
        slot.0 += 1;
        slot.1 += score;
    }
    let total = records.len() as f64;
    Ok(buckets
        .into_iter()
        .map(|(bucket, (count, sum))| {
            (
                bucket,
                BucketStats {
                    share: count as f64 / total,
                    mean_score: sum / count as f64,
                    count,
                },
            )
        })
        .collect())
}

/// Mean reasoning length (tokens) for correct vs incorrect records.
/// A side with no members is reported absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthComparison {
    pub mean_tokens_correct: Option<f64>,
    pub mean_tokens_incorrect: Option<f64>,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

pub fn length_comparison(records: &[RunRecord]) -> Result<LengthComparison> {
    if records.is_empty() {
        return Err(Error::EmptyAggregate("no records for length comparison".into()));
    }
    let (mut sum_ok, mut n_ok, mut sum_bad, mut n_bad) = (0usize, 0usize, 0usize, 0usize);
    for record in records {
        if record.is_correct() {
            sum_ok += record.trace.completion_tokens;
            n_ok += 1;
        } else {
            sum_bad += record.trace.completion_tokens;
            n_bad += 1;
        }
    }
    let mean = |sum: usize, n: usize| -> Option<f64> {
        if n == 0 {
            None
        } else {
            Some(sum as f64 / n as f64)
        }
    };
    Ok(LengthComparison {
        mean_tokens_correct: mean(sum_ok, n_ok),
        mean_tokens_incorrect: mean(sum_bad, n_bad),
        n_correct: n_ok,
        n_incorrect: n_bad,
    })
}

/// One table-size bin: `[lo, hi)`, the last bin open-ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeBin {
    pub lo: usize,
    pub hi: Option<usize>,
    pub mean_score: Option<f64>,
    pub count: usize,
}

/// Mean score per table-size bin over half-open intervals from
/// `bin_edges` (the final bin is open-ended). A size equal to an edge
/// lands in the upper bin. Edges must be strictly increasing.
pub fn size_bins(records: &[RunRecord], bin_edges: &[usize]) -> Result<Vec<SizeBin>> {
    if bin_edges.is_empty() || bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadBins(format!(
            "edges must be nonempty and strictly increasing, got {bin_edges:?}"
        )));
    }
    if records.is_empty() {
        return Err(Error::EmptyAggregate("no records for size bins".into()));
    }
    let mut bins: Vec<(usize, f64)> = vec![(0, 0.0); bin_edges.len()];
    for record in records {
        if record.table_size < bin_edges[0] {
            log::warn!(
                "record {} table_size {} below first bin edge {}; not binned",
                record.instance_id,
                record.table_size,
                bin_edges[0]
            );
            continue;
        }
        let score = record.primary_score().ok_or_else(|| Error::MissingScore {
            instance_id: record.instance_id.clone(),
            kind: crate::metrics::ScoreKind::ExactMatch,
        })?;
        // partition_point gives the index of the first edge > size, so
        // a size exactly at an edge falls in the bin that starts there.
        let bin = bin_edges.partition_point(|&e| e <= record.table_size) - 1;
        bins[bin].0 += 1;
        bins[bin].1 += score;
    }
    Ok(bins
        .into_iter()
        .enumerate()
        .map(|(i, (count, sum))| SizeBin {
            lo: bin_edges[i],
            hi: bin_edges.get(i + 1).copied(),
            mean_score: if count == 0 { None } else { Some(sum / count as f64) },
            count,
        })
        .collect())
}

/// Human error-analysis categories for annotation import.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    Hallucination,
    Misunderstanding,
    Locating,
    OverReflection,
    Other,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnotatedRecord {
    pub record: RunRecord,
    pub category: Option<Category>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnotationMerge {
    pub records: Vec<AnnotatedRecord>,
    /// Annotation ids with no matching record; reported, never dropped
    /// silently.
    pub unknown_ids: Vec<String>,
}

pub fn merge_annotations(
    records: &[RunRecord],
    annotations: &BTreeMap<String, Category>,
) -> AnnotationMerge {
    let annotated: Vec<AnnotatedRecord> = records
        .iter()
        .map(|record| AnnotatedRecord {
            category: annotations.get(&record.instance_id).copied(),
            record: record.clone(),
        })
        .collect();
    let known: std::collections::HashSet<&str> =
        records.iter().map(|r| r.instance_id.as_str()).collect();
    let unknown_ids = annotations
        .keys()
        .filter(|id| !known.contains(id.as_str()))
        .cloned()
        .collect();
    AnnotationMerge {
        records: annotated,
        unknown_ids,
    }
}

/// Per-run summary row for side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub mean_score: f64,
    pub n: usize,
    pub mean_traversals: f64,
    pub mean_tokens: f64,
}

/// One summary row per named record set; errors name the first empty set.
pub fn compare_runs(record_sets: &[(String, Vec<RunRecord>)]) -> Result<Vec<RunSummary>> {
    let mut rows = Vec::with_capacity(record_sets.len());
    for (name, records) in record_sets {
        if records.is_empty() {
            return Err(Error::EmptyAggregate(format!("record set '{name}' is empty")));
        }
        let mut score_sum = 0.0;
        let mut traversal_sum = 0usize;
        let mut token_sum = 0usize;
        for record in records {
            score_sum += record.primary_score().ok_or_else(|| Error::MissingScore {
                instance_id: record.instance_id.clone(),
                kind: crate::metrics::ScoreKind::ExactMatch,
            })?;
            traversal_sum += record.trace.traversal_count;
            token_sum += record.trace.completion_tokens;
        }
        let n = records.len();
        rows.push(RunSummary {
            name: name.clone(),
            mean_score: score_sum / n as f64,
            n,
            mean_traversals: traversal_sum as f64 / n as f64,
            mean_tokens: token_sum as f64 / n as f64,
        });
    }
    Ok(rows)
}

/// Render rows of cells as an aligned plain-text table.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.len());
            }
        }
    }
    let render = |cells: Vec<String>| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<width$}", width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = vec![render(header.iter().map(|h| h.to_string()).collect())];
    out.extend(rows.iter().map(|r| render(r.clone())));
    out.join("\n")
}

/// Render rows of cells as CSV.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("csv write");
    for row in rows {
        writer.write_record(row).expect("csv write");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf-8")
}
