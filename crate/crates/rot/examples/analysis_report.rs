//! Analysis reports over run records: traversal histogram, reasoning
//! length by correctness, table-size bins, and run comparison.
//!
//! Builds a small synthetic record set in memory, so it runs offline.
//!
//! ```bash
//! cargo run -p rot --example analysis_report
//! ```

use rot::analysis::{
    compare_runs, length_comparison, size_bins, text_table, traversal_histogram,
    DEFAULT_SIZE_BIN_EDGES,
};
use rot::backend::BackendKind;
use rot::metrics::{Score, ScoreKind};
use rot::prompt::{Method, MethodSpec};
use rot::records::{RunRecord, Timestamps};
use rot::table::TraversalUnit;
use rot::trace::parse_trace;

fn record(id: &str, passes: usize, correct: bool, tokens: usize, table_size: usize) -> RunRecord {
    let body = "Row 1: a\nRow 2: b\n".repeat(passes);
    let raw = format!("{body}Final Answer: x");
    let mut trace = parse_trace(&raw, 2, TraversalUnit::Row);
    trace.completion_tokens = tokens;
    RunRecord {
        instance_id: id.into(),
        method: MethodSpec::new(Method::Rot, TraversalUnit::Row, 1, false).unwrap(),
        prompt_hash: String::new(),
        raw_output: raw,
        trace,
        scores: vec![Score::new(ScoreKind::ExactMatch, if correct { 1.0 } else { 0.0 })],
        table_size,
        qtype: None,
        timestamps: Timestamps {
            started: "2026-01-01T00:00:00Z".into(),
            finished: "2026-01-01T00:00:01Z".into(),
        },
        backend: BackendKind::Scripted,
    }
}

fn main() -> rot::Result<()> {
    let rot_records: Vec<RunRecord> = (0..40)
        .map(|i| {
            let passes = 1 + (i % 7) / 3; // mostly 1, some 2 and 3
            let correct = i % 5 != 0;
            record(&format!("r{i}"), passes, correct, 120 + 15 * i, 6 + 13 * (i % 9))
        })
        .collect();
    let baseline_records: Vec<RunRecord> = (0..40)
        .map(|i| record(&format!("b{i}"), 1, i % 2 == 0, 60 + 10 * i, 6 + 13 * (i % 9)))
        .collect();

    println!("traversal histogram:");
    let hist = traversal_histogram(&rot_records)?;
    let rows: Vec<Vec<String>> = hist
        .iter()
        .map(|(bucket, stats)| {
            vec![
                bucket.to_string(),
                format!("{:.3}", stats.share),
                format!("{:.3}", stats.mean_score),
                stats.count.to_string(),
            ]
        })
        .collect();
    println!("{}\n", text_table(&["traversals", "share", "mean_score", "n"], &rows));

    let lengths = length_comparison(&rot_records)?;
    println!(
        "mean tokens: correct={:?} incorrect={:?}\n",
        lengths.mean_tokens_correct, lengths.mean_tokens_incorrect
    );

    println!("table-size bins:");
    for bin in size_bins(&rot_records, &DEFAULT_SIZE_BIN_EDGES)? {
        let hi = bin.hi.map_or("inf".to_string(), |h| h.to_string());
        println!(
            "  [{:>3}, {:>3}): mean={:?} n={}",
            bin.lo, hi, bin.mean_score, bin.count
        );
    }

    println!("\nrun comparison:");
    let sets = vec![
        ("traversal".to_string(), rot_records),
        ("baseline".to_string(), baseline_records),
    ];
    let rows: Vec<Vec<String>> = compare_runs(&sets)?
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                format!("{:.3}", r.mean_score),
                r.n.to_string(),
                format!("{:.2}", r.mean_traversals),
                format!("{:.0}", r.mean_tokens),
            ]
        })
        .collect();
    println!(
        "{}",
        text_table(&["run", "mean_score", "n", "mean_traversals", "mean_tokens"], &rows)
    );
    Ok(())
}
