//! Run orchestration: prompt, generate, parse, score, persist.
//!
//! Instances already present in the output file are skipped, so an
//! interrupted run resumes where it stopped. Up to `concurrency` workers
//! call the backend in parallel; completed records are funneled through
//! a single writer that appends them in input order, so output files are
//! reproducible regardless of worker scheduling. On a backend failure
//! the run stops picking up new work, keeps everything already written,
//! and reports the error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use crate::backend::{Backend, GenerationRequest};
use crate::dataset::{DatasetTag, QAInstance};
use crate::error::{Error, Result};
use crate::metrics::{exact_match, rouge_l};
use crate::prompt::{
    build_prompt, default_demonstrations, select_demonstrations, Demonstration, MethodSpec,
};
use crate::records::{append_record, completed_ids, RunRecord, Timestamps};
use crate::trace::{count_tokens, parse_trace};

pub struct RunConfig {
    pub spec: MethodSpec,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub concurrency: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Demonstration pool override; the built-in per-dataset pool is
    /// used when absent.
    pub demos: Option<Vec<Demonstration>>,
    /// Print one progress line per record to stderr.
    pub progress: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    /// Records newly written by this invocation.
    pub completed: usize,
    /// Instances skipped because they were already scored in the output.
    pub skipped: usize,
}

/// Evaluate one instance end to end.
pub fn process_instance(
    instance: &QAInstance,
    backend: &dyn Backend,
    config: &RunConfig,
) -> Result<RunRecord> {
    let pool: Vec<Demonstration> = match &config.demos {
        Some(pool) => pool.clone(),
        None => default_demonstrations(instance.dataset),
    };
    let demos = select_demonstrations(&pool, config.spec.shots, config.seed)?;
    let bundle = build_prompt(&config.spec, instance, &demos)?;
    let request = GenerationRequest {
        messages: bundle.messages,
        model_id: config.model_id.clone(),
        temperature: config.temperature,
        max_tokens: config.max_tokens,
        request_id: instance.id.clone(),
    };
    let prompt_hash = request.content_hash();
    let started = chrono::Utc::now();
    let result = backend.generate(&request)?;

    let n_units = config.spec.unit.count_in(&instance.table).max(1);
    let mut trace = parse_trace(&result.text, n_units, config.spec.unit);
    trace.completion_tokens = count_tokens(&result.text, result.completion_tokens);

    // Accuracy datasets score exact match; TableBench is graded Rouge-L.
    let score = match instance.dataset {
        DatasetTag::TableBench => rouge_l(
            trace.final_answer.as_deref().unwrap_or(""),
            &instance.gold_answers,
        ),
        _ => exact_match(trace.final_answer.as_deref(), &instance.gold_answers),
    };

    Ok(RunRecord {
        instance_id: instance.id.clone(),
        method: config.spec,
        prompt_hash,
        raw_output: result.text,
        trace,
        scores: vec![score],
        table_size: instance.table.size(),
        qtype: instance.qtype.clone(),
        timestamps: Timestamps::now_pair(started),
        backend: result.backend,
    })
}

/// Run all instances not yet completed in `config.out`.
pub fn run(instances: &[QAInstance], backend: &dyn Backend, config: &RunConfig) -> Result<RunOutcome> {
    let done = completed_ids(&config.out)?;
    let pending: Vec<&QAInstance> = instances.iter().filter(|i| !done.contains(&i.id)).collect();
    let skipped = instances.len() - pending.len();
    if pending.is_empty() {
        return Ok(RunOutcome { completed: 0, skipped });
    }

    let workers = config.concurrency.clamp(1, pending.len());
    let next_item = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (sender, receiver) = mpsc::channel::<(usize, Result<RunRecord>)>();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let sender = sender.clone();
            let pending = &pending;
            let next_item = &next_item;
            let stop = &stop;
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let idx = next_item.fetch_add(1, Ordering::SeqCst);
                if idx >= pending.len() {
                    break;
                }
                let outcome = process_instance(pending[idx], backend, config);
                if outcome.is_err() {
                    stop.store(true, Ordering::SeqCst);
                }
                if sender.send((idx, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(sender);

        // Single writer: restore input order before appending so reruns
        // produce identical files (modulo timestamps).
        let mut buffer: BTreeMap<usize, RunRecord> = BTreeMap::new();
        let mut next_write = 0usize;
        let mut written = 0usize;
        let mut first_error: Option<Error> = None;
        for (idx, outcome) in receiver {
            match outcome {
                Ok(record) => {
                    buffer.insert(idx, record);
                }
                Err(e) => {
                    if first_error.is_none() {
                        first_error = Some(e);
                    }
                }
            }
            while let Some(record) = buffer.remove(&next_write) {
                append_record(&config.out, &record)?;
                written += 1;
                next_write += 1;
                if config.progress {
                    eprintln!(
                        "[{}/{}] {} score={:.3}",
                        written,
                        pending.len(),
                        record.instance_id,
                        record.primary_score().unwrap_or(0.0)
                    );
                }
            }
        }
        match first_error {
            Some(e) => Err(e),
            None => Ok(RunOutcome {
                completed: written,
                skipped,
            }),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{FixtureStore, ScriptedBackend};
    use crate::prompt::Method;
    use crate::table::{Table, TraversalUnit};

    fn instances(n: usize) -> Vec<QAInstance> {
        (0..n)
            .map(|i| QAInstance {
                id: format!("q-{i}"),
                question: format!("what is in row {i}?"),
                table: Table::flat(&["K", "V"], &[&["k", &i.to_string()]]).unwrap(),
                gold_answers: vec![i.to_string()],
                dataset: DatasetTag::WikiTq,
                qtype: None,
            })
            .collect()
    }

    fn config(out: PathBuf) -> RunConfig {
        RunConfig {
            spec: MethodSpec::new(Method::Rot, TraversalUnit::Row, 1, false).unwrap(),
            model_id: "scripted-model".into(),
            temperature: 0.0,
            max_tokens: 256,
            concurrency: 3,
            seed: 0,
            out,
            demos: None,
            progress: false,
        }
    }

    fn record_all(instances: &[QAInstance], store: &FixtureStore, config: &RunConfig) {
        for instance in instances {
            let demos = select_demonstrations(
                &default_demonstrations(instance.dataset),
                config.spec.shots,
                config.seed,
            )
            .unwrap();
            let bundle = build_prompt(&config.spec, instance, &demos).unwrap();
            let request = GenerationRequest {
                messages: bundle.messages,
                model_id: config.model_id.clone(),
                temperature: config.temperature,
                max_tokens: config.max_tokens,
                request_id: instance.id.clone(),
            };
            let answer = &instance.gold_answers[0];
            store
                .record(&request, &format!("Row 1: the value is {answer}.\nFinal Answer: {answer}"))
                .unwrap();
        }
    }

    #[test]
    fn run_scores_all_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.jsonl");
        let fixtures = dir.path().join("fixtures.jsonl");
        let data = instances(6);
        let config = config(out.clone());

        record_all(&data, &FixtureStore::open(&fixtures).unwrap(), &config);
        let backend = ScriptedBackend::open(&fixtures).unwrap();

        let outcome = run(&data, &backend, &config).unwrap();
        assert_eq!(outcome.completed, 6);
        assert_eq!(outcome.skipped, 0);

        let records = crate::records::read_records(&out).unwrap();
        assert_eq!(records.len(), 6);
        // Writer preserves input order under concurrency.
        let ids: Vec<&str> = records.iter().map(|r| r.instance_id.as_str()).collect();
        assert_eq!(ids, vec!["q-0", "q-1", "q-2", "q-3", "q-4", "q-5"]);
        assert!(records.iter().all(|r| r.primary_score() == Some(1.0)));

        let rerun = run(&data, &backend, &config).unwrap();
        assert_eq!(rerun.completed, 0);
        assert_eq!(rerun.skipped, 6);
        assert_eq!(crate::records::read_records(&out).unwrap().len(), 6);
    }

    #[test]
    fn run_preserves_order_under_heavy_concurrency() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.jsonl");
        let fixtures = dir.path().join("fixtures.jsonl");
        let data = instances(64);
        let mut config = config(out.clone());
        config.concurrency = 8;

        record_all(&data, &FixtureStore::open(&fixtures).unwrap(), &config);
        let backend = ScriptedBackend::open(&fixtures).unwrap();
        let outcome = run(&data, &backend, &config).unwrap();
        assert_eq!(outcome.completed, 64);

        let ids: Vec<String> = crate::records::read_records(&out)
            .unwrap()
            .into_iter()
            .map(|r| r.instance_id)
            .collect();
        let expected: Vec<String> = (0..64).map(|i| format!("q-{i}")).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn fixture_miss_preserves_partial_results() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.jsonl");
        let fixtures = dir.path().join("fixtures.jsonl");
        let data = instances(4);
        let mut config = config(out.clone());
        config.concurrency = 1;

        // Record fixtures for the first two instances only.
        record_all(&data[..2], &FixtureStore::open(&fixtures).unwrap(), &config);
        let backend = ScriptedBackend::open(&fixtures).unwrap();

        let err = run(&data, &backend, &config).unwrap_err();
        assert!(matches!(err, Error::FixtureMiss { .. }));
        let records = crate::records::read_records(&out).unwrap();
        assert_eq!(records.len(), 2);
    }
}
