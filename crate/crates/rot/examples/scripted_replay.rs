//! Offline end-to-end evaluation with the scripted backend: record
//! completions keyed by prompt hash, then run the full
//! prompt -> generate -> parse -> score -> persist loop without a
//! network.
//!
//! ```bash
//! cargo run -p rot --example scripted_replay
//! ```

use rot::backend::{FixtureStore, GenerationRequest, ScriptedBackend};
use rot::dataset::{DatasetTag, QAInstance};
use rot::prompt::{build_prompt, default_demonstrations, select_demonstrations, Method, MethodSpec};
use rot::records::read_records;
use rot::runner::{run, RunConfig};
use rot::table::{Table, TraversalUnit};

fn instances() -> rot::Result<Vec<QAInstance>> {
    Ok(vec![
        QAInstance {
            id: "x-1".into(),
            question: "What is the capital of France?".into(),
            table: Table::flat(&["Country", "Capital"], &[&["France", "Paris"], &["Spain", "Madrid"]])?,
            gold_answers: vec!["Paris".into()],
            dataset: DatasetTag::WikiTq,
            qtype: None,
        },
        QAInstance {
            id: "x-2".into(),
            question: "How many goals did the Blues score?".into(),
            table: Table::flat(&["Team", "Goals"], &[&["Reds", "4"], &["Blues", "5"]])?,
            gold_answers: vec!["5".into()],
            dataset: DatasetTag::WikiTq,
            qtype: None,
        },
    ])
}

fn main() -> rot::Result<()> {
    let dir = std::env::temp_dir().join("rot-scripted-replay");
    std::fs::create_dir_all(&dir).map_err(|e| rot::Error::io(&dir, e))?;
    let fixtures_path = dir.join("fixtures.jsonl");
    let out_path = dir.join("records.jsonl");
    let _ = std::fs::remove_file(&fixtures_path);
    let _ = std::fs::remove_file(&out_path);

    let data = instances()?;
    let spec = MethodSpec::new(Method::Rot, TraversalUnit::Row, 1, false)?;

    // Record one canned completion per instance, keyed by the exact
    // prompt the runner will build.
    let store = FixtureStore::open(&fixtures_path)?;
    let canned = [
        "Row 1: France's capital is Paris.\nRow 2: Spain's capital is Madrid.\nFinal Answer: Paris",
        "Row 1: The Reds scored 4.\nRow 2: The Blues scored 5.\nFinal Answer: 5",
    ];
    for (instance, text) in data.iter().zip(canned) {
        let demos = select_demonstrations(&default_demonstrations(instance.dataset), 1, 0)?;
        let bundle = build_prompt(&spec, instance, &demos)?;
        let request = GenerationRequest::new(bundle.messages, "replay-model", &instance.id);
        store.record(&request, text)?;
    }
    println!("recorded {} fixture(s) in {}", store.len(), fixtures_path.display());

    let backend = ScriptedBackend::open(&fixtures_path)?;
    let config = RunConfig {
        spec,
        model_id: "replay-model".into(),
        temperature: 0.0,
        max_tokens: 8192,
        concurrency: 2,
        seed: 0,
        out: out_path.clone(),
        demos: None,
        progress: false,
    };
    let outcome = run(&data, &backend, &config)?;
    println!("run: {} new, {} skipped", outcome.completed, outcome.skipped);

    // Resume is a no-op.
    let rerun = run(&data, &backend, &config)?;
    println!("rerun: {} new, {} skipped", rerun.completed, rerun.skipped);

    for record in read_records(&out_path)? {
        println!(
            "{}: answer={:?} score={:?} traversals={}",
            record.instance_id,
            record.trace.final_answer,
            record.primary_score(),
            record.trace.traversal_count,
        );
    }
    Ok(())
}
