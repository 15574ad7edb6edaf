//! One live generation against a configured OpenAI-compatible endpoint.
//!
//! ```bash
//! ROT_ENDPOINT=http://localhost:8000 ROT_API_KEY=... \
//!   cargo run -p rot --example live_endpoint -- <model-id>
//! ```

use rot::backend::{Backend, GenerationRequest, RemoteBackend, ENDPOINT_ENV};
use rot::dataset::{DatasetTag, QAInstance};
use rot::prompt::{build_prompt, default_demonstrations, Method, MethodSpec};
use rot::table::{Table, TraversalUnit};
use rot::trace::parse_trace;

fn main() -> rot::Result<()> {
    if std::env::var(ENDPOINT_ENV).is_err() {
        eprintln!("set {ENDPOINT_ENV} (and ROT_API_KEY) to run this example");
        return Ok(());
    }
    let model = std::env::args().nth(1).unwrap_or_else(|| "unspecified".into());

    let instance = QAInstance {
        id: "live-1".into(),
        question: "Which nation finished first in the medal table?".into(),
        table: Table::flat(
            &["Rank", "Nation", "Gold"],
            &[&["1", "Norway", "14"], &["2", "Germany", "14"], &["3", "Canada", "11"]],
        )?,
        gold_answers: vec!["Norway".into()],
        dataset: DatasetTag::WikiTq,
        qtype: None,
    };
    let spec = MethodSpec::new(Method::Rot, TraversalUnit::Row, 1, false)?;
    let demos = default_demonstrations(instance.dataset);
    let bundle = build_prompt(&spec, &instance, &demos)?;

    let backend = RemoteBackend::from_env(None)?;
    let request = GenerationRequest::new(bundle.messages, model, &instance.id);
    let result = backend.generate(&request)?;
    println!("--- raw output ({} ms) ---\n{}\n", result.latency_ms, result.text);

    let trace = parse_trace(&result.text, instance.table.n_rows(), TraversalUnit::Row);
    println!(
        "traversals={} reflection={} answer={:?}",
        trace.traversal_count, trace.has_reflection, trace.final_answer
    );
    Ok(())
}
