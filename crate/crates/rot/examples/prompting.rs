//! Prompt assembly for every method variant: instructions, seeded
//! demonstration selection, and the final message list.
//!
//! ```bash
//! cargo run -p rot --example prompting
//! ```

use rot::dataset::{DatasetTag, QAInstance};
use rot::prompt::{
    build_prompt, default_demonstrations, select_demonstrations, Method, MethodSpec,
};
use rot::table::{Table, TraversalUnit};

fn main() -> rot::Result<()> {
    let instance = QAInstance {
        id: "demo".into(),
        question: "Which driver finished immediately after Hunt?".into(),
        table: Table::flat(
            &["Position", "Driver"],
            &[&["1", "Hunt"], &["2", "Lauda"], &["3", "Scheckter"]],
        )?,
        gold_answers: vec!["Lauda".into()],
        dataset: DatasetTag::WikiTq,
        qtype: None,
    };

    let pool = default_demonstrations(instance.dataset);
    let demos = select_demonstrations(&pool, 1, 0)?;

    for method in [
        Method::Rot,
        Method::ShortCot,
        Method::LongCot,
        Method::RotNoIter,
        Method::RotNoTraversal,
    ] {
        // Reasoning-style models run zero-shot; everything else one-shot.
        let shots = if method == Method::LongCot { 0 } else { 1 };
        let spec = MethodSpec::new(method, TraversalUnit::Row, shots, method == Method::LongCot)?;
        let bundle = build_prompt(&spec, &instance, &demos)?;
        println!("=== {method} ({} messages) ===", bundle.messages.len());
        println!("{}\n", bundle.system.lines().next().unwrap_or_default());
    }

    // The traversal unit is substituted into the instruction text.
    let column_spec = MethodSpec::new(Method::Rot, TraversalUnit::Column, 1, false)?;
    let bundle = build_prompt(&column_spec, &instance, &demos)?;
    println!("=== rot over columns ===");
    println!("{}", bundle.system);
    println!("\n--- live user message ---\n{}", bundle.messages.last().unwrap().content);
    Ok(())
}
