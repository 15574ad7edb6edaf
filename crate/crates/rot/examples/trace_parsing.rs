//! Recovering traversal structure from raw model output: traversal
//! count, reflection, final answer, truncation.
//!
//! ```bash
//! cargo run -p rot --example trace_parsing
//! ```

use rot::table::TraversalUnit;
use rot::trace::parse_trace;

fn main() {
    let outputs = [
        (
            "one clean pass",
            "Row 1: Hunt finished first.\nRow 2: Lauda finished second.\nRow 3: Scheckter finished third.\nFinal Answer: Lauda",
        ),
        (
            "two passes with reflection",
            "Row 1: Hunt is at position 1.\nRow 2: Lauda is at position 2.\nRow 3: Scheckter is at position 3.\nLet me verify the one right after Hunt.\nRow 1: Hunt, position 1.\nRow 2: Lauda, directly after Hunt.\nRow 3: Scheckter, later.\nFinal Answer: Lauda",
        ),
        (
            "truncated mid-pass",
            "Row 1: Hunt finished first.\nRow 2: Lauda finished seco",
        ),
        ("free-form text, no traversal", "The answer is probably Lauda"),
    ];

    for (name, text) in outputs {
        let trace = parse_trace(text, 3, TraversalUnit::Row);
        println!("--- {name} ---");
        println!(
            "traversals={} steps={} reflection={} truncated={} tokens={}",
            trace.traversal_count,
            trace.steps.len(),
            trace.has_reflection,
            trace.truncated,
            trace.completion_tokens,
        );
        println!("final answer: {:?}\n", trace.final_answer);
    }
}
