//! Exact-match and Rouge-L scoring, including the normalization rules.
//!
//! ```bash
//! cargo run -p rot --example scoring
//! ```

use rot::metrics::{exact_match, lcs_length, normalize_answer, rouge_l, tokenize};

fn main() {
    // Exact match normalizes case, whitespace, separators, and symbols.
    let cases = [
        ("1,500", vec!["1500".to_string()]),
        ("  Paris ", vec!["paris".to_string()]),
        ("20%", vec!["20".to_string()]),
        ("$3,000", vec!["3000".to_string()]),
        ("3.0000001", vec!["3".to_string()]),
        ("b|a", vec!["a".to_string(), "b".to_string()]),
        ("wrong", vec!["right".to_string()]),
    ];
    for (pred, golds) in &cases {
        let score = exact_match(Some(pred), golds);
        println!("em({pred:?}, {golds:?}) = {}", score.value);
    }
    println!("canonical form of \"$1,500\": {:?}", normalize_answer("$1,500"));

    // Rouge-L is the F-measure over the longest common subsequence.
    let pred = "the cat sat";
    let reference = "the cat";
    let lcs = lcs_length(&tokenize(pred), &tokenize(reference));
    let score = rouge_l(pred, &[reference.to_string()]);
    println!("\nrouge_l({pred:?} vs {reference:?}): lcs={lcs}, f1={}", score.value);

    let graded = rouge_l(
        "the value rises steadily",
        &["the value rises steadily over the period".to_string()],
    );
    println!("rouge_l(partial summary) = {:.4}", graded.value);
}
