//! Answer normalization, exact-match accuracy, and Rouge-L.
//!
//! Exact match follows the normalization conventions of the public
//! table-QA evaluators: unicode compatibility folding, case and
//! whitespace insensitivity, quote/currency/percent stripping, thousands
//! separators removed, and numeric comparison with absolute tolerance
//! 1e-6. Rouge-L is the balanced F-measure over the longest common
//! subsequence, taking the max over references.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::records::RunRecord;

/// Absolute tolerance for numeric answer equality.
pub const NUMERIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    ExactMatch,
    RougeL,
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreKind::ExactMatch => "em",
            ScoreKind::RougeL => "rougel",
        })
    }
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "em" | "exactmatch" | "exact-match" => Ok(ScoreKind::ExactMatch),
            "rougel" | "rouge-l" => Ok(ScoreKind::RougeL),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

/// A single metric value in `[0, 1]`; exact match is always 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub kind: ScoreKind,
    pub value: f64,
}

impl Score {
    pub fn new(kind: ScoreKind, value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value));
        Score { kind, value }
    }
}

/// Canonical form of an answer for exact-match comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Canonical {
    Number(f64),
    Text(String),
}

impl Canonical {
    pub fn matches(&self, other: &Canonical) -> bool {
        match (self, other) {
            (Canonical::Number(a), Canonical::Number(b)) => (a - b).abs() <= NUMERIC_TOLERANCE,
            (Canonical::Text(a), Canonical::Text(b)) => a == b,
            _ => false,
        }
    }
}

/// Normalize an answer string to its canonical comparison form.
pub fn normalize_answer(text: &str) -> Canonical {
    // Compatibility fold first so full-width digits, ligatures, and
    // non-breaking spaces compare as their plain forms.
    let folded: String = text.nfkc().collect();
    let lower = folded.to_lowercase();
    let mut cleaned = lower.split_whitespace().collect::<Vec<_>>().join(" ");

    for (open, close) in [('"', '"'), ('\'', '\''), ('“', '”'), ('‘', '’')] {
        if cleaned.len() >= 2 && cleaned.starts_with(open) && cleaned.ends_with(close) {
            cleaned = cleaned[open.len_utf8()..cleaned.len() - close.len_utf8()]
                .trim()
                .to_string();
            break;
        }
    }

    cleaned = strip_thousands_separators(&cleaned);
    for symbol in ['$', '€', '£', '¥'] {
        if let Some(rest) = cleaned.strip_prefix(symbol) {
            cleaned = rest.trim_start().to_string();
            break;
        }
    }
    if let Some(rest) = cleaned.strip_suffix('%') {
        cleaned = rest.trim_end().to_string();
    }

    match cleaned.parse::<f64>() {
        Ok(n) if n.is_finite() => Canonical::Number(n),
        _ => Canonical::Text(cleaned),
    }
}

/// Drop commas that sit between two digits ("1,500" -> "1500") while
/// leaving list commas ("a, b") alone.
fn strip_thousands_separators(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let between_digits = c == ','
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        if !between_digits {
            out.push(c);
        }
    }
    out
}

/// Binary accuracy of a predicted answer against gold answers.
///
/// A missing prediction scores 0. With a single gold the canonical forms
/// must match; with multiple golds the prediction is split into parts
/// (on `|` when present, else on `", "`) and compared to the golds as
/// multisets of canonical forms.
pub fn exact_match(pred: Option<&str>, golds: &[String]) -> Score {
    assert!(!golds.is_empty(), "gold answers are nonempty by invariant");
    let Some(pred) = pred else {
        return Score::new(ScoreKind::ExactMatch, 0.0);
    };
    let hit = if golds.len() == 1 {
        normalize_answer(pred).matches(&normalize_answer(&golds[0]))
    } else {
        let parts: Vec<Canonical> = split_multi_answer(pred)
            .iter()
            .map(|p| normalize_answer(p))
            .collect();
        multiset_equal(
            &parts,
            &golds.iter().map(|g| normalize_answer(g)).collect::<Vec<_>>(),
        )
    };
    Score::new(ScoreKind::ExactMatch, if hit { 1.0 } else { 0.0 })
}

fn split_multi_answer(pred: &str) -> Vec<String> {
    let parts: Vec<String> = if pred.contains('|') {
        pred.split('|').map(|p| p.trim().to_string()).collect()
    } else {
        pred.split(", ").map(|p| p.trim().to_string()).collect()
    };
    parts
}

fn multiset_equal(a: &[Canonical], b: &[Canonical]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for item in a {
        match b
            .iter()
            .enumerate()
            .find(|(i, candidate)| !used[*i] && item.matches(candidate))
        {
            Some((i, _)) => used[i] = true,
            None => return false,
        }
    }
    true
}

/// Rouge-L tokenization: lowercase, split on runs of non-alphanumerics.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Length of a longest common subsequence, O(|a|*|b|) time and
/// O(min(|a|,|b|)) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; short.len() + 1];
    let mut current = vec![0usize; short.len() + 1];
    for item in long {
        for (j, other) in short.iter().enumerate() {
            current[j + 1] = if item == other {
                prev[j] + 1
            } else {
                prev[j + 1].max(current[j])
            };
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[short.len()]
}

/// Rouge-L F-measure of a prediction against references; max over refs.
///
/// Per reference: `P = LCS/|pred|`, `R = LCS/|ref|`, `F = 2PR/(P+R)`
/// (0 when `P+R = 0`). Two empty token lists score 1.0, exactly one
/// empty scores 0.0.
pub fn rouge_l(pred: &str, refs: &[String]) -> Score {
    assert!(!refs.is_empty(), "references are nonempty by invariant");
    let pred_tokens = tokenize(pred);
    let value = refs
        .iter()
        .map(|r| rouge_l_single(&pred_tokens, &tokenize(r)))
        .fold(0.0f64, f64::max);
    Score::new(ScoreKind::RougeL, value)
}

fn rouge_l_single(pred: &[String], reference: &[String]) -> f64 {
    match (pred.is_empty(), reference.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let lcs = lcs_length(pred, reference) as f64;
    let precision = lcs / pred.len() as f64;
    let recall = lcs / reference.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean of the requested score kind over records, with a per-qtype
/// breakdown. Errors on empty input and on records missing the kind.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreSummary {
    pub kind: ScoreKind,
    pub mean: f64,
    pub count: usize,
    pub per_qtype: BTreeMap<String, QtypeSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QtypeSummary {
    pub mean: f64,
    pub count: usize,
}

pub fn aggregate(records: &[RunRecord], kind: ScoreKind) -> Result<ScoreSummary> {
    if records.is_empty() {
        return Err(Error::EmptyAggregate("no records".into()));
    }
    let mut total = 0.0;
    let mut by_qtype: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for record in records {
        let score = record
            .score(kind)
            .ok_or_else(|| Error::MissingScore {
                instance_id: record.instance_id.clone(),
                kind,
            })?;
        total += score;
        let qtype = record.qtype.clone().unwrap_or_else(|| "unknown".into());
        let slot = by_qtype.entry(qtype).or_insert((0.0, 0));
        slot.0 += score;
        slot.1 += 1;
    }
    Ok(ScoreSummary {
        kind,
        mean: total / records.len() as f64,
        count: records.len(),
        per_qtype: by_qtype
            .into_iter()
            .map(|(qtype, (sum, n))| {
                (
                    qtype,
                    QtypeSummary {
                        mean: sum / n as f64,
                        count: n,
                    },
                )
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn canon_eq(a: &str, b: &str) -> bool {
        normalize_answer(a).matches(&normalize_answer(b))
    }

    #[test]
    fn normalization_examples() {
        assert!(canon_eq("1,500", "1500"));
        assert!(canon_eq("  Paris ", "paris"));
        assert!(canon_eq("20%", "20"));
        assert!(canon_eq("$3,000", "3000"));
        assert!(!canon_eq("paris", "london"));
    }

    #[test]
    fn normalization_folds_compatibility_forms() {
        // Full-width digits and the no-break space fold to ASCII.
        assert!(canon_eq("１５００", "1500"));
        assert!(canon_eq("a\u{a0}b", "a b"));
    }

    #[test]
    fn exact_match_missing_pred() {
        assert_eq!(exact_match(None, &["x".into()]).value, 0.0);
    }

    #[test]
    fn exact_match_multiset() {
        assert_eq!(exact_match(Some("b|a"), &["a".into(), "b".into()]).value, 1.0);
        assert_eq!(exact_match(Some("b, a"), &["a".into(), "b".into()]).value, 1.0);
        assert_eq!(exact_match(Some("a|a"), &["a".into(), "b".into()]).value, 0.0);
        assert_eq!(exact_match(Some("a"), &["a".into(), "b".into()]).value, 0.0);
    }

    #[test]
    fn exact_match_numeric_tolerance() {
        assert_eq!(exact_match(Some("3.0000001"), &["3".into()]).value, 1.0);
        assert_eq!(exact_match(Some("3.1"), &["3".into()]).value, 0.0);
    }

    #[test]
    fn rouge_l_known_value() {
        let score = rouge_l("the cat sat", &["the cat".into()]);
        assert!((score.value - 0.8).abs() < 1e-9);
    }

    #[test]
    fn rouge_l_identity_and_disjoint() {
        assert_eq!(rouge_l("abc", &["abc".into()]).value, 1.0);
        assert_eq!(rouge_l("x y", &["p q".into()]).value, 0.0);
    }

    #[test]
    fn rouge_l_empty_conventions() {
        assert_eq!(rouge_l("", &["".into()]).value, 1.0);
        assert_eq!(rouge_l("", &["word".into()]).value, 0.0);
        assert_eq!(rouge_l("word", &["".into()]).value, 0.0);
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_length(&["a", "b", "c"], &["a", "c"]), 2);
        assert_eq!(lcs_length::<&str>(&[], &["a"]), 0);
        assert_eq!(lcs_length(&["x"], &["x"]), 1);
    }

    proptest! {
        #[test]
        fn lcs_symmetry_and_bounds(
            a in proptest::collection::vec("[a-c]", 0..30),
            b in proptest::collection::vec("[a-c]", 0..30),
        ) {
            let l = lcs_length(&a, &b);
            prop_assert_eq!(l, lcs_length(&b, &a));
            prop_assert!(l <= a.len().min(b.len()));
            prop_assert_eq!(lcs_length(&a, &a), a.len());
        }

        #[test]
        fn rouge_l_bounded_and_monotone_in_refs(
            pred in "[a-d ]{1,20}",
            r1 in "[a-d ]{1,20}",
            r2 in "[a-d ]{1,20}",
        ) {
            let one = rouge_l(&pred, std::slice::from_ref(&r1)).value;
            let both = rouge_l(&pred, &[r1, r2]).value;
            prop_assert!((0.0..=1.0).contains(&one));
            prop_assert!(both >= one);
        }

        #[test]
        fn exact_match_invariant_under_gold_permutation(
            golds in proptest::collection::vec("[a-z]{1,4}", 2..5),
        ) {
            let pred = golds.join("|");
            let mut reversed = golds.clone();
            reversed.reverse();
            prop_assert_eq!(
                exact_match(Some(&pred), &golds).value,
                exact_match(Some(&pred), &reversed).value
            );
        }
    }

    #[test]
    fn rouge_l_self_is_one() {
        for text in ["hello world", "a", "Multi word phrase here"] {
            assert_eq!(rouge_l(text, &[text.to_string()]).value, 1.0);
        }
    }

    #[test]
    fn aggregate_mean_and_errors() {
        use crate::backend::BackendKind;
        use crate::prompt::{Method, MethodSpec};
        use crate::records::{RunRecord, Timestamps};
        use crate::table::TraversalUnit;

        let record = |id: &str, value: f64, qtype: &str| RunRecord {
            instance_id: id.into(),
            method: MethodSpec::new(Method::Rot, TraversalUnit::Row, 1, false).unwrap(),
            prompt_hash: "h".into(),
            raw_output: String::new(),
            trace: crate::trace::parse_trace("", 1, TraversalUnit::Row),
            scores: vec![Score::new(ScoreKind::ExactMatch, value)],
            table_size: 1,
            qtype: Some(qtype.into()),
            timestamps: Timestamps {
                started: "2026-01-01T00:00:00Z".into(),
                finished: "2026-01-01T00:00:00Z".into(),
            },
            backend: BackendKind::Scripted,
        };
        let records = vec![
            record("a", 1.0, "lookup"),
            record("b", 0.0, "lookup"),
            record("c", 1.0, "count"),
            record("d", 1.0, "count"),
        ];
        let summary = aggregate(&records, ScoreKind::ExactMatch).unwrap();
        assert_eq!(summary.mean, 0.75);
        assert_eq!(summary.count, 4);
        assert_eq!(summary.per_qtype["lookup"].mean, 0.5);
        assert_eq!(summary.per_qtype["count"].count, 2);

        assert_eq!(
            aggregate(&records[..1], ScoreKind::ExactMatch).unwrap().mean,
            1.0
        );
        assert!(matches!(
            aggregate(&[], ScoreKind::ExactMatch),
            Err(Error::EmptyAggregate(_))
        ));
        assert!(matches!(
            aggregate(&records, ScoreKind::RougeL),
            Err(Error::MissingScore { .. })
        ));
    }
}
