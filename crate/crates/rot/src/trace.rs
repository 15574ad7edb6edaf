//! Recover traversal structure and the final answer from raw model output.
//!
//! Step lines look like `"Row 3: ..."` (or `Column`/`Cell`), 1-based,
//! optionally behind markdown bullets or bold. A step whose index is not
//! greater than the previous step's index opens a new traversal; the
//! convention is that a fresh pass restarts at 1, and `<=` also absorbs
//! partial restarts. Unmarked text between a traversal's last step and
//! the next traversal's first step (or the final answer) is treated as
//! reflection. Parsing is total: degenerate input yields an empty-step
//! trace, and a missing answer is `None`, never an error.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::prompt::FINAL_ANSWER_MARKER;
use crate::table::TraversalUnit;

/// One parsed reasoning step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Which traversal the step belongs to, starting at 1.
    pub traversal_index: usize,
    /// The unit index stated on the step line, starting at 1.
    pub unit_index: usize,
    pub text: String,
}

/// Parsed model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub steps: Vec<TraceStep>,
    /// Highest traversal index over all steps; 0 when there are none.
    pub traversal_count: usize,
    pub has_reflection: bool,
    pub final_answer: Option<String>,
    pub completion_tokens: usize,
    pub truncated: bool,
}

static MARKER_RE: LazyLock<Regex> = LazyLock::new(|| {
    // Line start, optional bullets/blockquote/bold, then "<unit> <k>:".
    Regex::new(r"(?i)^[\s>*\-•]*(?:\*\*)?\s*(row|column|cell)\s+(\d+)\s*(?:\*\*)?\s*:\s*(.*)$")
        .unwrap()
});

/// Parse raw output into a [`ReasoningTrace`].
///
/// `n_units` is the table's unit count for `unit` (rows, columns, or
/// cells) and must be at least 1; it is recorded context for callers
/// and does not gate marker detection, so traces that wander past the
/// table edge still parse.
pub fn parse_trace(text: &str, n_units: usize, unit: TraversalUnit) -> ReasoningTrace {
    debug_assert!(n_units >= 1, "tables have at least one unit");
    let reasoning_region = match find_answer_line(text) {
        Some(line_idx) => text.lines().take(line_idx).collect::<Vec<_>>().join("\n"),
        None => text.to_string(),
    };

    let mut steps: Vec<TraceStep> = Vec::new();
    let mut traversal = 0usize;
    let mut pending = String::new();
    let mut has_reflection = false;

    for line in reasoning_region.lines() {
        let captures = MARKER_RE
            .captures(line)
            .filter(|c| c[1].eq_ignore_ascii_case(unit.marker()));
        match captures {
            Some(c) => {
                let unit_index: usize = c[2].parse().unwrap_or(0);
                match steps.last_mut() {
                    None => {
                        // Text before the first marker is preamble, not reflection.
                        traversal = 1;
                    }
                    Some(last) if unit_index <= last.unit_index => {
                        traversal += 1;
                        if !pending.trim().is_empty() {
                            has_reflection = true;
                        }
                    }
                    Some(last) => {
                        // Continuation of the current traversal: unmarked
                        // lines since the last step belong to that step.
                        if !pending.is_empty() {
                            last.text.push('\n');
                            last.text.push_str(pending.trim_end());
                        }
                    }
                }
                pending.clear();
                steps.push(TraceStep {
                    traversal_index: traversal,
                    unit_index,
                    text: c[3].trim().to_string(),
                });
            }
            None => {
                if !pending.is_empty() {
                    pending.push('\n');
                }
                pending.push_str(line);
            }
        }
    }
    if !steps.is_empty() && !pending.trim().is_empty() {
        has_reflection = true;
    }

    let final_answer = extract_answer(text);
    let truncated = final_answer.is_none() && !ends_with_terminal_punctuation(text);
    ReasoningTrace {
        traversal_count: steps.last().map(|s| s.traversal_index).unwrap_or(0),
        steps,
        has_reflection,
        final_answer,
        completion_tokens: count_tokens(text, None),
        truncated,
    }
}

static ANSWER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!("(?i){}", regex::escape(FINAL_ANSWER_MARKER))).unwrap()
});

/// Index of the line holding the last final-answer marker, if any.
fn find_answer_line(text: &str) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| ANSWER_RE.is_match(line))
        .map(|(i, _)| i)
        .last()
}

fn ends_with_terminal_punctuation(text: &str) -> bool {
    text.lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.trim_end().ends_with(['.', '!', '?']))
        .unwrap_or(false)
}

/// Extract the answer after the last case-insensitive occurrence of
/// `"Final Answer:"`: content to the end of that line plus following
/// lines up to a blank line, trimmed of whitespace, surrounding quotes,
/// and a single trailing period. Returns `None` when the marker is
/// absent.
pub fn extract_answer(text: &str) -> Option<String> {
    let start = ANSWER_RE.find_iter(text).last()?.end();
    let tail = &text[start..];
    let mut collected = Vec::new();
    for (i, line) in tail.lines().enumerate() {
        if i > 0 && line.trim().is_empty() {
            break;
        }
        collected.push(line);
    }
    let mut answer = collected.join("\n").trim().to_string();
    for (open, close) in [('"', '"'), ('\'', '\''), ('“', '”'), ('‘', '’')] {
        if answer.len() >= 2 && answer.starts_with(open) && answer.ends_with(close) {
            answer = answer[open.len_utf8()..answer.len() - close.len_utf8()]
                .trim()
                .to_string();
            break;
        }
    }
    if let Some(stripped) = answer.strip_suffix('.') {
        answer = stripped.trim_end().to_string();
    }
    Some(answer)
}

/// Reasoning length in tokens: the endpoint-reported count when present,
/// else a whitespace-token count of the text.
pub fn count_tokens(text: &str, reported: Option<usize>) -> usize {
    reported.unwrap_or_else(|| text.split_whitespace().count())
}
