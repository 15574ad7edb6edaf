//! Prompt assembly: instruction + demonstrations + live question.
//!
//! Instruction texts are versioned assets under `assets/instructions/`,
//! one file per (method, dataset family). Traversal-based instructions
//! carry `{unit}` / `{Unit}` placeholders that are substituted with the
//! configured traversal unit, so the same asset serves row, column, and
//! cell runs. Demonstrations are assets in the canonical instance schema
//! plus `reasoning`/`answer` fields; the shipped pool has one flat-table
//! demo (shared by WikiTableQuestions and TableBench) and one
//! hierarchical demo for HiTab.
//!
//! Conventions shared with the trace parser: reasoning steps are lines
//! starting `"Row k:"` (or `"Column k:"` / `"Cell k:"`), 1-based, with a
//! fresh traversal restarting at index 1, and the answer is delivered on
//! a line starting with [`FINAL_ANSWER_MARKER`].

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{sample, DatasetTag, QAInstance};
use crate::error::{Error, Result};
use crate::table::{Table, TraversalUnit};

/// Line prefix that carries the final answer, shared between
/// instructions, demonstrations, and the trace parser.
pub const FINAL_ANSWER_MARKER: &str = "Final Answer:";

/// Prompting method variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rot,
    ShortCot,
    LongCot,
    RotNoIter,
    RotNoTraversal,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rot => "rot",
            Method::ShortCot => "short-cot",
            Method::LongCot => "long-cot",
            Method::RotNoIter => "rot-no-iter",
            Method::RotNoTraversal => "rot-no-traversal",
        }
    }

    /// Whether the method's reasoning is organized around traversal units.
    pub fn uses_traversal(self) -> bool {
        matches!(self, Method::Rot | Method::RotNoIter)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rot" => Ok(Method::Rot),
            "short-cot" => Ok(Method::ShortCot),
            "long-cot" => Ok(Method::LongCot),
            "rot-no-iter" => Ok(Method::RotNoIter),
            "rot-no-traversal" => Ok(Method::RotNoTraversal),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full method configuration for a run.
///
/// `unit` is meaningful for the traversal-based methods and ignored by
/// `RotNoTraversal`; `reasoning_model` records that the target model is
/// a reasoning-style model run zero-shot (it does not change prompt
/// structure by itself, so pick `shots` accordingly).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub unit: TraversalUnit,
    pub shots: usize,
    pub reasoning_model: bool,
}

impl MethodSpec {
    pub fn new(
        method: Method,
        unit: TraversalUnit,
        shots: usize,
        reasoning_model: bool,
    ) -> Result<Self> {
        if method == Method::LongCot && shots != 0 {
            return Err(Error::Config(format!(
                "long-cot is zero-shot by definition, got shots = {shots}"
            )));
        }
        Ok(MethodSpec {
            method,
            unit,
            shots,
            reasoning_model,
        })
    }
}

/// A worked example included in the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub question: String,
    pub table: Table,
    pub reasoning: String,
    pub answer: String,
}

/// On-disk demo record: canonical instance fields plus reasoning/answer.
#[derive(Deserialize)]
struct DemoRecord {
    #[serde(flatten)]
    instance: QAInstance,
    reasoning: String,
    answer: String,
}

/// Message author role, matching the chat-completions wire values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }
}

/// A generation-ready prompt: the instruction plus the ordered message
/// list (System first, live User question last).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub messages: Vec<ChatMessage>,
}

const ROT_FLAT: &str = include_str!("../assets/instructions/rot.flat.txt");
const ROT_HIER: &str = include_str!("../assets/instructions/rot.hierarchical.txt");
const ROT_NO_ITER_FLAT: &str = include_str!("../assets/instructions/rot-no-iter.flat.txt");
const ROT_NO_ITER_HIER: &str = include_str!("../assets/instructions/rot-no-iter.hierarchical.txt");
const ROT_NO_TRAV_FLAT: &str = include_str!("../assets/instructions/rot-no-traversal.flat.txt");
const ROT_NO_TRAV_HIER: &str =
    include_str!("../assets/instructions/rot-no-traversal.hierarchical.txt");
const SHORT_COT_FLAT: &str = include_str!("../assets/instructions/short-cot.flat.txt");
const SHORT_COT_HIER: &str = include_str!("../assets/instructions/short-cot.hierarchical.txt");
const LONG_COT_FLAT: &str = include_str!("../assets/instructions/long-cot.flat.txt");
const LONG_COT_HIER: &str = include_str!("../assets/instructions/long-cot.hierarchical.txt");

const FLAT_DEMOS: &str = include_str!("../assets/demos/flat.jsonl");
const HIER_DEMOS: &str = include_str!("../assets/demos/hierarchical.jsonl");

/// The instruction text for a method, with traversal-unit placeholders
/// substituted. `hierarchical` selects the dataset-family variant that
/// explains the flattened header convention.
pub fn instruction_for(method: Method, unit: TraversalUnit, hierarchical: bool) -> String {
    let template = match (method, hierarchical) {
        (Method::Rot, false) => ROT_FLAT,
        (Method::Rot, true) => ROT_HIER,
        (Method::RotNoIter, false) => ROT_NO_ITER_FLAT,
        (Method::RotNoIter, true) => ROT_NO_ITER_HIER,
        (Method::RotNoTraversal, false) => ROT_NO_TRAV_FLAT,
        (Method::RotNoTraversal, true) => ROT_NO_TRAV_HIER,
        (Method::ShortCot, false) => SHORT_COT_FLAT,
        (Method::ShortCot, true) => SHORT_COT_HIER,
        (Method::LongCot, false) => LONG_COT_FLAT,
        (Method::LongCot, true) => LONG_COT_HIER,
    };
    template
        .replace("{unit}", unit.word())
        .replace("{Unit}", unit.marker())
        .trim_end()
        .to_string()
}

/// Render a question + table as one user message.
pub fn render_user_message(question: &str, table: &Table) -> String {
    format!("Table:\n{}\n\nQuestion: {question}", table.to_markdown())
}

/// Built-in demonstration pool for a dataset: flat for
/// WikiTableQuestions/TableBench/custom data, hierarchical for HiTab.
pub fn default_demonstrations(dataset: DatasetTag) -> Vec<Demonstration> {
    let raw = if dataset.is_hierarchical() {
        HIER_DEMOS
    } else {
        FLAT_DEMOS
    };
    parse_demos(raw, "<built-in>").expect("built-in demos are valid")
}

/// Load a demonstration pool from a JSONL file in the canonical schema
/// plus `reasoning`/`answer` fields.
pub fn load_demonstrations(path: impl AsRef<Path>) -> Result<Vec<Demonstration>> {
    let path = path.as_ref();
    let raw = crate::dataset::read_file(path)?;
    parse_demos(&raw, &path.display().to_string())
}

fn parse_demos(raw: &str, source: &str) -> Result<Vec<Demonstration>> {
    let mut demos = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DemoRecord = serde_json::from_str(line)
            .map_err(|e| Error::schema(source, idx + 1, e.to_string()))?;
        let demo = Demonstration {
            question: record.instance.question,
            table: record.instance.table,
            reasoning: record.reasoning,
            answer: record.answer,
        };
        validate_rot_demo(&demo).map_err(|msg| Error::schema(source, idx + 1, msg))?;
        demos.push(demo);
    }
    Ok(demos)
}

/// A traversal demo must walk every row in order and deliver its answer
/// behind the final-answer marker.
fn validate_rot_demo(demo: &Demonstration) -> std::result::Result<(), String> {
    for k in 1..=demo.table.n_rows() {
        let marker = format!("Row {k}:");
        if !demo.reasoning.lines().any(|l| l.trim_start().starts_with(&marker)) {
            return Err(format!("demo reasoning is missing step {marker:?}"));
        }
    }
    match crate::trace::extract_answer(&demo.reasoning) {
        Some(found) if found == demo.answer => Ok(()),
        Some(found) => Err(format!(
            "demo reasoning answers {found:?} but the answer field says {:?}",
            demo.answer
        )),
        None => Err("demo reasoning has no final-answer line".into()),
    }
}

/// Deterministic seeded choice of `k` demonstrations from a pool.
pub fn select_demonstrations(
    pool: &[Demonstration],
    k: usize,
    seed: u64,
) -> Result<Vec<Demonstration>> {
    sample(pool, k, seed)
}

/// Assemble the full prompt for one instance.
///
/// The bundle starts with the method instruction as the single System
/// message, renders the first `spec.shots` demonstrations as alternating
/// User/Assistant turns, and ends with the live question's User message.
/// Output is a pure function of the arguments.
pub fn build_prompt(
    spec: &MethodSpec,
    instance: &QAInstance,
    demos: &[Demonstration],
) -> Result<PromptBundle> {
    if demos.len() < spec.shots {
        return Err(Error::NotEnoughDemos {
            requested: spec.shots,
            available: demos.len(),
        });
    }
    let system = instruction_for(spec.method, spec.unit, instance.dataset.is_hierarchical());
    let mut messages = Vec::with_capacity(2 * spec.shots + 2);
    messages.push(ChatMessage::new(Role::System, system.clone()));
    for demo in &demos[..spec.shots] {
        messages.push(ChatMessage::new(
            Role::User,
            render_user_message(&demo.question, &demo.table),
        ));
        messages.push(ChatMessage::new(Role::Assistant, demo.reasoning.clone()));
    }
    messages.push(ChatMessage::new(
        Role::User,
        render_user_message(&instance.question, &instance.table),
    ));
    Ok(PromptBundle { system, messages })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> QAInstance {
        QAInstance {
            id: "q-1".into(),
            question: "how many?".into(),
            table: Table::flat(&["Name", "Age"], &[&["Alice", "30"]]).unwrap(),
            gold_answers: vec!["1".into()],
            dataset: DatasetTag::WikiTq,
            qtype: None,
        }
    }

    fn spec(method: Method, unit: TraversalUnit, shots: usize) -> MethodSpec {
        MethodSpec::new(method, unit, shots, false).unwrap()
    }

    #[test]
    fn long_cot_must_be_zero_shot() {
        assert!(MethodSpec::new(Method::LongCot, TraversalUnit::Row, 1, true).is_err());
        assert!(MethodSpec::new(Method::LongCot, TraversalUnit::Row, 0, true).is_ok());
    }

    #[test]
    fn one_shot_rot_bundle_shape() {
        let demos = default_demonstrations(DatasetTag::WikiTq);
        let bundle = build_prompt(&spec(Method::Rot, TraversalUnit::Row, 1), &instance(), &demos)
            .unwrap();
        assert_eq!(bundle.messages.len(), 4);
        assert_eq!(bundle.messages[0].role, Role::System);
        assert_eq!(bundle.messages[1].role, Role::User);
        assert_eq!(bundle.messages[2].role, Role::Assistant);
        assert_eq!(bundle.messages[3].role, Role::User);
        assert_eq!(bundle.messages[0].content, bundle.system);
    }

    #[test]
    fn zero_shot_long_cot_bundle_shape() {
        let bundle = build_prompt(&spec(Method::LongCot, TraversalUnit::Row, 0), &instance(), &[])
            .unwrap();
        assert_eq!(bundle.messages.len(), 2);
        assert_eq!(bundle.messages[0].role, Role::System);
        assert_eq!(bundle.messages[1].role, Role::User);
    }

    #[test]
    fn column_unit_substitutes_cleanly() {
        let demos = default_demonstrations(DatasetTag::WikiTq);
        let bundle = build_prompt(
            &spec(Method::Rot, TraversalUnit::Column, 1),
            &instance(),
            &demos,
        )
        .unwrap();
        let system = bundle.system.to_lowercase();
        assert!(system.contains("column"));
        assert!(!system.contains("row"));
        assert!(system.contains("Column 1:".to_lowercase().as_str()));
    }

    #[test]
    fn live_message_contains_table_exactly_once() {
        let inst = instance();
        let demos = default_demonstrations(DatasetTag::WikiTq);
        let bundle = build_prompt(&spec(Method::Rot, TraversalUnit::Row, 1), &inst, &demos).unwrap();
        let live = &bundle.messages.last().unwrap().content;
        let table_md = inst.table.to_markdown();
        assert_eq!(live.matches(&table_md).count(), 1);
        assert!(live.contains(&inst.question));
    }

    #[test]
    fn build_prompt_is_pure() {
        let inst = instance();
        let demos = default_demonstrations(DatasetTag::WikiTq);
        let s = spec(Method::Rot, TraversalUnit::Row, 1);
        assert_eq!(
            build_prompt(&s, &inst, &demos).unwrap(),
            build_prompt(&s, &inst, &demos).unwrap()
        );
    }

    #[test]
    fn demo_count_matches_shots() {
        let demos: Vec<Demonstration> = default_demonstrations(DatasetTag::WikiTq)
            .into_iter()
            .cycle()
            .take(3)
            .collect();
        for shots in 0..=3 {
            let bundle =
                build_prompt(&spec(Method::Rot, TraversalUnit::Row, shots), &instance(), &demos)
                    .unwrap();
            let assistants = bundle
                .messages
                .iter()
                .filter(|m| m.role == Role::Assistant)
                .count();
            assert_eq!(assistants, shots);
            assert_eq!(bundle.messages.len(), 2 * shots + 2);
        }
    }

    #[test]
    fn not_enough_demos() {
        let err = build_prompt(&spec(Method::Rot, TraversalUnit::Row, 2), &instance(), &[])
            .unwrap_err();
        assert!(matches!(err, Error::NotEnoughDemos { .. }));
    }

    #[test]
    fn select_demonstrations_contract() {
        let pool = default_demonstrations(DatasetTag::WikiTq);
        assert!(select_demonstrations(&pool, 0, 1).unwrap().is_empty());
        assert_eq!(
            select_demonstrations(&pool, pool.len(), 5).unwrap().len(),
            pool.len()
        );
        assert_eq!(
            select_demonstrations(&pool, 1, 9).unwrap(),
            select_demonstrations(&pool, 1, 9).unwrap()
        );
    }

    #[test]
    fn built_in_demos_validate() {
        for tag in [DatasetTag::WikiTq, DatasetTag::HiTab, DatasetTag::TableBench] {
            let demos = default_demonstrations(tag);
            assert!(!demos.is_empty());
            for demo in &demos {
                assert!(demo.reasoning.contains(FINAL_ANSWER_MARKER));
            }
        }
    }

    #[test]
    fn hierarchical_instruction_mentions_header_convention() {
        let text = instruction_for(Method::Rot, TraversalUnit::Row, true);
        assert!(text.contains(" / "));
        let flat = instruction_for(Method::Rot, TraversalUnit::Row, false);
        assert!(!flat.contains("hierarchical"));
    }
}
