//! Iterative table-traversal prompting for table question answering.
//!
//! This crate builds prompts that walk a model through a table one row
//! (or column, or cell) at a time, lets the model repeat full traversals
//! until it commits to an answer, and scores the results. It ships with
//! the pieces a benchmark harness needs around that core: dataset
//! adapters, an OpenAI-compatible generation client with a deterministic
//! scripted replay twin, a traversal-aware output parser, exact-match and
//! Rouge-L scoring, resumable JSONL run records, and analysis reports.
//!
//! It also contains an executable check of the method's formal claim:
//! every row-consumption order a free-form reasoning chain can take is
//! reproduced exactly by repeated in-order traversals (`formal` module).
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run -p rot --example tables            # table model + Markdown dialect
//! cargo run -p rot --example prompting         # prompt assembly for every method
//! cargo run -p rot --example trace_parsing     # traversal/answer recovery from output
//! cargo run -p rot --example scoring           # exact match + Rouge-L
//! cargo run -p rot --example subset_check      # exhaustive traversal-simulation check
//! cargo run -p rot --example scripted_replay   # record/replay backend, offline end-to-end run
//! cargo run -p rot --example analysis_report   # traversal/length/size reports from records
//! cargo run -p rot --example live_endpoint     # one live call (needs ROT_ENDPOINT/ROT_API_KEY)
//! ```
//!
//! The `rot` binary wires the same modules into subcommands
//! (`ingest`, `run`, `score`, `analyze`, `simulate`); see the README.

pub mod analysis;
pub mod backend;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod formal;
pub mod metrics;
pub mod prompt;
pub mod records;
pub mod runner;
pub mod table;
pub mod trace;

pub use error::{Error, Result};
pub use table::{Table, TraversalUnit};
