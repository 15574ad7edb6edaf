//! Canonical table representation and its Markdown dialect.
//!
//! Tables are rectangular grids of text cells with one header path per
//! column. Header paths carry hierarchy (outermost segment first); flat
//! tables use single-segment paths. The Markdown dialect is pinned:
//! one header line, one `---` separator line, one line per row, single
//! space padding inside pipes, `|` escaped as `\|`, and hierarchical
//! header paths joined with `" / "`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator used to flatten hierarchical header paths into one header line.
pub const HEADER_PATH_SEPARATOR: &str = " / ";

/// Granularity of one traversal step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraversalUnit {
    Row,
    Column,
    Cell,
}

impl TraversalUnit {
    /// Lowercase unit word, as substituted into instructions.
    pub fn word(self) -> &'static str {
        match self {
            TraversalUnit::Row => "row",
            TraversalUnit::Column => "column",
            TraversalUnit::Cell => "cell",
        }
    }

    /// Title-case marker word, as used in step lines ("Row k:").
    pub fn marker(self) -> &'static str {
        match self {
            TraversalUnit::Row => "Row",
            TraversalUnit::Column => "Column",
            TraversalUnit::Cell => "Cell",
        }
    }

    /// Number of units of this kind in a table.
    pub fn count_in(self, table: &Table) -> usize {
        match self {
            TraversalUnit::Row => table.n_rows(),
            TraversalUnit::Column => table.n_cols(),
            TraversalUnit::Cell => table.size(),
        }
    }
}

impl std::str::FromStr for TraversalUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "row" => Ok(TraversalUnit::Row),
            "column" => Ok(TraversalUnit::Column),
            "cell" => Ok(TraversalUnit::Cell),
            other => Err(Error::Config(format!("unknown traversal unit '{other}'"))),
        }
    }
}

impl std::fmt::Display for TraversalUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.word())
    }
}

/// Rectangular table with per-column header paths.
///
/// Invariants, enforced at construction: every row has exactly as many
/// cells as there are header paths, every header path is nonempty, and
/// there is at least one column. Zero rows is legal. Values are
/// immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct Table {
    header_paths: Vec<Vec<String>>,
    rows: Vec<Vec<String>>,
}

/// On-disk shape; `Table` revalidates invariants when deserialized.
#[derive(Serialize, Deserialize)]
struct TableRepr {
    header_paths: Vec<Vec<String>>,
    rows: Vec<Vec<String>>,
}

impl TryFrom<TableRepr> for Table {
    type Error = Error;

    fn try_from(repr: TableRepr) -> Result<Self> {
        Table::new(repr.header_paths, repr.rows)
    }
}

impl From<Table> for TableRepr {
    fn from(table: Table) -> Self {
        TableRepr {
            header_paths: table.header_paths,
            rows: table.rows,
        }
    }
}

impl Table {
    pub fn new(header_paths: Vec<Vec<String>>, rows: Vec<Vec<String>>) -> Result<Self> {
        if header_paths.is_empty() {
            return Err(Error::MalformedTable("table has no columns".into()));
        }
        if let Some(i) = header_paths.iter().position(|p| p.is_empty()) {
            return Err(Error::MalformedTable(format!("header path {i} is empty")));
        }
        let n_cols = header_paths.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::MalformedTable(format!(
                    "row {i} has {} cells, expected {n_cols}",
                    row.len()
                )));
            }
        }
        Ok(Table { header_paths, rows })
    }

    /// Convenience constructor for flat (single-segment) headers.
    pub fn flat(headers: &[&str], rows: &[&[&str]]) -> Result<Self> {
        Table::new(
            headers.iter().map(|h| vec![h.to_string()]).collect(),
            rows.iter()
                .map(|r| r.iter().map(|c| c.to_string()).collect())
                .collect(),
        )
    }

    pub fn header_paths(&self) -> &[Vec<String>] {
        &self.header_paths
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.header_paths.len()
    }

    /// Table size: rows times columns.
    pub fn size(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    /// Serialize to the pinned Markdown dialect.
    ///
    /// Output has exactly `n_rows + 2` lines: flattened header, `---`
    /// separator, then one line per row. Pipes in cell text are escaped
    /// as `\|`; internal newlines become a single space.
    pub fn to_markdown(&self) -> String {
        let headers = flatten_headers(&self.header_paths, HEADER_PATH_SEPARATOR);
        let mut lines = Vec::with_capacity(self.n_rows() + 2);
        lines.push(render_line(&headers));
        lines.push(render_line(&vec!["---".to_string(); self.n_cols()]));
        for row in &self.rows {
            lines.push(render_line(row));
        }
        lines.join("\n")
    }

    /// Parse the exact dialect emitted by [`Table::to_markdown`].
    ///
    /// Header cells are split on `" / "` to recover hierarchical paths,
    /// so `parse ∘ serialize` is the identity for tables whose cells are
    /// whitespace-trimmed, newline-free, and whose header segments do not
    /// themselves contain the path separator.
    pub fn from_markdown(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::MalformedTable("empty input".into()))?;
        let headers = parse_line(header_line)?;
        if headers.is_empty() {
            return Err(Error::MalformedTable("empty header line".into()));
        }
        if headers.iter().any(|h| h.is_empty()) {
            return Err(Error::MalformedTable("empty header cell".into()));
        }
        let separator_line = lines
            .next()
            .ok_or_else(|| Error::MalformedTable("missing separator line".into()))?;
        let separator = parse_line(separator_line)?;
        if separator.len() != headers.len() || separator.iter().any(|c| c != "---") {
            return Err(Error::MalformedTable(format!(
                "bad separator line {separator_line:?}"
            )));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells = parse_line(line)?;
            if cells.len() != headers.len() {
                return Err(Error::MalformedTable(format!(
                    "row {i} has {} cells, expected {}",
                    cells.len(),
                    headers.len()
                )));
            }
            rows.push(cells);
        }
        let header_paths = headers
            .iter()
            .map(|h| {
                h.split(HEADER_PATH_SEPARATOR)
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .collect();
        Table::new(header_paths, rows)
    }

    /// Extract one traversal unit as a sub-table.
    ///
    /// `Row i` keeps all headers (1 x n_cols), `Column j` keeps that
    /// column's header (n_rows x 1), `Cell k` is row-major (1 x 1).
    pub fn slice_unit(&self, unit: TraversalUnit, index: usize) -> Result<Table> {
        match unit {
            TraversalUnit::Row => {
                let row = self.rows.get(index).ok_or_else(|| {
                    Error::IndexOutOfBounds(format!("row {index} of {}", self.n_rows()))
                })?;
                Table::new(self.header_paths.clone(), vec![row.clone()])
            }
            TraversalUnit::Column => {
                let header = self.header_paths.get(index).ok_or_else(|| {
                    Error::IndexOutOfBounds(format!("column {index} of {}", self.n_cols()))
                })?;
                let rows = self.rows.iter().map(|r| vec![r[index].clone()]).collect();
                Table::new(vec![header.clone()], rows)
            }
            TraversalUnit::Cell => {
                if index >= self.size() {
                    return Err(Error::IndexOutOfBounds(format!(
                        "cell {index} of {}",
                        self.size()
                    )));
                }
                let (r, c) = (index / self.n_cols(), index % self.n_cols());
                Table::new(
                    vec![self.header_paths[c].clone()],
                    vec![vec![self.rows[r][c].clone()]],
                )
            }
        }
    }
}

/// Join each header path with `separator`, outermost segment first.
pub fn flatten_headers(header_paths: &[Vec<String>], separator: &str) -> Vec<String> {
    header_paths.iter().map(|p| p.join(separator)).collect()
}

/// Escape cell text for one Markdown cell: `|` becomes `\|`, internal
/// newlines become a single space.
fn escape_cell(cell: &str) -> String {
    cell.replace(['\n', '\r'], " ").replace('|', "\\|")
}

fn unescape_cell(cell: &str) -> String {
    cell.replace("\\|", "|")
}

fn render_line(cells: &[String]) -> String {
    let escaped: Vec<String> = cells.iter().map(|c| escape_cell(c)).collect();
    format!("| {} |", escaped.join(" | "))
}

/// Split a `| a | b |` line into trimmed, unescaped cells.
///
/// A pipe immediately preceded by a backslash is cell content; any other
/// pipe is a delimiter.
fn parse_line(line: &str) -> Result<Vec<String>> {
    let inner = line
        .strip_prefix('|')
        .and_then(|rest| rest.strip_suffix('|'))
        .ok_or_else(|| Error::MalformedTable(format!("line not pipe-delimited: {line:?}")))?;
    let mut cells = Vec::new();
    let mut current = String::new();
    let mut prev_backslash = false;
    for ch in inner.chars() {
        if ch == '|' && !prev_backslash {
            cells.push(current.clone());
            current.clear();
            prev_backslash = false;
        } else {
            current.push(ch);
            prev_backslash = ch == '\\';
        }
    }
    cells.push(current);
    Ok(cells.iter().map(|c| unescape_cell(c.trim())).collect())
}
