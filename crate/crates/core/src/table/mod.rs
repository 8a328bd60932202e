//! HTML table structure recognition.
//!
//! A table is parsed into a span-expanded [`Grid`]; [`detect_body_rect`]
//! finds the largest mostly-numeric rectangle, everything outside it is a
//! header, and [`infer_header_hierarchy`] nests row headers by indentation.

mod body;
mod headers;
pub mod lexicon;
mod parse;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use body::{brute_force_body_rect, detect_body_rect, detect_body_rect_with, BodyConfig};
pub use headers::{
    extract_headers, group_label_chains, infer_header_hierarchy, row_header_paths, row_header_paths_with_context, ExtractedHeaders,
    HeaderChain, HeaderPath, PATH_SEPARATOR,
};
pub use parse::{parse_html_tables, parse_html_tables_with_warnings, ParseWarning, TableParse};

pub(crate) use parse::{collect_raw_tables, expand_spans};

/// One position of a span-expanded grid.
///
/// Positions covered by a `rowspan`/`colspan` hold a copy of the originating
/// cell, so `row`/`col` always name the top-left origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub text: String,
    pub row: usize,
    pub col: usize,
    pub rowspan: usize,
    pub colspan: usize,
    pub indent_level: u32,
    pub is_numeric: bool,
}

impl Cell {
    pub fn blank(row: usize, col: usize) -> Self {
        Cell {
            text: String::new(),
            row,
            col,
            rowspan: 1,
            colspan: 1,
            indent_level: 0,
            is_numeric: false,
        }
    }

    /// Empty, or only a currency sign / dash placeholder.
    pub fn is_blank(&self) -> bool {
        lexicon::is_blank_like(&self.text)
    }

    /// Text that is neither numeric nor blank.
    pub fn is_text(&self) -> bool {
        !self.is_numeric && !self.is_blank()
    }

    pub fn is_origin_at(&self, row: usize, col: usize) -> bool {
        self.row == row && self.col == col
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub table_id: String,
    /// Position of the `<table>` element among all tables of the document.
    pub table_index: usize,
    /// Row-major, every row has `n_cols` entries.
    pub cells: Vec<Vec<Cell>>,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Up to two text blocks preceding the table, nearest first.
    pub caption_context: Vec<String>,
}

impl Grid {
    /// Builds a grid from plain cell texts, one origin per position.
    /// Handy for fixtures; indentation is counted from leading spaces.
    pub fn from_texts(table_id: &str, rows: &[Vec<&str>]) -> Grid {
        let n_cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let cells = rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                (0..n_cols)
                    .map(|c| {
                        let raw = row.get(c).copied().unwrap_or("");
                        let lead = raw.chars().take_while(|ch| *ch == ' ' || *ch == '\u{a0}').count();
                        let text = lexicon::normalize_ws(raw);
                        Cell {
                            is_numeric: lexicon::is_numeric(&text),
                            text,
                            row: r,
                            col: c,
                            rowspan: 1,
                            colspan: 1,
                            indent_level: (lead / 2) as u32,
                        }
                    })
                    .collect()
            })
            .collect();
        Grid {
            table_id: table_id.to_string(),
            table_index: 0,
            cells,
            n_rows: rows.len(),
            n_cols,
            caption_context: Vec::new(),
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&Cell> {
        self.cells.get(row).and_then(|r| r.get(col))
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0 || self.n_cols == 0
    }

    /// Cells that own their position (one per original `<td>`/`<th>`).
    pub fn origin_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, cell)| (r, c, cell)))
            .filter(|(r, c, cell)| cell.is_origin_at(*r, *c))
            .map(|(_, _, cell)| cell)
    }

    /// Text of every row, position-ordered; span copies are repeated.
    pub fn row_texts(&self, row: usize) -> impl Iterator<Item = &str> {
        self.cells[row].iter().map(|c| c.text.as_str())
    }

    /// Debug dump: a header line with the dimensions, then one
    /// tab-separated `row col indent is_numeric text` line per position.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}\t{}\t{}", self.table_id, self.n_rows, self.n_cols);
        for (r, row) in self.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    r, c, cell.indent_level, cell.is_numeric, cell.text
                );
            }
        }
        out
    }
}

/// Inclusive body rectangle of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BodyRect {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl BodyRect {
    pub fn new(top: usize, left: usize, bottom: usize, right: usize) -> Self {
        BodyRect {
            top,
            left,
            bottom,
            right,
        }
    }

    pub fn area(&self) -> usize {
        (self.bottom - self.top + 1) * (self.right - self.left + 1)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.top..=self.bottom).contains(&row) && (self.left..=self.right).contains(&col)
    }

    pub fn rows(&self) -> std::ops::RangeInclusive<usize> {
        self.top..=self.bottom
    }

    pub fn cols(&self) -> std::ops::RangeInclusive<usize> {
        self.left..=self.right
    }
}
