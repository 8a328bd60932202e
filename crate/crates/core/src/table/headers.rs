use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpotError};

use super::{BodyRect, Cell, Grid};

pub const PATH_SEPARATOR: &str = " --> ";

/// Root-first header identity, rendered as `Net sales --> Products`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "String")]
pub struct HeaderPath {
    segments: Vec<String>,
}

impl HeaderPath {
    pub fn new(segments: Vec<String>) -> Result<Self> {
        for s in &segments {
            if s.trim().is_empty() {
                return Err(SpotError::Validation("empty header path segment".into()));
            }
            if s.contains(PATH_SEPARATOR.trim()) {
                return Err(SpotError::Validation(format!("segment {s:?} contains the path separator")));
            }
        }
        Ok(HeaderPath { segments })
    }

    /// Cleans raw header text into a valid segment: trailing colons are
    /// dropped and separator look-alikes are defused.
    pub fn clean_segment(text: &str) -> String {
        text.trim()
            .trim_end_matches(':')
            .trim()
            .replace(PATH_SEPARATOR.trim(), "->")
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn depth(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn leaf(&self) -> Option<&str> {
        self.segments.last().map(String::as_str)
    }

    /// Nearest ancestor segment, if the path is deeper than one.
    pub fn parent(&self) -> Option<&str> {
        let n = self.segments.len();
        (n > 1).then(|| self.segments[n - 2].as_str())
    }

    pub fn render(&self) -> String {
        self.segments.join(PATH_SEPARATOR)
    }

    pub fn parse(rendered: &str) -> Result<Self> {
        if rendered.is_empty() {
            return Ok(HeaderPath::default());
        }
        HeaderPath::new(rendered.split(PATH_SEPARATOR).map(str::to_string).collect())
    }
}

impl fmt::Display for HeaderPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl TryFrom<String> for HeaderPath {
    type Error = SpotError;
    fn try_from(value: String) -> Result<Self> {
        HeaderPath::parse(&value)
    }
}

impl From<HeaderPath> for String {
    fn from(p: HeaderPath) -> String {
        p.render()
    }
}

/// Header cells belonging to one body row (left of the body) or one body
/// column (above the body). `index` is that row or column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderChain {
    pub index: usize,
    pub cells: Vec<Cell>,
}

impl HeaderChain {
    pub fn texts(&self) -> Vec<&str> {
        self.cells.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn leaf(&self) -> Option<&Cell> {
        self.cells.last()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedHeaders {
    pub row_headers: Vec<HeaderChain>,
    pub col_headers: Vec<HeaderChain>,
}

fn chain<'a>(index: usize, cells: impl Iterator<Item = &'a Cell>) -> HeaderChain {
    let mut out: Vec<Cell> = Vec::new();
    for cell in cells.filter(|c| !c.is_blank()) {
        if out.last().is_some_and(|prev| prev.row == cell.row && prev.col == cell.col) {
            continue;
        }
        out.push(cell.clone());
    }
    HeaderChain { index, cells: out }
}

/// Splits the cells outside `body` into per-row and per-column header chains.
pub fn extract_headers(grid: &Grid, body: &BodyRect) -> ExtractedHeaders {
    let row_headers = body
        .rows()
        .map(|r| chain(r, grid.cells[r][..body.left].iter()))
        .collect();
    let col_headers = body
        .cols()
        .map(|c| chain(c, (0..body.top).map(|r| &grid.cells[r][c])))
        .collect();
    ExtractedHeaders {
        row_headers,
        col_headers,
    }
}

/// Row-group labels sitting between the last column-header row and the
/// body top, such as a `Net sales:` line above the first numeric row.
/// Their body-column cells are all blank.
pub fn group_label_chains(grid: &Grid, body: &BodyRect) -> Vec<HeaderChain> {
    let has_body_text = |r: usize| body.cols().any(|c| !grid.cells[r][c].is_blank());
    let start = (0..body.top).rev().find(|&r| has_body_text(r)).map_or(0, |r| r + 1);
    (start..body.top)
        .map(|r| chain(r, grid.cells[r][..body.left].iter()))
        .filter(|ch| !ch.cells.is_empty())
        .collect()
}

/// Stack-based nesting by indentation: a header with indent `k` becomes a
/// child of the nearest preceding header with indent below `k`. Empty
/// chains produce empty paths and leave the stack untouched.
pub fn infer_header_hierarchy(row_headers: &[HeaderChain]) -> Vec<HeaderPath> {
    let mut stack: Vec<(u32, Vec<String>)> = Vec::new();
    let mut out = Vec::with_capacity(row_headers.len());
    for ch in row_headers {
        let Some(leaf) = ch.leaf() else {
            out.push(HeaderPath::default());
            continue;
        };
        let indent = leaf.indent_level;
        while stack.last().is_some_and(|(k, _)| *k >= indent) {
            stack.pop();
        }
        let own: Vec<String> = ch
            .cells
            .iter()
            .map(|c| HeaderPath::clean_segment(&c.text))
            .filter(|s| !s.is_empty())
            .collect();
        let mut segments: Vec<String> = stack.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
        segments.extend(own.iter().cloned());
        out.push(HeaderPath { segments });
        stack.push((indent, own));
    }
    out
}

/// Header path of every body row, with group labels above the body used as
/// hierarchy context.
pub fn row_header_paths(grid: &Grid, body: &BodyRect) -> Vec<(usize, HeaderPath)> {
    paths_with_context(grid, body, false)
}

/// Like [`row_header_paths`] but also returns the group-label rows above
/// the body.
pub fn row_header_paths_with_context(grid: &Grid, body: &BodyRect) -> Vec<(usize, HeaderPath)> {
    paths_with_context(grid, body, true)
}

fn paths_with_context(grid: &Grid, body: &BodyRect, keep_context: bool) -> Vec<(usize, HeaderPath)> {
    let context = group_label_chains(grid, body);
    let skip = if keep_context { 0 } else { context.len() };
    let mut chains = context;
    chains.extend(extract_headers(grid, body).row_headers);
    let rows: Vec<usize> = chains.iter().map(|c| c.index).collect();
    infer_header_hierarchy(&chains)
        .into_iter()
        .zip(rows)
        .skip(skip)
        .map(|(p, r)| (r, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_of(items: &[(&str, u32)]) -> Vec<HeaderChain> {
        items
            .iter()
            .enumerate()
            .map(|(i, (text, indent))| {
                let mut cell = Cell::blank(i, 0);
                cell.text = text.to_string();
                cell.indent_level = *indent;
                HeaderChain { index: i, cells: vec![cell] }
            })
            .collect()
    }

    #[test]
    fn nested_child_renders_with_parent() {
        let paths = infer_header_hierarchy(&chain_of(&[("Net sales", 0), ("Products", 1)]));
        assert_eq!(paths[1].render(), "Net sales --> Products");
    }

    #[test]
    fn flat_headers_are_single_segments() {
        let paths = infer_header_hierarchy(&chain_of(&[("a", 0), ("b", 0), ("c", 0)]));
        assert!(paths.iter().all(|p| p.depth() == 1));
    }

    #[test]
    fn indent_drop_pops_to_nearest_shallower() {
        let paths = infer_header_hierarchy(&chain_of(&[("A", 0), ("B", 1), ("C", 2), ("D", 1)]));
        assert_eq!(paths[2].segments(), ["A", "B", "C"]);
        assert_eq!(paths[3].segments(), ["A", "D"]);
    }

    #[test]
    fn first_indented_header_is_root() {
        let paths = infer_header_hierarchy(&chain_of(&[("X", 2), ("Y", 1)]));
        assert_eq!(paths[0].segments(), ["X"]);
        assert_eq!(paths[1].segments(), ["Y"]);
    }

    #[test]
    fn trailing_colon_is_dropped() {
        let paths = infer_header_hierarchy(&chain_of(&[("Net sales:", 0), ("Services", 1)]));
        assert_eq!(paths[1].render(), "Net sales --> Services");
    }

    #[test]
    fn path_round_trip() {
        let p = HeaderPath::parse("Net sales --> Products").unwrap();
        assert_eq!(p.segments(), ["Net sales", "Products"]);
        assert_eq!(p.parent(), Some("Net sales"));
        assert_eq!(HeaderPath::parse(&p.render()).unwrap(), p);
        assert!(HeaderPath::new(vec!["".into()]).is_err());
    }

    #[test]
    fn whole_grid_body_has_empty_chains() {
        let g = Grid::from_texts("t0", &[vec!["1", "2"], vec!["3", "4"]]);
        let h = extract_headers(&g, &BodyRect::new(0, 0, 1, 1));
        assert_eq!(h.row_headers.len(), 2);
        assert!(h.row_headers.iter().all(|c| c.cells.is_empty()));
        assert!(h.col_headers.iter().all(|c| c.cells.is_empty()));
    }

    #[test]
    fn three_row_fixture_chains_in_order() {
        let g = Grid::from_texts(
            "t0",
            &[
                vec!["", "Q1"],
                vec!["Revenue", "10"],
                vec!["Cost", "4"],
                vec!["Profit", "6"],
            ],
        );
        let h = extract_headers(&g, &BodyRect::new(1, 1, 3, 1));
        let texts: Vec<Vec<&str>> = h.row_headers.iter().map(|c| c.texts()).collect();
        assert_eq!(texts, vec![vec!["Revenue"], vec!["Cost"], vec!["Profit"]]);
        assert_eq!(h.col_headers[0].texts(), vec!["Q1"]);
    }

    #[test]
    fn group_label_above_body_is_context() {
        let g = Grid::from_texts(
            "t0",
            &[
                vec!["", "Q1"],
                vec!["Net sales:", ""],
                vec!["  Products", "10"],
                vec!["  Services", "4"],
            ],
        );
        let body = BodyRect::new(2, 1, 3, 1);
        let paths = row_header_paths(&g, &body);
        assert_eq!(paths[0], (2, HeaderPath::parse("Net sales --> Products").unwrap()));
        assert_eq!(paths[1].1.render(), "Net sales --> Services");
    }
}
