use ego_tree::{NodeId, NodeRef};
use scraper::{ElementRef, Html, Node, Selector};

use super::lexicon::{is_numeric, normalize_ws};
use super::{Cell, Grid};

const MAX_SPAN: usize = 1000;
const MAX_CONTEXT_CHARS: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub table_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct TableParse {
    pub grids: Vec<Grid>,
    pub warnings: Vec<ParseWarning>,
}

/// One `<td>`/`<th>` before span expansion.
#[derive(Debug, Clone)]
pub(crate) struct RawCell {
    pub node: NodeId,
    pub text: String,
    pub indent_level: u32,
    pub rowspan: usize,
    pub colspan: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct RawTable {
    pub index: usize,
    pub rows: Vec<Vec<RawCell>>,
    pub caption_context: Vec<String>,
}

/// A grid position after expansion: which raw cell covers it and where that
/// cell's origin sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Slot {
    pub raw_row: usize,
    pub raw_index: usize,
    pub origin_row: usize,
    pub origin_col: usize,
    /// Extent actually covered, after clipping to the table and to cells
    /// claimed earlier.
    pub rowspan: usize,
    pub colspan: usize,
}

/// Parses every `<table>` of an HTML document. Malformed tables are skipped
/// and logged.
pub fn parse_html_tables(body: &str) -> Vec<Grid> {
    let parsed = parse_html_tables_with_warnings(body);
    for w in &parsed.warnings {
        log::warn!("table t{}: {}", w.table_index, w.message);
    }
    parsed.grids
}

pub fn parse_html_tables_with_warnings(body: &str) -> TableParse {
    let doc = Html::parse_document(body);
    let mut out = TableParse::default();
    for raw in collect_raw_tables(&doc) {
        match build_grid(&raw) {
            Some(grid) => out.grids.push(grid),
            None => out.warnings.push(ParseWarning {
                table_index: raw.index,
                message: "table has no cells; skipped".to_string(),
            }),
        }
    }
    out
}

fn build_grid(raw: &RawTable) -> Option<Grid> {
    let spans: Vec<Vec<(usize, usize)>> = raw
        .rows
        .iter()
        .map(|row| row.iter().map(|c| (c.rowspan, c.colspan)).collect())
        .collect();
    let (n_rows, n_cols, slots) = expand_spans(&spans);
    if n_rows == 0 || n_cols == 0 {
        return None;
    }
    let cells = slots
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, slot)| match slot {
                    None => Cell::blank(r, c),
                    Some(s) => {
                        let rc = &raw.rows[s.raw_row][s.raw_index];
                        Cell {
                            is_numeric: is_numeric(&rc.text),
                            text: rc.text.clone(),
                            row: s.origin_row,
                            col: s.origin_col,
                            rowspan: s.rowspan,
                            colspan: s.colspan,
                            indent_level: rc.indent_level,
                        }
                    }
                })
                .collect()
        })
        .collect();
    Some(Grid {
        table_id: format!("t{}", raw.index),
        table_index: raw.index,
        cells,
        n_rows,
        n_cols,
        caption_context: raw.caption_context.clone(),
    })
}

/// HTML table-model span expansion. `spans[r]` lists `(rowspan, colspan)`
/// of the cells of row `r` in source order. Spans are clipped to the table
/// and to cells claimed earlier, so every origin covers a rectangle and the
/// rectangles never overlap.
pub(crate) fn expand_spans(spans: &[Vec<(usize, usize)>]) -> (usize, usize, Vec<Vec<Option<Slot>>>) {
    let n_rows = spans.len();
    let mut occ: Vec<Vec<Option<Slot>>> = vec![Vec::new(); n_rows];
    let free = |occ: &Vec<Vec<Option<Slot>>>, r: usize, c: usize| occ[r].get(c).is_none_or(|s| s.is_none());
    for (r, row) in spans.iter().enumerate() {
        let mut c = 0;
        for (k, &(rs, cs)) in row.iter().enumerate() {
            while !free(&occ, r, c) {
                c += 1;
            }
            let cs = (c..c + cs.max(1)).take_while(|&cc| free(&occ, r, cc)).count();
            let rs = (r..(r + rs.max(1)).min(n_rows))
                .take_while(|&rr| (c..c + cs).all(|cc| free(&occ, rr, cc)))
                .count();
            let slot = Slot {
                raw_row: r,
                raw_index: k,
                origin_row: r,
                origin_col: c,
                rowspan: rs,
                colspan: cs,
            };
            for target in occ.iter_mut().skip(r).take(rs) {
                if target.len() < c + cs {
                    target.resize(c + cs, None);
                }
                for cell in &mut target[c..c + cs] {
                    *cell = Some(slot);
                }
            }
            c += cs;
        }
    }
    let n_cols = occ.iter().map(|r| r.len()).max().unwrap_or(0);
    for row in &mut occ {
        row.resize(n_cols, None);
    }
    (n_rows, n_cols, occ)
}

/// Collects all tables of a parsed document in document order, with rows
/// that belong to each table directly (nested tables are separate entries).
pub(crate) fn collect_raw_tables(doc: &Html) -> Vec<RawTable> {
    let table_sel = Selector::parse("table").expect("selector");
    doc.select(&table_sel)
        .enumerate()
        .map(|(index, table)| RawTable {
            index,
            rows: table_rows(table),
            caption_context: caption_context(table),
        })
        .collect()
}

fn nearest_table(node: NodeRef<'_, Node>) -> Option<NodeId> {
    node.ancestors()
        .find(|a| a.value().as_element().is_some_and(|e| e.name() == "table"))
        .map(|a| a.id())
}

fn table_rows(table: ElementRef<'_>) -> Vec<Vec<RawCell>> {
    let id = table.id();
    table
        .descendants()
        .filter(|n| n.value().as_element().is_some_and(|e| e.name() == "tr"))
        .filter(|n| nearest_table(*n) == Some(id))
        .map(|tr| {
            tr.children()
                .filter_map(ElementRef::wrap)
                .filter(|e| matches!(e.value().name(), "td" | "th"))
                .map(raw_cell)
                .collect()
        })
        .collect()
}

fn span_attr(cell: &ElementRef<'_>, name: &str) -> usize {
    cell.value()
        .attr(name)
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|v| *v >= 1)
        .unwrap_or(1)
        .min(MAX_SPAN)
}

fn raw_cell(cell: ElementRef<'_>) -> RawCell {
    let mut raw_text = String::new();
    collect_text(*cell, &mut raw_text);
    let lead: String = raw_text
        .chars()
        .take_while(|c| c.is_whitespace() || *c == '\u{a0}')
        .collect();
    let lead_count = if lead.contains(['\n', '\r', '\t']) {
        lead.chars().filter(|c| *c == '\u{a0}').count()
    } else {
        lead.chars().filter(|c| *c == '\u{a0}' || *c == ' ').count()
    };
    let padding = text_padding_px(cell);
    let indent_level = (lead_count / 2) as u32 + (padding / 10.0).floor().max(0.0) as u32;
    RawCell {
        node: cell.id(),
        text: normalize_ws(&raw_text),
        indent_level,
        rowspan: span_attr(&cell, "rowspan"),
        colspan: span_attr(&cell, "colspan"),
    }
}

fn collect_text(node: NodeRef<'_, Node>, out: &mut String) {
    for child in node.children() {
        match child.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => match e.name() {
                "table" | "script" | "style" => {}
                "br" => out.push(' '),
                "p" | "div" | "li" => {
                    out.push(' ');
                    collect_text(child, out);
                    out.push(' ');
                }
                _ => collect_text(child, out),
            },
            _ => {}
        }
    }
}

/// Sum of `padding-left` on the cell and on every element wrapping its
/// first piece of text.
fn text_padding_px(cell: ElementRef<'_>) -> f64 {
    let own = padding_left_px(cell.value().attr("style"));
    let first_text = cell.descendants().find(|n| match n.value() {
        Node::Text(t) => !t.trim_matches(|c: char| c.is_whitespace()).is_empty() || t.contains('\u{a0}'),
        _ => false,
    });
    let Some(text) = first_text else {
        return own;
    };
    let wrappers: f64 = text
        .ancestors()
        .take_while(|a| a.id() != cell.id())
        .filter_map(|a| a.value().as_element().map(|e| padding_left_px(e.attr("style"))))
        .sum();
    own + wrappers
}

fn css_length_px(v: &str) -> Option<f64> {
    let v = v.trim().to_ascii_lowercase();
    let (num, factor) = if let Some(n) = v.strip_suffix("px") {
        (n, 1.0)
    } else if let Some(n) = v.strip_suffix("pt") {
        (n, 4.0 / 3.0)
    } else if let Some(n) = v.strip_suffix("rem") {
        (n, 16.0)
    } else if let Some(n) = v.strip_suffix("em") {
        (n, 16.0)
    } else {
        (v.as_str(), 1.0)
    };
    num.trim().parse::<f64>().ok().map(|x| x * factor)
}

pub(crate) fn padding_left_px(style: Option<&str>) -> f64 {
    let Some(style) = style else { return 0.0 };
    let mut px = 0.0;
    for decl in style.split(';') {
        let Some((prop, value)) = decl.split_once(':') else { continue };
        match prop.trim().to_ascii_lowercase().as_str() {
            "padding-left" => px = css_length_px(value).unwrap_or(0.0),
            "padding" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                let left = match parts.len() {
                    1 => parts[0],
                    2 | 3 => parts[1],
                    4 => parts[3],
                    _ => continue,
                };
                px = css_length_px(left).unwrap_or(0.0);
            }
            _ => {}
        }
    }
    px
}

fn element_text(node: NodeRef<'_, Node>) -> String {
    let mut s = String::new();
    match node.value() {
        Node::Text(t) => s.push_str(t),
        Node::Element(e) if matches!(e.name(), "table" | "script" | "style") => {}
        Node::Element(_) => collect_text(node, &mut s),
        _ => {}
    }
    let text = normalize_ws(&s);
    if text.chars().count() > MAX_CONTEXT_CHARS {
        let skip = text.chars().count() - MAX_CONTEXT_CHARS;
        text.chars().skip(skip).collect()
    } else {
        text
    }
}

fn caption_context(table: ElementRef<'_>) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(caption) = table
        .children()
        .filter_map(ElementRef::wrap)
        .find(|e| e.value().name() == "caption")
    {
        let text = element_text(*caption);
        if !text.is_empty() {
            out.push(text);
        }
    }
    let mut cursor: Option<NodeRef<'_, Node>> = Some(*table);
    while let Some(node) = cursor {
        if out.len() >= 2 {
            break;
        }
        for sib in node.prev_siblings() {
            if out.len() >= 2 {
                break;
            }
            let text = element_text(sib);
            if !text.is_empty() {
                out.push(text);
            }
        }
        cursor = node
            .parent()
            .filter(|p| p.value().as_element().is_some_and(|e| !matches!(e.name(), "body" | "html")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_table() {
        let grids = parse_html_tables("<table><tr><td>x</td></tr></table>");
        assert_eq!(grids.len(), 1);
        let g = &grids[0];
        assert_eq!((g.n_rows, g.n_cols), (1, 1));
        assert!(!g.cells[0][0].is_numeric);
        assert_eq!(g.table_id, "t0");
    }

    #[test]
    fn no_tables() {
        assert!(parse_html_tables("<p>nothing here</p>").is_empty());
    }

    #[test]
    fn nbsp_indent() {
        let g = &parse_html_tables("<table><tr><td>&nbsp;&nbsp;Products</td><td>1</td></tr></table>")[0];
        assert_eq!(g.cells[0][0].indent_level, 1);
        assert_eq!(g.cells[0][0].text, "Products");
    }

    #[test]
    fn formatting_whitespace_is_not_indent() {
        let html = "<table><tr><td>\n        Products</td></tr></table>";
        assert_eq!(parse_html_tables(html)[0].cells[0][0].indent_level, 0);
    }

    #[test]
    fn padding_indent() {
        let html = r#"<table>
            <tr><td style="padding-left:0">Net sales</td></tr>
            <tr><td style="padding-left: 12pt">Products</td></tr>
            <tr><td><p style="padding-left:24pt">iPhone</p></td></tr>
            <tr><td style="padding: 0 0 0 20px">Mac</td></tr>
        </table>"#;
        let g = &parse_html_tables(html)[0];
        let levels: Vec<u32> = (0..4).map(|r| g.cells[r][0].indent_level).collect();
        assert_eq!(levels, vec![0, 1, 3, 2]);
    }

    #[test]
    fn colspan_and_rowspan_expand() {
        let html = r#"<table>
            <tr><td rowspan="2">a</td><td colspan="2">b</td></tr>
            <tr><td>c</td><td>d</td></tr>
        </table>"#;
        let g = &parse_html_tables(html)[0];
        assert_eq!((g.n_rows, g.n_cols), (2, 3));
        assert_eq!(g.cells[1][0].text, "a");
        assert!(g.cells[1][0].is_origin_at(0, 0));
        assert_eq!(g.cells[0][2].text, "b");
        assert_eq!(g.cells[1][1].text, "c");
        assert_eq!(g.cells[1][2].text, "d");
        let total: usize = g.origin_cells().map(|c| c.rowspan * c.colspan).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn rowspan_clipped_and_ragged_rows_padded() {
        let html = "<table><tr><td rowspan=5>a</td><td>b</td><td>c</td></tr><tr><td>d</td></tr></table>";
        let g = &parse_html_tables(html)[0];
        assert_eq!((g.n_rows, g.n_cols), (2, 3));
        assert_eq!(g.cells[0][0].rowspan, 2);
        assert_eq!(g.cells[1][2], Cell::blank(1, 2));
        let total: usize = g.origin_cells().map(|c| c.rowspan * c.colspan).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn nested_tables_are_separate() {
        let html = "<table><tr><td>outer<table><tr><td>inner</td></tr></table></td></tr></table>";
        let grids = parse_html_tables(html);
        assert_eq!(grids.len(), 2);
        assert_eq!(grids[0].cells[0][0].text, "outer");
        assert_eq!(grids[1].cells[0][0].text, "inner");
    }

    #[test]
    fn empty_table_is_skipped_with_warning() {
        let parsed = parse_html_tables_with_warnings("<table></table><table><tr><td>1</td></tr></table>");
        assert_eq!(parsed.grids.len(), 1);
        assert_eq!(parsed.grids[0].table_id, "t1");
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].table_index, 0);
    }

    #[test]
    fn caption_context_nearest_first() {
        let html = "<body><p>Statement of operations</p><div>(in millions, except per share data)</div><table><tr><td>1</td></tr></table></body>";
        let g = &parse_html_tables(html)[0];
        assert_eq!(
            g.caption_context,
            vec!["(in millions, except per share data)".to_string(), "Statement of operations".to_string()]
        );
    }
}
