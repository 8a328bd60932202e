use html5ever::{local_name, ns, QualName};
use scraper::{Html, Node, StrTendril};

use crate::table::{collect_raw_tables, expand_spans};

/// Stable id of a grid cell, e.g. `t3-r5-c2`.
pub fn anchor_id(table_id: &str, row: usize, col: usize) -> String {
    format!("{table_id}-r{row}-c{col}")
}

/// Returns the document with an `id` on every `<td>`/`<th>` naming its
/// origin position in the parsed grid. An existing id is kept as
/// `data-orig-id`.
pub fn inject_cell_anchors(html: &str) -> String {
    let mut doc = Html::parse_document(html);
    let mut targets = Vec::new();
    for raw in collect_raw_tables(&doc) {
        let spans: Vec<Vec<(usize, usize)>> = raw
            .rows
            .iter()
            .map(|row| row.iter().map(|c| (c.rowspan, c.colspan)).collect())
            .collect();
        let (_, _, slots) = expand_spans(&spans);
        let table_id = format!("t{}", raw.index);
        for row in &slots {
            for s in row.iter().flatten() {
                targets.push((raw.rows[s.raw_row][s.raw_index].node, anchor_id(&table_id, s.origin_row, s.origin_col)));
            }
        }
    }
    let id_name = QualName::new(None, ns!(), local_name!("id"));
    let orig_name = QualName::new(None, ns!(), "data-orig-id".into());
    let mut seen = std::collections::HashSet::new();
    for (node, anchor) in targets {
        // span copies point back at the same raw cell
        if !seen.insert(node) {
            continue;
        }
        let Some(mut n) = doc.tree.get_mut(node) else { continue };
        if let Node::Element(el) = n.value() {
            if let Some(pos) = el.attrs.iter().position(|(k, _)| *k == id_name) {
                let (_, old) = el.attrs.remove(pos);
                el.attrs.retain(|(k, _)| *k != orig_name);
                el.attrs.push((orig_name.clone(), old));
            }
            el.attrs.push((id_name.clone(), StrTendril::from(anchor.as_str())));
        }
    }
    doc.html()
}

#[cfg(test)]
mod tests {
    use scraper::Selector;

    use super::*;

    fn ids(html: &str) -> Vec<String> {
        let doc = Html::parse_document(html);
        let sel = Selector::parse("td, th").unwrap();
        doc.select(&sel).filter_map(|e| e.value().attr("id").map(str::to_string)).collect()
    }

    #[test]
    fn every_cell_gets_its_origin() {
        let html = r#"<table><tr><th colspan="2">Three Months Ended</th></tr>
            <tr><td>Products</td><td>10</td></tr></table>
            <table><tr><td rowspan="2">A</td><td>1</td></tr><tr><td>2</td></tr></table>"#;
        let out = inject_cell_anchors(html);
        assert_eq!(ids(&out), ["t0-r0-c0", "t0-r1-c0", "t0-r1-c1", "t1-r0-c0", "t1-r0-c1", "t1-r1-c1"]);
    }

    #[test]
    fn existing_id_is_preserved() {
        let out = inject_cell_anchors(r#"<table><tr><td id="x">1</td></tr></table>"#);
        assert!(out.contains(r#"data-orig-id="x""#));
        assert_eq!(ids(&out), ["t0-r0-c0"]);
    }

    #[test]
    fn idempotent_on_reinjection() {
        let once = inject_cell_anchors("<table><tr><td>1</td><td>2</td></tr></table>");
        assert_eq!(ids(&inject_cell_anchors(&once)), ids(&once));
    }
}
