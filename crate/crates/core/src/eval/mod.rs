//! Synthetic corpus, company-disjoint splits and the metric suite.

mod corpus;
mod metrics;
mod names;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{Label, LabeledHeader};
use crate::error::{Result, SpotError};
use crate::filter::{build_company_doc, has_financial_content, score_table, TfidfMatrix};
use crate::ingestion::FilingDoc;
use crate::table::parse_html_tables;
use crate::types::Sector;

pub use corpus::{generate_corpus, header_rows, Corpus, CorpusSpec, TableKind};
pub use metrics::{compute_metrics, f1_from, sector_report, Metrics};

/// One line of the labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub filing_id: String,
    pub table_id: String,
    pub row_index: usize,
    pub header_path: String,
    pub label: Label,
    pub company_id: String,
    pub sector: Sector,
}

impl LabelRecord {
    pub fn header(&self) -> LabeledHeader {
        LabeledHeader {
            text: self.header_path.clone(),
            label: self.label,
            company_id: self.company_id.clone(),
            sector: self.sector,
        }
    }
}

pub fn write_labels(path: &Path, labels: &[LabelRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for l in labels {
        w.serialize(l)?;
    }
    w.flush().map_err(|e| SpotError::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<LabelRecord>, _>>()?)
}

/// Test company ids for a company-level split: a seeded shuffle of the
/// sorted ids, first `round(fraction * n)` taken (at least one on each
/// side).
pub fn test_companies<'a>(companies: impl IntoIterator<Item = &'a str>, test_fraction: f64, seed: u64) -> Result<BTreeSet<String>> {
    let mut ids: Vec<String> = companies.into_iter().map(str::to_string).collect::<BTreeSet<_>>().into_iter().collect();
    if ids.len() < 2 {
        return Err(SpotError::Validation(format!("need at least 2 companies to split, got {}", ids.len())));
    }
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(SpotError::Validation(format!("test fraction {test_fraction} outside [0, 1]")));
    }
    let n_test = ((test_fraction * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(ids.into_iter().take(n_test).collect())
}

/// Splits records so that every company lands wholly on one side.
pub fn split_by_company<T: HasCompany + Clone>(items: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let test = test_companies(items.iter().map(|i| i.company_id()), test_fraction, seed)?;
    let (te, tr): (Vec<T>, Vec<T>) = items.iter().cloned().partition(|i| test.contains(i.company_id()));
    Ok((tr, te))
}

pub trait HasCompany {
    fn company_id(&self) -> &str;
}

/// `(s_max, has_segments)` for every labeled financial table of the given
/// filings, the input of threshold tuning. A table has segments when any
/// of its labeled rows is operating.
pub fn table_score_pairs(filings: &[FilingDoc], labels: &[LabelRecord], m: &TfidfMatrix) -> Result<Vec<(f64, bool)>> {
    let mut by_table: BTreeMap<(&str, &str), bool> = BTreeMap::new();
    for l in labels {
        *by_table.entry((&l.filing_id, &l.table_id)).or_insert(false) |= l.label == Label::Operating;
    }
    let mut matrix = m.clone();
    let mut out = Vec::new();
    for f in filings {
        if !matrix.has_company(&f.company_id) {
            matrix.fold_in(&build_company_doc(std::slice::from_ref(f))?)?;
        }
        for grid in parse_html_tables(&f.body) {
            let Some(&positive) = by_table.get(&(f.filing_id.as_str(), grid.table_id.as_str())) else {
                continue;
            };
            if !has_financial_content(&grid) {
                continue;
            }
            out.push((score_table(&grid, &f.company_id, &matrix, 0.0)?.s_max, positive));
        }
    }
    Ok(out)
}

impl HasCompany for LabeledHeader {
    fn company_id(&self) -> &str {
        &self.company_id
    }
}

impl HasCompany for LabelRecord {
    fn company_id(&self) -> &str {
        &self.company_id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(company: &str, i: usize) -> LabelRecord {
        LabelRecord {
            filing_id: format!("{company}-f"),
            table_id: "t0".into(),
            row_index: i,
            header_path: "Net sales --> Widgets, large".into(),
            label: Label::Operating,
            company_id: company.into(),
            sector: Sector::Chemicals,
        }
    }

    #[test]
    fn ten_companies_two_test() {
        let items: Vec<LabelRecord> = (0..10).flat_map(|c| (0..3).map(move |i| rec(&format!("c{c}"), i))).collect();
        let (tr, te) = split_by_company(&items, 0.2, 7).unwrap();
        let a: BTreeSet<&str> = tr.iter().map(|r| r.company_id.as_str()).collect();
        let b: BTreeSet<&str> = te.iter().map(|r| r.company_id.as_str()).collect();
        assert_eq!(b.len(), 2);
        assert!(a.is_disjoint(&b));
        assert_eq!(tr.len() + te.len(), items.len());
    }

    #[test]
    fn paper_split_shape() {
        let ids: Vec<String> = (0..149).map(|i| format!("co{i:03}")).collect();
        let test = test_companies(ids.iter().map(String::as_str), 30.0 / 149.0, 1).unwrap();
        assert_eq!(test.len(), 30);
    }

    #[test]
    fn order_does_not_change_partition() {
        let mut items: Vec<LabelRecord> = (0..12).flat_map(|c| (0..2).map(move |i| rec(&format!("c{c}"), i))).collect();
        let (_, te1) = split_by_company(&items, 0.25, 3).unwrap();
        items.reverse();
        let (_, te2) = split_by_company(&items, 0.25, 3).unwrap();
        let s1: BTreeSet<&str> = te1.iter().map(|r| r.company_id.as_str()).collect();
        let s2: BTreeSet<&str> = te2.iter().map(|r| r.company_id.as_str()).collect();
        assert_eq!(s1, s2);
    }

    #[test]
    fn too_few_companies() {
        assert!(split_by_company(&[rec("only", 0)], 0.5, 1).is_err());
    }

    #[test]
    fn labels_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        let items = vec![rec("a", 0), rec("b", 4)];
        write_labels(&p, &items).unwrap();
        assert_eq!(read_labels(&p).unwrap(), items);
    }

    #[test]
    fn score_pairs_cover_labeled_financial_tables() {
        let spec = CorpusSpec::with_shape(3, &[(Sector::Tech, 2), (Sector::OilGas, 2)], 1, 6);
        let corpus = generate_corpus(&spec).unwrap();
        let docs: Vec<_> = corpus
            .filings
            .iter()
            .map(|f| build_company_doc(std::slice::from_ref(f)).unwrap())
            .collect();
        let m = TfidfMatrix::build(&docs).unwrap();
        let pairs = table_score_pairs(&corpus.filings, &corpus.labels, &m).unwrap();
        // rosters carry no financial content
        assert_eq!(pairs.len(), 4 * 5);
        assert_eq!(pairs.iter().filter(|(_, y)| *y).count(), 4 * 2);
        let tuned = crate::filter::tune_threshold(&pairs, 0.95).unwrap();
        assert!(tuned.recall >= 0.95);
    }

}
