use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpotError};
use crate::ingestion::FilingDoc;
use crate::table::Grid;

pub const DEFAULT_TARGET_RECALL: f64 = 0.98;

/// Lowercased alphanumeric runs; pure-digit runs are dropped.
pub fn tokenize_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !t.chars().all(|c| c.is_ascii_digit()))
        .map(str::to_lowercase)
        .collect()
}

/// All filings of one company merged into a bag of words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyDoc {
    pub company_id: String,
    pub token_counts: BTreeMap<String, u64>,
}

impl CompanyDoc {
    pub fn from_texts<'a>(company_id: &str, texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut token_counts = BTreeMap::new();
        for text in texts {
            for tok in tokenize_words(text) {
                *token_counts.entry(tok).or_insert(0) += 1;
            }
        }
        CompanyDoc {
            company_id: company_id.to_string(),
            token_counts,
        }
    }

    pub fn count(&self, token: &str) -> u64 {
        self.token_counts.get(token).copied().unwrap_or(0)
    }
}

pub fn build_company_doc(filings: &[FilingDoc]) -> Result<CompanyDoc> {
    let first = filings.first().ok_or(SpotError::EmptyInput("filings for company document"))?;
    if let Some(other) = filings.iter().find(|f| f.company_id != first.company_id) {
        return Err(SpotError::Validation(format!(
            "filing {} belongs to {}, expected {}",
            other.filing_id, other.company_id, first.company_id
        )));
    }
    let texts: Vec<String> = filings.iter().map(FilingDoc::body_text).collect();
    Ok(CompanyDoc::from_texts(&first.company_id, texts.iter().map(String::as_str)))
}

fn idf(n_docs: usize, df: u64) -> f64 {
    (n_docs as f64 / df as f64).ln()
}

/// Weight of `token` for `company` over `corpus`: raw count times
/// `ln(|C| / df)`.
pub fn tfidf_weight(token: &str, company: &str, corpus: &[CompanyDoc]) -> Result<f64> {
    let doc = corpus
        .iter()
        .find(|d| d.company_id == company)
        .ok_or_else(|| SpotError::UnknownCompany(company.to_string()))?;
    let tf = doc.count(token);
    if tf == 0 {
        return Ok(0.0);
    }
    let df = corpus.iter().filter(|d| d.count(token) > 0).count() as u64;
    Ok(tf as f64 * idf(corpus.len(), df))
}

/// The |V|x|C| weight matrix. Stored sparsely as per-company counts plus
/// per-token document frequency; weights are derived on demand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfMatrix {
    vocabulary: Vec<String>,
    companies: Vec<String>,
    doc_freq: Vec<u64>,
    /// Number of documents the idf was computed over.
    n_docs: usize,
    /// Per company: (vocabulary index, count), sorted by index.
    counts: Vec<Vec<(u32, u64)>>,
    #[serde(skip)]
    token_index: HashMap<String, usize>,
    #[serde(skip)]
    company_index: HashMap<String, usize>,
    #[serde(skip)]
    idf: Vec<f64>,
}

impl TfidfMatrix {
    pub fn build(docs: &[CompanyDoc]) -> Result<Self> {
        if docs.is_empty() {
            return Err(SpotError::EmptyInput("company documents"));
        }
        let mut df: BTreeMap<&str, u64> = BTreeMap::new();
        for d in docs {
            for tok in d.token_counts.keys() {
                *df.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let vocabulary: Vec<String> = df.keys().map(|s| s.to_string()).collect();
        let doc_freq: Vec<u64> = df.values().copied().collect();
        let mut companies: Vec<&CompanyDoc> = docs.iter().collect();
        companies.sort_by(|a, b| a.company_id.cmp(&b.company_id));
        if let Some(w) = companies.windows(2).find(|w| w[0].company_id == w[1].company_id) {
            return Err(SpotError::Conflict {
                kind: "company document",
                id: w[0].company_id.clone(),
            });
        }
        let mut m = TfidfMatrix {
            vocabulary,
            companies: companies.iter().map(|d| d.company_id.clone()).collect(),
            doc_freq,
            n_docs: docs.len(),
            counts: Vec::new(),
            token_index: HashMap::new(),
            company_index: HashMap::new(),
            idf: Vec::new(),
        };
        m.reindex();
        m.counts = companies.iter().map(|d| m.sparse_counts(d)).collect();
        Ok(m)
    }

    fn sparse_counts(&self, doc: &CompanyDoc) -> Vec<(u32, u64)> {
        let mut out: Vec<(u32, u64)> = doc
            .token_counts
            .iter()
            .filter_map(|(t, c)| self.token_index.get(t).map(|i| (*i as u32, *c)))
            .collect();
        out.sort_unstable();
        out
    }

    fn reindex(&mut self) {
        self.token_index = self.vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        self.company_index = self.companies.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        self.idf = self.doc_freq.iter().map(|df| idf(self.n_docs, *df)).collect();
    }

    /// Adds a column for a company outside the build corpus, keeping V and
    /// idf fixed. Tokens not in V get no weight.
    pub fn fold_in(&mut self, doc: &CompanyDoc) -> Result<()> {
        if self.company_index.contains_key(&doc.company_id) {
            return Err(SpotError::Conflict {
                kind: "company column",
                id: doc.company_id.clone(),
            });
        }
        let col = self.sparse_counts(doc);
        self.company_index.insert(doc.company_id.clone(), self.companies.len());
        self.companies.push(doc.company_id.clone());
        self.counts.push(col);
        Ok(())
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn companies(&self) -> &[String] {
        &self.companies
    }

    pub fn has_company(&self, company: &str) -> bool {
        self.company_index.contains_key(company)
    }

    pub fn doc_freq(&self, token: &str) -> u64 {
        self.token_index.get(token).map_or(0, |i| self.doc_freq[*i])
    }

    fn column(&self, company: &str) -> Result<usize> {
        self.company_index
            .get(company)
            .copied()
            .ok_or_else(|| SpotError::UnknownCompany(company.to_string()))
    }

    fn weight_at(&self, col: usize, token: &str) -> f64 {
        let Some(&v) = self.token_index.get(token) else { return 0.0 };
        match self.counts[col].binary_search_by_key(&(v as u32), |(i, _)| *i) {
            Ok(pos) => self.counts[col][pos].1 as f64 * self.idf[v],
            Err(_) => 0.0,
        }
    }

    pub fn weight(&self, token: &str, company: &str) -> Result<f64> {
        Ok(self.weight_at(self.column(company)?, token))
    }

    /// `token,company,weight` lines for every nonzero weight, sorted.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(&str, &str, f64)> = Vec::new();
        for (c, col) in self.counts.iter().enumerate() {
            for (v, n) in col {
                let w = *n as f64 * self.idf[*v as usize];
                if w != 0.0 {
                    rows.push((&self.vocabulary[*v as usize], &self.companies[c], w));
                }
            }
        }
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = String::from("token,company,weight\n");
        for (t, c, w) in rows {
            let _ = writeln!(out, "{t},{c},{w}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| SpotError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SpotError::io(path, e))?;
        let mut m: TfidfMatrix = serde_json::from_str(&text)?;
        if m.doc_freq.len() != m.vocabulary.len() || m.counts.len() != m.companies.len() {
            return Err(SpotError::Format(format!("{}: inconsistent matrix dimensions", path.display())));
        }
        m.reindex();
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableScore {
    pub table_id: String,
    pub window_scores: Vec<f64>,
    pub s_max: f64,
    pub threshold: f64,
    pub emitted: bool,
}

/// Scores every 2-row window of `grid` (the single row of a 1-row table)
/// as the sum of the company weights of its distinct tokens.
pub fn score_table(grid: &Grid, company: &str, m: &TfidfMatrix, delta: f64) -> Result<TableScore> {
    let col = m.column(company)?;
    if grid.n_rows == 0 {
        return Err(SpotError::EmptyInput("table rows"));
    }
    let row_tokens: Vec<BTreeSet<String>> = (0..grid.n_rows)
        .map(|r| grid.row_texts(r).flat_map(tokenize_words).collect())
        .collect();
    let windows: Vec<BTreeSet<&String>> = if grid.n_rows == 1 {
        vec![row_tokens[0].iter().collect()]
    } else {
        row_tokens.windows(2).map(|w| w[0].iter().chain(w[1].iter()).collect()).collect()
    };
    let window_scores: Vec<f64> = windows
        .iter()
        .map(|set| set.iter().fold(0.0, |acc, t| acc + m.weight_at(col, t)))
        .collect();
    let s_max = window_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TableScore {
        table_id: grid.table_id.clone(),
        window_scores,
        s_max,
        threshold: delta,
        emitted: s_max > delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTuning {
    pub delta: f64,
    /// Recall of segment-bearing tables at `delta` on the validation set.
    pub recall: f64,
    pub warning: Option<String>,
}

/// Largest δ whose recall over positive validation tables (s_max > δ) is
/// at least `target_recall`. Input pairs are (s_max, has_segments).
pub fn tune_threshold(validation: &[(f64, bool)], target_recall: f64) -> Result<ThresholdTuning> {
    if validation.is_empty() {
        return Err(SpotError::EmptyInput("validation tables"));
    }
    let mut pos: Vec<f64> = validation.iter().filter(|(_, y)| *y).map(|(s, _)| *s).collect();
    if pos.is_empty() {
        return Err(SpotError::Validation("no segment-bearing tables in validation; recall is undefined".into()));
    }
    pos.sort_by(f64::total_cmp);
    let p = pos.len();
    let mut k = 0;
    while k + 1 < p && (p - k - 1) as f64 / p as f64 >= target_recall {
        k += 1;
    }
    let (delta, warning) = if pos[k] > 0.0 {
        (pos[k].next_down(), None)
    } else {
        let msg = format!("no positive threshold reaches recall {target_recall}; using 0");
        warn!("{msg}");
        (0.0, Some(msg))
    };
    let hit = pos.iter().filter(|s| **s > delta).count();
    Ok(ThresholdTuning {
        delta,
        recall: hit as f64 / p as f64,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<CompanyDoc> {
        vec![
            CompanyDoc::from_texts("A", ["revenue iphone iphone"]),
            CompanyDoc::from_texts("B", ["revenue gas"]),
        ]
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize_words("Cloud-Services"), ["cloud", "services"]);
        assert_eq!(tokenize_words("Revenue revenue gas 2020 Q3"), ["revenue", "revenue", "gas", "q3"]);
        let d = CompanyDoc::from_texts("X", ["Revenue revenue gas"]);
        assert_eq!(d.count("revenue"), 2);
        assert_eq!(d.count("gas"), 1);
    }

    #[test]
    fn merge_is_additive() {
        let d = CompanyDoc::from_texts("X", ["iphone", "the iphone"]);
        assert_eq!(d.count("iphone"), 2);
    }

    #[test]
    fn toy_weights() {
        let c = toy();
        let w = tfidf_weight("iphone", "A", &c).unwrap();
        assert!((w - 1.3863).abs() < 1e-4);
        assert_eq!(w, 2.0 * 2f64.ln());
        assert_eq!(tfidf_weight("revenue", "A", &c).unwrap(), 0.0);
        assert_eq!(tfidf_weight("gas", "A", &c).unwrap(), 0.0);
        assert!(matches!(tfidf_weight("gas", "Z", &c), Err(SpotError::UnknownCompany(_))));
        let m = TfidfMatrix::build(&c).unwrap();
        assert_eq!(m.weight("iphone", "A").unwrap(), w);
    }

    #[test]
    fn toy_table_score() {
        let m = TfidfMatrix::build(&toy()).unwrap();
        let g = Grid::from_texts("t0", &[vec!["iphone revenue"], vec!["total"], vec!["gas"]]);
        let s = score_table(&g, "A", &m, 1.0).unwrap();
        assert_eq!(s.window_scores.len(), 2);
        assert_eq!(s.window_scores, vec![2.0 * 2f64.ln(), 0.0]);
        assert!(s.emitted);
        let one = Grid::from_texts("t1", &[vec!["iphone iphone"]]);
        assert_eq!(score_table(&one, "A", &m, 1.0).unwrap().window_scores, vec![2.0 * 2f64.ln()]);
        assert!(matches!(score_table(&g, "Q", &m, 1.0), Err(SpotError::UnknownCompany(_))));
    }

    #[test]
    fn boilerplate_scores_zero() {
        let c = vec![
            CompanyDoc::from_texts("A", ["total revenue net income apples"]),
            CompanyDoc::from_texts("B", ["total revenue net income pears"]),
        ];
        let m = TfidfMatrix::build(&c).unwrap();
        let g = Grid::from_texts("t0", &[vec!["total revenue"], vec!["net income"]]);
        let s = score_table(&g, "A", &m, 1e-9).unwrap();
        assert_eq!(s.s_max, 0.0);
        assert!(!s.emitted);
    }

    #[test]
    fn fold_in_uses_training_idf() {
        let mut m = TfidfMatrix::build(&toy()).unwrap();
        m.fold_in(&CompanyDoc::from_texts("C", ["gas gas newword"])).unwrap();
        assert_eq!(m.weight("gas", "C").unwrap(), 2.0 * 2f64.ln());
        assert_eq!(m.weight("newword", "C").unwrap(), 0.0);
        assert!(m.fold_in(&CompanyDoc::from_texts("C", ["x"])).is_err());
    }

    #[test]
    fn dump_and_reload() {
        let m = TfidfMatrix::build(&toy()).unwrap();
        let dump = m.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "token,company,weight");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("gas,B,"));
        assert!(lines[2].starts_with("iphone,A,"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        let back = TfidfMatrix::load(&p).unwrap();
        assert_eq!(back.dump(), dump);
    }

    #[test]
    fn tuning_examples() {
        let v = [(5.0, true), (7.0, true), (0.0, false), (1.0, false)];
        let t = tune_threshold(&v, DEFAULT_TARGET_RECALL).unwrap();
        assert!(t.delta > 1.0 && t.delta < 5.0);
        assert_eq!(t.recall, 1.0);

        let all = [(3.0, true), (4.0, true), (9.0, true)];
        let t = tune_threshold(&all, DEFAULT_TARGET_RECALL).unwrap();
        assert!(t.delta < 3.0 && t.delta > 2.999_999);

        assert!(matches!(tune_threshold(&[], 0.98), Err(SpotError::EmptyInput(_))));
        let zero = tune_threshold(&[(0.0, true)], 0.98).unwrap();
        assert_eq!(zero.delta, 0.0);
        assert!(zero.warning.is_some());
    }

    #[test]
    fn tuning_allows_two_percent_misses() {
        let v: Vec<(f64, bool)> = (1..=100).map(|i| (i as f64, true)).collect();
        let t = tune_threshold(&v, 0.98).unwrap();
        assert_eq!(t.delta, 3f64.next_down());
        assert_eq!(t.recall, 0.98);
    }
}
