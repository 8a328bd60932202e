//! Feed polling, earnings classification and the on-disk filing store.

mod feed;
mod store;

use std::path::Path;

use chrono::{DateTime, Utc};
use scraper::Html;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpotError};
use crate::types::{DocType, Sector};

pub use feed::{parse_feed, poll_feed, FeedEntry, SeenEntries};
pub use store::{FilingMeta, FilingStore};
pub(crate) use store::check_id;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilingDoc {
    pub filing_id: String,
    pub company_id: String,
    pub sector: Sector,
    pub doc_type: DocType,
    pub filed_at: DateTime<Utc>,
    pub body: String,
    pub is_earnings: bool,
}

impl FilingDoc {
    /// Visible text of the body, whitespace-collapsed.
    pub fn body_text(&self) -> String {
        html_text(&self.body)
    }
}

pub(crate) fn html_text(html: &str) -> String {
    let doc = Html::parse_document(html);
    let mut out = String::with_capacity(html.len() / 2);
    for node in doc.tree.root().descendants() {
        if let Some(text) = node.value().as_text() {
            let hidden = node.ancestors().any(|a| {
                a.value()
                    .as_element()
                    .is_some_and(|e| matches!(e.name(), "script" | "style" | "head"))
            });
            if !hidden {
                out.push_str(text);
                out.push(' ');
            }
        }
    }
    crate::table::lexicon::normalize_ws(&out)
}

pub const DEFAULT_EARNINGS_KEYWORDS: [&str; 5] = [
    "results of operations",
    "earnings",
    "quarterly results",
    "net sales",
    "revenue",
];

/// Case-insensitive keyword list for [`classify_earnings`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EarningsKeywords {
    terms: Vec<String>,
}

impl Default for EarningsKeywords {
    fn default() -> Self {
        EarningsKeywords::new(DEFAULT_EARNINGS_KEYWORDS)
    }
}

impl EarningsKeywords {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms = terms
            .into_iter()
            .map(|t| crate::table::lexicon::normalize_ws(t.as_ref()).to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        EarningsKeywords { terms }
    }

    /// One term per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        EarningsKeywords::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SpotError::io(path, e))?;
        Ok(EarningsKeywords::parse(&text))
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn matches(&self, text: &str) -> bool {
        let lower = crate::table::lexicon::normalize_ws(text).to_lowercase();
        self.terms.iter().any(|t| lower.contains(t.as_str()))
    }
}

/// An 8-K whose visible text mentions at least one earnings keyword.
pub fn classify_earnings(doc: &FilingDoc, keywords: &EarningsKeywords) -> bool {
    if doc.doc_type != DocType::EightK || doc.body.trim().is_empty() {
        return false;
    }
    keywords.matches(&doc.body_text())
}

/// `{company}-{form}-{YYYY-MM-DD}`, e.g. `ACME-8K-2020-07-30`.
pub fn filing_id_for(company_id: &str, doc_type: DocType, filed_at: DateTime<Utc>) -> String {
    let company: String = company_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    let form: String = doc_type.as_str().chars().filter(char::is_ascii_alphanumeric).collect();
    format!("{company}-{}-{}", form.to_ascii_uppercase(), filed_at.format("%Y-%m-%d"))
}

/// Reads the document behind a local feed entry and classifies it. The
/// entry's own sector wins over `default_sector`.
pub fn load_entry(entry: &FeedEntry, default_sector: Option<Sector>, keywords: &EarningsKeywords) -> Result<FilingDoc> {
    if entry.location.contains("://") {
        return Err(SpotError::FeedUnavailable(format!("{}: only local documents can be loaded", entry.location)));
    }
    let path = Path::new(&entry.location);
    let body = std::fs::read_to_string(path).map_err(|e| SpotError::io(path, e))?;
    let sector = entry.sector.or(default_sector).ok_or_else(|| {
        SpotError::Validation(format!("entry {} has no sector and no default was given", entry.location))
    })?;
    let doc_type = DocType::parse_lenient(&entry.doc_type);
    let mut doc = FilingDoc {
        filing_id: filing_id_for(&entry.company_id, doc_type, entry.published_at),
        company_id: entry.company_id.clone(),
        sector,
        doc_type,
        filed_at: entry.published_at,
        body,
        is_earnings: false,
    };
    doc.is_earnings = classify_earnings(&doc, keywords);
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn doc(doc_type: DocType, body: &str) -> FilingDoc {
        FilingDoc {
            filing_id: "f1".into(),
            company_id: "ACME".into(),
            sector: Sector::Tech,
            doc_type,
            filed_at: Utc.with_ymd_and_hms(2020, 7, 30, 21, 0, 0).unwrap(),
            body: body.into(),
            is_earnings: false,
        }
    }

    #[test]
    fn quarterly_results_8k() {
        let d = doc(DocType::EightK, "<p>ACME today announced its <b>Quarterly</b> results.</p>");
        assert!(classify_earnings(&d, &EarningsKeywords::default()));
    }

    #[test]
    fn officer_departure_is_not_earnings() {
        let d = doc(DocType::EightK, "<p>The Chief Financial Officer will depart on June 1.</p>");
        assert!(!classify_earnings(&d, &EarningsKeywords::default()));
    }

    #[test]
    fn doc_type_gate() {
        let d = doc(DocType::TenK, "<p>Revenue grew.</p>");
        assert!(!classify_earnings(&d, &EarningsKeywords::default()));
    }

    #[test]
    fn empty_body_is_false() {
        assert!(!classify_earnings(&doc(DocType::EightK, "  "), &EarningsKeywords::default()));
    }

    #[test]
    fn script_text_is_ignored() {
        let d = doc(DocType::EightK, "<script>var earnings = 1;</script><p>Board update</p>");
        assert!(!classify_earnings(&d, &EarningsKeywords::default()));
    }

    #[test]
    fn entry_is_loaded_and_classified() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ACME_8-K_2020-07-30.html");
        std::fs::write(&path, "<p>ACME announced its quarterly results.</p>").unwrap();
        let entry = FeedEntry {
            location: path.display().to_string(),
            company_id: "ACME".into(),
            doc_type: "8-K".into(),
            published_at: Utc.with_ymd_and_hms(2020, 7, 30, 0, 0, 0).unwrap(),
            sector: None,
        };
        let kw = EarningsKeywords::default();
        assert!(load_entry(&entry, None, &kw).is_err());
        let doc = load_entry(&entry, Some(Sector::Tech), &kw).unwrap();
        assert_eq!(doc.filing_id, "ACME-8K-2020-07-30");
        assert!(doc.is_earnings);
    }

    #[test]
    fn custom_keywords() {
        let kw = EarningsKeywords::parse("# custom\nproduction update\n");
        let d = doc(DocType::EightK, "<p>Production   Update for Q2</p>");
        assert!(classify_earnings(&d, &kw));
        assert!(!classify_earnings(&doc(DocType::EightK, "<p>revenue</p>"), &kw));
    }
}
