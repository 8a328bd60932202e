//! Two-stage table filter: drop tables without financial content, then
//! score the rest against company-specific TF-IDF weights.

mod tfidf;

use std::sync::OnceLock;

use regex::Regex;

use crate::normalize::{normalize_amount, normalize_period, FiscalCalendar};
use crate::table::Grid;

pub use tfidf::{
    build_company_doc, score_table, tfidf_weight, tokenize_words, tune_threshold, CompanyDoc, TableScore,
    TfidfMatrix, ThresholdTuning, DEFAULT_TARGET_RECALL,
};

fn currency_marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[$€£¥]|\b(?:USD|EUR|GBP|JPY|CAD)\b").unwrap())
}

/// Stage one: some cell is an amount, mentions a currency, or is a period.
pub fn has_financial_content(grid: &Grid) -> bool {
    let cal = FiscalCalendar::calendar_year("");
    grid.origin_cells().any(|cell| {
        !cell.text.is_empty()
            && (normalize_amount(&cell.text, 1, "USD").is_some()
                || currency_marker_re().is_match(&cell.text)
                || normalize_period(&cell.text, &cal).is_some())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_is_not_financial() {
        let g = Grid::from_texts(
            "t0",
            &[
                vec!["Name", "Position"],
                vec!["Jane Roe", "Chair of the Board"],
                vec!["John Doe", "Director"],
            ],
        );
        assert!(!has_financial_content(&g));
    }

    #[test]
    fn single_dollar_amount() {
        let g = Grid::from_texts("t0", &[vec!["Item", "Cost"], vec!["Widget", "$12"]]);
        assert!(has_financial_content(&g));
    }

    #[test]
    fn period_only() {
        let g = Grid::from_texts("t0", &[vec!["Three Months Ended June 27, 2020"], vec!["see note"]]);
        assert!(has_financial_content(&g));
    }

    #[test]
    fn currency_word() {
        let g = Grid::from_texts("t0", &[vec!["Reported in USD"]]);
        assert!(has_financial_content(&g));
    }
}
