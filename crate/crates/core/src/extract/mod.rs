//! Per-filing orchestration: tables to segment records with cell-level
//! provenance, analyst adjustments, CSV export and document anchors.

mod anchors;
mod export;
mod store;

use std::borrow::Cow;

use chrono::{DateTime, Utc};
use log::{debug, warn};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{HeaderClassifier, Label};
use crate::error::{Result, SpotError};
use crate::filter::{build_company_doc, has_financial_content, score_table, TfidfMatrix};
use crate::ingestion::FilingDoc;
use crate::normalize::{
    detect_scale_for_grid, normalize_amount, normalize_number, parse_period, FiscalCalendar, FiscalCalendars,
    NormalizedKind, NormalizedValue, ScaleInfo,
};
use crate::table::{detect_body_rect, extract_headers, parse_html_tables, row_header_paths, BodyRect, Grid, HeaderPath};

pub use anchors::{anchor_id, inject_cell_anchors};
pub use export::{export_csv, ExportQuery, EXPORT_HEADER};
pub use store::{RecordStore, RECORDS_SCHEMA};

/// Metric name used when neither a parent header nor a column group exists.
pub const DEFAULT_METRIC: &str = "Value";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceCell {
    pub table_id: String,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjustment {
    pub record_id: String,
    /// Same units as the record's normalized value.
    #[serde(with = "rust_decimal::serde::str")]
    pub new_value: Decimal,
    pub author: String,
    pub at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Adjustment {
    /// Parses a user-supplied value. Rejects NaN, infinities and anything
    /// that is not a plain decimal.
    pub fn parse_value(text: &str) -> Result<Decimal> {
        let t = text.trim().replace(',', "");
        t.parse::<Decimal>()
            .or_else(|_| Decimal::from_scientific(&t))
            .map_err(|_| SpotError::Validation(format!("new_value {text:?} is not a finite decimal")))
    }

    pub fn from_f64(value: f64) -> Result<Decimal> {
        if !value.is_finite() {
            return Err(SpotError::Validation(format!("new_value {value} is not finite")));
        }
        Decimal::try_from(value).map_err(|e| SpotError::Validation(format!("new_value {value}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub record_id: String,
    pub filing_id: String,
    pub company_id: String,
    pub table_id: String,
    pub header_path: HeaderPath,
    pub period: NormalizedValue,
    pub metric_name: String,
    /// As extracted; adjustments never touch it.
    pub value: NormalizedValue,
    /// ISO code for amounts, `%` for percentages, empty for raw numbers.
    pub currency: String,
    pub source_cell: SourceCell,
    /// Probability that the row header names an operating segment.
    pub classifier_probability: f64,
    pub adjusted: bool,
    #[serde(default, with = "rust_decimal::serde::str_option")]
    pub adjusted_value: Option<Decimal>,
    #[serde(default)]
    pub audit: Vec<Adjustment>,
}

impl SegmentRecord {
    pub fn original_decimal(&self) -> Option<Decimal> {
        self.value.decimal()
    }

    /// Adjusted value when present, else the extracted one.
    pub fn effective_decimal(&self) -> Option<Decimal> {
        self.adjusted_value.or_else(|| self.value.decimal())
    }

    pub fn period_label(&self) -> String {
        self.period.render()
    }
}

pub fn record_id(filing_id: &str, table_id: &str, row: usize, col: usize, period: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("{filing_id}|{table_id}|{row}|{col}|{period}").as_bytes());
    hex::encode(h.finalize())
}

/// What happened to one table of a filing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum TableOutcome {
    NonFinancial { table_id: String },
    Boilerplate { table_id: String, s_max: f64, delta: f64 },
    NoBody { table_id: String },
    Extracted { table_id: String, operating_rows: usize, records: usize },
    Failed { table_id: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub records: Vec<SegmentRecord>,
    pub tables: Vec<TableOutcome>,
}

/// Everything extraction needs besides the filing.
#[derive(Debug, Clone)]
pub struct ExtractionModels {
    pub classifier: HeaderClassifier,
    pub tfidf: TfidfMatrix,
    pub delta: f64,
    pub calendars: FiscalCalendars,
}

/// Period and group label of every body column, read from the column
/// header cells above the body.
fn column_labels(grid: &Grid, body: &BodyRect, cal: &FiscalCalendar) -> Vec<(Option<NormalizedValue>, Option<String>)> {
    extract_headers(grid, body)
        .col_headers
        .iter()
        .map(|chain| {
            let texts = chain.texts();
            // Longest suffix that reads as a period, e.g. "Three Months Ended"
            // over "June 27, 2020".
            for start in 0..texts.len() {
                let joined = texts[start..].join(" ");
                if let Some(period) = parse_period(&joined, cal) {
                    let value = NormalizedValue {
                        raw: joined,
                        kind: NormalizedKind::Period { period },
                    };
                    let group = start.checked_sub(1).map(|i| HeaderPath::clean_segment(texts[i]));
                    return (Some(value), group.filter(|g| !g.is_empty()));
                }
            }
            (None, texts.last().map(|t| HeaderPath::clean_segment(t)).filter(|g| !g.is_empty()))
        })
        .collect()
}

/// Normalized value of a body cell under the table's scale.
pub fn normalize_cell(grid: &Grid, scale: &ScaleInfo, row: usize, col: usize) -> Option<NormalizedValue> {
    let cell = grid.cell(row, col)?;
    if !cell.is_origin_at(row, col) || !cell.is_numeric {
        return None;
    }
    normalize_amount(&cell.text, scale.scale, &scale.currency).or_else(|| {
        let v = normalize_number(&cell.text);
        matches!(v.kind, NormalizedKind::Percent { .. } | NormalizedKind::RawNumber { .. }).then_some(v)
    })
}

fn currency_of(v: &NormalizedValue) -> String {
    match &v.kind {
        NormalizedKind::Amount { amount } => amount.currency.clone(),
        NormalizedKind::Percent { .. } => "%".to_string(),
        _ => String::new(),
    }
}

fn extract_table(
    filing: &FilingDoc,
    grid: &Grid,
    classifier: &HeaderClassifier,
    cal: &FiscalCalendar,
) -> Result<(usize, Vec<SegmentRecord>)> {
    let body = detect_body_rect(grid)?;
    let paths: Vec<(usize, HeaderPath)> = row_header_paths(grid, &body)
        .into_iter()
        .filter(|(_, p)| !p.is_empty())
        .collect();
    let rendered: Vec<String> = paths.iter().map(|(_, p)| p.render()).collect();
    let predictions = classifier.predict(&rendered);
    let columns = column_labels(grid, &body, cal);
    let scale = detect_scale_for_grid(grid);
    for w in &scale.warnings {
        warn!("{} {}: {w}", filing.filing_id, grid.table_id);
    }

    let mut records = Vec::new();
    let mut operating_rows = 0;
    for ((row, path), (label, p_non)) in paths.iter().zip(predictions) {
        if label != Label::Operating {
            continue;
        }
        operating_rows += 1;
        for (k, col) in body.cols().enumerate() {
            let (Some(period), group) = &columns[k] else {
                continue;
            };
            let Some(value) = normalize_cell(grid, &scale, *row, col) else {
                continue;
            };
            let period_text = period.render();
            let metric_name = path
                .parent()
                .map(str::to_string)
                .or_else(|| group.clone())
                .unwrap_or_else(|| DEFAULT_METRIC.to_string());
            records.push(SegmentRecord {
                record_id: record_id(&filing.filing_id, &grid.table_id, *row, col, &period_text),
                filing_id: filing.filing_id.clone(),
                company_id: filing.company_id.clone(),
                table_id: grid.table_id.clone(),
                header_path: path.clone(),
                period: period.clone(),
                metric_name,
                currency: currency_of(&value),
                value,
                source_cell: SourceCell {
                    table_id: grid.table_id.clone(),
                    row: *row,
                    col,
                },
                classifier_probability: (1.0 - p_non).clamp(0.0, 1.0),
                adjusted: false,
                adjusted_value: None,
                audit: Vec::new(),
            });
        }
    }
    Ok((operating_rows, records))
}

/// Runs the whole pipeline on one filing. Failures are isolated per table
/// and reported in [`Extraction::tables`].
pub fn extract_segments(filing: &FilingDoc, models: &ExtractionModels) -> Result<Extraction> {
    if !filing.is_earnings {
        return Err(SpotError::Validation(format!(
            "filing {} is not classified as an earnings report",
            filing.filing_id
        )));
    }
    // A company outside the build corpus is folded in from this filing.
    let tfidf: Cow<'_, TfidfMatrix> = if models.tfidf.has_company(&filing.company_id) {
        Cow::Borrowed(&models.tfidf)
    } else {
        let mut m = models.tfidf.clone();
        m.fold_in(&build_company_doc(std::slice::from_ref(filing))?)?;
        Cow::Owned(m)
    };
    let cal = models.calendars.get(&filing.company_id);

    let mut records = Vec::new();
    let mut tables = Vec::new();
    for grid in parse_html_tables(&filing.body) {
        let table_id = grid.table_id.clone();
        if !has_financial_content(&grid) {
            tables.push(TableOutcome::NonFinancial { table_id });
            continue;
        }
        let score = match score_table(&grid, &filing.company_id, &tfidf, models.delta) {
            Ok(s) => s,
            Err(e) => {
                tables.push(TableOutcome::Failed {
                    table_id,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if !score.emitted {
            tables.push(TableOutcome::Boilerplate {
                table_id,
                s_max: score.s_max,
                delta: models.delta,
            });
            continue;
        }
        match extract_table(filing, &grid, &models.classifier, &cal) {
            Ok((operating_rows, recs)) => {
                debug!("{} {table_id}: {operating_rows} operating rows, {} records", filing.filing_id, recs.len());
                tables.push(TableOutcome::Extracted {
                    table_id,
                    operating_rows,
                    records: recs.len(),
                });
                records.extend(recs);
            }
            Err(SpotError::NoBody(_)) => tables.push(TableOutcome::NoBody { table_id }),
            Err(e) => {
                warn!("{} {table_id}: {e}", filing.filing_id);
                tables.push(TableOutcome::Failed {
                    table_id,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(Extraction { records, tables })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_ids_are_stable_hashes() {
        let a = record_id("f1", "t0", 3, 1, "Q3 2020");
        assert_eq!(a, record_id("f1", "t0", 3, 1, "Q3 2020"));
        assert_ne!(a, record_id("f1", "t0", 3, 2, "Q3 2020"));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn adjustment_values() {
        assert_eq!(Adjustment::parse_value("14,500,000.00").unwrap(), Decimal::new(1450000000, 2));
        assert!(Adjustment::parse_value("NaN").is_err());
        assert!(Adjustment::parse_value("inf").is_err());
        assert!(Adjustment::from_f64(f64::NAN).is_err());
        assert!(Adjustment::from_f64(f64::INFINITY).is_err());
        assert_eq!(Adjustment::from_f64(2.5).unwrap(), Decimal::new(25, 1));
    }

    #[test]
    fn column_periods_and_groups() {
        let g = Grid::from_texts(
            "t0",
            &[
                vec!["", "Revenue", "Revenue"],
                vec!["", "Three Months Ended", "Three Months Ended"],
                vec!["", "June 27, 2020", "June 29, 2019"],
                vec!["Products", "10", "20"],
            ],
        );
        let body = detect_body_rect(&g).unwrap();
        let cal = FiscalCalendar::new("c", 9).unwrap();
        let cols = column_labels(&g, &body, &cal);
        assert_eq!(cols[0].0.as_ref().unwrap().render(), "Q3 2020");
        assert_eq!(cols[1].0.as_ref().unwrap().render(), "Q3 2019");
        assert_eq!(cols[0].1.as_deref(), Some("Revenue"));
    }
}
