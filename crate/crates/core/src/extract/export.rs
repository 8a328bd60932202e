use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::SegmentRecord;
use crate::error::{Result, SpotError};

pub const EXPORT_HEADER: &str = "company,filing,period,segment_path,metric,value,currency,adjusted,source_table,source_row,source_col";

/// Export filter; unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportQuery {
    pub company: Option<String>,
    /// Rendered period such as `Q3 2020`.
    pub period: Option<String>,
    /// Full rendered header path, or just its leaf.
    pub segment: Option<String>,
}

impl ExportQuery {
    pub fn matches(&self, r: &SegmentRecord) -> bool {
        let company = self.company.as_deref().is_none_or(|c| c == r.company_id);
        let period = self.period.as_deref().is_none_or(|p| p == r.period_label());
        let segment = self
            .segment
            .as_deref()
            .is_none_or(|s| s == r.header_path.render() || Some(s) == r.header_path.leaf());
        company && period && segment
    }
}

fn format_value(d: Decimal) -> String {
    format!("{:.2}", d.round_dp(2))
}

/// CSV of the matching records, sorted by company, period and segment path.
/// Adjusted values replace extracted ones.
pub fn export_csv(records: &[SegmentRecord], query: &ExportQuery) -> Result<String> {
    let mut rows: Vec<&SegmentRecord> = records.iter().filter(|r| query.matches(r)).collect();
    rows.sort_by(|a, b| {
        (&a.company_id, a.period.period(), a.header_path.render(), &a.filing_id, &a.table_id, a.source_cell.row, a.source_cell.col).cmp(&(
            &b.company_id,
            b.period.period(),
            b.header_path.render(),
            &b.filing_id,
            &b.table_id,
            b.source_cell.row,
            b.source_cell.col,
        ))
    });
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(EXPORT_HEADER.split(','))?;
    for r in rows {
        let value = r.effective_decimal().ok_or_else(|| {
            SpotError::Validation(format!("record {} has no numeric value", r.record_id))
        })?;
        w.write_record([
            r.company_id.as_str(),
            &r.filing_id,
            &r.period_label(),
            &r.header_path.render(),
            &r.metric_name,
            &format_value(value),
            &r.currency,
            if r.adjusted { "true" } else { "false" },
            &r.source_cell.table_id,
            &r.source_cell.row.to_string(),
            &r.source_cell.col.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| SpotError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SpotError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::SourceCell;
    use crate::normalize::{normalize_amount, normalize_period, FiscalCalendar};
    use crate::table::HeaderPath;

    fn rec(company: &str, period: &str, path: &str) -> SegmentRecord {
        let cal = FiscalCalendar::calendar_year(company);
        SegmentRecord {
            record_id: format!("{company}-{period}-{path}"),
            filing_id: "f1".into(),
            company_id: company.into(),
            table_id: "t0".into(),
            header_path: HeaderPath::parse(path).unwrap(),
            period: normalize_period(period, &cal).unwrap(),
            metric_name: "Net sales".into(),
            value: normalize_amount("14", 1_000_000, "USD").unwrap(),
            currency: "USD".into(),
            source_cell: SourceCell {
                table_id: "t0".into(),
                row: 2,
                col: 1,
            },
            classifier_probability: 0.9,
            adjusted: false,
            adjusted_value: None,
            audit: Vec::new(),
        }
    }

    #[test]
    fn empty_is_header_only() {
        let out = export_csv(&[], &ExportQuery::default()).unwrap();
        assert_eq!(out, format!("{EXPORT_HEADER}\r\n"));
    }

    #[test]
    fn one_record_two_lines() {
        let out = export_csv(&[rec("ACME", "Q3 2020", "Net sales --> Products")], &ExportQuery::default()).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "ACME,f1,Q3 2020,Net sales --> Products,Net sales,14000000.00,USD,false,t0,2,1");
    }

    #[test]
    fn comma_in_path_is_quoted() {
        let out = export_csv(&[rec("ACME", "Q3 2020", "Wearables, Home and Accessories")], &ExportQuery::default()).unwrap();
        assert!(out.contains(",\"Wearables, Home and Accessories\","));
    }

    #[test]
    fn adjusted_value_wins() {
        let mut r = rec("ACME", "Q3 2020", "Services");
        r.adjusted = true;
        r.adjusted_value = Some(Decimal::new(14_500_000, 0));
        let out = export_csv(&[r], &ExportQuery::default()).unwrap();
        assert!(out.contains(",14500000.00,USD,true,"));
    }

    #[test]
    fn sorted_and_filtered() {
        let records = vec![
            rec("ZED", "Q1 2020", "A"),
            rec("ACME", "Q4 2020", "B"),
            rec("ACME", "Q3 2020", "C"),
            rec("ACME", "Q3 2020", "A"),
        ];
        let out = export_csv(&records, &ExportQuery::default()).unwrap();
        let keys: Vec<String> = out
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{} {} {}", f[0], f[2], f[3])
            })
            .collect();
        assert_eq!(keys, ["ACME Q3 2020 A", "ACME Q3 2020 C", "ACME Q4 2020 B", "ZED Q1 2020 A"]);

        let q = ExportQuery {
            company: Some("ACME".into()),
            period: Some("Q3 2020".into()),
            segment: None,
        };
        assert_eq!(export_csv(&records, &q).unwrap().lines().count(), 3);
    }
}
