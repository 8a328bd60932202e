//! Value normalization: fiscal periods, scaled amounts, percents and bare
//! numbers.

mod amount;
mod period;
mod scale;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpotError};

pub use amount::{
    format_grouped, normalize_amount, normalize_number, normalize_number_with, parse_rendered_amount,
    NumberOptions,
};
pub use period::{normalize_period, parse_period};
pub use scale::{detect_scale, detect_scale_for_grid, ScaleInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PeriodLabel {
    Q1,
    Q2,
    Q3,
    Q4,
    H1,
    H2,
    #[serde(rename = "9M")]
    NineMonths,
    FY,
}

impl PeriodLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PeriodLabel::Q1 => "Q1",
            PeriodLabel::Q2 => "Q2",
            PeriodLabel::Q3 => "Q3",
            PeriodLabel::Q4 => "Q4",
            PeriodLabel::H1 => "H1",
            PeriodLabel::H2 => "H2",
            PeriodLabel::NineMonths => "9M",
            PeriodLabel::FY => "FY",
        }
    }

    pub fn quarter(n: u32) -> Option<PeriodLabel> {
        match n {
            1 => Some(PeriodLabel::Q1),
            2 => Some(PeriodLabel::Q2),
            3 => Some(PeriodLabel::Q3),
            4 => Some(PeriodLabel::Q4),
            _ => None,
        }
    }
}

/// A fiscal period such as `Q1 2020`. Orders by year, then label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Period {
    pub label: PeriodLabel,
    pub year: i32,
}

impl PartialOrd for Period {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Period {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.year, self.label).cmp(&(other.year, other.label))
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.label.as_str(), self.year)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Amount {
    pub value: Decimal,
    pub currency: String,
    /// 1, 1e3, 1e6 or 1e9.
    pub scale_applied: i64,
}

impl Amount {
    /// `14,000,000.00 (USD)`
    pub fn render(&self) -> String {
        format!("{} ({})", format_grouped(self.value), self.currency)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalizedKind {
    Period { period: Period },
    Amount { amount: Amount },
    Percent { percent: Decimal },
    RawNumber { number: Decimal },
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedValue {
    pub raw: String,
    #[serde(flatten)]
    pub kind: NormalizedKind,
}

impl NormalizedValue {
    pub fn text(raw: &str) -> Self {
        NormalizedValue {
            raw: raw.to_string(),
            kind: NormalizedKind::Text,
        }
    }

    pub fn period(&self) -> Option<Period> {
        match &self.kind {
            NormalizedKind::Period { period } => Some(*period),
            _ => None,
        }
    }

    pub fn amount(&self) -> Option<&Amount> {
        match &self.kind {
            NormalizedKind::Amount { amount } => Some(amount),
            _ => None,
        }
    }

    /// Numeric payload of amount, percent and raw-number values.
    pub fn decimal(&self) -> Option<Decimal> {
        match &self.kind {
            NormalizedKind::Amount { amount } => Some(amount.value),
            NormalizedKind::Percent { percent } => Some(*percent),
            NormalizedKind::RawNumber { number } => Some(*number),
            _ => None,
        }
    }

    /// Canonical rendering: `Q1 2020`, `14,000,000.00 (USD)`, `30%`.
    pub fn render(&self) -> String {
        match &self.kind {
            NormalizedKind::Period { period } => period.to_string(),
            NormalizedKind::Amount { amount } => amount.render(),
            NormalizedKind::Percent { percent } => format!("{}%", percent.normalize()),
            NormalizedKind::RawNumber { number } => number.normalize().to_string(),
            NormalizedKind::Text => self.raw.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiscalCalendar {
    pub company_id: String,
    /// 1..=12, December by default.
    pub fiscal_year_end_month: u32,
}

impl FiscalCalendar {
    pub fn new(company_id: &str, fiscal_year_end_month: u32) -> Result<Self> {
        if !(1..=12).contains(&fiscal_year_end_month) {
            return Err(SpotError::Validation(format!(
                "fiscal year end month {fiscal_year_end_month} out of range"
            )));
        }
        Ok(FiscalCalendar {
            company_id: company_id.to_string(),
            fiscal_year_end_month,
        })
    }

    pub fn calendar_year(company_id: &str) -> Self {
        FiscalCalendar {
            company_id: company_id.to_string(),
            fiscal_year_end_month: 12,
        }
    }
}

/// Per-company fiscal calendars, defaulting to the calendar year.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiscalCalendars {
    by_company: HashMap<String, u32>,
}

impl FiscalCalendars {
    pub fn insert(&mut self, cal: FiscalCalendar) {
        self.by_company.insert(cal.company_id, cal.fiscal_year_end_month);
    }

    pub fn get(&self, company_id: &str) -> FiscalCalendar {
        FiscalCalendar {
            company_id: company_id.to_string(),
            fiscal_year_end_month: self.by_company.get(company_id).copied().unwrap_or(12),
        }
    }

    /// Parses `company_id,fiscal_year_end_month` lines. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = FiscalCalendars::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (company, month) = line
                .rsplit_once(',')
                .ok_or_else(|| SpotError::Format(format!("fiscal calendar line {}: expected company,month", n + 1)))?;
            let month: u32 = month
                .trim()
                .parse()
                .map_err(|_| SpotError::Format(format!("fiscal calendar line {}: bad month {month:?}", n + 1)))?;
            out.insert(FiscalCalendar::new(company.trim(), month)?);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SpotError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_config(&self) -> String {
        let mut rows: Vec<_> = self.by_company.iter().collect();
        rows.sort();
        rows.iter().map(|(c, m)| format!("{c},{m}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calendars_parse_and_default() {
        let cals = FiscalCalendars::parse("# comment\nAAPL,9\n\nMSFT, 6\n").unwrap();
        assert_eq!(cals.get("AAPL").fiscal_year_end_month, 9);
        assert_eq!(cals.get("MSFT").fiscal_year_end_month, 6);
        assert_eq!(cals.get("XOM").fiscal_year_end_month, 12);
        assert_eq!(FiscalCalendars::parse(&cals.to_config()).unwrap(), cals);
        assert!(FiscalCalendars::parse("A,13").is_err());
        assert!(FiscalCalendars::parse("A").is_err());
    }

    #[test]
    fn period_ordering() {
        let a = Period { label: PeriodLabel::Q4, year: 2019 };
        let b = Period { label: PeriodLabel::Q1, year: 2020 };
        assert!(a < b);
        assert_eq!(b.to_string(), "Q1 2020");
    }
}
