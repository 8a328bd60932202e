use std::sync::OnceLock;

use chrono::{Datelike, NaiveDate};
use regex::Regex;

use super::{FiscalCalendar, NormalizedKind, NormalizedValue, Period, PeriodLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Span {
    Months(u32),
    /// A bare date: treated like the quarter containing it.
    Instant,
}

fn month_number(name: &str) -> Option<u32> {
    let key: String = name.trim_end_matches('.').to_ascii_lowercase();
    const MONTHS: [&str; 12] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
        "november", "december",
    ];
    MONTHS
        .iter()
        .position(|m| *m == key || (key.len() >= 3 && m.starts_with(&key)))
        .map(|i| i as u32 + 1)
}

fn date_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^([a-z]{3,9}\.?)\s+(\d{1,2}),?\s+(\d{4})$").unwrap())
}

fn span_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^(?:for\s+the\s+)?(three|six|nine|twelve|3|6|9|12)[\s-]+months?\s+end(?:ed|ing)\s*,?\s+(.+)$",
        )
        .unwrap()
    })
}

fn named_span_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(?:for\s+the\s+)?(quarter|fiscal\s+year|year)\s+end(?:ed|ing)\s*,?\s+(.+)$").unwrap()
    })
}

fn quarter_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^Q([1-4])\s*(?:FY)?\s*'?(\d{4})$").unwrap())
}

fn fy_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^(?:FY|fiscal\s+year)\s*'?(\d{4})$").unwrap())
}

fn parse_date(text: &str) -> Option<NaiveDate> {
    let caps = date_re().captures(text.trim())?;
    let month = month_number(&caps[1])?;
    let day: u32 = caps[2].parse().ok()?;
    let year: i32 = caps[3].parse().ok()?;
    NaiveDate::from_ymd_opt(year, month, day)
}

/// Maps a period ending on `end` onto the fiscal calendar.
fn fiscal_period(span: Span, end: NaiveDate, cal: &FiscalCalendar) -> Period {
    let fy_end = cal.fiscal_year_end_month;
    let fy_start = fy_end % 12 + 1;
    let month = end.month();
    // 1..=12 months into the fiscal year, counting the end month.
    let months_in = (month + 12 - fy_start) % 12 + 1;
    let year = if month > fy_end { end.year() + 1 } else { end.year() };
    let label = match span {
        Span::Months(12) => PeriodLabel::FY,
        Span::Months(9) => PeriodLabel::NineMonths,
        Span::Months(6) => {
            if months_in <= 6 {
                PeriodLabel::H1
            } else {
                PeriodLabel::H2
            }
        }
        _ => PeriodLabel::quarter(months_in.div_ceil(3)).expect("quarter in 1..=4"),
    };
    Period { label, year }
}

/// Parses a period expression. Returns `None` for anything that is not one
/// of the recognised patterns.
pub fn parse_period(text: &str, cal: &FiscalCalendar) -> Option<Period> {
    let text = crate::table::lexicon::normalize_ws(text);
    if let Some(caps) = span_re().captures(&text) {
        let months = match caps[1].to_ascii_lowercase().as_str() {
            "three" | "3" => 3,
            "six" | "6" => 6,
            "nine" | "9" => 9,
            _ => 12,
        };
        let end = parse_date(&caps[2])?;
        return Some(fiscal_period(Span::Months(months), end, cal));
    }
    if let Some(caps) = named_span_re().captures(&text) {
        let months = if caps[1].eq_ignore_ascii_case("quarter") { 3 } else { 12 };
        let end = parse_date(&caps[2])?;
        return Some(fiscal_period(Span::Months(months), end, cal));
    }
    if let Some(end) = parse_date(&text) {
        return Some(fiscal_period(Span::Instant, end, cal));
    }
    if let Some(caps) = quarter_re().captures(&text) {
        let q: u32 = caps[1].parse().ok()?;
        return Some(Period {
            label: PeriodLabel::quarter(q)?,
            year: caps[2].parse().ok()?,
        });
    }
    if let Some(caps) = fy_re().captures(&text) {
        return Some(Period {
            label: PeriodLabel::FY,
            year: caps[1].parse().ok()?,
        });
    }
    None
}

pub fn normalize_period(text: &str, cal: &FiscalCalendar) -> Option<NormalizedValue> {
    parse_period(text, cal).map(|period| NormalizedValue {
        raw: text.to_string(),
        kind: NormalizedKind::Period { period },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(text: &str, fy_end: u32) -> Option<String> {
        let cal = FiscalCalendar::new("c", fy_end).unwrap();
        normalize_period(text, &cal).map(|v| v.render())
    }

    #[test]
    fn three_months_december_year_end() {
        assert_eq!(render("Three Months Ended March 30, 2020", 12).as_deref(), Some("Q1 2020"));
    }

    #[test]
    fn twelve_months_is_fiscal_year() {
        assert_eq!(render("Twelve Months Ended December 31, 2019", 12).as_deref(), Some("FY 2019"));
    }

    #[test]
    fn three_months_march_year_end() {
        // April starts the fiscal year, so March is month 12 -> Q4 of FY2020.
        assert_eq!(render("Three Months Ended March 30, 2020", 3).as_deref(), Some("Q4 2020"));
    }

    #[test]
    fn september_year_end_rolls_fiscal_year_forward() {
        assert_eq!(render("Three Months Ended June 27, 2020", 9).as_deref(), Some("Q3 2020"));
        assert_eq!(render("Three Months Ended December 26, 2020", 9).as_deref(), Some("Q1 2021"));
    }

    #[test]
    fn half_and_nine_month_spans() {
        assert_eq!(render("Six Months Ended June 30, 2020", 12).as_deref(), Some("H1 2020"));
        assert_eq!(render("Six Months Ended December 31, 2020", 12).as_deref(), Some("H2 2020"));
        assert_eq!(render("Nine Months Ended September 30, 2020", 12).as_deref(), Some("9M 2020"));
    }

    #[test]
    fn other_patterns() {
        assert_eq!(render("June 27, 2020", 12).as_deref(), Some("Q2 2020"));
        assert_eq!(render("Sept. 30, 2019", 12).as_deref(), Some("Q3 2019"));
        assert_eq!(render("Q3 2020", 12).as_deref(), Some("Q3 2020"));
        assert_eq!(render("FY2019", 12).as_deref(), Some("FY 2019"));
        assert_eq!(render("Year Ended December 31, 2018", 12).as_deref(), Some("FY 2018"));
        assert_eq!(render("Quarter Ended March 31, 2018", 12).as_deref(), Some("Q1 2018"));
    }

    #[test]
    fn not_a_period() {
        for t in ["Net sales", "", "Three Months Ended", "February 30, 2020", "Q5 2020", "1,234"] {
            assert_eq!(render(t, 12), None, "{t}");
        }
    }
}
