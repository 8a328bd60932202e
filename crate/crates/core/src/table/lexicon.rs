//! Numeric-cell lexicon shared by the table parser and the normalizer.
//!
//! Accepted: optional currency sign or ISO code, optional parentheses or
//! minus for negatives, an integer part with comma groups, optional
//! decimals, and an optional scale suffix (K, M, MM, B, BN) or percent sign.

use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use rust_decimal::Decimal;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedNumber {
    pub negative: bool,
    /// Currency named inline, as an ISO code. `$` alone maps to `USD`.
    pub currency: Option<&'static str>,
    pub magnitude: Decimal,
    /// Multiplier from an inline suffix such as `MM`.
    pub suffix_scale: Option<i64>,
    pub percent: bool,
}

impl ParsedNumber {
    pub fn signed(&self) -> Decimal {
        if self.negative {
            -self.magnitude
        } else {
            self.magnitude
        }
    }
}

fn lexicon_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?ix)^
            (?P<open1>\()?\s*
            (?P<cur>
                (?:[$€£]\s*(?:USD|EUR|GBP)?)
              | (?:(?:USD|EUR|GBP)\s*[$€£]?)
            )?\s*
            (?P<open2>\()?\s*
            (?P<minus>[-\u{2212}])?\s*
            (?P<num>\d{1,3}(?:,\d{3})*(?:\.\d+)?|\.\d+)
            \s*(?P<suffix>MM|BN|K|M|B)?
            \s*(?P<pct>%)?
            \s*(?P<close>\))?
            \s*(?P<pct2>%)?
            \s*$",
        )
        .expect("lexicon regex")
    })
}

/// Parses a cell text against the numeric lexicon.
pub fn parse_numeric(text: &str) -> Option<ParsedNumber> {
    let caps = lexicon_re().captures(text.trim())?;
    let opened = caps.name("open1").is_some() as u8 + caps.name("open2").is_some() as u8;
    let closed = caps.name("close").is_some();
    if opened > 1 || (opened == 1) != closed {
        return None;
    }
    let num = caps.name("num")?.as_str().replace(',', "");
    let magnitude = Decimal::from_str(&num).ok()?;
    let currency = caps.name("cur").map(|m| currency_of(m.as_str()));
    let suffix_scale = caps.name("suffix").map(|m| match m.as_str().to_ascii_uppercase().as_str() {
        "K" => 1_000,
        "M" | "MM" => 1_000_000,
        _ => 1_000_000_000,
    });
    let percent = match (caps.name("pct"), caps.name("pct2")) {
        (Some(_), Some(_)) => return None,
        (a, b) => a.is_some() || b.is_some(),
    };
    if percent && (suffix_scale.is_some() || currency.is_some()) {
        return None;
    }
    Some(ParsedNumber {
        negative: opened == 1 || caps.name("minus").is_some(),
        currency,
        magnitude,
        suffix_scale,
        percent,
    })
}

fn currency_of(s: &str) -> &'static str {
    let upper = s.to_ascii_uppercase();
    if upper.contains("EUR") || s.contains('€') {
        "EUR"
    } else if upper.contains("GBP") || s.contains('£') {
        "GBP"
    } else {
        "USD"
    }
}

pub fn is_numeric(text: &str) -> bool {
    parse_numeric(text).is_some()
}

/// Empty, or a lone placeholder such as `$` or an em dash.
pub fn is_blank_like(text: &str) -> bool {
    let t = text.trim();
    t.is_empty() || matches!(t, "$" | "€" | "£" | "-" | "\u{2014}" | "\u{2013}" | "\u{2212}")
}

/// Collapses whitespace runs (including nbsp) to single spaces and trims.
pub fn normalize_ws(text: &str) -> String {
    text.split(|c: char| c.is_whitespace() || c == '\u{a0}')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_financial_forms() {
        for t in ["0", "12", "1,234", "$12", "$ 1,234.50", "(1,234)", "$(1,234)", "30%", "14MM", "$USD 14MM", "€ 3.5B", "-7", "(12.5)%"] {
            assert!(is_numeric(t), "{t}");
        }
    }

    #[test]
    fn rejects_text_and_years() {
        for t in ["", "Net sales", "2020", "June 27, 2020", "1,5", "(12", "12)", "$", "—", "Q3"] {
            assert!(!is_numeric(t), "{t}");
        }
    }

    #[test]
    fn parse_details() {
        let p = parse_numeric("$USD 14MM").unwrap();
        assert_eq!(p.currency, Some("USD"));
        assert_eq!(p.suffix_scale, Some(1_000_000));
        assert_eq!(p.magnitude, Decimal::from(14));
        let n = parse_numeric("(1,234)").unwrap();
        assert!(n.negative);
        assert_eq!(n.signed(), Decimal::from(-1234));
        assert_eq!(parse_numeric("€ 3").unwrap().currency, Some("EUR"));
    }

    #[test]
    fn blank_like() {
        assert!(is_blank_like(" $ "));
        assert!(is_blank_like("—"));
        assert!(!is_blank_like("0"));
    }

    #[test]
    fn whitespace_normalization() {
        assert_eq!(normalize_ws("\u{a0}\u{a0}Net   sales\n"), "Net sales");
    }
}
