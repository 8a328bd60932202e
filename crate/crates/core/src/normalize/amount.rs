use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use rust_decimal::{Decimal, RoundingStrategy};

use crate::table::lexicon::{normalize_ws, parse_numeric};

use super::{Amount, NormalizedKind, NormalizedValue};

/// Renders a decimal with two places and thousands separators.
pub fn format_grouped(value: Decimal) -> String {
    let rounded = value.round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero);
    let negative = rounded.is_sign_negative() && !rounded.is_zero();
    let plain = format!("{:.2}", rounded.abs());
    let (int_part, frac) = plain.split_once('.').unwrap_or((&plain, "00"));
    let mut grouped = String::with_capacity(int_part.len() + int_part.len() / 3);
    for (i, ch) in int_part.chars().enumerate() {
        if i > 0 && (int_part.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    format!("{}{grouped}.{frac}", if negative { "-" } else { "" })
}

/// Normalizes an amount cell. `scale` is the table-level multiplier; an
/// inline suffix such as `MM` overrides it. Returns `None` for anything the
/// numeric lexicon rejects and for percentages.
pub fn normalize_amount(text: &str, scale: i64, currency: &str) -> Option<NormalizedValue> {
    let parsed = parse_numeric(text)?;
    if parsed.percent {
        return None;
    }
    let effective = parsed.suffix_scale.unwrap_or(scale);
    let value = parsed.signed() * Decimal::from(effective);
    Some(NormalizedValue {
        raw: text.to_string(),
        kind: NormalizedKind::Amount {
            amount: Amount {
                value: if value.is_zero() { Decimal::ZERO } else { value },
                currency: parsed.currency.unwrap_or(currency).to_string(),
                scale_applied: effective,
            },
        },
    })
}

fn rendered_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(-?)(\d{1,3}(?:,\d{3})*\.\d{2}) \(([A-Z]{3})\)$").unwrap())
}

/// Inverse of [`Amount::render`]: `"-1,234.00 (USD)"` -> `(-1234.00, "USD")`.
pub fn parse_rendered_amount(text: &str) -> Option<(Decimal, String)> {
    let caps = rendered_re().captures(text)?;
    let magnitude = Decimal::from_str(&caps[2].replace(',', "")).ok()?;
    let value = if &caps[1] == "-" { -magnitude } else { magnitude };
    Some((value, caps[3].to_string()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NumberOptions {
    /// Read `1,5` as one and a half (and `.` as the grouping mark).
    pub comma_decimal: bool,
}

pub fn normalize_number(text: &str) -> NormalizedValue {
    normalize_number_with(text, NumberOptions::default())
}

fn percent_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^(.*?)\s*(?:%|percent|per\s+cent)$").unwrap())
}

fn parse_plain(text: &str, opts: NumberOptions) -> Option<Decimal> {
    static DOT: OnceLock<Regex> = OnceLock::new();
    static COMMA: OnceLock<Regex> = OnceLock::new();
    let (re, group, point) = if opts.comma_decimal {
        (
            COMMA.get_or_init(|| Regex::new(r"^(\(?)([-\u{2212}]?)((?:\d{1,3}(?:\.\d{3})+|\d+)(?:,\d+)?)(\)?)$").unwrap()),
            '.',
            ',',
        )
    } else {
        (
            DOT.get_or_init(|| Regex::new(r"^(\(?)([-\u{2212}]?)((?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?)(\)?)$").unwrap()),
            ',',
            '.',
        )
    };
    let caps = re.captures(text)?;
    if caps[1].is_empty() != caps[4].is_empty() {
        return None;
    }
    let digits: String = caps[3]
        .chars()
        .filter(|c| *c != group)
        .map(|c| if c == point { '.' } else { c })
        .collect();
    let value = Decimal::from_str(&digits).ok()?;
    let negative = !caps[1].is_empty() || !caps[2].is_empty();
    Some(if negative { -value } else { value })
}

/// Percentages become `<x>%`; other numbers their plain decimal form.
/// Anything else is returned as text.
pub fn normalize_number_with(text: &str, opts: NumberOptions) -> NormalizedValue {
    let cleaned = normalize_ws(text);
    let kind = if let Some(caps) = percent_re().captures(&cleaned) {
        parse_plain(caps[1].trim(), opts).map(|p| NormalizedKind::Percent { percent: p.normalize() })
    } else {
        parse_plain(&cleaned, opts).map(|n| NormalizedKind::RawNumber { number: n.normalize() })
    };
    NormalizedValue {
        raw: text.to_string(),
        kind: kind.unwrap_or(NormalizedKind::Text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::NormalizedKind;

    #[test]
    fn million_suffix_with_currency_code() {
        assert_eq!(normalize_amount("$USD 14MM", 1, "USD").unwrap().render(), "14,000,000.00 (USD)");
    }

    #[test]
    fn parenthesis_negation_scaled() {
        assert_eq!(normalize_amount("(1,234)", 1_000, "USD").unwrap().render(), "-1,234,000.00 (USD)");
    }

    #[test]
    fn zero_is_fixed_point() {
        for scale in [1, 1_000, 1_000_000, 1_000_000_000] {
            assert_eq!(normalize_amount("0", scale, "USD").unwrap().render(), "0.00 (USD)");
        }
    }

    #[test]
    fn inline_suffix_overrides_table_scale() {
        let v = normalize_amount("2.5B", 1_000, "USD").unwrap();
        assert_eq!(v.amount().unwrap().scale_applied, 1_000_000_000);
        assert_eq!(v.render(), "2,500,000,000.00 (USD)");
    }

    #[test]
    fn currency_from_parameter_and_symbol() {
        assert_eq!(normalize_amount("12", 1_000, "EUR").unwrap().render(), "12,000.00 (EUR)");
        assert_eq!(normalize_amount("€12", 1, "USD").unwrap().render(), "12.00 (EUR)");
    }

    #[test]
    fn non_numeric_is_not_an_amount() {
        assert!(normalize_amount("Net sales", 1, "USD").is_none());
        assert!(normalize_amount("30%", 1, "USD").is_none());
    }

    #[test]
    fn rendered_round_trip() {
        let v = normalize_amount("(1,234.56)", 1_000, "USD").unwrap();
        let (value, cur) = parse_rendered_amount(&v.render()).unwrap();
        assert_eq!(value, v.amount().unwrap().value);
        assert_eq!(cur, "USD");
    }

    #[test]
    fn percent_forms() {
        assert_eq!(normalize_number("30 percent").render(), "30%");
        assert_eq!(normalize_number("30%").render(), "30%");
        assert_eq!(normalize_number("12.50 per cent").render(), "12.5%");
        assert_eq!(normalize_number("(5)%").render(), "-5%");
    }

    #[test]
    fn raw_numbers() {
        assert_eq!(normalize_number("1,234").render(), "1234");
        assert_eq!(normalize_number("1.50").render(), "1.5");
        assert_eq!(normalize_number("1234").render(), "1234");
    }

    #[test]
    fn comma_decimal_mode() {
        let on = normalize_number_with("1,5", NumberOptions { comma_decimal: true });
        assert_eq!(on.kind, NormalizedKind::RawNumber { number: Decimal::new(15, 1) });
        let off = normalize_number("1,5");
        assert_eq!(off.kind, NormalizedKind::Text);
        assert_eq!(off.render(), "1,5");
        let grouped = normalize_number_with("1.234,5", NumberOptions { comma_decimal: true });
        assert_eq!(grouped.render(), "1234.5");
    }

    #[test]
    fn grouping_format() {
        assert_eq!(format_grouped(Decimal::new(123, 0)), "123.00");
        assert_eq!(format_grouped(Decimal::new(1234567, 1)), "123,456.70");
        assert_eq!(format_grouped(Decimal::new(-1000, 0)), "-1,000.00");
        assert_eq!(format_grouped(Decimal::new(5, 3)), "0.01");
    }
}
