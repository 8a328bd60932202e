use std::sync::OnceLock;

use regex::Regex;

use crate::table::Grid;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleInfo {
    pub scale: i64,
    pub currency: String,
    pub warnings: Vec<String>,
}

fn word_scale_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\bin\s+(thousands|millions|billions)\b|\b(thousands|millions|billions)\s+of\b|\(\s*(000)s?\s*\)")
            .unwrap()
    })
}

fn short_scale_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[\s(\[$€£])(MM|K)(?:$|[\s)\],])").unwrap())
}

fn currency_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(€|\bEUR\b|\beuros?\b)|(£|\bGBP\b|\bpounds\s+sterling\b)|(\$|\bUSD\b|\bdollars?\b)").unwrap())
}

fn scale_in(text: &str) -> Option<i64> {
    if let Some(c) = word_scale_re().captures(text) {
        let word = c.get(1).or(c.get(2)).or(c.get(3)).map(|m| m.as_str().to_ascii_lowercase())?;
        return Some(match word.as_str() {
            "thousands" | "000" => 1_000,
            "millions" => 1_000_000,
            _ => 1_000_000_000,
        });
    }
    short_scale_re().captures(text).map(|c| if &c[1] == "MM" { 1_000_000 } else { 1_000 })
}

fn currency_in(text: &str) -> Option<&'static str> {
    let c = currency_re().captures(text)?;
    Some(if c.get(1).is_some() {
        "EUR"
    } else if c.get(2).is_some() {
        "GBP"
    } else {
        "USD"
    })
}

fn first<'a, T>(texts: impl IntoIterator<Item = &'a str>, f: impl Fn(&str) -> Option<T>) -> Option<T> {
    texts.into_iter().find_map(f)
}

/// Finds the table scale and currency. Caption context is scanned first,
/// then in-table text; when both name a value and disagree, the in-table
/// one wins and the conflict is reported as a warning. Defaults to
/// `(1, USD)`.
pub fn detect_scale(caption_context: &[String], table_texts: &[&str]) -> ScaleInfo {
    let mut warnings = Vec::new();
    let caption_scale = first(caption_context.iter().map(String::as_str), scale_in);
    let table_scale = first(table_texts.iter().copied(), scale_in);
    let scale = match (caption_scale, table_scale) {
        (Some(a), Some(b)) if a != b => {
            warnings.push(format!("scale conflict: caption says {a}, table says {b}; using {b}"));
            b
        }
        (_, Some(b)) => b,
        (Some(a), None) => a,
        (None, None) => 1,
    };
    let caption_cur = first(caption_context.iter().map(String::as_str), currency_in);
    let table_cur = first(table_texts.iter().copied(), currency_in);
    let currency = match (caption_cur, table_cur) {
        (Some(a), Some(b)) if a != b => {
            warnings.push(format!("currency conflict: caption says {a}, table says {b}; using {b}"));
            b
        }
        (_, Some(b)) => b,
        (Some(a), None) => a,
        (None, None) => "USD",
    };
    ScaleInfo {
        scale,
        currency: currency.to_string(),
        warnings,
    }
}

/// [`detect_scale`] over a grid's caption context and its non-numeric
/// cells.
pub fn detect_scale_for_grid(grid: &Grid) -> ScaleInfo {
    let texts: Vec<&str> = grid.origin_cells().filter(|c| c.is_text()).map(|c| c.text.as_str()).collect();
    detect_scale(&grid.caption_context, &texts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caption_in_millions() {
        let info = detect_scale(&["(in millions, except per share data)".to_string()], &[]);
        assert_eq!((info.scale, info.currency.as_str()), (1_000_000, "USD"));
    }

    #[test]
    fn default_is_units_usd() {
        let info = detect_scale(&[], &["Net sales"]);
        assert_eq!((info.scale, info.currency.as_str()), (1, "USD"));
        assert!(info.warnings.is_empty());
    }

    #[test]
    fn euro_thousands_header() {
        let info = detect_scale(&[], &["€ in thousands"]);
        assert_eq!((info.scale, info.currency.as_str()), (1_000, "EUR"));
    }

    #[test]
    fn dollar_in_millions_and_short_forms() {
        assert_eq!(detect_scale(&[], &["$ in millions"]).scale, 1_000_000);
        assert_eq!(detect_scale(&[], &["Amounts (MM)"]).scale, 1_000_000);
        assert_eq!(detect_scale(&[], &["USD K"]).scale, 1_000);
        assert_eq!(detect_scale(&[], &["Form 8-K"]).scale, 1);
    }

    #[test]
    fn table_wins_on_conflict() {
        let info = detect_scale(&["in millions".to_string()], &["in thousands"]);
        assert_eq!(info.scale, 1_000);
        assert_eq!(info.warnings.len(), 1);
    }
}
