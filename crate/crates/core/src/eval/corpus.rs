use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{Datelike, Duration, NaiveDate, TimeZone, Utc, Weekday};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{Label, LabeledHeader};
use crate::error::{Result, SpotError};
use crate::filter::tokenize_words;
use crate::ingestion::FilingDoc;
use crate::normalize::FiscalCalendars;
use crate::table::{detect_body_rect, parse_html_tables, row_header_paths_with_context, Grid, HeaderPath};
use crate::types::{DocType, Sector, SectorGroup};

use super::names::*;
use super::LabelRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// Income statement opening with one row per segment.
    SegmentIncome,
    /// Segment operating income by consumer segment.
    SegmentOperatingIncome,
    /// Commodity segment groups with their operating metrics nested below.
    SegmentStats,
    /// The same metrics and commodities nested the other way round.
    MarketPrices,
    BalanceSheet,
    DebtSchedule,
    Kpi,
    Roster,
}

impl TableKind {
    pub fn for_sector(sector: Sector) -> &'static [TableKind] {
        use TableKind::*;
        match sector.group() {
            SectorGroup::Consumer => &[SegmentIncome, SegmentOperatingIncome, BalanceSheet, DebtSchedule, Kpi, Roster],
            SectorGroup::Commodities => &[SegmentIncome, SegmentStats, MarketPrices, BalanceSheet, DebtSchedule, Roster],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub companies_per_sector: BTreeMap<Sector, usize>,
    pub filings_per_company: usize,
    /// Table kinds are taken in order from [`TableKind::for_sector`],
    /// cycling when more are requested.
    pub tables_per_filing: usize,
    /// Shared segment names of the commodity sectors.
    pub commodity_segments: BTreeMap<Sector, Vec<String>>,
    /// Words appended to invented consumer product names.
    pub product_words: BTreeMap<Sector, Vec<String>>,
    pub standard_lines: Vec<String>,
}

fn owned(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for CorpusSpec {
    fn default() -> Self {
        let companies_per_sector = Sector::ALL
            .iter()
            .map(|s| (*s, if *s == Sector::Chemicals { 24 } else { 25 }))
            .collect();
        CorpusSpec {
            seed: 1,
            companies_per_sector,
            filings_per_company: 2,
            tables_per_filing: 6,
            commodity_segments: [
                (Sector::MetalsMining, owned(&METAL_SEGMENTS)),
                (Sector::OilGas, owned(&OIL_GAS_SEGMENTS)),
                (Sector::Chemicals, owned(&CHEMICAL_SEGMENTS)),
            ]
            .into_iter()
            .collect(),
            product_words: [
                (Sector::Tech, owned(&TECH_PRODUCT_WORDS)),
                (Sector::Media, owned(&MEDIA_PRODUCT_WORDS)),
                (Sector::Retail, owned(&RETAIL_PRODUCT_WORDS)),
            ]
            .into_iter()
            .collect(),
            standard_lines: owned(&STANDARD_LINES),
        }
    }
}

impl CorpusSpec {
    /// Default pools with a custom shape.
    pub fn with_shape(seed: u64, companies_per_sector: &[(Sector, usize)], filings: usize, tables: usize) -> Self {
        CorpusSpec {
            seed,
            companies_per_sector: companies_per_sector.iter().copied().collect(),
            filings_per_company: filings,
            tables_per_filing: tables,
            ..CorpusSpec::default()
        }
    }

    pub fn n_companies(&self) -> usize {
        self.companies_per_sector.values().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SpotError::Validation(m));
        if self.n_companies() == 0 {
            return bad("corpus needs at least one company".into());
        }
        if self.filings_per_company == 0 || self.tables_per_filing == 0 {
            return bad("filings per company and tables per filing must be positive".into());
        }
        if self.filings_per_company > 11 {
            return bad("at most 11 filings per company fit the 2016-2019 window".into());
        }
        if self.standard_lines.is_empty() {
            return bad("standard line pool is empty".into());
        }
        for (sector, n) in &self.companies_per_sector {
            if *n == 0 {
                continue;
            }
            let pool = match sector.group() {
                SectorGroup::Commodities => self.commodity_segments.get(sector),
                SectorGroup::Consumer => self.product_words.get(sector),
            };
            let need = if sector.group() == SectorGroup::Commodities { 3 } else { 1 };
            if pool.is_none_or(|p| p.len() < need) {
                return bad(format!("segment pool for {sector} needs at least {need} entries"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyProfile {
    pub company_id: String,
    pub name: String,
    pub sector: Sector,
    pub fiscal_year_end_month: u32,
    pub segments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub companies: Vec<CompanyProfile>,
    pub filings: Vec<FilingDoc>,
    pub labels: Vec<LabelRecord>,
}

impl Corpus {
    pub fn headers(&self) -> Vec<LabeledHeader> {
        self.labels.iter().map(LabelRecord::header).collect()
    }

    pub fn calendars(&self) -> FiscalCalendars {
        let mut cals = FiscalCalendars::default();
        for c in &self.companies {
            if let Ok(cal) = crate::normalize::FiscalCalendar::new(&c.company_id, c.fiscal_year_end_month) {
                cals.insert(cal);
            }
        }
        cals
    }

    /// Operating over non-operating header count.
    pub fn label_ratio(&self) -> f64 {
        let op = self.labels.iter().filter(|l| l.label == Label::Operating).count();
        let non = self.labels.len() - op;
        if non == 0 {
            f64::INFINITY
        } else {
            op as f64 / non as f64
        }
    }
}

/// Row headers of a parsed table, one per labeled row. Tables with a
/// numeric body yield the body rows and the group labels above them.
/// Tables without one (rosters) yield every non-blank first cell below
/// the first row.
pub fn header_rows(grid: &Grid) -> Vec<(usize, HeaderPath)> {
    match detect_body_rect(grid) {
        Ok(body) => row_header_paths_with_context(grid, &body)
            .into_iter()
            .filter(|(_, p)| !p.is_empty())
            .collect(),
        Err(_) => (1..grid.n_rows)
            .filter_map(|r| {
                let cell = grid.cell(r, 0)?;
                if !cell.is_origin_at(r, 0) || cell.is_blank() {
                    return None;
                }
                let seg = HeaderPath::clean_segment(&cell.text);
                HeaderPath::new(vec![seg]).ok().filter(|p| !p.is_empty()).map(|p| (r, p))
            })
            .collect(),
    }
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut names = NameForge::new(spec);
    let mut corpus = Corpus {
        companies: Vec::new(),
        filings: Vec::new(),
        labels: Vec::new(),
    };
    for sector in Sector::ALL {
        let n = spec.companies_per_sector.get(&sector).copied().unwrap_or(0);
        for i in 0..n {
            let company = make_company(spec, sector, i + 1, &mut rng, &mut names);
            let quarters = pick_quarters(spec.filings_per_company, &mut rng);
            for end in quarters {
                let (filing, labels) = make_filing(spec, &company, end, &mut rng)?;
                corpus.filings.push(filing);
                corpus.labels.extend(labels);
            }
            corpus.companies.push(company);
        }
    }
    Ok(corpus)
}

fn sector_code(sector: Sector) -> &'static str {
    match sector {
        Sector::Tech => "TEC",
        Sector::Media => "MED",
        Sector::Retail => "RET",
        Sector::OilGas => "OIL",
        Sector::MetalsMining => "MET",
        Sector::Chemicals => "CHM",
    }
}

const PROSE: [&str; 6] = [
    "today announced financial results for its fiscal quarter ended",
    "Net sales for the quarter were million compared with million in the year ago quarter",
    "revenue increased percent year over year while revenue declined",
    "Quarterly results reflect continued demand and disciplined cost management",
    "The company will discuss these earnings on a conference call with investors",
    "Total revenue was million and production of was in line with guidance",
];

/// Invented words that never collide with each other or with any fixed
/// vocabulary of the corpus.
struct NameForge {
    reserved: BTreeSet<String>,
}

impl NameForge {
    fn new(spec: &CorpusSpec) -> Self {
        let mut reserved = BTreeSet::new();
        let mut add = |s: &str| reserved.extend(tokenize_words(s));
        let fixed = PROSE
            .iter()
            .chain(&COMPANY_SUFFIXES)
            .chain(&SEGMENT_METRICS)
            .chain(&DEBT_INSTRUMENTS)
            .chain(&FIRST_NAMES)
            .chain(&LAST_NAMES)
            .chain(&TITLES)
            .chain(&MONTHS)
            .chain(BALANCE_SHEET_LINES.iter().map(|(s, _)| s))
            .chain(CONSUMER_KPIS.iter().map(|(s, _)| s))
            .chain(COMMODITY_KPIS.iter().map(|(s, _)| s));
        for s in fixed {
            add(s);
        }
        for s in spec
            .commodity_segments
            .values()
            .chain(spec.product_words.values())
            .flatten()
            .chain(&spec.standard_lines)
        {
            add(s);
        }
        for s in TABLE_WORDS {
            add(s);
        }
        NameForge { reserved }
    }

    fn word(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let n = rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..n {
                w.push_str(ONSETS.choose(rng).unwrap());
                w.push_str(NUCLEI.choose(rng).unwrap());
            }
            w.push_str(CODAS.choose(rng).unwrap());
            if w.len() >= 5 && self.reserved.insert(w.clone()) {
                let mut chars = w.chars();
                let first = chars.next().unwrap().to_ascii_uppercase();
                return std::iter::once(first).chain(chars).collect();
            }
        }
    }
}

/// Fixed phrases used by the table templates.
const TABLE_WORDS: [&str; 16] = [
    "Net sales",
    "Total net sales",
    "Revenues",
    "Total revenues",
    "Segment operating income",
    "Total segment operating income",
    "Corporate and unallocated costs",
    "Total debt",
    "Less: current portion",
    "Name",
    "Title",
    "Three Six Nine Twelve Months Ended",
    "CONDENSED CONSOLIDATED STATEMENTS OF OPERATIONS Unaudited",
    "In millions except per share amounts",
    "SEGMENT INFORMATION BALANCE SHEETS DEBT KEY OPERATING METRICS EXECUTIVE OFFICERS AND DIRECTORS",
    "OPERATING STATISTICS BY SEGMENT MARKET PRICES AND VOLUMES",
];

fn make_company(spec: &CorpusSpec, sector: Sector, index: usize, rng: &mut ChaCha8Rng, names: &mut NameForge) -> CompanyProfile {
    let name = format!("{} {}", names.word(rng), COMPANY_SUFFIXES.choose(rng).unwrap());
    let fiscal_year_end_month = *[12, 12, 12, 9, 6, 3].choose(rng).unwrap();
    let segments = match sector.group() {
        SectorGroup::Commodities => {
            let pool = &spec.commodity_segments[&sector];
            let k = rng.gen_range(3..=4.min(pool.len()));
            let mut picked: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
            picked.sort_by_key(|s| pool.iter().position(|p| p == s));
            picked
        }
        SectorGroup::Consumer => {
            let words = &spec.product_words[&sector];
            let k = rng.gen_range(3..=5);
            (0..k)
                .map(|_| {
                    let base = names.word(rng);
                    if rng.gen_bool(0.4) {
                        format!("{base} {}", words.choose(rng).unwrap())
                    } else {
                        base
                    }
                })
                .collect()
        }
    };
    CompanyProfile {
        company_id: format!("{}{index:03}", sector_code(sector)),
        name,
        sector,
        fiscal_year_end_month,
        segments,
    }
}

/// Distinct calendar quarter ends between mid 2016 and early 2019, sorted.
fn pick_quarters(n: usize, rng: &mut ChaCha8Rng) -> Vec<(i32, u32)> {
    let all: Vec<(i32, u32)> = (2016..=2019)
        .flat_map(|y| [3, 6, 9, 12].map(|m| (y, m)))
        .filter(|&(y, m)| (y, m) >= (2016, 6) && (y, m) <= (2019, 3))
        .collect();
    let mut picked: Vec<(i32, u32)> = all.into_iter().choose_multiple(rng, n);
    picked.sort();
    picked
}

fn month_end(year: i32, month: u32, weekly: bool) -> NaiveDate {
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid month");
    let mut d = next - Duration::days(1);
    if weekly {
        while d.weekday() != Weekday::Sat {
            d -= Duration::days(1);
        }
    }
    d
}

fn render_date(d: NaiveDate) -> String {
    format!("{} {}, {}", MONTHS[d.month0() as usize], d.day(), d.year())
}

fn group_commas(v: u64) -> String {
    let s = v.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn money(v: i64, dollar: bool) -> String {
    let body = group_commas(v.unsigned_abs());
    match (v < 0, dollar) {
        (true, _) => format!("({body})"),
        (false, true) => format!("${body}"),
        (false, false) => body,
    }
}

#[derive(Debug, Clone)]
struct DraftRow {
    text: String,
    indent: u32,
    values: Vec<String>,
    label: Label,
}

#[derive(Debug, Clone)]
struct Draft {
    title: String,
    /// Column header rows below the caption: (text, colspan) per cell after
    /// the stub column.
    head: Vec<Vec<(String, usize)>>,
    stub_head: Option<String>,
    rows: Vec<DraftRow>,
}

impl Draft {
    fn n_cols(&self) -> usize {
        self.head.first().map_or(1, |r| r.iter().map(|(_, s)| s).sum())
    }

    fn push(&mut self, text: &str, indent: u32, values: Vec<String>, label: Label) {
        self.rows.push(DraftRow {
            text: text.to_string(),
            indent,
            values,
            label,
        });
    }

    fn group(&mut self, text: &str, label: Label) {
        let blanks = vec![String::new(); self.n_cols()];
        self.push(text, 0, blanks, label);
    }
}

struct PeriodCols {
    head: Vec<Vec<(String, usize)>>,
    n: usize,
}

/// Quarter and year-to-date columns, current year before prior year.
fn period_columns(end: (i32, u32), company: &CompanyProfile, weekly: bool) -> PeriodCols {
    let (y, m) = end;
    let fy_start = company.fiscal_year_end_month % 12 + 1;
    let months_in = (m + 12 - fy_start) % 12 + 1;
    let cur = render_date(month_end(y, m, weekly));
    let prior = render_date(month_end(y - 1, m, weekly));
    let mut spans = vec![("Three Months Ended".to_string(), 2)];
    if months_in > 3 {
        let ytd = match months_in {
            6 => "Six",
            9 => "Nine",
            _ => "Twelve",
        };
        spans.push((format!("{ytd} Months Ended"), 2));
    }
    let dates: Vec<(String, usize)> = spans
        .iter()
        .flat_map(|_| [(cur.clone(), 1), (prior.clone(), 1)])
        .collect();
    let n = dates.len();
    PeriodCols {
        head: vec![spans, dates],
        n,
    }
}

fn balance_columns(end: (i32, u32), company: &CompanyProfile, weekly: bool) -> PeriodCols {
    let (y, m) = end;
    let fy = company.fiscal_year_end_month;
    let prior_fy_year = if m > fy { y } else { y - 1 };
    let cur = render_date(month_end(y, m, weekly));
    let prior = render_date(month_end(prior_fy_year, fy, weekly));
    PeriodCols {
        head: vec![vec![(cur, 1), (prior, 1)]],
        n: 2,
    }
}

fn subset<'a, T>(items: &'a [T], lo: usize, hi: usize, rng: &mut ChaCha8Rng) -> Vec<&'a T> {
    let k = rng.gen_range(lo.min(items.len())..=hi.min(items.len()));
    let mut idx: Vec<usize> = (0..items.len()).choose_multiple(rng, k);
    idx.sort_unstable();
    idx.into_iter().map(|i| &items[i]).collect()
}

fn amounts(n: usize, lo: i64, hi: i64, rng: &mut ChaCha8Rng) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

struct Ctx<'a> {
    spec: &'a CorpusSpec,
    company: &'a CompanyProfile,
    end: (i32, u32),
    weekly: bool,
    /// Commodity segments and metrics shared by the stats and market tables.
    stats_segments: Vec<String>,
    stats_metrics: Vec<String>,
}

fn draft_table(kind: TableKind, ctx: &Ctx<'_>, rng: &mut ChaCha8Rng) -> Draft {
    use Label::{NonOperating as Non, Operating as Op};
    let company = ctx.company;
    let consumer = company.sector.group() == SectorGroup::Consumer;
    let new_draft = |title: &str, cols: PeriodCols| Draft {
        title: title.to_string(),
        head: cols.head,
        stub_head: None,
        rows: Vec::new(),
    };
    match kind {
        TableKind::SegmentIncome => {
            let cols = period_columns(ctx.end, company, ctx.weekly);
            let n = cols.n;
            let mut d = new_draft("CONDENSED CONSOLIDATED STATEMENTS OF OPERATIONS (Unaudited)", cols);
            let (group, total) = if consumer {
                ("Net sales:", "Total net sales")
            } else {
                ("Revenues:", "Total revenues")
            };
            d.group(group, Non);
            let segments: Vec<&String> = if consumer {
                company.segments.iter().collect()
            } else {
                subset(&company.segments, 2, 4, rng)
            };
            let mut totals = vec![0i64; n];
            for (i, seg) in segments.iter().enumerate() {
                let vals = amounts(n, 40, 6000, rng);
                for (t, v) in totals.iter_mut().zip(&vals) {
                    *t += v;
                }
                d.push(seg, 1, vals.iter().map(|v| money(*v, i == 0)).collect(), Op);
            }
            d.push(total, 0, totals.iter().map(|v| money(*v, true)).collect(), Non);
            for line in subset(&ctx.spec.standard_lines, 5, 8, rng) {
                let vals: Vec<String> = if line.contains("per share") {
                    (0..n).map(|_| format!("{:.2}", rng.gen_range(0.1..9.0))).collect()
                } else {
                    amounts(n, -400, 3000, rng).into_iter().map(|v| money(v, false)).collect()
                };
                d.push(line, 0, vals, Non);
            }
            d
        }
        TableKind::SegmentOperatingIncome => {
            let cols = period_columns(ctx.end, company, ctx.weekly);
            let n = cols.n;
            let mut d = new_draft("SEGMENT INFORMATION (Unaudited)", cols);
            d.group("Segment operating income:", Non);
            for (i, seg) in company.segments.iter().enumerate() {
                let vals = amounts(n, -200, 2500, rng);
                d.push(seg, 1, vals.iter().map(|v| money(*v, i == 0)).collect(), Op);
            }
            let closing = ["Total segment operating income", "Corporate and unallocated costs", "Operating income"];
            for (i, line) in closing.iter().enumerate() {
                let vals = amounts(n, 100, 4000, rng);
                d.push(line, 0, vals.iter().map(|v| money(if i == 1 { -v / 4 } else { *v }, i != 1)).collect(), Non);
            }
            d
        }
        TableKind::SegmentStats => {
            let cols = period_columns(ctx.end, company, ctx.weekly);
            let n = cols.n;
            let mut d = new_draft("OPERATING STATISTICS BY SEGMENT", cols);
            for seg in &ctx.stats_segments {
                d.group(&format!("{seg}:"), Op);
                for metric in &ctx.stats_metrics {
                    let vals = amounts(n, 1, 900, rng);
                    d.push(metric, 1, vals.iter().map(|v| money(*v, false)).collect(), Op);
                }
            }
            d
        }
        TableKind::MarketPrices => {
            let cols = period_columns(ctx.end, company, ctx.weekly);
            let n = cols.n;
            let mut d = new_draft("MARKET PRICES AND VOLUMES", cols);
            for metric in &ctx.stats_metrics {
                d.group(&format!("{metric}:"), Non);
                for seg in &ctx.stats_segments {
                    let vals = amounts(n, 1, 900, rng);
                    d.push(seg, 1, vals.iter().map(|v| money(*v, false)).collect(), Non);
                }
            }
            d
        }
        TableKind::BalanceSheet => {
            let cols = balance_columns(ctx.end, company, ctx.weekly);
            let n = cols.n;
            let mut d = new_draft("CONDENSED CONSOLIDATED BALANCE SHEETS (Unaudited)", cols);
            let picked = subset(&BALANCE_SHEET_LINES, 7, 11, rng);
            for (i, (line, indent)) in picked.iter().enumerate() {
                let is_group = line.ends_with(':');
                let has_child = picked.get(i + 1).is_some_and(|(_, k)| *k > *indent);
                if is_group && !has_child {
                    continue;
                }
                if is_group {
                    d.group(line, Non);
                } else {
                    let vals = amounts(n, 50, 20000, rng);
                    d.push(line, *indent, vals.iter().map(|v| money(*v, i == 0)).collect(), Non);
                }
            }
            d
        }
        TableKind::DebtSchedule => {
            let cols = balance_columns(ctx.end, company, ctx.weekly);
            let n = cols.n;
            let mut d = new_draft("DEBT", cols);
            let mut total = vec![0i64; n];
            for inst in subset(&DEBT_INSTRUMENTS, 2, 4, rng) {
                let text = if inst.ends_with("due") {
                    let rate = rng.gen_range(150..=725) as f64 / 100.0;
                    format!("{rate:.2}% {inst} {}", ctx.end.0 + rng.gen_range(2..=12))
                } else {
                    inst.to_string()
                };
                let vals = amounts(n, 100, 3000, rng);
                for (t, v) in total.iter_mut().zip(&vals) {
                    *t += v;
                }
                d.push(&text, 0, vals.iter().map(|v| money(*v, false)).collect(), Non);
            }
            d.push("Total debt", 0, total.iter().map(|v| money(*v, true)).collect(), Non);
            if rng.gen_bool(0.5) {
                let cur: Vec<String> = amounts(n, 10, 300, rng).into_iter().map(|v| money(-v, false)).collect();
                d.push("Less: current portion", 1, cur, Non);
            }
            d
        }
        TableKind::Kpi => {
            let cols = period_columns(ctx.end, company, ctx.weekly);
            let n = cols.n;
            let mut d = new_draft("KEY OPERATING METRICS", cols);
            let pool: &[(&str, bool)] = if consumer { &CONSUMER_KPIS } else { &COMMODITY_KPIS };
            for (line, pct) in subset(pool, 2, 4, rng) {
                let vals: Vec<String> = (0..n)
                    .map(|_| {
                        if *pct {
                            format!("{:.1}%", rng.gen_range(-5.0..45.0))
                        } else {
                            money(rng.gen_range(1..5000), false)
                        }
                    })
                    .collect();
                d.push(line, 0, vals, Non);
            }
            d
        }
        TableKind::Roster => {
            let mut d = Draft {
                title: "EXECUTIVE OFFICERS AND DIRECTORS".into(),
                head: vec![vec![("Title".into(), 1)]],
                stub_head: Some("Name".into()),
                rows: Vec::new(),
            };
            let k = rng.gen_range(3..=5);
            let titles: Vec<&&str> = TITLES.choose_multiple(rng, k).collect();
            for title in titles {
                let person = format!("{} {}", FIRST_NAMES.choose(rng).unwrap(), LAST_NAMES.choose(rng).unwrap());
                d.push(&person, 0, vec![title.to_string()], Non);
            }
            d
        }
    }
}

fn render_table(out: &mut String, d: &Draft, company: &CompanyProfile) {
    let _ = write!(
        out,
        "<p><b>{}</b></p>\n<p>{}</p>\n",
        html_escape(&company.name.to_uppercase()),
        html_escape(&d.title)
    );
    if d.stub_head.is_none() {
        out.push_str("<p>(In millions, except per share amounts)</p>\n");
    }
    out.push_str("<table>\n");
    for (i, row) in d.head.iter().enumerate() {
        let stub = if i + 1 == d.head.len() { d.stub_head.as_deref().unwrap_or("") } else { "" };
        let _ = write!(out, "<tr><td>{}</td>", html_escape(stub));
        for (text, span) in row {
            if *span > 1 {
                let _ = write!(out, "<td colspan=\"{span}\" align=\"center\">{}</td>", html_escape(text));
            } else {
                let _ = write!(out, "<td align=\"center\">{}</td>", html_escape(text));
            }
        }
        out.push_str("</tr>\n");
    }
    for row in &d.rows {
        if row.indent > 0 {
            let _ = write!(out, "<tr><td style=\"padding-left:{}pt\">", 12 * row.indent);
        } else {
            out.push_str("<tr><td>");
        }
        out.push_str(&html_escape(&row.text));
        out.push_str("</td>");
        for v in &row.values {
            let _ = write!(out, "<td align=\"right\">{}</td>", html_escape(v));
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('\'', "&#39;")
}

fn ordinal(q: u32) -> &'static str {
    ["first", "second", "third", "fourth"][(q as usize - 1).min(3)]
}

fn make_filing(
    spec: &CorpusSpec,
    company: &CompanyProfile,
    end: (i32, u32),
    rng: &mut ChaCha8Rng,
) -> Result<(FilingDoc, Vec<LabelRecord>)> {
    let weekly = rng.gen_bool(0.3);
    let period_end = month_end(end.0, end.1, weekly);
    let filed = period_end + Duration::days(rng.gen_range(20..=45));
    let filed_at = Utc
        .with_ymd_and_hms(filed.year(), filed.month(), filed.day(), 16, 5, 0)
        .single()
        .expect("valid timestamp");
    let filing_id = format!("{}-8K-{}", company.company_id, filed.format("%Y-%m-%d"));

    let fy_start = company.fiscal_year_end_month % 12 + 1;
    let quarter = ((end.1 + 12 - fy_start) % 12 + 1).div_ceil(3);
    let fiscal_year = if end.1 > company.fiscal_year_end_month { end.0 + 1 } else { end.0 };

    let stats_segments: Vec<String> = company.segments.choose_multiple(rng, 2).cloned().collect();
    let stats_metrics: Vec<String> = SEGMENT_METRICS.choose_multiple(rng, 2).map(|s| s.to_string()).collect();
    let ctx = Ctx {
        spec,
        company,
        end,
        weekly,
        stats_segments,
        stats_metrics,
    };

    let kinds = TableKind::for_sector(company.sector);
    let drafts: Vec<Draft> = (0..spec.tables_per_filing)
        .map(|i| draft_table(kinds[i % kinds.len()], &ctx, rng))
        .collect();

    let mut body = String::new();
    let _ = write!(
        body,
        "<html><head><title>{} Form 8-K</title></head><body>\n",
        html_escape(&company.name)
    );
    let seg = |i: usize| html_escape(&company.segments[i % company.segments.len()]);
    let _ = write!(
        body,
        "<p>{} today announced financial results for its fiscal {fiscal_year} {} quarter ended {}. \
         Net sales for the quarter were ${} million, compared with ${} million in the year ago quarter. \
         {} revenue increased {} percent year over year, while {} revenue declined.</p>\n\
         <p>Quarterly results reflect continued demand and disciplined cost management. \
         The company will discuss these earnings on a conference call with investors.</p>\n",
        html_escape(&company.name),
        ordinal(quarter),
        render_date(period_end),
        group_commas(rng.gen_range(500..20000)),
        group_commas(rng.gen_range(500..20000)),
        seg(0),
        rng.gen_range(2..30),
        seg(1),
    );
    for d in &drafts {
        render_table(&mut body, d, company);
    }
    body.push_str("</body></html>\n");

    let grids = parse_html_tables(&body);
    if grids.len() != drafts.len() {
        return Err(SpotError::Shape(format!(
            "{filing_id}: rendered {} tables, parsed {}",
            drafts.len(),
            grids.len()
        )));
    }
    let mut labels = Vec::new();
    for (grid, draft) in grids.iter().zip(&drafts) {
        let n_head = draft.head.len();
        for (row, path) in header_rows(grid) {
            let Some(src) = row.checked_sub(n_head).and_then(|i| draft.rows.get(i)) else {
                return Err(SpotError::Shape(format!(
                    "{filing_id}/{}: header row {row} ({}) has no draft row",
                    grid.table_id,
                    path.render()
                )));
            };
            labels.push(LabelRecord {
                filing_id: filing_id.clone(),
                table_id: grid.table_id.clone(),
                row_index: row,
                header_path: path.render(),
                label: src.label,
                company_id: company.company_id.clone(),
                sector: company.sector,
            });
        }
    }

    let filing = FilingDoc {
        filing_id,
        company_id: company.company_id.clone(),
        sector: company.sector,
        doc_type: DocType::EightK,
        filed_at,
        body,
        is_earnings: true,
    };
    Ok((filing, labels))
}
