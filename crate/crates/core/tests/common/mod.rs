//! Shared fixtures: the statement-of-operations filing and a toy model
//! trained on a handful of headers.

#![allow(dead_code)]

use chrono::{TimeZone, Utc};

use spot_core::classifier::{train_model, HeaderClassifier, Label, LabeledHeader, TrainConfig};
use spot_core::extract::ExtractionModels;
use spot_core::filter::{CompanyDoc, TfidfMatrix};
use spot_core::ingestion::FilingDoc;
use spot_core::normalize::{FiscalCalendar, FiscalCalendars};
use spot_core::{DocType, Sector};

pub const FIGURE1_HTML: &str = include_str!("../fixtures/figure1.html");
pub const ROSTER_HTML: &str = include_str!("../fixtures/roster_only.html");

pub const COMPANY: &str = "AAPL";
pub const FIGURE1_FILING: &str = "AAPL-8K-2020-07-30";

pub fn filing(filing_id: &str, body: &str) -> FilingDoc {
    FilingDoc {
        filing_id: filing_id.to_string(),
        company_id: COMPANY.to_string(),
        sector: Sector::Tech,
        doc_type: DocType::EightK,
        filed_at: Utc.with_ymd_and_hms(2020, 7, 30, 20, 30, 0).unwrap(),
        body: body.to_string(),
        is_earnings: true,
    }
}

pub fn figure1_filing() -> FilingDoc {
    filing(FIGURE1_FILING, FIGURE1_HTML)
}

const NON_OPERATING: &[&str] = &[
    "Net sales",
    "Net sales --> Total net sales",
    "Cost of sales",
    "Gross margin",
    "Operating expenses",
    "Operating expenses --> Research and development",
    "Operating expenses --> Selling, general and administrative",
    "Operating expenses --> Total operating expenses",
    "Operating income",
    "Net income",
    "Provision for income taxes",
    "Name",
];

const OPERATING: &[&str] = &[
    "Net sales --> Widgets",
    "Net sales --> Gadgets",
    "Net sales --> Consulting",
    "Net sales --> Licensing",
    "Net sales --> Hardware",
    "Net sales --> Subscriptions",
];

/// Small labeled set: operating rows are company words under "Net sales",
/// so after masking they read as `net sales --> <UNK>`.
pub fn toy_headers() -> Vec<LabeledHeader> {
    let mk = |text: &&str, label| LabeledHeader {
        text: text.to_string(),
        label,
        company_id: "TOY".into(),
        sector: Sector::Tech,
    };
    NON_OPERATING
        .iter()
        .map(|t| mk(t, Label::NonOperating))
        .chain(OPERATING.iter().map(|t| mk(t, Label::Operating)))
        .collect()
}

pub fn toy_classifier() -> HeaderClassifier {
    let headers = toy_headers();
    let cfg = TrainConfig {
        embedding_dim: 16,
        hidden_units: 8,
        dropout: 0.0,
        learning_rate: 0.01,
        max_epochs: 60,
        patience: 60,
        batch_size: 6,
        seed: 7,
        ..TrainConfig::default()
    };
    train_model(&headers, &headers, &cfg, None).unwrap().classifier
}

/// TF-IDF over the fixture company and two peers whose text shares only
/// statement boilerplate with it.
pub fn toy_tfidf() -> TfidfMatrix {
    let apple = spot_core::filter::build_company_doc(&[figure1_filing()]).unwrap();
    let peers = [
        CompanyDoc::from_texts(
            "MSFT",
            ["Net sales Cost of sales Gross margin Operating income Three Months Ended June 30 2020 Cloud Gaming revenue"],
        ),
        CompanyDoc::from_texts(
            "XOM",
            ["Net sales Cost of sales Gross margin Operating income Three Months Ended June 30 2020 Upstream Downstream revenue"],
        ),
    ];
    let mut docs = vec![apple];
    docs.extend(peers);
    TfidfMatrix::build(&docs).unwrap()
}

pub fn toy_models() -> ExtractionModels {
    let mut calendars = FiscalCalendars::default();
    calendars.insert(FiscalCalendar::new(COMPANY, 9).unwrap());
    ExtractionModels {
        classifier: toy_classifier(),
        tfidf: toy_tfidf(),
        delta: 1.0,
        calendars,
    }
}
