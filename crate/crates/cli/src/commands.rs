use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use spot_core::classifier::baselines::{train_baseline, BaselineConfig, BaselineKind};
use spot_core::classifier::{load_embeddings, train_model, HeaderClassifier, Label, LabeledHeader};
use spot_core::eval::{
    compute_metrics, generate_corpus, read_labels, sector_report, split_by_company, table_score_pairs, write_labels, CorpusSpec,
    LabelRecord,
};
use spot_core::extract::{export_csv, extract_segments, ExportQuery, ExtractionModels, RecordStore, SegmentRecord, TableOutcome};
use spot_core::filter::{build_company_doc, tune_threshold, TfidfMatrix};
use spot_core::ingestion::{load_entry, poll_feed, EarningsKeywords, FilingDoc, FilingStore, SeenEntries};
use spot_core::normalize::FiscalCalendars;
use spot_core::{Sector, SpotError};

use crate::manifest::{manifest_for, RunManifest};
use crate::{Cmd, CliError, SplitArgs};

pub const CALENDARS_FILE: &str = "calendars.csv";
pub const LABELS_FILE: &str = "labels.csv";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    CliError::Usage(msg.into()).into()
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        return Err(usage(format!("{what} {} is not a directory", path.display())));
    }
    Ok(())
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(usage(format!("--{name} must be in [0, 1), got {v}")));
    }
    Ok(())
}

fn runs_dir(store: &Path) -> PathBuf {
    store.join("runs")
}

/// Train, validation and test headers of a company-disjoint split.
struct Split {
    train: Vec<LabeledHeader>,
    valid: Vec<LabeledHeader>,
    test: Vec<LabeledHeader>,
}

fn split_labels(labels: &[LabelRecord], s: &SplitArgs) -> Result<Split> {
    check_fraction("test-fraction", s.test_fraction)?;
    check_fraction("valid-fraction", s.valid_fraction)?;
    let headers: Vec<LabeledHeader> = labels.iter().map(LabelRecord::header).collect();
    let (train_all, test) = if s.test_fraction > 0.0 {
        split_by_company(&headers, s.test_fraction, s.seed)?
    } else {
        (headers, Vec::new())
    };
    let (train, valid) = if s.valid_fraction > 0.0 {
        split_by_company(&train_all, s.valid_fraction, s.seed + 1)?
    } else {
        (train_all, Vec::new())
    };
    Ok(Split { train, valid, test })
}

fn company_list(headers: &[LabeledHeader]) -> Vec<String> {
    let mut ids: Vec<String> = headers.iter().map(|h| h.company_id.clone()).collect();
    ids.sort();
    ids.dedup();
    ids
}

pub fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Ingest {
            store,
            feed,
            sector,
            keywords,
        } => ingest(&store.store, &feed, sector, keywords.as_deref()),
        Cmd::GenCorpus {
            seed,
            out,
            companies_per_sector,
            filings_per_company,
            tables_per_filing,
        } => gen_corpus(seed, &out, companies_per_sector, filings_per_company, tables_per_filing),
        Cmd::BuildTfidf { store, out } => {
            let out = out.unwrap_or_else(|| store.store.join("tfidf.json"));
            build_tfidf(&store.store, &out)
        }
        Cmd::TuneDelta {
            store,
            tfidf,
            labels,
            target_recall,
            split,
            out,
        } => {
            let out = out.unwrap_or_else(|| store.store.join("delta.json"));
            tune_delta(&store.store, &tfidf, &labels, target_recall, &split, &out)
        }
        Cmd::Train {
            labels,
            out,
            embeddings,
            split,
            hyper,
        } => train(&labels, &out, embeddings.as_deref(), &split, &hyper.config(split.seed)),
        Cmd::Eval {
            model,
            labels,
            split,
            all,
            no_baselines,
            out,
        } => eval(&model, &labels, &split, all, !no_baselines, &out),
        Cmd::Extract {
            store,
            filings,
            all,
            model,
            tfidf,
            delta,
            calendars,
            out,
        } => extract(ExtractArgs {
            tfidf: tfidf.unwrap_or_else(|| store.store.join("tfidf.json")),
            delta: delta.unwrap_or_else(|| store.store.join("delta.json").display().to_string()),
            store: store.store,
            filings,
            all,
            model,
            calendars,
            out,
        }),
        Cmd::Serve { store, host, port } => serve(&store.store, &host, port),
        Cmd::Export {
            store,
            company,
            period,
            segment,
            out,
        } => export(&store.store, ExportQuery { company, period, segment }, out.as_deref()),
    }
}

fn ingest(store_dir: &Path, feed: &Path, sector: Option<Sector>, keywords: Option<&Path>) -> Result<()> {
    if !feed.exists() {
        return Err(usage(format!("feed {} does not exist", feed.display())));
    }
    if let Some(k) = keywords {
        require_file(k, "keyword list")?;
    }
    let kw = match keywords {
        Some(k) => EarningsKeywords::load(k)?,
        None => EarningsKeywords::default(),
    };
    let store = FilingStore::open(store_dir)?;
    let mut seen = SeenEntries::sidecar_for(&store_dir.join("feeds"), feed)?;
    let entries = poll_feed(feed, &mut seen)?;
    let (mut stored, mut earnings) = (0, 0);
    for e in &entries {
        let doc = load_entry(e, sector, &kw)?;
        match store.store(&doc) {
            Ok(_) => {
                stored += 1;
                earnings += usize::from(doc.is_earnings);
            }
            Err(SpotError::Conflict { id, .. }) => warn!("filing {id} already stored; skipped"),
            Err(err) => return Err(err.into()),
        }
    }
    println!("{} new entries, {stored} stored, {earnings} earnings reports", entries.len());
    let mut m = RunManifest::new("ingest", None);
    m.input(feed)?;
    if let Some(k) = keywords {
        m.input(k)?;
    }
    m.setting("entries", entries.len()).setting("stored", stored).setting("earnings", earnings);
    m.write(&runs_dir(store_dir).join("ingest.manifest.json"), &[])
}

fn gen_corpus(seed: u64, out: &Path, per_sector: Option<usize>, filings: usize, tables: usize) -> Result<()> {
    if out.exists() && fs::read_dir(out)?.next().is_some() {
        return Err(usage(format!("output directory {} is not empty", out.display())));
    }
    let mut spec = match per_sector {
        Some(n) => CorpusSpec::with_shape(seed, &Sector::ALL.map(|s| (s, n)), filings, tables),
        None => CorpusSpec {
            seed,
            filings_per_company: filings,
            tables_per_filing: tables,
            ..CorpusSpec::default()
        },
    };
    spec.seed = seed;
    let corpus = generate_corpus(&spec)?;
    let store = FilingStore::open(out)?;
    for f in &corpus.filings {
        store.store(f)?;
    }
    let labels = out.join(LABELS_FILE);
    write_labels(&labels, &corpus.labels)?;
    let calendars = out.join(CALENDARS_FILE);
    fs::write(&calendars, corpus.calendars().to_config())?;
    println!(
        "{} companies, {} filings, {} labeled headers (operating:non-operating {:.3})",
        corpus.companies.len(),
        corpus.filings.len(),
        corpus.labels.len(),
        corpus.label_ratio()
    );
    let mut m = RunManifest::new("gen-corpus", Some(seed));
    m.setting("companies", corpus.companies.len())
        .setting("filings_per_company", filings)
        .setting("tables_per_filing", tables);
    let mut outputs: Vec<PathBuf> = fs::read_dir(out)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    outputs.sort();
    m.write(&out.join(crate::manifest::RUN_MANIFEST), &outputs)
}

fn load_earnings(store: &FilingStore) -> Result<Vec<FilingDoc>> {
    let mut docs = Vec::new();
    for meta in store.list() {
        if meta.is_earnings {
            docs.push(store.load(&meta.filing_id)?);
        }
    }
    Ok(docs)
}

fn build_tfidf(store_dir: &Path, out: &Path) -> Result<()> {
    require_dir(store_dir, "store")?;
    let store = FilingStore::open(store_dir)?;
    let mut by_company: BTreeMap<String, Vec<FilingDoc>> = BTreeMap::new();
    for doc in load_earnings(&store)? {
        by_company.entry(doc.company_id.clone()).or_default().push(doc);
    }
    if by_company.is_empty() {
        return Err(usage(format!("store {} has no earnings filings", store_dir.display())));
    }
    let docs = by_company
        .values()
        .map(|f| build_company_doc(f))
        .collect::<spot_core::Result<Vec<_>>>()?;
    let m = TfidfMatrix::build(&docs)?;
    m.save(out)?;
    println!("{} companies, {} tokens", m.companies().len(), m.vocabulary().len());
    let mut rm = RunManifest::new("build-tfidf", None);
    rm.input(store_dir)?;
    rm.write(&manifest_for(out), &[out.to_path_buf()])
}

#[derive(Debug, Serialize, Deserialize)]
struct DeltaFile {
    delta: f64,
    recall: f64,
    target_recall: f64,
    tables: usize,
    warning: Option<String>,
}

fn tune_delta(store_dir: &Path, tfidf: &Path, labels: &Path, target: f64, split: &SplitArgs, out: &Path) -> Result<()> {
    require_dir(store_dir, "store")?;
    require_file(tfidf, "tf-idf matrix")?;
    require_file(labels, "labels")?;
    if !(0.0..=1.0).contains(&target) {
        return Err(usage(format!("--target-recall must be in [0, 1], got {target}")));
    }
    check_fraction("test-fraction", split.test_fraction)?;
    let m = TfidfMatrix::load(tfidf)?;
    let records = read_labels(labels)?;
    let train = if split.test_fraction > 0.0 {
        split_by_company(&records, split.test_fraction, split.seed)?.0
    } else {
        records
    };
    let store = FilingStore::open(store_dir)?;
    let mut filing_ids: Vec<&str> = train.iter().map(|r| r.filing_id.as_str()).collect();
    filing_ids.sort();
    filing_ids.dedup();
    let filings = filing_ids
        .iter()
        .map(|id| store.load(id))
        .collect::<spot_core::Result<Vec<_>>>()?;
    let pairs = table_score_pairs(&filings, &train, &m)?;
    let tuned = tune_threshold(&pairs, target)?;
    let file = DeltaFile {
        delta: tuned.delta,
        recall: tuned.recall,
        target_recall: target,
        tables: pairs.len(),
        warning: tuned.warning,
    };
    fs::write(out, serde_json::to_string_pretty(&file)? + "\n").with_context(|| format!("writing {}", out.display()))?;
    println!("delta {} (recall {:.4} over {} tables)", file.delta, file.recall, file.tables);
    let mut rm = RunManifest::new("tune-delta", Some(split.seed));
    rm.input(store_dir)?.input(tfidf)?.input(labels)?;
    rm.setting("target_recall", target).setting("test_fraction", split.test_fraction);
    rm.write(&manifest_for(out), &[out.to_path_buf()])
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn train(
    labels: &Path,
    out: &Path,
    embeddings: Option<&Path>,
    split: &SplitArgs,
    cfg: &spot_core::classifier::TrainConfig,
) -> Result<()> {
    require_file(labels, "labels")?;
    if let Some(e) = embeddings {
        require_file(e, "embeddings")?;
    }
    let s = split_labels(&read_labels(labels)?, split)?;
    let emb = embeddings.map(|p| load_embeddings(p, cfg.embedding_dim)).transpose()?;
    info!("train {} valid {} test {}", s.train.len(), s.valid.len(), s.test.len());
    let outcome = train_model(&s.train, &s.valid, cfg, emb.as_ref())?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    outcome.classifier.save(out)?;
    let history = sibling(out, "history.csv");
    fs::write(&history, outcome.history_csv())?;
    let split_file = sibling(out, "split.json");
    let companies = serde_json::json!({
        "train": company_list(&s.train),
        "valid": company_list(&s.valid),
        "test": company_list(&s.test),
    });
    fs::write(&split_file, serde_json::to_string_pretty(&companies)? + "\n")?;
    println!(
        "best epoch {} of {}{}",
        outcome.best_epoch,
        outcome.history.len(),
        if outcome.stopped_early { " (stopped early)" } else { "" }
    );
    let mut m = RunManifest::new("train", Some(split.seed));
    m.input(labels)?;
    if let Some(e) = embeddings {
        m.input(e)?;
    }
    m.setting("test_fraction", split.test_fraction)
        .setting("valid_fraction", split.valid_fraction)
        .setting("embedding_dim", cfg.embedding_dim)
        .setting("hidden_units", cfg.hidden_units)
        .setting("seq_len", cfg.seq_len)
        .setting("dropout", cfg.dropout)
        .setting("learning_rate", cfg.learning_rate)
        .setting("max_epochs", cfg.max_epochs)
        .setting("patience", cfg.patience)
        .setting("batch_size", cfg.batch_size)
        .setting("min_freq", cfg.min_freq)
        .setting("threshold", cfg.threshold)
        .setting("freeze_embeddings", cfg.freeze_embeddings)
        .setting("best_epoch", outcome.best_epoch);
    m.write(&manifest_for(out), &[out.to_path_buf(), history, split_file])
}

fn eval(model: &Path, labels: &Path, split: &SplitArgs, all: bool, baselines: bool, out: &Path) -> Result<()> {
    require_file(model, "model")?;
    require_file(labels, "labels")?;
    let records = read_labels(labels)?;
    let s = split_labels(&records, split)?;
    let test = if all { records.iter().map(LabelRecord::header).collect() } else { s.test.clone() };
    if test.is_empty() {
        return Err(usage("no headers to evaluate"));
    }
    let texts: Vec<&str> = test.iter().map(|h| h.text.as_str()).collect();
    let classifier = HeaderClassifier::load(model)?;
    let mut preds: Vec<(String, Vec<Label>)> = Vec::new();
    if baselines {
        for kind in BaselineKind::ALL {
            let b = train_baseline(kind, &s.train, &s.valid, &BaselineConfig::default())?;
            preds.push((kind.as_str().to_string(), b.predict(&texts)));
        }
    }
    preds.push(("BiGRU".to_string(), classifier.predict(&texts).into_iter().map(|(l, _)| l).collect()));

    fs::create_dir_all(out)?;
    let mut kv = String::new();
    for (name, p) in &preds {
        kv.push_str(&compute_metrics(p, &test)?.kv_dump(name));
    }
    let models: Vec<(&str, &[Label])> = preds.iter().map(|(n, p)| (n.as_str(), p.as_slice())).collect();
    let report = sector_report(&models, &test)?;
    let metrics_path = out.join("metrics.txt");
    let report_path = out.join("report.txt");
    fs::write(&metrics_path, &kv)?;
    fs::write(&report_path, &report)?;
    print!("{report}");
    let mut m = RunManifest::new("eval", Some(split.seed));
    m.input(model)?.input(labels)?;
    m.setting("test_fraction", split.test_fraction)
        .setting("valid_fraction", split.valid_fraction)
        .setting("all", all)
        .setting("baselines", baselines)
        .setting("headers", test.len());
    m.write(&out.join(crate::manifest::RUN_MANIFEST), &[metrics_path, report_path])
}

struct ExtractArgs {
    store: PathBuf,
    filings: Vec<String>,
    all: bool,
    model: PathBuf,
    tfidf: PathBuf,
    delta: String,
    calendars: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn read_delta(spec: &str) -> Result<(f64, Option<PathBuf>)> {
    if let Ok(v) = spec.parse::<f64>() {
        if !v.is_finite() {
            return Err(usage(format!("--delta {v} is not finite")));
        }
        return Ok((v, None));
    }
    let path = PathBuf::from(spec);
    require_file(&path, "delta file")?;
    let file: DeltaFile = serde_json::from_str(&fs::read_to_string(&path)?).map_err(SpotError::from)?;
    Ok((file.delta, Some(path)))
}

#[derive(Debug, Serialize)]
struct FilingExtraction<'a> {
    filing_id: &'a str,
    is_earnings: bool,
    tables: Vec<TableOutcome>,
    records: Vec<SegmentRecord>,
}

fn extract(a: ExtractArgs) -> Result<()> {
    require_dir(&a.store, "store")?;
    require_file(&a.model, "model")?;
    require_file(&a.tfidf, "tf-idf matrix")?;
    if let Some(c) = &a.calendars {
        require_file(c, "calendars")?;
    }
    if a.filings.is_empty() && !a.all {
        return Err(usage("give --filing ID or --all"));
    }
    let (delta, delta_path) = read_delta(&a.delta)?;
    let store = FilingStore::open(&a.store)?;
    let ids: Vec<String> = if a.all {
        store.list().into_iter().filter(|m| m.is_earnings).map(|m| m.filing_id).collect()
    } else {
        a.filings.clone()
    };
    for id in &ids {
        if !store.contains(id) {
            return Err(SpotError::not_found("filing", id).into());
        }
    }
    let models = ExtractionModels {
        classifier: HeaderClassifier::load(&a.model)?,
        tfidf: TfidfMatrix::load(&a.tfidf)?,
        delta,
        calendars: match &a.calendars {
            Some(c) => FiscalCalendars::load(c)?,
            None => FiscalCalendars::default(),
        },
    };
    let records_store = RecordStore::open(&a.store)?;
    let mut results = Vec::new();
    let mut total = 0;
    for id in &ids {
        let filing = store.load(id)?;
        if !filing.is_earnings {
            warn!("filing {id} is not an earnings report; nothing extracted");
            results.push(FilingExtraction {
                filing_id: id,
                is_earnings: false,
                tables: Vec::new(),
                records: Vec::new(),
            });
            continue;
        }
        let ex = extract_segments(&filing, &models)?;
        let stored = records_store.put(id, ex.records)?;
        total += stored.len();
        results.push(FilingExtraction {
            filing_id: id,
            is_earnings: true,
            tables: ex.tables,
            records: stored,
        });
    }
    println!("{} filings, {total} records", ids.len());
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        let body = serde_json::json!({ "schema": spot_core::extract::RECORDS_SCHEMA, "filings": results });
        fs::write(out, serde_json::to_string_pretty(&body)? + "\n").with_context(|| format!("writing {}", out.display()))?;
        outputs.push(out.clone());
    }
    let mut m = RunManifest::new("extract", None);
    m.input(&a.store)?.input(&a.model)?.input(&a.tfidf)?;
    if let Some(p) = &delta_path {
        m.input(p)?;
    }
    if let Some(c) = &a.calendars {
        m.input(c)?;
    }
    m.setting("delta", delta).setting("filings", ids.join(" ")).setting("records", total);
    let at = match &a.out {
        Some(out) => manifest_for(out),
        None => runs_dir(&a.store).join("extract.manifest.json"),
    };
    m.write(&at, &outputs)
}

fn serve(store_dir: &Path, host: &str, port: u16) -> Result<()> {
    require_dir(store_dir, "store")?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| usage(format!("bad listen address {host}:{port}: {e}")))?;
    let state = spot_server::AppState::open(store_dir)?;
    let mut m = RunManifest::new("serve", None);
    m.input(store_dir)?;
    m.setting("addr", addr);
    m.write(&runs_dir(store_dir).join("serve.manifest.json"), &[])?;
    let rt = tokio::runtime::Runtime::new()?;
    println!("serving {} on http://{addr}", store_dir.display());
    rt.block_on(spot_server::serve(state, addr))?;
    Ok(())
}

fn export(store_dir: &Path, q: ExportQuery, out: Option<&Path>) -> Result<()> {
    require_dir(store_dir, "store")?;
    let records = RecordStore::open(store_dir)?;
    let csv = export_csv(&records.query(&q)?, &q)?;
    match out {
        Some(path) => fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    let mut m = RunManifest::new("export", None);
    m.input(store_dir)?;
    for (k, v) in [("company", &q.company), ("period", &q.period), ("segment", &q.segment)] {
        if let Some(v) = v {
            m.setting(k, v);
        }
    }
    let (at, outputs) = match out {
        Some(p) => (manifest_for(p), vec![p.to_path_buf()]),
        None => (runs_dir(store_dir).join("export.manifest.json"), Vec::new()),
    };
    m.write(&at, &outputs)
}
