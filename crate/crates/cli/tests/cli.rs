use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use walkdir::WalkDir;

fn spot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spot"))
        .args(args)
        .env_remove("SPOT_STORE")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = spot(args);
    assert!(
        out.status.success(),
        "spot {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Relative path -> bytes for every file below `root`.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect()
}

const SMALL: &[&str] = &["--companies-per-sector", "3", "--filings-per-company", "1", "--tables-per-filing", "6"];

fn gen(dir: &Path, seed: &str) {
    let mut args = vec!["gen-corpus", "--seed", seed, "--out", p(dir)];
    args.extend_from_slice(SMALL);
    ok(&args);
}

#[test]
fn gen_corpus_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    gen(&a, "1");
    gen(&b, "1");
    let ta = tree(&a);
    assert!(ta.contains_key(Path::new("labels.csv")));
    assert!(ta.contains_key(Path::new("run-manifest.json")));
    assert_eq!(ta, tree(&b));
    let c = t.path().join("c");
    gen(&c, "2");
    assert_ne!(ta.get(Path::new("labels.csv")), tree(&c).get(Path::new("labels.csv")));
}

#[test]
fn gen_corpus_refuses_non_empty_dir() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("x"), "x").unwrap();
    let out = spot(&["gen-corpus", "--out", p(t.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = spot(&["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(spot(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn help_lists_training_defaults() {
    let out = ok(&["train", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "--embedding-dim <EMBEDDING_DIM>",
        "[default: 300]",
        "[default: 50]",
        "[default: 25]",
        "[default: 0.2]",
        "[default: 0.001]",
        "[default: 30]",
        "[default: 7]",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn missing_input_is_validation_error() {
    let t = tempfile::tempdir().unwrap();
    let out = spot(&["train", "--labels", p(&t.path().join("nope.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("spot.conf");
    fs::write(&cfg, "# shared\nseed = 5\ncompanies_per_sector = 2\nfilings-per-company=1\nlearning_rate=0.5\n").unwrap();
    let a = t.path().join("a");
    ok(&["--config", p(&cfg), "gen-corpus", "--out", p(&a), "--tables-per-filing", "3"]);
    let m = fs::read_to_string(a.join("run-manifest.json")).unwrap();
    assert!(m.contains("\"seed\": 5"), "{m}");
    assert!(m.contains("\"companies\": \"12\""), "{m}");
    let b = t.path().join("b");
    ok(&["gen-corpus", "--config", p(&cfg), "--out", p(&b), "--seed", "9", "--tables-per-filing", "3"]);
    let m = fs::read_to_string(b.join("run-manifest.json")).unwrap();
    assert!(m.contains("\"seed\": 9"), "{m}");
}

#[test]
fn ingest_then_extract_non_earnings_is_empty() {
    let t = tempfile::tempdir().unwrap();
    let feed = t.path().join("feed");
    fs::create_dir(&feed).unwrap();
    fs::write(
        feed.join("ACME_8-K_2020-07-30.html"),
        "<p>ACME announced its quarterly results.</p><table><tr><td></td><th>Q3 2020</th></tr><tr><td>Widgets</td><td>$ 10</td></tr></table>",
    )
    .unwrap();
    fs::write(feed.join("ACME_8-K_2020-08-15.html"), "<p>ACME announced the departure of its chief officer.</p>").unwrap();
    let store = t.path().join("store");
    let out = ok(&["ingest", "--store", p(&store), "--feed", p(&feed), "--sector", "Tech"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 stored, 1 earnings"));
    // second poll sees nothing new
    let out = ok(&["ingest", "--store", p(&store), "--feed", p(&feed), "--sector", "Tech"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("0 new entries"));

    ok(&["build-tfidf", "--store", p(&store)]);
    let labels = t.path().join("labels.csv");
    fs::write(
        &labels,
        "filing_id,table_id,row_index,header_path,label,company_id,sector\n\
         A-1,t0,0,Net sales --> Widgets,operating,A,Tech\n\
         A-1,t0,1,Cost of sales,non_operating,A,Tech\n\
         B-1,t0,0,Net sales --> Gadgets,operating,B,Tech\n\
         B-1,t0,1,Gross margin,non_operating,B,Tech\n",
    )
    .unwrap();
    let model = t.path().join("model.json");
    ok(&[
        "train", "--labels", p(&labels), "--out", p(&model), "--test-fraction", "0", "--valid-fraction", "0",
        "--embedding-dim", "4", "--hidden-units", "2", "--max-epochs", "2", "--batch-size", "2",
    ]);
    let out_json = t.path().join("x.json");
    let out = spot(&[
        "extract", "--store", p(&store), "--model", p(&model), "--delta", "0", "--filing", "ACME-8K-2020-08-15", "--out",
        p(&out_json),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not an earnings report"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(v["filings"][0]["records"].as_array().unwrap().len(), 0);

    let unknown = spot(&["extract", "--store", p(&store), "--model", p(&model), "--delta", "0", "--filing", "NOPE"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn store_path_from_environment() {
    let t = tempfile::tempdir().unwrap();
    let store = t.path().join("envstore");
    fs::create_dir(&store).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spot"))
        .args(["export"])
        .env("SPOT_STORE", &store)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "company,filing,period,segment_path,metric,value,currency,adjusted,source_table,source_row,source_col\r\n"
    );
    assert!(store.join("runs/export.manifest.json").exists());
}

/// gen-corpus, build-tfidf, tune-delta, train (twice), eval, extract
/// (twice) and export on a small corpus.
#[test]
fn pipeline_runs_are_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("corpus");
    let mut args = vec!["gen-corpus", "--seed", "4", "--out", p(&d)];
    args.extend_from_slice(&["--companies-per-sector", "4", "--filings-per-company", "1", "--tables-per-filing", "6"]);
    ok(&args);
    let labels = d.join("labels.csv");
    ok(&["build-tfidf", "--store", p(&d)]);
    ok(&["tune-delta", "--store", p(&d), "--tfidf", p(&d.join("tfidf.json")), "--labels", p(&labels)]);
    assert!(d.join("delta.json").exists());

    let small = [
        "--embedding-dim", "16", "--hidden-units", "8", "--max-epochs", "4", "--patience", "4", "--batch-size", "32",
    ];
    let models: Vec<PathBuf> = ["m1", "m2"]
        .iter()
        .map(|m| {
            let out = t.path().join(m).join("model.json");
            let mut a = vec!["train", "--labels", p(&labels), "--out", p(&out)];
            a.extend_from_slice(&small);
            ok(&a);
            out
        })
        .collect();
    assert_eq!(tree(models[0].parent().unwrap()), tree(models[1].parent().unwrap()));

    let eval_dir = t.path().join("eval");
    ok(&["eval", "--model", p(&models[0]), "--labels", p(&labels), "--out", p(&eval_dir)]);
    let report = fs::read_to_string(eval_dir.join("report.txt")).unwrap();
    assert!(report.contains("BiGRU") && report.contains("naive_bayes"), "{report}");
    assert!(fs::read_to_string(eval_dir.join("metrics.txt")).unwrap().contains("model=BiGRU"));

    let calendars = d.join("calendars.csv");
    let runs: Vec<PathBuf> = ["e1.json", "e2.json"]
        .iter()
        .map(|name| {
            let out = t.path().join(name);
            ok(&[
                "extract", "--store", p(&d), "--all", "--model", p(&models[0]), "--calendars", p(&calendars), "--out", p(&out),
            ]);
            out
        })
        .collect();
    assert_eq!(fs::read(&runs[0]).unwrap(), fs::read(&runs[1]).unwrap());

    let csv_path = t.path().join("export.csv");
    ok(&["export", "--store", p(&d), "--out", p(&csv_path)]);
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("company,filing,period,segment_path"));
}
