use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::FilingDoc;
use crate::error::{Result, SpotError};
use crate::types::{DocType, Sector};

const MANIFEST: &str = "manifest.csv";
const BODIES: &str = "filings";

/// One manifest line; everything about a filing except its body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilingMeta {
    pub filing_id: String,
    pub company_id: String,
    pub sector: Sector,
    pub doc_type: DocType,
    #[serde(with = "rfc3339")]
    pub filed_at: DateTime<Utc>,
    pub is_earnings: bool,
}

mod rfc3339 {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

impl FilingMeta {
    fn of(doc: &FilingDoc) -> Self {
        FilingMeta {
            filing_id: doc.filing_id.clone(),
            company_id: doc.company_id.clone(),
            sector: doc.sector,
            doc_type: doc.doc_type,
            filed_at: doc.filed_at,
            is_earnings: doc.is_earnings,
        }
    }
}

/// Directory-backed filing store: one body file per filing plus a CSV
/// manifest. Readers share; writers are serialized.
#[derive(Debug)]
pub struct FilingStore {
    root: PathBuf,
    manifest: RwLock<Vec<FilingMeta>>,
    write_lock: Mutex<()>,
}

pub(crate) fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(SpotError::Validation(format!("filing id {id:?} must be [A-Za-z0-9._-]+")))
    }
}

impl FilingStore {
    /// Opens `root`, creating it when missing.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let bodies = root.join(BODIES);
        fs::create_dir_all(&bodies).map_err(|e| SpotError::io(&bodies, e))?;
        let path = root.join(MANIFEST);
        let manifest = if path.exists() {
            let mut rdr = csv::Reader::from_path(&path)?;
            rdr.deserialize().collect::<std::result::Result<Vec<FilingMeta>, _>>()?
        } else {
            Vec::new()
        };
        Ok(FilingStore {
            root,
            manifest: RwLock::new(manifest),
            write_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn body_path(&self, id: &str) -> PathBuf {
        self.root.join(BODIES).join(format!("{id}.html"))
    }

    pub fn store(&self, doc: &FilingDoc) -> Result<String> {
        check_id(&doc.filing_id)?;
        if doc.body.is_empty() {
            return Err(SpotError::Validation(format!("filing {} has an empty body", doc.filing_id)));
        }
        let _w = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        if self.contains(&doc.filing_id) {
            return Err(SpotError::Conflict {
                kind: "filing",
                id: doc.filing_id.clone(),
            });
        }
        let body = self.body_path(&doc.filing_id);
        fs::write(&body, doc.body.as_bytes()).map_err(|e| SpotError::io(&body, e))?;

        let mut next = self.manifest.read().unwrap_or_else(|p| p.into_inner()).clone();
        next.push(FilingMeta::of(doc));
        self.write_manifest(&next)?;
        *self.manifest.write().unwrap_or_else(|p| p.into_inner()) = next;
        Ok(doc.filing_id.clone())
    }

    fn write_manifest(&self, rows: &[FilingMeta]) -> Result<()> {
        let tmp = self.root.join(format!("{MANIFEST}.tmp"));
        {
            let mut w = csv::Writer::from_path(&tmp)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| SpotError::io(&tmp, e))?;
        }
        let path = self.root.join(MANIFEST);
        fs::rename(&tmp, &path).map_err(|e| SpotError::io(&path, e))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.manifest
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .iter()
            .any(|m| m.filing_id == id)
    }

    pub fn meta(&self, id: &str) -> Result<FilingMeta> {
        self.manifest
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .iter()
            .find(|m| m.filing_id == id)
            .cloned()
            .ok_or_else(|| SpotError::not_found("filing", id))
    }

    pub fn load(&self, id: &str) -> Result<FilingDoc> {
        let meta = self.meta(id)?;
        let path = self.body_path(id);
        let body = fs::read_to_string(&path).map_err(|e| SpotError::io(&path, e))?;
        Ok(FilingDoc {
            filing_id: meta.filing_id,
            company_id: meta.company_id,
            sector: meta.sector,
            doc_type: meta.doc_type,
            filed_at: meta.filed_at,
            body,
            is_earnings: meta.is_earnings,
        })
    }

    /// Manifest rows in store order.
    pub fn list(&self) -> Vec<FilingMeta> {
        self.manifest.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn len(&self) -> usize {
        self.manifest.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn doc(id: &str) -> FilingDoc {
        FilingDoc {
            filing_id: id.into(),
            company_id: "ACME".into(),
            sector: Sector::Retail,
            doc_type: DocType::EightK,
            filed_at: Utc.with_ymd_and_hms(2020, 7, 30, 21, 5, 7).unwrap() + chrono::Duration::milliseconds(250),
            body: "<html><body><table><tr><td>\u{a0}x, \"y\"\r\n</td></tr></table></body></html>".into(),
            is_earnings: true,
        }
    }

    #[test]
    fn round_trip_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = FilingStore::open(dir.path()).unwrap();
        let d = doc("acme-2020q3");
        assert_eq!(store.store(&d).unwrap(), "acme-2020q3");
        assert_eq!(store.load("acme-2020q3").unwrap(), d);
        let reopened = FilingStore::open(dir.path()).unwrap();
        assert_eq!(reopened.load("acme-2020q3").unwrap(), d);
        assert_eq!(reopened.len(), 1);
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        let store = FilingStore::open(dir.path()).unwrap();
        assert!(matches!(store.load("nonexistent"), Err(SpotError::NotFound { .. })));
        store.store(&doc("a")).unwrap();
        assert!(matches!(store.store(&doc("a")), Err(SpotError::Conflict { .. })));
        assert!(matches!(store.store(&doc("../x")), Err(SpotError::Validation(_))));
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn manifest_counts_successful_stores() {
        let dir = tempfile::tempdir().unwrap();
        let store = std::sync::Arc::new(FilingStore::open(dir.path()).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let s = store.clone();
                std::thread::spawn(move || s.store(&doc(&format!("f{}", i % 5))).is_ok())
            })
            .collect();
        let ok = handles.into_iter().map(|h| h.join().unwrap()).filter(|b| *b).count();
        assert_eq!(ok, 5);
        assert_eq!(FilingStore::open(dir.path()).unwrap().len(), 5);
    }
}
