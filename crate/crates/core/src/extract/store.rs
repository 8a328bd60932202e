use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{Adjustment, ExportQuery, SegmentRecord};
use crate::error::{Result, SpotError};
use crate::ingestion::check_id;

pub const RECORDS_SCHEMA: &str = "spot-records/1";

#[derive(Debug, Serialize, Deserialize)]
struct RecordsFile {
    schema: String,
    filing_id: String,
    records: Vec<SegmentRecord>,
}

/// One JSON file of records per filing under `<root>/records/`.
///
/// Writers are serialized by a mutex and replace files by rename, so
/// readers always see a complete file.
#[derive(Debug)]
pub struct RecordStore {
    dir: PathBuf,
    /// record_id -> filing_id
    index: RwLock<HashMap<String, String>>,
    write_lock: Mutex<()>,
}

impl RecordStore {
    pub fn open(root: &Path) -> Result<Self> {
        let dir = root.join("records");
        fs::create_dir_all(&dir).map_err(|e| SpotError::io(&dir, e))?;
        let mut index = HashMap::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| SpotError::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let file = read_file(&path)?;
            for r in file.records {
                index.insert(r.record_id, file.filing_id.clone());
            }
        }
        Ok(RecordStore {
            dir,
            index: RwLock::new(index),
            write_lock: Mutex::new(()),
        })
    }

    fn path_for(&self, filing_id: &str) -> Result<PathBuf> {
        check_id(filing_id)?;
        Ok(self.dir.join(format!("{filing_id}.json")))
    }

    /// Records of one filing in extraction order; empty when the filing
    /// has not been extracted.
    pub fn filing_records(&self, filing_id: &str) -> Result<Vec<SegmentRecord>> {
        let path = self.path_for(filing_id)?;
        if !path.exists() {
            return Ok(Vec::new());
        }
        Ok(read_file(&path)?.records)
    }

    pub fn has_filing(&self, filing_id: &str) -> bool {
        self.path_for(filing_id).is_ok_and(|p| p.exists())
    }

    /// Stores a fresh extraction. Adjustments already recorded for a
    /// record id that is extracted again are carried over.
    pub fn put(&self, filing_id: &str, records: Vec<SegmentRecord>) -> Result<Vec<SegmentRecord>> {
        let path = self.path_for(filing_id)?;
        if let Some(r) = records.iter().find(|r| r.filing_id != filing_id) {
            return Err(SpotError::Validation(format!(
                "record {} belongs to filing {}, not {filing_id}",
                r.record_id, r.filing_id
            )));
        }
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let previous: HashMap<String, SegmentRecord> = if path.exists() {
            read_file(&path)?
                .records
                .into_iter()
                .map(|r| (r.record_id.clone(), r))
                .collect()
        } else {
            HashMap::new()
        };
        let merged: Vec<SegmentRecord> = records
            .into_iter()
            .map(|mut r| {
                if let Some(old) = previous.get(&r.record_id) {
                    r.adjusted = old.adjusted;
                    r.adjusted_value = old.adjusted_value;
                    r.audit = old.audit.clone();
                }
                r
            })
            .collect();
        write_file(&path, filing_id, &merged)?;
        let mut index = self.index.write().unwrap_or_else(|e| e.into_inner());
        index.retain(|_, f| f != filing_id);
        for r in &merged {
            index.insert(r.record_id.clone(), filing_id.to_string());
        }
        Ok(merged)
    }

    fn filing_of(&self, record_id: &str) -> Result<String> {
        self.index
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(record_id)
            .cloned()
            .ok_or_else(|| SpotError::not_found("record", record_id))
    }

    pub fn get(&self, record_id: &str) -> Result<SegmentRecord> {
        let filing = self.filing_of(record_id)?;
        self.filing_records(&filing)?
            .into_iter()
            .find(|r| r.record_id == record_id)
            .ok_or_else(|| SpotError::not_found("record", record_id))
    }

    /// Appends an adjustment. With `expected_audit_len` set, the write is
    /// refused when another adjustment landed in between.
    pub fn apply_adjustment(&self, adj: Adjustment, expected_audit_len: Option<usize>) -> Result<SegmentRecord> {
        if adj.author.trim().is_empty() {
            return Err(SpotError::Validation("adjustment author is empty".into()));
        }
        let filing = self.filing_of(&adj.record_id)?;
        let path = self.path_for(&filing)?;
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut records = read_file(&path)?.records;
        let rec = records
            .iter_mut()
            .find(|r| r.record_id == adj.record_id)
            .ok_or_else(|| SpotError::not_found("record", &adj.record_id))?;
        if let Some(expected) = expected_audit_len {
            if expected != rec.audit.len() {
                return Err(SpotError::StaleAudit {
                    record_id: adj.record_id.clone(),
                    expected,
                    actual: rec.audit.len(),
                });
            }
        }
        if let Some(last) = rec.audit.last() {
            if adj.at < last.at {
                return Err(SpotError::Validation(format!(
                    "adjustment at {} predates the last one at {}",
                    adj.at, last.at
                )));
            }
        }
        rec.adjusted = true;
        rec.adjusted_value = Some(adj.new_value);
        rec.audit.push(adj);
        let updated = rec.clone();
        write_file(&path, &filing, &records)?;
        Ok(updated)
    }

    /// Every filing id with stored records, sorted.
    pub fn filings(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .index
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn query(&self, q: &ExportQuery) -> Result<Vec<SegmentRecord>> {
        let mut out = Vec::new();
        for f in self.filings() {
            out.extend(self.filing_records(&f)?.into_iter().filter(|r| q.matches(r)));
        }
        Ok(out)
    }
}

fn read_file(path: &Path) -> Result<RecordsFile> {
    let text = fs::read_to_string(path).map_err(|e| SpotError::io(path, e))?;
    let file: RecordsFile = serde_json::from_str(&text)?;
    if file.schema != RECORDS_SCHEMA {
        return Err(SpotError::Format(format!(
            "{}: schema {:?}, expected {RECORDS_SCHEMA}",
            path.display(),
            file.schema
        )));
    }
    Ok(file)
}

fn write_file(path: &Path, filing_id: &str, records: &[SegmentRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct Out<'a> {
        schema: &'a str,
        filing_id: &'a str,
        records: &'a [SegmentRecord],
    }
    let text = serde_json::to_string_pretty(&Out {
        schema: RECORDS_SCHEMA,
        filing_id,
        records,
    })?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(|e| SpotError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| SpotError::io(path, e))
}
