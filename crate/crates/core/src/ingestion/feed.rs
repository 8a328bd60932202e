use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use log::warn;
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SpotError};
use crate::types::Sector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedEntry {
    /// Local path (resolved against the feed file) or URL.
    pub location: String,
    pub company_id: String,
    pub doc_type: String,
    pub published_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<Sector>,
}

/// Locations already returned by earlier polls of one feed source.
#[derive(Debug, Clone, Default)]
pub struct SeenEntries {
    path: Option<PathBuf>,
    seen: BTreeSet<String>,
}

impl SeenEntries {
    pub fn in_memory() -> Self {
        SeenEntries::default()
    }

    /// Sidecar for `source` under `state_dir`, named by a hash of the
    /// source path so several feeds can share one directory.
    pub fn sidecar_for(state_dir: &Path, source: &Path) -> Result<Self> {
        let key = hex::encode(&Sha256::digest(source.to_string_lossy().as_bytes())[..8]);
        let path = state_dir.join(format!("seen-{key}.txt"));
        let seen = match fs::read_to_string(&path) {
            Ok(text) => text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeSet::new(),
            Err(e) => return Err(SpotError::io(&path, e)),
        };
        Ok(SeenEntries { path: Some(path), seen })
    }

    pub fn contains(&self, location: &str) -> bool {
        self.seen.contains(location)
    }

    pub fn insert(&mut self, location: impl Into<String>) -> bool {
        self.seen.insert(location.into())
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| SpotError::io(dir, e))?;
        }
        let mut text = String::new();
        for loc in &self.seen {
            text.push_str(loc);
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| SpotError::io(path, e))
    }
}

/// Returns entries not seen before, oldest first, and records them as seen.
pub fn poll_feed(source: &Path, seen: &mut SeenEntries) -> Result<Vec<FeedEntry>> {
    let s = source.to_string_lossy();
    if s.starts_with("http://") || s.starts_with("https://") {
        return Err(SpotError::FeedUnavailable(format!("{s}: remote feeds are not supported, mirror it to a local file")));
    }
    let meta = fs::metadata(source).map_err(|e| SpotError::FeedUnavailable(format!("{}: {e}", source.display())))?;
    let mut entries = if meta.is_dir() {
        directory_entries(source)?
    } else {
        let text = fs::read_to_string(source).map_err(|e| SpotError::FeedUnavailable(format!("{}: {e}", source.display())))?;
        let base = source.parent().unwrap_or(Path::new("."));
        parse_feed(&text)?
            .into_iter()
            .map(|mut e| {
                e.location = resolve_location(base, &e.location);
                e
            })
            .collect()
    };
    entries.retain(|e| !seen.contains(&e.location));
    entries.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.location.cmp(&b.location)));
    entries.dedup_by(|a, b| a.location == b.location);
    for e in &entries {
        seen.insert(e.location.clone());
    }
    seen.save()?;
    Ok(entries)
}

fn resolve_location(base: &Path, loc: &str) -> String {
    if loc.contains("://") && !loc.starts_with("file://") {
        return loc.to_string();
    }
    let p = Path::new(loc.strip_prefix("file://").unwrap_or(loc));
    if p.is_absolute() {
        p.display().to_string()
    } else {
        base.join(p).display().to_string()
    }
}

/// `COMPANY_FORM_YYYY-MM-DD.html`; missing parts fall back to the stem,
/// `other` and the file modification time.
fn directory_entries(dir: &Path) -> Result<Vec<FeedEntry>> {
    let read = fs::read_dir(dir).map_err(|e| SpotError::FeedUnavailable(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for item in read {
        let item = item.map_err(|e| SpotError::io(dir, e))?;
        let path = item.path();
        let is_html = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"));
        if !is_html || !path.is_file() {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let parts: Vec<&str> = stem.split('_').collect();
        let date = parts
            .get(2)
            .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(|d| d.and_utc());
        let published_at = match date {
            Some(d) => d,
            None => {
                let modified = item.metadata().and_then(|m| m.modified()).map_err(|e| SpotError::io(&path, e))?;
                DateTime::<Utc>::from(modified)
            }
        };
        out.push(FeedEntry {
            location: path.display().to_string(),
            company_id: if parts.len() >= 2 { parts[0].to_string() } else { stem.clone() },
            doc_type: parts.get(1).map(|s| s.to_string()).unwrap_or_else(|| "other".into()),
            published_at,
            sector: None,
        });
    }
    Ok(out)
}

fn child<'a, 'i>(node: Node<'a, 'i>, names: &[&str]) -> Option<Node<'a, 'i>> {
    node.children()
        .filter(Node::is_element)
        .find(|c| names.iter().any(|n| c.tag_name().name().eq_ignore_ascii_case(n)))
}

fn child_text(node: Node<'_, '_>, names: &[&str]) -> Option<String> {
    for name in names {
        if let Some(c) = child(node, &[name]) {
            let t = c.text().unwrap_or_default().trim();
            if !t.is_empty() {
                return Some(t.to_string());
            }
        }
    }
    None
}

fn parse_time(text: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc2822(text)
        .or_else(|_| DateTime::parse_from_rfc3339(text))
        .map(|d| d.with_timezone(&Utc))
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(text, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .map(|d| d.and_utc())
        })
}

/// Parses an RSS 2.0 or Atom document. Company, form type and sector are
/// read from `company`/`companyName`, `formType`/`category` and `sector`
/// children (any namespace).
pub fn parse_feed(xml: &str) -> Result<Vec<FeedEntry>> {
    if xml.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc = Document::parse(xml).map_err(|e| SpotError::FeedParse {
        entry: "<document>".into(),
        message: e.to_string(),
    })?;
    let items = doc
        .descendants()
        .filter(|n| n.is_element() && matches!(n.tag_name().name(), "item" | "entry"));
    let mut out = Vec::new();
    for (idx, item) in items.enumerate() {
        let label = child_text(item, &["title", "guid", "id"]).unwrap_or_else(|| format!("#{idx}"));
        let fail = |message: &str| SpotError::FeedParse {
            entry: label.clone(),
            message: message.to_string(),
        };
        let location = child(item, &["link"])
            .and_then(|l| l.attribute("href").map(str::to_string).or_else(|| l.text().map(|t| t.trim().to_string())))
            .filter(|s| !s.is_empty())
            .or_else(|| child_text(item, &["guid", "id"]))
            .ok_or_else(|| fail("missing link"))?;
        let company_id = child_text(item, &["company", "companyName", "companyId", "cikNumber"])
            .or_else(|| child(item, &["author"]).and_then(|a| child_text(a, &["name"])))
            .ok_or_else(|| fail("missing company"))?;
        let doc_type = child_text(item, &["formType", "docType"])
            .or_else(|| child(item, &["category"]).and_then(|c| c.attribute("term").map(str::to_string).or_else(|| c.text().map(|t| t.trim().to_string()))))
            .unwrap_or_else(|| "other".into());
        let when = child_text(item, &["pubDate", "published", "updated", "date"]).ok_or_else(|| fail("missing publication date"))?;
        let published_at = parse_time(&when).ok_or_else(|| fail(&format!("bad date {when:?}")))?;
        let sector = match child_text(item, &["sector"]) {
            Some(s) => match s.parse() {
                Ok(sec) => Some(sec),
                Err(_) => {
                    warn!("feed entry {label}: unknown sector {s:?}");
                    None
                }
            },
            None => None,
        };
        out.push(FeedEntry {
            location,
            company_id,
            doc_type,
            published_at,
            sector,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RSS: &str = r#"<?xml version="1.0"?>
<rss version="2.0"><channel><title>filings</title>
  <item><title>B</title><link>b.html</link><company>BETA</company><formType>8-K</formType><pubDate>Wed, 29 Jul 2020 16:00:00 GMT</pubDate></item>
  <item><title>A</title><link>a.html</link><company>ALFA</company><formType>8-K</formType><pubDate>Tue, 28 Jul 2020 16:00:00 GMT</pubDate><sector>Tech</sector></item>
  <item><title>C</title><link>c.html</link><company>GAMA</company><formType>10-Q</formType><pubDate>Thu, 30 Jul 2020 16:00:00 GMT</pubDate></item>
</channel></rss>"#;

    #[test]
    fn rss_items() {
        let entries = parse_feed(RSS).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[1].company_id, "ALFA");
        assert_eq!(entries[1].sector, Some(Sector::Tech));
        assert_eq!(entries[2].doc_type, "10-Q");
    }

    #[test]
    fn atom_entries() {
        let xml = r#"<feed xmlns="http://www.w3.org/2005/Atom"><entry><title>x</title><link href="x.html"/>
            <author><name>ACME</name></author><category term="8-K"/><updated>2020-07-30T12:00:00Z</updated></entry></feed>"#;
        let e = &parse_feed(xml).unwrap()[0];
        assert_eq!((e.location.as_str(), e.company_id.as_str(), e.doc_type.as_str()), ("x.html", "ACME", "8-K"));
    }

    #[test]
    fn empty_feed() {
        assert!(parse_feed("").unwrap().is_empty());
        assert!(parse_feed("<rss><channel/></rss>").unwrap().is_empty());
    }

    #[test]
    fn malformed_entry_is_named() {
        let xml = "<rss><channel><item><title>broken one</title><company>X</company><pubDate>never</pubDate><link>x</link></item></channel></rss>";
        match parse_feed(xml) {
            Err(SpotError::FeedParse { entry, .. }) => assert_eq!(entry, "broken one"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_feed("<rss><channel>"), Err(SpotError::FeedParse { .. })));
    }

    #[test]
    fn poll_dedups_and_orders() {
        let dir = tempfile::tempdir().unwrap();
        let feed = dir.path().join("feed.xml");
        fs::write(&feed, RSS).unwrap();
        let mut seen = SeenEntries::sidecar_for(dir.path(), &feed).unwrap();
        seen.insert(dir.path().join("c.html").display().to_string());
        let got = poll_feed(&feed, &mut seen).unwrap();
        let names: Vec<_> = got.iter().map(|e| e.company_id.as_str()).collect();
        assert_eq!(names, ["ALFA", "BETA"]);

        let mut reopened = SeenEntries::sidecar_for(dir.path(), &feed).unwrap();
        assert!(poll_feed(&feed, &mut reopened).unwrap().is_empty());
    }

    #[test]
    fn directory_source() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.html"), "<p>a</p>").unwrap();
        fs::write(dir.path().join("ACME_8-K_2020-07-30.html"), "<p>b</p>").unwrap();
        fs::write(dir.path().join("notes.txt"), "skip").unwrap();
        let got = poll_feed(dir.path(), &mut SeenEntries::in_memory()).unwrap();
        assert_eq!(got.len(), 2);
        let acme = got.iter().find(|e| e.company_id == "ACME").unwrap();
        assert_eq!(acme.doc_type, "8-K");
        assert!(got.iter().all(|e| e.location.ends_with(".html")));
    }

    #[test]
    fn missing_source_is_unavailable() {
        let r = poll_feed(Path::new("/definitely/not/here.xml"), &mut SeenEntries::in_memory());
        assert!(matches!(r, Err(SpotError::FeedUnavailable(_))));
    }
}
