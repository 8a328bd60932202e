use std::collections::HashMap;
use std::path::Path;

use log::warn;

use crate::error::{Result, SpotError};

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f32>>,
    /// Lines dropped for a wrong value count or unparsable numbers.
    pub skipped: usize,
}

impl Embeddings {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Parses `token v1 ... v_dim` lines. Bad lines are skipped and counted;
/// more than half of the lines having the wrong width is a format error.
pub fn parse_embeddings(text: &str, dim: usize) -> Result<Embeddings> {
    let mut vectors = HashMap::new();
    let (mut lines, mut wrong_width, mut skipped) = (0usize, 0usize, 0usize);
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        lines += 1;
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            wrong_width += 1;
            skipped += 1;
            continue;
        }
        match values.iter().map(|v| v.parse::<f32>()).collect::<std::result::Result<Vec<f32>, _>>() {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                vectors.insert(token.to_string(), v);
            }
            _ => skipped += 1,
        }
    }
    if lines == 0 {
        warn!("embedding file has no vectors");
    } else if wrong_width * 2 > lines {
        return Err(SpotError::Format(format!(
            "{wrong_width} of {lines} embedding lines do not have {dim} values"
        )));
    }
    if skipped > 0 {
        warn!("skipped {skipped} malformed embedding lines");
    }
    Ok(Embeddings { dim, vectors, skipped })
}

pub fn load_embeddings(path: &Path, dim: usize) -> Result<Embeddings> {
    let text = std::fs::read_to_string(path).map_err(|e| SpotError::io(path, e))?;
    parse_embeddings(&text, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(tok: &str, n: usize) -> String {
        let vals: Vec<String> = (0..n).map(|i| format!("{:.3}", i as f64 / 1000.0)).collect();
        format!("{tok} {}", vals.join(" "))
    }

    #[test]
    fn two_good_lines() {
        let text = format!("{}\n{}\n", line("revenue", 300), line("total", 300));
        let e = parse_embeddings(&text, 300).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.skipped, 0);
        assert_eq!(e.vectors["revenue"][2], 0.002);
    }

    #[test]
    fn short_line_skipped() {
        let text = format!("{}\n{}\n{}\n", line("a", 300), line("b", 299), line("c", 300));
        let e = parse_embeddings(&text, 300).unwrap();
        assert_eq!((e.len(), e.skipped), (2, 1));
    }

    #[test]
    fn empty_file() {
        let e = parse_embeddings("", 300).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn mostly_wrong_width() {
        let text = format!("{}\n{}\n{}\n", line("a", 50), line("b", 50), line("c", 300));
        assert!(matches!(parse_embeddings(&text, 300), Err(SpotError::Format(_))));
    }
}
