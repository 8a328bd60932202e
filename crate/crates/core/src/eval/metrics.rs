use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifier::{Label, LabeledHeader};
use crate::error::{Result, SpotError};
use crate::types::{Sector, SectorGroup};

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Binary confusion counts with non_operating as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, pred: Label, gold: Label) {
        match (pred.is_positive(), gold.is_positive()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_from(self.precision(), self.recall())
    }

    /// Same predictions scored with operating as the positive class.
    pub fn swapped(&self) -> Confusion {
        Confusion {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    /// Micro average over both classes: per-class tp, fp and fn summed.
    pub fn micro_f1(&self) -> f64 {
        let other = self.swapped();
        let tp = self.tp + other.tp;
        let fp = self.fp + other.fp;
        let fn_ = self.fn_ + other.fn_;
        f1_from(ratio(tp, tp + fp), ratio(tp, tp + fn_))
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub micro_f1: f64,
    /// Only sectors with at least one gold header appear.
    pub per_sector_f1: BTreeMap<Sector, f64>,
    pub per_group_f1: BTreeMap<SectorGroup, f64>,
}

impl Metrics {
    pub fn confusion(&self) -> Confusion {
        Confusion {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            tn: self.tn,
        }
    }

    /// One `key=value` pair per line, stable order.
    pub fn kv_dump(&self, model: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model={model}");
        for (k, v) in [("tp", self.tp), ("fp", self.fp), ("fn", self.fn_), ("tn", self.tn)] {
            let _ = writeln!(out, "{k}={v}");
        }
        for (k, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("micro_f1", self.micro_f1),
        ] {
            let _ = writeln!(out, "{k}={v:.6}");
        }
        for (s, f) in &self.per_sector_f1 {
            let _ = writeln!(out, "f1.{}={f:.6}", s.as_str());
        }
        for (g, f) in &self.per_group_f1 {
            let _ = writeln!(out, "f1.{g:?}={f:.6}");
        }
        out
    }
}

struct Tally {
    all: Confusion,
    sectors: BTreeMap<Sector, Confusion>,
    groups: BTreeMap<SectorGroup, Confusion>,
}

fn tally(pred: &[Label], gold: &[LabeledHeader]) -> Result<Tally> {
    if pred.len() != gold.len() {
        return Err(SpotError::Shape(format!(
            "{} predictions for {} gold headers",
            pred.len(),
            gold.len()
        )));
    }
    let mut t = Tally {
        all: Confusion::default(),
        sectors: BTreeMap::new(),
        groups: BTreeMap::new(),
    };
    for (p, g) in pred.iter().zip(gold) {
        t.all.add(*p, g.label);
        t.sectors.entry(g.sector).or_default().add(*p, g.label);
        t.groups.entry(g.sector.group()).or_default().add(*p, g.label);
    }
    Ok(t)
}

pub fn compute_metrics(pred: &[Label], gold: &[LabeledHeader]) -> Result<Metrics> {
    let t = tally(pred, gold)?;
    let c = t.all;
    Ok(Metrics {
        tp: c.tp,
        fp: c.fp,
        fn_: c.fn_,
        tn: c.tn,
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        micro_f1: c.micro_f1(),
        per_sector_f1: t.sectors.iter().map(|(s, c)| (*s, c.f1())).collect(),
        per_group_f1: t.groups.iter().map(|(g, c)| (*g, c.f1())).collect(),
    })
}

const COLUMNS: [(&str, Option<Sector>, SectorGroup); 8] = [
    ("Metal", Some(Sector::MetalsMining), SectorGroup::Commodities),
    ("Chemicals", Some(Sector::Chemicals), SectorGroup::Commodities),
    ("Oil&Gas", Some(Sector::OilGas), SectorGroup::Commodities),
    ("Sector F1", None, SectorGroup::Commodities),
    ("Tech", Some(Sector::Tech), SectorGroup::Consumer),
    ("Media", Some(Sector::Media), SectorGroup::Consumer),
    ("Retail", Some(Sector::Retail), SectorGroup::Consumer),
    ("Sector F1", None, SectorGroup::Consumer),
];

/// Per-sector F1 laid out with sectors as columns and one row per model.
/// Group columns pool the confusion counts of their sectors.
pub fn sector_report(models: &[(&str, &[Label])], gold: &[LabeledHeader]) -> Result<String> {
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(models.len() + 2);
    let mut top = vec![String::new(), "Commodities".to_string()];
    top.extend(std::iter::repeat_n(String::new(), 3));
    top.push("Consumer".to_string());
    top.extend(std::iter::repeat_n(String::new(), 3));
    rows.push(top);
    let mut head = vec!["Model".to_string()];
    head.extend(COLUMNS.iter().map(|(n, _, _)| n.to_string()));
    rows.push(head);

    for (name, pred) in models {
        let t = tally(pred, gold)?;
        let mut row = vec![name.to_string()];
        for (_, sector, group) in COLUMNS {
            let c = match sector {
                Some(s) => t.sectors.get(&s),
                None => t.groups.get(&group),
            };
            row.push(c.filter(|c| c.total() > 0).map_or("n/a".to_string(), |c| format!("{:.3}", c.f1())));
        }
        rows.push(row);
    }

    let widths: Vec<usize> = (0..=COLUMNS.len())
        .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, w))| if i == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{NonOperating as N, Operating as O};

    fn gold(labels: &[Label], sector: Sector) -> Vec<LabeledHeader> {
        labels
            .iter()
            .map(|l| LabeledHeader {
                text: "x".into(),
                label: *l,
                company_id: "c".into(),
                sector,
            })
            .collect()
    }

    #[test]
    fn nine_one_one() {
        let c = Confusion { tp: 9, fp: 1, fn_: 1, tn: 0 };
        assert!((c.precision() - 0.9).abs() < 1e-12);
        assert!((c.recall() - 0.9).abs() < 1e-12);
        assert!((c.f1() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn harmonic_mean_of_table_row() {
        assert!((f1_from(0.981, 0.983) - 0.982).abs() <= 0.0005);
    }

    #[test]
    fn perfect_predictions() {
        let labels = [N, O, N, N, O];
        let m = compute_metrics(&labels, &gold(&labels, Sector::Tech)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.micro_f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[N], &gold(&[N, O], Sector::Tech)).is_err());
    }

    #[test]
    fn swapped_convention() {
        let c = Confusion { tp: 50, fp: 5, fn_: 3, tn: 12 };
        let s = c.swapped();
        // operating as positive: 12 correct, 3 wrongly called operating, 5 missed
        assert_eq!((s.tp, s.fp, s.fn_, s.tn), (12, 3, 5, 50));
        assert!((s.precision() - 0.8).abs() < 1e-12);
        assert!((s.recall() - 12.0 / 17.0).abs() < 1e-12);
        assert_eq!(s.swapped(), c);
    }

    #[test]
    fn group_f1_pools_counts() {
        // Metal: tp 8 fp 2 fn 0 -> f1 0.8889; Chemicals: tp 1 fp 0 fn 3 -> f1 0.4.
        // Pooled: tp 9 fp 2 fn 3 -> p 9/11, r 9/12, f1 18/23.
        let mut g = gold(&[N; 8], Sector::MetalsMining);
        g.extend(gold(&[O, O], Sector::MetalsMining));
        g.extend(gold(&[N; 4], Sector::Chemicals));
        let mut p = vec![N; 10];
        p.extend([N, O, O, O]);
        let m = compute_metrics(&p, &g).unwrap();
        let pooled = m.per_group_f1[&SectorGroup::Commodities];
        assert!((pooled - 18.0 / 23.0).abs() < 1e-12);
        let avg = (m.per_sector_f1[&Sector::MetalsMining] + m.per_sector_f1[&Sector::Chemicals]) / 2.0;
        assert!((pooled - avg).abs() > 0.1);
    }

    #[test]
    fn report_single_sector() {
        let labels = [N, N, O];
        let g = gold(&labels, Sector::Retail);
        let pred = [N, O, O];
        let r = sector_report(&[("BiGRU", &pred)], &g).unwrap();
        let lines: Vec<&str> = r.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("Model"));
        let cells: Vec<&str> = lines[2].split_whitespace().collect();
        assert_eq!(cells, ["BiGRU", "n/a", "n/a", "n/a", "n/a", "n/a", "n/a", "0.667", "0.667"]);
    }

    #[test]
    fn report_two_models() {
        let labels = [N, O];
        let g = gold(&labels, Sector::Tech);
        let r = sector_report(&[("a", &labels[..]), ("b", &[O, O][..])], &g).unwrap();
        assert_eq!(r.lines().count(), 4);
    }

    #[test]
    fn kv_dump_lines() {
        let labels = [N, O];
        let m = compute_metrics(&labels, &gold(&labels, Sector::Tech)).unwrap();
        let d = m.kv_dump("nb");
        assert!(d.lines().all(|l| l.contains('=')));
        assert!(d.contains("f1=1.000000"));
        assert!(d.contains("f1.Tech=1.000000"));
    }
}
