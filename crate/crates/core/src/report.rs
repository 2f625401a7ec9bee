//! HHH reports and their CSV / JSON renderings.
//!
//! Rows are ordered by descending level, then by prefix value, so a report is
//! a pure function of the state and `phi`.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::lattice::{HierarchySpec, Prefix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputEntry {
    pub prefix: Prefix,
    /// `f_min(p)`
    pub lower: u64,
    /// `f_max(p)`
    pub upper: u64,
    /// `F'_p`
    pub conditioned: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HhhReport {
    pub spec: HierarchySpec,
    pub epsilon: Fraction,
    pub phi: Fraction,
    pub total: u64,
    pub entries: Vec<OutputEntry>,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    schema_version: u32,
    epsilon: Fraction,
    phi: Fraction,
    n: u64,
    h: usize,
    d: usize,
    hierarchy: HierarchySpec,
    warnings: Vec<String>,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    prefix: String,
    label: Vec<u8>,
    level: u32,
    f_min: u64,
    f_max: u64,
    f_prime: i64,
}

impl HhhReport {
    pub fn new(
        spec: HierarchySpec,
        epsilon: Fraction,
        phi: Fraction,
        total: u64,
        mut entries: Vec<OutputEntry>,
        warnings: Vec<String>,
    ) -> Self {
        entries.sort_by(|a, b| {
            b.prefix
                .level()
                .cmp(&a.prefix.level())
                .then_with(|| a.prefix.cmp(&b.prefix))
        });
        HhhReport {
            spec,
            epsilon,
            phi,
            total,
            entries,
            warnings,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prefixes(&self) -> HashSet<Prefix> {
        self.entries.iter().map(|e| e.prefix.clone()).collect()
    }

    pub fn get(&self, p: &Prefix) -> Option<&OutputEntry> {
        self.entries.iter().find(|e| &e.prefix == p)
    }

    /// Largest `(f_max - f_min) / (epsilon N)` over the entries; 0 when empty.
    pub fn relative_error(&self) -> f64 {
        let scale = self.epsilon.to_f64() * self.total as f64;
        if scale == 0.0 {
            return 0.0;
        }
        self.entries
            .iter()
            .map(|e| (e.upper - e.lower) as f64 / scale)
            .fold(0.0, f64::max)
    }

    fn to_doc(&self) -> ReportDoc {
        ReportDoc {
            schema_version: SCHEMA_VERSION,
            epsilon: self.epsilon,
            phi: self.phi,
            n: self.total,
            h: self.spec.node_count(),
            d: self.spec.dimensions(),
            hierarchy: self.spec.clone(),
            warnings: self.warnings.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryDoc {
                    prefix: self.spec.format_prefix(&e.prefix),
                    label: e.prefix.label().entries().to_vec(),
                    level: e.prefix.level(),
                    f_min: e.lower,
                    f_max: e.upper,
                    f_prime: e.conditioned,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_doc())?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDoc = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Codec(format!(
                "unsupported report schema version {}",
                doc.schema_version
            )));
        }
        let spec = doc.hierarchy;
        let entries = doc
            .entries
            .iter()
            .map(|e| {
                let prefix = spec.parse_prefix(&e.prefix)?;
                if prefix.label().entries() != e.label.as_slice() {
                    return Err(Error::Codec(format!("label mismatch for {}", e.prefix)));
                }
                Ok(OutputEntry {
                    prefix,
                    lower: e.f_min,
                    upper: e.f_max,
                    conditioned: e.f_prime,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HhhReport::new(spec, doc.epsilon, doc.phi, doc.n, entries, doc.warnings))
    }

    /// CSV with a leading `#` metadata line, then one row per entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# epsilon={} phi={} N={} H={} d={}",
            self.epsilon,
            self.phi,
            self.total,
            self.spec.node_count(),
            self.spec.dimensions()
        )?;
        for w in &self.warnings {
            writeln!(out, "# warning: {w}")?;
        }
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["prefix", "label", "level", "f_min", "f_max", "f_prime"])?;
        for e in &self.entries {
            wtr.write_record([
                self.spec.format_prefix(&e.prefix),
                e.prefix.label().to_string(),
                e.prefix.level().to_string(),
                e.lower.to_string(),
                e.upper.to_string(),
                e.conditioned.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> HhhReport {
        let spec = HierarchySpec::ipv4_bytes(2).unwrap();
        let entry = |s: &str, lo, hi, cond| OutputEntry {
            prefix: spec.parse_prefix(s).unwrap(),
            lower: lo,
            upper: hi,
            conditioned: cond,
        };
        HhhReport::new(
            spec.clone(),
            "0.1".parse().unwrap(),
            "0.25".parse().unwrap(),
            40,
            vec![
                entry("(1.2.*.*,3.*.*.*)", 20, 22, 12),
                entry("(1.2.3.4,5.6.7.8)", 10, 10, 10),
                entry("(1.2.3.*,5.6.7.*)", 19, 20, 10),
            ],
            vec![],
        )
    }

    #[test]
    fn rows_sorted_by_level_then_prefix() {
        let r = sample();
        let levels: Vec<u32> = r.entries.iter().map(|e| e.prefix.level()).collect();
        assert_eq!(levels, [8, 6, 3]);
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let text = r.to_json().unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        assert_eq!(HhhReport::from_json(&text).unwrap(), r);
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# epsilon=0.1 phi=0.25 N=40 H=25 d=2");
        assert_eq!(lines[1], "prefix,label,level,f_min,f_max,f_prime");
        assert_eq!(lines[2], "\"(1.2.3.4,5.6.7.8)\",4:4,8,10,10,10");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn relative_error_scales_by_epsilon_n() {
        // widths 2, 0, 1 over epsilon * N = 4
        assert!((sample().relative_error() - 0.5).abs() < 1e-12);
    }
}
