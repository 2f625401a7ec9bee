//! CSV packet traces: one record per line, the per-dimension values
//! (dotted quad or integer) followed by an optional positive count.
//!
//! ```text
//! 10.1.2.3,5
//! 10.1.2.3,8.8.8.8
//! ```
//! Blank lines and lines starting with `#` are ignored.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{HierarchySpec, Notation, Prefix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    /// `d` value columns plus an optional count.
    Csv,
    /// Source and destination columns plus an optional count; `d` must be 2.
    Csv2d,
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "csv2d" => Ok(TraceFormat::Csv2d),
            _ => Err(Error::Parse {
                what: "trace format",
                input: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub values: Vec<u32>,
    pub count: u64,
}

impl TraceRecord {
    pub fn element(&self, spec: &HierarchySpec) -> Result<Prefix> {
        spec.element(&self.values)
    }
}

pub fn parse_trace<R: Read>(
    input: R,
    format: TraceFormat,
    spec: &HierarchySpec,
) -> Result<Vec<TraceRecord>> {
    let d = spec.dimensions();
    if format == TraceFormat::Csv2d && d != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Trace { line, message };
        if rec.len() != d && rec.len() != d + 1 {
            return Err(fail(format!(
                "expected {d} value column(s) and an optional count, found {} fields",
                rec.len()
            )));
        }
        let values = (0..d)
            .map(|i| spec.parse_value(i, &rec[i]).map_err(|e| fail(e.to_string())))
            .collect::<Result<Vec<u32>>>()?;
        let count = match rec.get(d) {
            Some(c) => c
                .parse::<u64>()
                .map_err(|_| fail(format!("invalid count {c:?}")))?,
            None => 1,
        };
        if count == 0 {
            return Err(fail("count must be positive".into()));
        }
        out.push(TraceRecord { values, count });
    }
    Ok(out)
}

pub fn read_trace_file(
    path: impl AsRef<Path>,
    format: TraceFormat,
    spec: &HierarchySpec,
) -> Result<Vec<TraceRecord>> {
    parse_trace(BufReader::new(File::open(path)?), format, spec)
}

/// Writes records in the same format [`parse_trace`] reads. 32-bit
/// dimensions with an IPv4 notation are written as dotted quads.
pub fn write_trace<W: Write>(records: &[TraceRecord], spec: &HierarchySpec, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(out);
    for r in records {
        let mut row: Vec<String> = spec
            .dims()
            .iter()
            .zip(&r.values)
            .map(|(d, &v)| match d.notation {
                Notation::DottedQuad | Notation::Cidr => {
                    let [a, b, c, x] = v.to_be_bytes();
                    format!("{a}.{b}.{c}.{x}")
                }
                Notation::Plain => v.to_string(),
            })
            .collect();
        if r.count != 1 {
            row.push(r.count.to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Records as `(element, count)` pairs ready for insertion.
pub fn to_stream(records: &[TraceRecord], spec: &HierarchySpec) -> Result<Vec<(Prefix, u64)>> {
    records
        .iter()
        .map(|r| Ok((r.element(spec)?, r.count)))
        .collect()
}
