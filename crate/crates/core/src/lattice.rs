//! Hierarchical domains and their generalization lattice.
//!
//! Every dimension is a fixed-width unsigned value (at most 32 bits) that
//! generalizes `step` bits at a time, from the most significant end. A
//! [`Prefix`] keeps the masked value of every dimension together with its
//! [`Label`], the per-dimension count of retained steps.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Textual rendering used for one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Notation {
    /// `10.1.*.*`; requires a 32-bit dimension with 8-bit steps.
    DottedQuad,
    /// `10.1.0.0/16`; requires a 32-bit dimension.
    Cidr,
    /// `value/len` where `len` is the number of retained bits.
    Plain,
}

/// One dimension of a hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimSpec {
    pub width: u8,
    pub step: u8,
    pub notation: Notation,
}

impl DimSpec {
    pub fn ipv4_bytes() -> Self {
        DimSpec {
            width: 32,
            step: 8,
            notation: Notation::DottedQuad,
        }
    }

    pub fn ipv4_bits() -> Self {
        DimSpec {
            width: 32,
            step: 1,
            notation: Notation::Cidr,
        }
    }

    pub fn plain(width: u8, step: u8) -> Self {
        DimSpec {
            width,
            step,
            notation: Notation::Plain,
        }
    }

    /// Number of generalization steps, `h_i`.
    pub fn height(&self) -> u8 {
        self.width / self.step
    }

    fn full_mask(&self) -> u32 {
        if self.width == 32 {
            u32::MAX
        } else {
            (1u32 << self.width) - 1
        }
    }

    /// Mask keeping the top `steps` steps of a value.
    pub fn mask(&self, steps: u8) -> u32 {
        let keep = steps as u32 * self.step as u32;
        if keep == 0 {
            0
        } else {
            let drop = self.width as u32 - keep;
            (self.full_mask() >> drop) << drop
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidHierarchy(msg.to_string()));
        if self.width == 0 || self.width > 32 {
            return bad("dimension width must be between 1 and 32 bits");
        }
        if self.step == 0 || !self.width.is_multiple_of(self.step) {
            return bad("step must be positive and divide the width");
        }
        match self.notation {
            Notation::DottedQuad if self.width != 32 || self.step != 8 => {
                bad("dotted-quad notation needs 32-bit values with 8-bit steps")
            }
            Notation::Cidr if self.width != 32 => bad("CIDR notation needs 32-bit values"),
            _ => Ok(()),
        }
    }
}

/// Per-dimension retained step counts; identifies a lattice node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label(pub SmallVec<[u8; 4]>);

impl Label {
    pub fn new(entries: &[u8]) -> Self {
        Label(SmallVec::from_slice(entries))
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn level(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    /// Componentwise `self >= other`: nodes labelled `self` hold prefixes at
    /// least as specific as those labelled `other` in every dimension.
    pub fn dominates(&self, other: &Label) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a >= b)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A (possibly generalized) element of the domain.
///
/// Values are stored masked to the retained steps, so equality and hashing
/// compare exactly the retained portion together with the label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Prefix {
    values: SmallVec<[u32; 4]>,
    label: Label,
}

impl Prefix {
    /// Unchecked constructor for decoders; values must already be masked.
    pub(crate) fn from_raw(values: SmallVec<[u32; 4]>, label: Label) -> Self {
        Prefix { values, label }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn level(&self) -> u32 {
        self.label.level()
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }
}

/// Outcome of a greatest-lower-bound computation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Glb {
    Prefix(Prefix),
    /// No common descendant exists; counts as zero everywhere.
    Trivial,
}

/// The hierarchy and its derived lattice constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierarchySpec {
    dims: Vec<DimSpec>,
}

impl HierarchySpec {
    pub fn new(dims: Vec<DimSpec>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidHierarchy("at least one dimension required".into()));
        }
        for d in &dims {
            d.validate()?;
        }
        let spec = HierarchySpec { dims };
        if spec.node_count_checked().is_none() {
            return Err(Error::InvalidHierarchy("lattice too large".into()));
        }
        Ok(spec)
    }

    /// `d` identical dimensions.
    pub fn uniform(d: usize, dim: DimSpec) -> Result<Self> {
        Self::new(vec![dim; d])
    }

    pub fn ipv4_bytes(d: usize) -> Result<Self> {
        Self::uniform(d, DimSpec::ipv4_bytes())
    }

    pub fn ipv4_bits(d: usize) -> Result<Self> {
        Self::uniform(d, DimSpec::ipv4_bits())
    }

    pub fn dims(&self) -> &[DimSpec] {
        &self.dims
    }

    pub fn dimensions(&self) -> usize {
        self.dims.len()
    }

    pub fn heights(&self) -> Vec<u8> {
        self.dims.iter().map(DimSpec::height).collect()
    }

    fn node_count_checked(&self) -> Option<usize> {
        self.dims
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(d.height() as usize + 1))
            .filter(|&h| h <= 1 << 24)
    }

    /// Number of lattice nodes, `H = prod(h_i + 1)`.
    pub fn node_count(&self) -> usize {
        self.dims.iter().map(|d| d.height() as usize + 1).product()
    }

    /// Deepest level, `L = sum(h_i)`.
    pub fn depth(&self) -> u32 {
        self.dims.iter().map(|d| d.height() as u32).sum()
    }

    /// Mixed-radix index of a label, dimension 0 least significant.
    pub fn node_index(&self, label: &Label) -> usize {
        let mut idx = 0usize;
        let mut radix = 1usize;
        for (d, &e) in self.dims.iter().zip(label.entries()) {
            idx += e as usize * radix;
            radix *= d.height() as usize + 1;
        }
        idx
    }

    pub fn label_at(&self, mut index: usize) -> Label {
        let mut entries = SmallVec::new();
        for d in &self.dims {
            let base = d.height() as usize + 1;
            entries.push((index % base) as u8);
            index /= base;
        }
        Label(entries)
    }

    /// All labels in node-index order.
    pub fn labels(&self) -> Vec<Label> {
        (0..self.node_count()).map(|i| self.label_at(i)).collect()
    }

    /// Labels whose entries sum to `level`.
    pub fn labels_at_level(&self, level: u32) -> Vec<Label> {
        self.labels()
            .into_iter()
            .filter(|l| l.level() == level)
            .collect()
    }

    pub fn full_label(&self) -> Label {
        Label(self.dims.iter().map(DimSpec::height).collect())
    }

    pub fn root(&self) -> Prefix {
        Prefix {
            values: SmallVec::from_elem(0, self.dims.len()),
            label: Label(SmallVec::from_elem(0, self.dims.len())),
        }
    }

    /// A fully specified element.
    pub fn element(&self, values: &[u32]) -> Result<Prefix> {
        self.prefix(values, &self.full_label())
    }

    /// Builds a prefix, masking `values` down to the steps kept by `label`.
    pub fn prefix(&self, values: &[u32], label: &Label) -> Result<Prefix> {
        self.check_dims(values.len())?;
        self.check_dims(label.entries().len())?;
        let mut masked = SmallVec::with_capacity(values.len());
        for ((d, &v), &e) in self.dims.iter().zip(values).zip(label.entries()) {
            if v & !d.full_mask() != 0 {
                return Err(Error::ValueOutOfRange {
                    value: v as u64,
                    width: d.width,
                });
            }
            if e > d.height() {
                return Err(Error::InvalidHierarchy(format!(
                    "label entry {e} exceeds height {}",
                    d.height()
                )));
            }
            masked.push(v & d.mask(e));
        }
        Ok(Prefix {
            values: masked,
            label: label.clone(),
        })
    }

    fn check_dims(&self, found: usize) -> Result<()> {
        if found != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found,
            });
        }
        Ok(())
    }

    pub fn is_fully_specified(&self, p: &Prefix) -> bool {
        p.label == self.full_label()
    }

    /// Generalizes `p` one step in dimension `dim` (0-based); `None` when the
    /// dimension is already fully general.
    pub fn parent(&self, p: &Prefix, dim: usize) -> Option<Prefix> {
        let e = *p.label.0.get(dim)?;
        if e == 0 {
            return None;
        }
        let mut q = p.clone();
        q.label.0[dim] = e - 1;
        q.values[dim] &= self.dims[dim].mask(e - 1);
        Some(q)
    }

    /// Generalization of `p` at node `label`. `label` must be dominated by
    /// `p`'s label.
    pub fn generalize_to(&self, p: &Prefix, label: &Label) -> Prefix {
        debug_assert!(p.label.dominates(label));
        let values = self
            .dims
            .iter()
            .zip(p.values.iter())
            .zip(label.entries())
            .map(|((d, &v), &e)| v & d.mask(e))
            .collect();
        Prefix {
            values,
            label: label.clone(),
        }
    }

    /// Every generalization of `e` (itself and the root included), indexed
    /// by lattice node.
    pub fn generalizations(&self, e: &Prefix) -> Vec<Prefix> {
        let mut out = Vec::with_capacity(self.node_count());
        self.for_each_generalization(e, |_, p| out.push(p));
        out
    }

    /// Calls `f(node_index, prefix)` for every generalization of `e` that
    /// lies at a node dominated by `e`'s label, in node-index order.
    pub fn for_each_generalization(&self, e: &Prefix, mut f: impl FnMut(usize, Prefix)) {
        for idx in 0..self.node_count() {
            let label = self.label_at(idx);
            if e.label.dominates(&label) {
                f(idx, self.generalize_to(e, &label));
            }
        }
    }

    /// `p ⪯ q`: `q` equals `p` or generalizes it in every dimension.
    pub fn is_descendant(&self, p: &Prefix, q: &Prefix) -> bool {
        self.dims
            .iter()
            .zip(p.label.entries().iter().zip(q.label.entries()))
            .zip(p.values.iter().zip(q.values.iter()))
            .all(|((d, (&pe, &qe)), (&pv, &qv))| pe >= qe && pv & d.mask(qe) == qv)
    }

    /// Strict version of [`is_descendant`](Self::is_descendant).
    pub fn is_strict_descendant(&self, p: &Prefix, q: &Prefix) -> bool {
        p != q && self.is_descendant(p, q)
    }

    /// Greatest lower bound: per dimension the more specific value, or
    /// [`Glb::Trivial`] when some dimension is incomparable.
    pub fn glb(&self, h: &Prefix, g: &Prefix) -> Glb {
        let mut values = SmallVec::with_capacity(self.dims.len());
        let mut entries = SmallVec::with_capacity(self.dims.len());
        for (i, d) in self.dims.iter().enumerate() {
            let (he, ge) = (h.label.0[i], g.label.0[i]);
            let (hv, gv) = (h.values[i], g.values[i]);
            let (deep_v, deep_e, shallow_v, shallow_e) = if he >= ge {
                (hv, he, gv, ge)
            } else {
                (gv, ge, hv, he)
            };
            if deep_v & d.mask(shallow_e) != shallow_v {
                return Glb::Trivial;
            }
            values.push(deep_v);
            entries.push(deep_e);
        }
        Glb::Prefix(Prefix {
            values,
            label: Label(entries),
        })
    }

    /// Largest antichain size `A = 1 + min(h_1, h_2)`; two dimensions only.
    pub fn max_antichain_size(&self) -> Result<u32> {
        if self.dims.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dims.len(),
            });
        }
        Ok(1 + self.dims[0].height().min(self.dims[1].height()) as u32)
    }

    /// Renders a prefix, e.g. `10.1.*.*` or `(10.1.*.*,8.8.8.8)`.
    pub fn format_prefix(&self, p: &Prefix) -> String {
        let parts: Vec<String> = self
            .dims
            .iter()
            .zip(p.values.iter().zip(p.label.entries()))
            .map(|(d, (&v, &e))| format_dim(d, v, e))
            .collect();
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            format!("({})", parts.join(","))
        }
    }

    /// Inverse of [`format_prefix`](Self::format_prefix). Fully specified
    /// values may omit the `/len` suffix.
    pub fn parse_prefix(&self, text: &str) -> Result<Prefix> {
        let bad = || Error::Parse {
            what: "prefix",
            input: text.to_string(),
        };
        let t = text.trim();
        let body = if self.dims.len() > 1 {
            t.strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(bad)?
        } else {
            t
        };
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != self.dims.len() {
            return Err(bad());
        }
        let mut values = Vec::with_capacity(parts.len());
        let mut entries = SmallVec::with_capacity(parts.len());
        for (d, part) in self.dims.iter().zip(parts) {
            let (v, e) = parse_dim(d, part).ok_or_else(bad)?;
            values.push(v);
            entries.push(e);
        }
        let p = self.prefix(&values, &Label(entries))?;
        if p.values() != values.as_slice() {
            // Non-zero bits below the prefix length.
            return Err(bad());
        }
        Ok(p)
    }

    /// Parses one fully specified value of dimension `dim`: dotted quad
    /// for 32-bit dimensions, otherwise (or additionally) a decimal integer.
    pub fn parse_value(&self, dim: usize, text: &str) -> Result<u32> {
        let d = self.dims.get(dim).ok_or(Error::DimensionMismatch {
            expected: self.dims.len(),
            found: dim + 1,
        })?;
        let t = text.trim();
        let v = if t.contains('.') {
            if d.width != 32 {
                None
            } else {
                parse_quad(t)
            }
        } else {
            t.parse::<u64>().ok().and_then(|v| u32::try_from(v).ok())
        };
        let v = v.ok_or_else(|| Error::Parse {
            what: "address",
            input: t.to_string(),
        })?;
        if v & !d.full_mask() != 0 {
            return Err(Error::ValueOutOfRange {
                value: v as u64,
                width: d.width,
            });
        }
        Ok(v)
    }
}

fn format_dim(d: &DimSpec, v: u32, e: u8) -> String {
    let bits = e as u32 * d.step as u32;
    match d.notation {
        Notation::DottedQuad => {
            let octets = v.to_be_bytes();
            (0..4)
                .map(|i| {
                    if i < e as usize {
                        octets[i].to_string()
                    } else {
                        "*".to_string()
                    }
                })
                .collect::<Vec<_>>()
                .join(".")
        }
        Notation::Cidr => {
            let [a, b, c, x] = v.to_be_bytes();
            format!("{a}.{b}.{c}.{x}/{bits}")
        }
        Notation::Plain => format!("{v}/{bits}"),
    }
}

fn parse_quad(s: &str) -> Option<u32> {
    let mut out = 0u32;
    let mut n = 0;
    for part in s.split('.') {
        out = (out << 8) | part.parse::<u8>().ok()? as u32;
        n += 1;
    }
    (n == 4).then_some(out)
}

fn parse_dim(d: &DimSpec, s: &str) -> Option<(u32, u8)> {
    match d.notation {
        Notation::DottedQuad if s.contains('*') || !s.contains('/') => {
            let parts: Vec<&str> = s.split('.').collect();
            if parts.len() != 4 {
                return None;
            }
            let kept = parts.iter().take_while(|p| **p != "*").count();
            if parts[kept..].iter().any(|p| *p != "*") {
                return None;
            }
            let mut v = 0u32;
            for (i, p) in parts.iter().enumerate() {
                let byte = if i < kept { p.parse::<u8>().ok()? } else { 0 };
                v = (v << 8) | byte as u32;
            }
            Some((v, kept as u8))
        }
        _ => {
            let (value, len) = match s.split_once('/') {
                Some((v, l)) => (v, Some(l.parse::<u32>().ok()?)),
                None => (s, None),
            };
            let v = if value.contains('.') {
                parse_quad(value)?
            } else {
                value.parse::<u32>().ok()?
            };
            let bits = len.unwrap_or(d.width as u32);
            if bits > d.width as u32 || bits % d.step as u32 != 0 {
                return None;
            }
            Some((v, (bits / d.step as u32) as u8))
        }
    }
}
