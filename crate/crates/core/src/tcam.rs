//! Operation-count simulation of the HHH algorithm running out of a single
//! ternary CAM.
//!
//! Every Space Saving instance lives in the same table. Its entries carry a
//! fully specified instance tag of `ceil(log2 instances)` bits next to the
//! prefix bits, so one packet costs one exact-match SEARCH per instance with
//! the key `(generalized element, tag)`. Counts and errors sit in the
//! associated memory; each instance's minimum entry is remembered outside
//! the table.
//!
//! Costs per instance and packet come from a [`TcamCostModel`]:
//!
//! | event                        | default            |
//! |------------------------------|--------------------|
//! | hit                          | SEARCH READ WRITE  |
//! | miss, free slot              | SEARCH WRITE       |
//! | miss, full: replace minimum  | SEARCH READ WRITE  |
//! | remembered minimum changes   | READ               |
//!
//! The last row applies only once the instance is full, since only then is a
//! minimum needed.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::hhh::HhhState;
use crate::lattice::{HierarchySpec, Label, Prefix};
use crate::space_saving::{Counter, SpaceSaving, UpdateMode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCost {
    #[serde(default)]
    pub searches: u64,
    #[serde(default)]
    pub reads: u64,
    #[serde(default)]
    pub writes: u64,
}

impl OpCost {
    pub const fn new(searches: u64, reads: u64, writes: u64) -> Self {
        OpCost { searches, reads, writes }
    }

    pub fn total(&self) -> u64 {
        self.searches + self.reads + self.writes
    }
}

/// Cost table, loadable from JSON. Missing fields take the defaults above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TcamCostModel {
    pub hit: OpCost,
    pub insert: OpCost,
    pub replace: OpCost,
    pub min_refresh: OpCost,
    /// Keep the root node in the table. When false the root is a plain
    /// packet counter and costs nothing.
    pub include_root: bool,
}

impl Default for TcamCostModel {
    fn default() -> Self {
        TcamCostModel {
            hit: OpCost::new(1, 1, 1),
            insert: OpCost::new(1, 0, 1),
            replace: OpCost::new(1, 1, 1),
            min_refresh: OpCost::new(0, 1, 0),
            include_root: true,
        }
    }
}

impl TcamCostModel {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A tagged ternary key. `care` has a one for every specified prefix bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TernaryKey {
    pub value: Vec<u32>,
    pub care: Vec<u32>,
    pub widths: Vec<u8>,
    pub tag: u32,
    pub tag_bits: u8,
}

impl TernaryKey {
    pub fn new(spec: &HierarchySpec, p: &Prefix, tag: u32, tag_bits: u8) -> Self {
        let dims = spec.dims();
        TernaryKey {
            value: p.values().to_vec(),
            care: dims
                .iter()
                .zip(p.label().entries())
                .map(|(d, &steps)| d.mask(steps))
                .collect(),
            widths: dims.iter().map(|d| d.width).collect(),
            tag,
            tag_bits,
        }
    }

    /// Ternary match: every cared-for bit of the key equals the word's bit,
    /// and the tags agree exactly.
    pub fn matches(&self, word: &[u32], tag: u32) -> bool {
        tag == self.tag
            && word.len() == self.value.len()
            && word
                .iter()
                .zip(&self.value)
                .zip(&self.care)
                .all(|((w, v), c)| w & c == v & c)
    }
}

impl fmt::Display for TernaryKey {
    /// Bit string per dimension with `*` for wildcards, then `.` and the tag.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ((&v, &c), &w)) in self.value.iter().zip(&self.care).zip(&self.widths).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            for bit in (0..w).rev() {
                let ch = if c >> bit & 1 == 0 {
                    '*'
                } else if v >> bit & 1 == 1 {
                    '1'
                } else {
                    '0'
                };
                write!(f, "{ch}")?;
            }
        }
        f.write_str(".")?;
        for bit in (0..self.tag_bits).rev() {
            write!(f, "{}", self.tag >> bit & 1)?;
        }
        Ok(())
    }
}

/// `ceil(log2 n)`, the tag width that distinguishes `n` instances.
pub fn tag_bits(n: usize) -> u8 {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as u8
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceOps {
    pub label: String,
    /// `None` for an instance kept outside the table.
    pub tag: Option<u32>,
    pub searches: u64,
    pub reads: u64,
    pub writes: u64,
}

impl InstanceOps {
    fn charge(&mut self, c: OpCost) {
        self.searches += c.searches;
        self.reads += c.reads;
        self.writes += c.writes;
    }

    pub fn total(&self) -> u64 {
        self.searches + self.reads + self.writes
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TcamOpCounts {
    pub reads: u64,
    pub writes: u64,
    pub searches: u64,
    pub packets: u64,
    /// Instances resident in the table.
    pub instances: usize,
    pub tag_bits: u8,
    /// Largest number of operations one packet caused at one instance.
    pub max_ops_per_packet_instance: u64,
    pub per_instance: Vec<InstanceOps>,
}

impl TcamOpCounts {
    pub fn total_ops(&self) -> u64 {
        self.reads + self.writes + self.searches
    }

    pub fn ops_per_packet(&self) -> f64 {
        if self.packets == 0 {
            0.0
        } else {
            self.total_ops() as f64 / self.packets as f64
        }
    }

    pub fn ops_per_packet_instance(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.ops_per_packet() / self.instances as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Event {
    Hit,
    Insert,
    Replace,
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    count: u64,
    error: u64,
    stamp: u64,
}

/// One Space Saving instance as the table sees it: entries keyed by tagged
/// key, with the minimum tracked in `order` by (count, last update).
#[derive(Debug)]
struct Instance {
    capacity: usize,
    entries: HashMap<TernaryKey, Slot>,
    order: BTreeSet<(u64, u64)>,
    by_stamp: HashMap<u64, TernaryKey>,
    items: HashMap<TernaryKey, Prefix>,
    total: u64,
}

impl Instance {
    fn new(capacity: usize) -> Self {
        Instance {
            capacity,
            entries: HashMap::with_capacity(capacity),
            order: BTreeSet::new(),
            by_stamp: HashMap::with_capacity(capacity),
            items: HashMap::with_capacity(capacity),
            total: 0,
        }
    }

    fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    fn minimum(&self) -> Option<(u64, u64)> {
        self.order.first().copied()
    }

    fn set(&mut self, key: TernaryKey, slot: Slot) {
        self.order.insert((slot.count, slot.stamp));
        self.by_stamp.insert(slot.stamp, key.clone());
        self.entries.insert(key, slot);
    }

    fn unlink(&mut self, key: &TernaryKey) -> Slot {
        let slot = self.entries.remove(key).expect("entry present");
        self.order.remove(&(slot.count, slot.stamp));
        self.by_stamp.remove(&slot.stamp);
        slot
    }

    /// One unit update; returns what happened and whether the remembered
    /// minimum had to be refreshed.
    fn update(&mut self, key: TernaryKey, item: &Prefix, stamp: u64) -> (Event, bool) {
        self.total += 1;
        let was_full = self.is_full();
        let before = self.minimum();
        let event = if self.entries.contains_key(&key) {
            let old = self.unlink(&key);
            self.set(key, Slot { count: old.count + 1, error: old.error, stamp });
            Event::Hit
        } else if !was_full {
            self.items.insert(key.clone(), item.clone());
            self.set(key, Slot { count: 1, error: 0, stamp });
            Event::Insert
        } else {
            let (_, min_stamp) = before.expect("full instance has a minimum");
            let victim = self.by_stamp[&min_stamp].clone();
            let old = self.unlink(&victim);
            self.items.remove(&victim);
            self.items.insert(key.clone(), item.clone());
            self.set(key, Slot { count: old.count + 1, error: old.count, stamp });
            Event::Replace
        };
        let refresh = self.is_full() && (!was_full || before != self.minimum());
        (event, refresh)
    }

    /// The instance as a unitary summary, counters in eviction order.
    fn to_summary(&self) -> Result<SpaceSaving<Prefix>> {
        let counters = self
            .order
            .iter()
            .map(|(_, stamp)| {
                let key = &self.by_stamp[stamp];
                let slot = self.entries[key];
                Counter {
                    item: self.items[key].clone(),
                    count: slot.count,
                    error: slot.error,
                }
            })
            .collect();
        SpaceSaving::from_parts(UpdateMode::Unitary, self.capacity, self.total, 0, counters)
    }
}

fn cost_of(model: &TcamCostModel, event: Event, refresh: bool) -> OpCost {
    let base = match event {
        Event::Hit => model.hit,
        Event::Insert => model.insert,
        Event::Replace => model.replace,
    };
    if refresh {
        OpCost::new(
            base.searches + model.min_refresh.searches,
            base.reads + model.min_refresh.reads,
            base.writes + model.min_refresh.writes,
        )
    } else {
        base
    }
}

fn check_stream(stream: &[(Prefix, u64)], spec: &HierarchySpec) -> Result<()> {
    for (e, c) in stream {
        if *c != 1 {
            return Err(Error::UnitaryIncrement(*c));
        }
        if e.dims() != spec.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: spec.dimensions(),
                found: e.dims(),
            });
        }
        if !spec.is_fully_specified(e) {
            return Err(Error::Parse {
                what: "stream element",
                input: spec.format_prefix(e),
            });
        }
    }
    Ok(())
}

fn capacity_for(epsilon: Fraction) -> Result<usize> {
    if !epsilon.is_proper() {
        return Err(Error::InvalidEpsilon(epsilon.to_string()));
    }
    usize::try_from(epsilon.ceil_recip()).map_err(|_| Error::InvalidEpsilon(epsilon.to_string()))
}

fn finish(counts: &mut TcamOpCounts) {
    counts.searches = counts.per_instance.iter().map(|i| i.searches).sum();
    counts.reads = counts.per_instance.iter().map(|i| i.reads).sum();
    counts.writes = counts.per_instance.iter().map(|i| i.writes).sum();
}

/// Result of [`tcam_run`]: the operation counts and the final summaries.
#[derive(Debug)]
pub struct TcamRun {
    pub ops: TcamOpCounts,
    pub state: HhhState,
}

/// Replays a unit-count stream through the one-instance-per-node layout.
/// The returned state equals what [`HhhState`] builds in unitary mode.
pub fn tcam_run(
    stream: &[(Prefix, u64)],
    spec: &HierarchySpec,
    epsilon: Fraction,
    model: &TcamCostModel,
) -> Result<TcamRun> {
    check_stream(stream, spec)?;
    let capacity = capacity_for(epsilon)?;
    let labels = spec.labels();
    let root = Label::new(&vec![0; spec.dimensions()]);
    let resident: Vec<bool> = labels.iter().map(|l| model.include_root || *l != root).collect();
    let instances = resident.iter().filter(|&&r| r).count();
    let bits = tag_bits(instances);

    let mut tags = Vec::with_capacity(labels.len());
    let mut next = 0u32;
    for &r in &resident {
        tags.push(r.then(|| {
            next += 1;
            next - 1
        }));
    }
    let mut ops = TcamOpCounts {
        instances,
        tag_bits: bits,
        per_instance: labels
            .iter()
            .zip(&tags)
            .map(|(l, &tag)| InstanceOps { label: l.to_string(), tag, ..Default::default() })
            .collect(),
        ..Default::default()
    };
    let mut table: Vec<Instance> = labels.iter().map(|_| Instance::new(capacity)).collect();

    for (stamp, (e, _)) in stream.iter().enumerate() {
        for (i, label) in labels.iter().enumerate() {
            let p = spec.generalize_to(e, label);
            let key = TernaryKey::new(spec, &p, tags[i].unwrap_or(0), bits);
            let (event, refresh) = table[i].update(key, &p, stamp as u64);
            if tags[i].is_some() {
                let cost = cost_of(model, event, refresh);
                ops.per_instance[i].charge(cost);
                ops.max_ops_per_packet_instance = ops.max_ops_per_packet_instance.max(cost.total());
            }
        }
        ops.packets += 1;
    }
    finish(&mut ops);

    let nodes = table.iter().map(Instance::to_summary).collect::<Result<Vec<_>>>()?;
    let state = HhhState::from_parts(spec.clone(), epsilon, nodes, stream.len() as u64)?;
    Ok(TcamRun { ops, state })
}

/// Result of [`tcam_single_instance_run`].
#[derive(Debug)]
pub struct TcamSingleRun {
    pub ops: TcamOpCounts,
    /// One summary over `(prefix, node)` keys with `H * ceil(1/epsilon)`
    /// counters; it saw `H` updates per packet.
    pub summary: SpaceSaving<Prefix>,
}

/// Replays a unit-count stream through one shared instance of `H` times the
/// usual capacity, keyed by tagged prefixes.
pub fn tcam_single_instance_run(
    stream: &[(Prefix, u64)],
    spec: &HierarchySpec,
    epsilon: Fraction,
    model: &TcamCostModel,
) -> Result<TcamSingleRun> {
    check_stream(stream, spec)?;
    let labels = spec.labels();
    let capacity = capacity_for(epsilon)?
        .checked_mul(labels.len())
        .ok_or_else(|| Error::InvalidEpsilon(epsilon.to_string()))?;
    let bits = tag_bits(labels.len());
    let mut ops = TcamOpCounts {
        instances: 1,
        tag_bits: bits,
        per_instance: vec![InstanceOps { label: "shared".into(), tag: Some(0), ..Default::default() }],
        ..Default::default()
    };
    let mut inst = Instance::new(capacity);
    let mut stamp = 0u64;
    for (e, _) in stream {
        let mut packet = 0;
        for (i, label) in labels.iter().enumerate() {
            let p = spec.generalize_to(e, label);
            let key = TernaryKey::new(spec, &p, i as u32, bits);
            let (event, refresh) = inst.update(key, &p, stamp);
            stamp += 1;
            let cost = cost_of(model, event, refresh);
            ops.per_instance[0].charge(cost);
            packet += cost.total();
        }
        ops.max_ops_per_packet_instance = ops.max_ops_per_packet_instance.max(packet);
        ops.packets += 1;
    }
    finish(&mut ops);
    Ok(TcamSingleRun { ops, summary: inst.to_summary()? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_io::state_to_bytes;

    fn stream(spec: &HierarchySpec, values: &[u32]) -> Vec<(Prefix, u64)> {
        values.iter().map(|&v| (spec.element(&[v]).unwrap(), 1)).collect()
    }

    #[test]
    fn tag_widths() {
        assert_eq!(tag_bits(1), 0);
        assert_eq!(tag_bits(4), 2);
        assert_eq!(tag_bits(5), 3);
        assert_eq!(tag_bits(25), 5);
        assert_eq!(tag_bits(33 * 33), 11);
    }

    #[test]
    fn key_rendering_and_match() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let p = spec.parse_prefix("10.1.*.*").unwrap();
        let k = TernaryKey::new(&spec, &p, 2, 2);
        assert_eq!(
            k.to_string(),
            "0000101000000001****************.10"
        );
        assert!(k.matches(&[0x0a01_ffee], 2));
        assert!(!k.matches(&[0x0a02_0000], 2));
        assert!(!k.matches(&[0x0a01_0000], 1));
    }

    #[test]
    fn final_state_equals_software() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let eps: Fraction = "0.25".parse().unwrap();
        let s = stream(&spec, &[1, 2, 3, 1, 0x01000005, 7, 9, 1, 2, 0x0a000000, 3, 3]);
        let run = tcam_run(&s, &spec, eps, &TcamCostModel::default()).unwrap();
        let mut sw = HhhState::new(spec.clone(), eps, UpdateMode::Unitary).unwrap();
        for (e, c) in &s {
            sw.insert(e, *c).unwrap();
        }
        assert_eq!(state_to_bytes(&run.state), state_to_bytes(&sw));
        assert_eq!(run.ops.searches, 5 * s.len() as u64);
        assert!(run.ops.max_ops_per_packet_instance <= 4);
    }

    #[test]
    fn root_can_live_outside_the_table() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let s = stream(&spec, &[1, 2, 3]);
        let model = TcamCostModel { include_root: false, ..Default::default() };
        let run = tcam_run(&s, &spec, "0.5".parse().unwrap(), &model).unwrap();
        assert_eq!(run.ops.instances, 4);
        assert_eq!(run.ops.tag_bits, 2);
        assert_eq!(run.ops.searches, 4 * 3);
        let root = run.ops.per_instance.iter().find(|i| i.tag.is_none()).unwrap();
        assert_eq!(root.total(), 0);
    }

    #[test]
    fn single_item_costs() {
        // Two counters per instance: an insert (2 ops) then a hit (3 ops);
        // neither instance fills, so no minimum is kept.
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let s = stream(&spec, &[5, 5]);
        let run = tcam_run(&s, &spec, "0.5".parse().unwrap(), &TcamCostModel::default()).unwrap();
        assert_eq!(run.ops.total_ops(), 5 * (2 + 3));
        // Two counters per node. Packet 1 inserts everywhere (2 each).
        // Packet 2 hits the four upper nodes (3 each) and fills the leaf
        // node (2 + 1 refresh). Packet 3 hits the upper nodes again and
        // replaces the leaf minimum, which moves (3 + 1).
        let s = stream(&spec, &[1, 2, 3]);
        let run = tcam_run(&s, &spec, "0.6".parse().unwrap(), &TcamCostModel::default()).unwrap();
        assert_eq!(run.ops.total_ops(), 5 * 2 + (4 * 3 + 3) + (4 * 3 + 4));
        assert_eq!(run.ops.max_ops_per_packet_instance, 4);
    }

    #[test]
    fn rejects_weighted_streams() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let s = vec![(spec.element(&[1]).unwrap(), 2)];
        let eps = "0.1".parse().unwrap();
        assert!(tcam_run(&s, &spec, eps, &TcamCostModel::default()).is_err());
        assert!(tcam_single_instance_run(&s, &spec, eps, &TcamCostModel::default()).is_err());
    }

    #[test]
    fn cost_model_json_defaults() {
        let m = TcamCostModel::from_json(r#"{"include_root": false, "hit": {"searches": 1, "writes": 1}}"#).unwrap();
        assert!(!m.include_root);
        assert_eq!(m.hit, OpCost::new(1, 0, 1));
        assert_eq!(m.replace, TcamCostModel::default().replace);
    }

    #[test]
    fn single_instance_counts_searches() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let s = stream(&spec, &[1, 2, 3, 4, 1, 1]);
        let run = tcam_single_instance_run(&s, &spec, "0.5".parse().unwrap(), &TcamCostModel::default()).unwrap();
        assert_eq!(run.ops.searches, 5 * 6);
        assert_eq!(run.summary.capacity(), 10);
        assert_eq!(run.summary.total(), 30);
    }
}
