//! Space Saving frequency summaries.
//!
//! A summary holds at most `m` counters `(item, count, error)`. A tracked
//! item's true frequency lies in `[count - error, count]`; an untracked item's
//! lies in `[0, min counter]` once the summary is full.
//!
//! Two stores back the same interface: an indexed min-heap for arbitrary
//! positive increments and a Stream Summary bucket list for unit increments.
//! Both evict the least recently updated of the minimum counters, so they
//! evolve identically on all-ones streams.

mod codec;
mod heap;
mod stream_summary;

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

pub use codec::ItemCodec;

use crate::error::{Error, Result};
use heap::HeapStore;
use stream_summary::BucketStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// Arbitrary positive increments, `O(log m)` per update.
    Weighted,
    /// Increments of exactly one, `O(1)` per update.
    Unitary,
}

impl std::str::FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted" => Ok(UpdateMode::Weighted),
            "unitary" => Ok(UpdateMode::Unitary),
            _ => Err(Error::Parse {
                what: "update mode",
                input: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Counter<K> {
    pub item: K,
    pub count: u64,
    pub error: u64,
}

/// Lower and upper bounds on a frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Estimate {
    pub lower: u64,
    pub upper: u64,
}

impl Estimate {
    pub fn width(&self) -> u64 {
        self.upper - self.lower
    }

    pub fn contains(&self, f: u64) -> bool {
        self.lower <= f && f <= self.upper
    }
}

#[derive(Clone, Debug)]
enum Store<K> {
    Heap(HeapStore<K>),
    Buckets(BucketStore<K>),
}

#[derive(Clone, Debug)]
pub struct SpaceSaving<K> {
    capacity: usize,
    total: u64,
    // Upper bound on the frequency of any never-tracked item. Zero for a
    // summary built by updates alone; merges can raise it.
    residual: u64,
    store: Store<K>,
}

impl<K: Hash + Eq + Clone + Ord> SpaceSaving<K> {
    pub fn new(capacity: usize, mode: UpdateMode) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity);
        }
        let store = match mode {
            UpdateMode::Weighted => Store::Heap(HeapStore::with_capacity(capacity)),
            UpdateMode::Unitary => Store::Buckets(BucketStore::with_capacity(capacity)),
        };
        Ok(SpaceSaving {
            capacity,
            total: 0,
            residual: 0,
            store,
        })
    }

    pub fn weighted(capacity: usize) -> Result<Self> {
        Self::new(capacity, UpdateMode::Weighted)
    }

    pub fn unitary(capacity: usize) -> Result<Self> {
        Self::new(capacity, UpdateMode::Unitary)
    }

    pub fn mode(&self) -> UpdateMode {
        match self.store {
            Store::Heap(_) => UpdateMode::Weighted,
            Store::Buckets(_) => UpdateMode::Unitary,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Sum of all increments ingested.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn residual(&self) -> u64 {
        self.residual
    }

    pub fn len(&self) -> usize {
        match &self.store {
            Store::Heap(h) => h.len(),
            Store::Buckets(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.capacity
    }

    /// Counter slots reserved by the backing store; fixed at construction.
    pub fn reserved_slots(&self) -> usize {
        match &self.store {
            Store::Heap(h) => h.reserved(),
            Store::Buckets(b) => b.reserved(),
        }
    }

    pub fn min_count(&self) -> Option<u64> {
        match &self.store {
            Store::Heap(h) => h.min_count(),
            Store::Buckets(b) => b.min_count(),
        }
    }

    /// Upper bound reported for an item that is not tracked.
    pub fn untracked_upper(&self) -> u64 {
        if self.is_full() {
            self.min_count().unwrap_or(0)
        } else {
            self.residual
        }
    }

    fn lookup(&self, item: &K) -> Option<(u64, u64)> {
        match &self.store {
            Store::Heap(h) => h.get(item),
            Store::Buckets(b) => b.get(item),
        }
    }

    pub fn contains(&self, item: &K) -> bool {
        self.lookup(item).is_some()
    }

    /// Adds `c` occurrences of `item`. Unitary summaries accept only `c == 1`.
    pub fn update(&mut self, item: K, c: u64) -> Result<()> {
        if c == 0 {
            return Err(Error::ZeroIncrement);
        }
        if c != 1 && self.mode() == UpdateMode::Unitary {
            return Err(Error::UnitaryIncrement(c));
        }
        self.apply(item, c);
        Ok(())
    }

    /// One occurrence of `item`; requires a unitary-mode summary.
    pub fn update_unitary(&mut self, item: K) -> Result<()> {
        if self.mode() != UpdateMode::Unitary {
            return Err(Error::ModeMismatch {
                expected: UpdateMode::Unitary,
                found: self.mode(),
            });
        }
        self.apply(item, 1);
        Ok(())
    }

    fn apply(&mut self, item: K, c: u64) {
        self.total += c;
        let full = self.is_full();
        let residual = self.residual;
        match &mut self.store {
            Store::Heap(h) => {
                if !h.add(&item, c) {
                    if full {
                        h.replace_min(item, c);
                    } else {
                        h.push(item, residual + c, residual);
                    }
                }
            }
            Store::Buckets(b) => {
                if !b.add(&item, c) {
                    if full {
                        b.replace_min(item, c);
                    } else {
                        b.push(item, residual + c, residual);
                    }
                }
            }
        }
    }

    /// `(f_min, f_max)` for any item, tracked or not.
    pub fn estimate(&self, item: &K) -> Estimate {
        match self.lookup(item) {
            Some((count, error)) => Estimate {
                lower: count - error,
                upper: count,
            },
            None => Estimate {
                lower: 0,
                upper: self.untracked_upper(),
            },
        }
    }

    /// Counters in eviction order: ascending count, least recently updated
    /// first among equal counts.
    pub fn counters(&self) -> Vec<Counter<K>> {
        match &self.store {
            Store::Heap(h) => h
                .ordered()
                .into_iter()
                .map(|s| Counter {
                    item: s.item.clone(),
                    count: s.count,
                    error: s.error,
                })
                .collect(),
            Store::Buckets(b) => b
                .ordered()
                .into_iter()
                .map(|(item, count, error)| Counter {
                    item: item.clone(),
                    count,
                    error,
                })
                .collect(),
        }
    }

    /// Tracked items in no particular order.
    pub fn items(&self) -> Vec<&K> {
        match &self.store {
            Store::Heap(h) => h.iter().map(|s| &s.item).collect(),
            Store::Buckets(b) => b.iter().map(|t| t.0).collect(),
        }
    }

    /// Sum of all counter values.
    pub fn counter_sum(&self) -> u64 {
        match &self.store {
            Store::Heap(h) => h.iter().map(|s| s.count).sum(),
            Store::Buckets(b) => b.iter().map(|t| t.1).sum(),
        }
    }

    /// Rebuilds a summary from counters given in eviction order.
    pub fn from_parts(
        mode: UpdateMode,
        capacity: usize,
        total: u64,
        residual: u64,
        mut counters: Vec<Counter<K>>,
    ) -> Result<Self> {
        let mut s = Self::new(capacity, mode)?;
        if counters.len() > capacity {
            return Err(Error::Codec(format!(
                "{} counters exceed capacity {capacity}",
                counters.len()
            )));
        }
        counters.sort_by_key(|c| c.count);
        for c in counters {
            if c.error > c.count {
                return Err(Error::Codec("counter error exceeds count".into()));
            }
            if s.contains(&c.item) {
                return Err(Error::Codec("duplicate item".into()));
            }
            match &mut s.store {
                Store::Heap(h) => h.push(c.item, c.count, c.error),
                Store::Buckets(b) => b.push(c.item, c.count, c.error),
            }
        }
        s.total = total;
        s.residual = residual;
        Ok(s)
    }

    /// Combines summaries of several streams into one summary of their
    /// concatenation with at most `capacity` counters.
    ///
    /// Per item, the lower bound is the sum of the inputs' lower bounds and
    /// the upper bound the sum of the inputs' upper bounds (the minimum
    /// counter standing in where an input does not track the item). The
    /// `capacity` items with the largest upper bounds are kept, so every
    /// dropped item is bounded by the merged minimum counter.
    pub fn merge(inputs: &[&SpaceSaving<K>], capacity: usize) -> Result<Self> {
        let first = inputs.first().ok_or(Error::EmptyMerge)?;
        let mode = first.mode();
        if let Some(other) = inputs.iter().find(|s| s.mode() != mode) {
            return Err(Error::ModeMismatch {
                expected: mode,
                found: other.mode(),
            });
        }
        if capacity == 0 {
            return Err(Error::InvalidCapacity);
        }
        let base: u64 = inputs.iter().map(|s| s.untracked_upper()).sum();
        let mut bounds: HashMap<K, (u64, u64)> = HashMap::new();
        for s in inputs {
            let floor = s.untracked_upper();
            for c in s.counters() {
                let e = bounds.entry(c.item).or_insert((0, base));
                e.0 += c.count - c.error;
                e.1 += c.count - floor;
            }
        }
        let mut merged: Vec<(K, u64, u64)> =
            bounds.into_iter().map(|(k, (lo, hi))| (k, lo, hi)).collect();
        merged.sort_by(|a, b| b.2.cmp(&a.2).then(b.1.cmp(&a.1)).then(a.0.cmp(&b.0)));
        merged.truncate(capacity);
        merged.sort_by(|a, b| a.2.cmp(&b.2).then(a.0.cmp(&b.0)));
        let counters = merged
            .into_iter()
            .map(|(item, lower, upper)| Counter {
                item,
                count: upper,
                error: upper - lower,
            })
            .collect();
        let total = inputs.iter().map(|s| s.total).sum();
        Self::from_parts(mode, capacity, total, base, counters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(s: &mut SpaceSaving<char>, items: &str) {
        for ch in items.chars() {
            s.update(ch, 1).unwrap();
        }
    }

    fn state(s: &SpaceSaving<char>) -> Vec<(char, u64, u64)> {
        let mut v: Vec<_> = s.counters().into_iter().map(|c| (c.item, c.count, c.error)).collect();
        v.sort();
        v
    }

    #[test]
    fn construction() {
        let s = SpaceSaving::<char>::weighted(3).unwrap();
        assert_eq!((s.len(), s.capacity(), s.total()), (0, 3, 0));
        assert!(SpaceSaving::<char>::weighted(0).is_err());
        assert!(SpaceSaving::<char>::unitary(0).is_err());
    }

    #[test]
    fn eviction_replaces_oldest_minimum() {
        for mode in [UpdateMode::Weighted, UpdateMode::Unitary] {
            let mut s = SpaceSaving::new(3, mode).unwrap();
            feed(&mut s, "abcd");
            assert_eq!(state(&s), [('b', 1, 0), ('c', 1, 0), ('d', 2, 1)]);
            assert_eq!(s.estimate(&'d'), Estimate { lower: 1, upper: 2 });
        }
    }

    #[test]
    fn weighted_insert_without_eviction() {
        let mut s = SpaceSaving::weighted(3).unwrap();
        s.update('a', 5).unwrap();
        assert_eq!(state(&s), [('a', 5, 0)]);
        assert_eq!(s.estimate(&'a'), Estimate { lower: 5, upper: 5 });
    }

    #[test]
    fn single_counter_tracks_last_item() {
        // a -> (a,1,0); b evicts a -> (b,2,1); a evicts b -> (a,3,2).
        let mut s = SpaceSaving::weighted(1).unwrap();
        feed(&mut s, "aba");
        assert_eq!(state(&s), [('a', 3, 2)]);
        let est = s.estimate(&'a');
        assert_eq!(est, Estimate { lower: 1, upper: 3 });
        assert!(est.contains(2));
        assert!(est.width() <= s.total());
    }

    #[test]
    fn unitary_two_counters() {
        let mut s = SpaceSaving::unitary(2).unwrap();
        for ch in "aabc".chars() {
            s.update_unitary(ch).unwrap();
        }
        assert_eq!(state(&s), [('a', 2, 0), ('c', 2, 1)]);
    }

    #[test]
    fn untracked_estimates() {
        let mut s = SpaceSaving::weighted(3).unwrap();
        s.update('a', 7).unwrap();
        assert_eq!(s.estimate(&'z'), Estimate { lower: 0, upper: 0 });
        s.update('b', 4).unwrap();
        s.update('c', 5).unwrap();
        assert_eq!(s.estimate(&'z'), Estimate { lower: 0, upper: 4 });
    }

    #[test]
    fn mode_errors() {
        let mut w = SpaceSaving::weighted(2).unwrap();
        assert!(matches!(w.update_unitary('a'), Err(Error::ModeMismatch { .. })));
        assert!(matches!(w.update('a', 0), Err(Error::ZeroIncrement)));
        let mut u = SpaceSaving::unitary(2).unwrap();
        assert!(matches!(u.update('a', 2), Err(Error::UnitaryIncrement(2))));
        u.update('a', 1).unwrap();
        assert_eq!(u.total(), 1);
    }

    #[test]
    fn identity_merge_keeps_estimates() {
        let mut s = SpaceSaving::weighted(3).unwrap();
        feed(&mut s, "abcdaabbe");
        let m = SpaceSaving::merge(&[&s], 3).unwrap();
        for ch in "abcdez".chars() {
            assert_eq!(m.estimate(&ch), s.estimate(&ch), "{ch}");
        }
        assert_eq!(m.total(), s.total());
    }

    #[test]
    fn disjoint_merge_is_exact() {
        let mut a = SpaceSaving::weighted(4).unwrap();
        let mut b = SpaceSaving::weighted(4).unwrap();
        feed(&mut a, "aab");
        feed(&mut b, "xyyy");
        let m = SpaceSaving::merge(&[&a, &b], 8).unwrap();
        assert_eq!(
            state(&m),
            [('a', 2, 0), ('b', 1, 0), ('x', 1, 0), ('y', 3, 0)]
        );
        assert_eq!(m.estimate(&'q'), Estimate { lower: 0, upper: 0 });
    }

    #[test]
    fn merge_rejects_bad_inputs() {
        assert!(matches!(
            SpaceSaving::<char>::merge(&[], 3),
            Err(Error::EmptyMerge)
        ));
        let a = SpaceSaving::<char>::weighted(2).unwrap();
        let b = SpaceSaving::<char>::unitary(2).unwrap();
        assert!(SpaceSaving::merge(&[&a, &b], 2).is_err());
        assert!(SpaceSaving::merge(&[&a], 0).is_err());
    }

    #[test]
    fn merge_residual_bounds_unseen_items() {
        // Both inputs are full, so an item neither tracks may still have
        // occurred in each; a larger output capacity must not report it as 0.
        let mut a = SpaceSaving::weighted(1).unwrap();
        let mut b = SpaceSaving::weighted(1).unwrap();
        feed(&mut a, "qa");
        feed(&mut b, "qb");
        let m = SpaceSaving::merge(&[&a, &b], 4).unwrap();
        assert!(!m.is_full());
        assert!(m.estimate(&'q').contains(2));
        assert_eq!(m.residual(), 4);
    }
}
