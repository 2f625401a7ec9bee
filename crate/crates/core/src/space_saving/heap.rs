//! Weighted-update store: an indexed binary min-heap ordered by
//! `(count, stamp)`, where `stamp` is the time of the counter's last update.

use std::collections::HashMap;
use std::hash::Hash;

#[derive(Clone, Debug)]
pub(crate) struct Slot<K> {
    pub item: K,
    pub count: u64,
    pub error: u64,
    stamp: u64,
}

#[derive(Clone, Debug)]
pub(crate) struct HeapStore<K> {
    slots: Vec<Slot<K>>,
    index: HashMap<K, usize>,
    heap: Vec<usize>,
    // slot -> position in `heap`
    pos: Vec<usize>,
    clock: u64,
}

impl<K: Hash + Eq + Clone> HeapStore<K> {
    pub fn with_capacity(m: usize) -> Self {
        HeapStore {
            slots: Vec::with_capacity(m),
            index: HashMap::with_capacity(m),
            heap: Vec::with_capacity(m),
            pos: Vec::with_capacity(m),
            clock: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn reserved(&self) -> usize {
        self.slots.capacity()
    }

    pub fn get(&self, item: &K) -> Option<(u64, u64)> {
        self.index.get(item).map(|&s| {
            let slot = &self.slots[s];
            (slot.count, slot.error)
        })
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Adds `c` to a tracked item; false when the item is not tracked.
    pub fn add(&mut self, item: &K, c: u64) -> bool {
        let Some(&s) = self.index.get(item) else {
            return false;
        };
        let stamp = self.tick();
        let slot = &mut self.slots[s];
        slot.count += c;
        slot.stamp = stamp;
        self.sift_down(self.pos[s]);
        true
    }

    pub fn push(&mut self, item: K, count: u64, error: u64) {
        let stamp = self.tick();
        let s = self.slots.len();
        self.index.insert(item.clone(), s);
        self.slots.push(Slot {
            item,
            count,
            error,
            stamp,
        });
        self.heap.push(s);
        self.pos.push(self.heap.len() - 1);
        self.sift_up(self.heap.len() - 1);
    }

    pub fn min_count(&self) -> Option<u64> {
        self.heap.first().map(|&s| self.slots[s].count)
    }

    /// Replaces the minimum counter `(old, v)` with `(item, v + c, v)`.
    pub fn replace_min(&mut self, item: K, c: u64) -> K {
        let s = self.heap[0];
        let stamp = self.tick();
        let v = self.slots[s].count;
        self.index.insert(item.clone(), s);
        let old = std::mem::replace(
            &mut self.slots[s],
            Slot {
                item,
                count: v + c,
                error: v,
                stamp,
            },
        );
        self.index.remove(&old.item);
        self.sift_down(0);
        old.item
    }

    /// Slots in eviction order.
    pub fn ordered(&self) -> Vec<&Slot<K>> {
        let mut v: Vec<&Slot<K>> = self.slots.iter().collect();
        v.sort_by_key(|s| (s.count, s.stamp));
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = &Slot<K>> {
        self.slots.iter()
    }

    fn key(&self, heap_pos: usize) -> (u64, u64) {
        let s = &self.slots[self.heap[heap_pos]];
        (s.count, s.stamp)
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a]] = a;
        self.pos[self.heap[b]] = b;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.key(i) >= self.key(parent) {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut smallest = i;
            if l < n && self.key(l) < self.key(smallest) {
                smallest = l;
            }
            if r < n && self.key(r) < self.key(smallest) {
                smallest = r;
            }
            if smallest == i {
                break;
            }
            self.swap(i, smallest);
            i = smallest;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_follows_count_then_age() {
        let mut h = HeapStore::with_capacity(4);
        h.push('a', 3, 0);
        h.push('b', 1, 0);
        h.push('c', 1, 0);
        assert_eq!(h.min_count(), Some(1));
        assert_eq!(h.replace_min('d', 5), 'b');
        assert_eq!(h.replace_min('e', 1), 'c');
        assert_eq!(h.get(&'e'), Some((2, 1)));
        assert!(h.add(&'a', 10));
        let order: Vec<char> = h.ordered().iter().map(|s| s.item).collect();
        assert_eq!(order, ['e', 'd', 'a']);
    }
}
