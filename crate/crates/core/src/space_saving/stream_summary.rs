//! Stream Summary: counters grouped into buckets of equal count, buckets in
//! a doubly linked list sorted by count. A unit increment moves a counter to
//! the adjacent bucket, so unitary updates take constant time.
//!
//! Within a bucket counters are kept in arrival order. A counter arrives in
//! a bucket through its most recent update, so the head of the minimum
//! bucket is the least recently updated minimum counter.

use std::collections::HashMap;
use std::hash::Hash;

const NIL: usize = usize::MAX;

#[derive(Clone, Debug)]
pub(crate) struct Node<K> {
    pub item: K,
    pub error: u64,
    bucket: usize,
    prev: usize,
    next: usize,
}

#[derive(Clone, Debug)]
struct Bucket {
    count: u64,
    prev: usize,
    next: usize,
    head: usize,
    tail: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct BucketStore<K> {
    nodes: Vec<Node<K>>,
    buckets: Vec<Bucket>,
    free: Vec<usize>,
    index: HashMap<K, usize>,
    first: usize,
}

impl<K: Hash + Eq + Clone> BucketStore<K> {
    pub fn with_capacity(m: usize) -> Self {
        BucketStore {
            nodes: Vec::with_capacity(m),
            buckets: Vec::with_capacity(m),
            free: Vec::new(),
            index: HashMap::with_capacity(m),
            first: NIL,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn reserved(&self) -> usize {
        self.nodes.capacity()
    }

    pub fn get(&self, item: &K) -> Option<(u64, u64)> {
        self.index.get(item).map(|&n| {
            let node = &self.nodes[n];
            (self.buckets[node.bucket].count, node.error)
        })
    }

    pub fn add(&mut self, item: &K, c: u64) -> bool {
        let Some(&n) = self.index.get(item) else {
            return false;
        };
        self.bump(n, c);
        true
    }

    pub fn push(&mut self, item: K, count: u64, error: u64) {
        let n = self.nodes.len();
        self.index.insert(item.clone(), n);
        self.nodes.push(Node {
            item,
            error,
            bucket: NIL,
            prev: NIL,
            next: NIL,
        });
        let (mut prev, mut cur) = (NIL, self.first);
        while cur != NIL && self.buckets[cur].count < count {
            prev = cur;
            cur = self.buckets[cur].next;
        }
        let dest = if cur != NIL && self.buckets[cur].count == count {
            cur
        } else {
            self.new_bucket(count, prev, cur)
        };
        self.append(dest, n);
    }

    pub fn min_count(&self) -> Option<u64> {
        (self.first != NIL).then(|| self.buckets[self.first].count)
    }

    /// Replaces the oldest minimum counter `(old, v)` with `(item, v + c, v)`.
    pub fn replace_min(&mut self, item: K, c: u64) -> K {
        let n = self.buckets[self.first].head;
        let v = self.buckets[self.first].count;
        self.index.insert(item.clone(), n);
        let old = std::mem::replace(&mut self.nodes[n].item, item);
        self.index.remove(&old);
        self.nodes[n].error = v;
        self.bump(n, c);
        old
    }

    /// `(item, count, error)` in eviction order.
    pub fn ordered(&self) -> Vec<(&K, u64, u64)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut b = self.first;
        while b != NIL {
            let bucket = &self.buckets[b];
            let mut n = bucket.head;
            while n != NIL {
                let node = &self.nodes[n];
                out.push((&node.item, bucket.count, node.error));
                n = node.next;
            }
            b = bucket.next;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, u64, u64)> {
        self.nodes
            .iter()
            .map(|n| (&n.item, self.buckets[n.bucket].count, n.error))
    }

    fn bump(&mut self, n: usize, c: u64) {
        let from = self.nodes[n].bucket;
        let target = self.buckets[from].count + c;
        let mut cur = from;
        loop {
            let next = self.buckets[cur].next;
            if next == NIL || self.buckets[next].count > target {
                break;
            }
            cur = next;
        }
        let dest = if self.buckets[cur].count == target {
            cur
        } else {
            let next = self.buckets[cur].next;
            self.new_bucket(target, cur, next)
        };
        self.detach(n);
        self.append(dest, n);
    }

    fn new_bucket(&mut self, count: u64, prev: usize, next: usize) -> usize {
        let bucket = Bucket {
            count,
            prev,
            next,
            head: NIL,
            tail: NIL,
        };
        let b = match self.free.pop() {
            Some(b) => {
                self.buckets[b] = bucket;
                b
            }
            None => {
                self.buckets.push(bucket);
                self.buckets.len() - 1
            }
        };
        if prev == NIL {
            self.first = b;
        } else {
            self.buckets[prev].next = b;
        }
        if next != NIL {
            self.buckets[next].prev = b;
        }
        b
    }

    fn append(&mut self, b: usize, n: usize) {
        let tail = self.buckets[b].tail;
        {
            let node = &mut self.nodes[n];
            node.bucket = b;
            node.prev = tail;
            node.next = NIL;
        }
        if tail == NIL {
            self.buckets[b].head = n;
        } else {
            self.nodes[tail].next = n;
        }
        self.buckets[b].tail = n;
    }

    /// Unlinks a node from its bucket, freeing the bucket if it empties.
    fn detach(&mut self, n: usize) {
        let Node {
            bucket: b,
            prev,
            next,
            ..
        } = self.nodes[n];
        if prev == NIL {
            self.buckets[b].head = next;
        } else {
            self.nodes[prev].next = next;
        }
        if next == NIL {
            self.buckets[b].tail = prev;
        } else {
            self.nodes[next].prev = prev;
        }
        if self.buckets[b].head == NIL {
            let Bucket { prev, next, .. } = self.buckets[b];
            if prev == NIL {
                self.first = next;
            } else {
                self.buckets[prev].next = next;
            }
            if next != NIL {
                self.buckets[next].prev = prev;
            }
            self.free.push(b);
        }
    }
}
