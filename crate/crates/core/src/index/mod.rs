//! The updatable learned index.
//!
//! Every key sits exactly at the position its node's model predicts, so a
//! lookup walks one entry per level and compares keys once at the end.
//! Inserts that land on an occupied entry push both keys into a new
//! two-key child; subtrees whose size has grown by `beta` and whose
//! conflict ratio reached `alpha` are rebuilt with fresh models.

mod buffer;
mod build;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelFn;
use crate::key::Key;
use crate::node::{EntryTag, Node, NodeId, NodeStats, NodeStore, NodeView, PoolStats};

use buffer::{cmp_keys, SortedBuf};
pub use build::build_partial_tree;

/// Traversal paths longer than this indicate a broken tree.
pub const MAX_DEPTH: usize = 128;

/// Tuning parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Conflict ratio that, together with `beta`, triggers a rebuild.
    pub alpha: f64,
    /// Growth factor of a subtree since its last build.
    pub beta: f64,
    /// Entries allocated per key when a node is built.
    pub delta: f64,
    /// Largest entry count of a single node.
    pub max_len: usize,
    /// Smaller subtrees are never rebuilt; also the bootstrap size.
    pub min_adjust_elements: usize,
    /// Minimum capacity of each overflow buffer.
    pub overflow_capacity: usize,
    pub kernel: KernelFn,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            alpha: 0.1,
            beta: 2.0,
            delta: 2.0,
            max_len: 1 << 20,
            min_adjust_elements: 64,
            overflow_capacity: 256,
            kernel: KernelFn::Linear,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(what.to_string()));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if !(self.beta.is_finite() && self.beta >= 1.0) {
            return bad("beta must be at least 1");
        }
        if !(self.delta.is_finite() && self.delta >= 1.0) {
            return bad("delta must be at least 1");
        }
        if self.max_len < 4 || self.max_len > u32::MAX as usize {
            return bad("max_len must be in [4, 2^32)");
        }
        if self.min_adjust_elements == 0 {
            return bad("min_adjust_elements must be positive");
        }
        if self.overflow_capacity == 0 {
            return bad("overflow_capacity must be positive");
        }
        Ok(())
    }
}

/// Rebuild rule for one node after an insert has updated its counters.
pub fn should_adjust(stats: &NodeStats, fixed: bool, params: &Params) -> bool {
    if fixed || stats.element_num < params.min_adjust_elements as u64 || stats.element_num <= stats.build_num {
        return false;
    }
    let grown = stats.element_num as f64 >= params.beta * stats.build_num as f64;
    let ratio = stats.conflict_num as f64 / (stats.element_num - stats.build_num) as f64;
    grown && ratio >= params.alpha
}

/// Where a lookup ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// No tree and an empty bootstrap buffer.
    Empty,
    /// Terminal entry reached in the tree.
    Tree { node: NodeId, pos: usize },
    LeftBuffer,
    RightBuffer,
    Bootstrap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LookupResult {
    pub found: bool,
    pub payload: Option<u64>,
    pub location: Location,
    /// Nodes visited; zero for buffer lookups.
    pub depth: usize,
}

/// Operation counters. Lookups update them through `&self` with relaxed
/// loads and stores, so under concurrent readers they are approximate.
#[derive(Debug, Default)]
struct Counters {
    lookups: AtomicU64,
    node_visits: AtomicU64,
    key_comparisons: AtomicU64,
    inserts: AtomicU64,
    conflicts: AtomicU64,
    adjustments: AtomicU64,
    overflow_rebuilds: AtomicU64,
    adjust_nanos: AtomicU64,
}

#[inline]
fn bump(c: &AtomicU64, n: u64) {
    c.store(c.load(Ordering::Relaxed).wrapping_add(n), Ordering::Relaxed);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub lookups: u64,
    pub node_visits: u64,
    pub key_comparisons: u64,
    pub inserts: u64,
    pub conflicts: u64,
    /// Subtree rebuilds, including the ones triggered by a full overflow
    /// buffer.
    pub adjustments: u64,
    pub overflow_rebuilds: u64,
    pub adjust_nanos: u64,
}

/// Structural statistics, computed by a full traversal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub elements: usize,
    /// Elements held in the overflow or bootstrap buffers.
    pub buffered: usize,
    pub nodes: usize,
    /// Depth averaged over the keys stored in the tree (root = 1).
    pub avg_depth: f64,
    pub max_depth: usize,
    pub index_bytes: usize,
    pub adjustments: u64,
    pub adjust_time_secs: f64,
    pub pooled_nodes: usize,
    pub pool_hits: u64,
}

/// Result of [`LippIndex::audit`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Audit {
    pub data_entries: usize,
    /// DATA entries whose key some model on their path would send elsewhere.
    pub misplaced: usize,
    /// Adjacent keys out of order in the in-order traversal.
    pub order_violations: usize,
    /// Visible elements differ from the element count.
    pub count_mismatch: bool,
    /// Paths deeper than [`MAX_DEPTH`].
    pub too_deep: usize,
}

impl Audit {
    pub fn is_clean(&self) -> bool {
        self.misplaced == 0 && self.order_violations == 0 && !self.count_mismatch && self.too_deep == 0
    }
}

/// Learned index mapping unique keys to 64-bit payloads.
pub struct LippIndex<K: Key> {
    store: NodeStore<K>,
    root: Option<NodeId>,
    params: Params,
    left: SortedBuf<K>,
    right: SortedBuf<K>,
    bootstrap: SortedBuf<K>,
    /// Smallest and largest key the tree was last built over.
    bounds: Option<(K, K)>,
    len: usize,
    counters: Counters,
    path: Vec<(NodeId, usize)>,
}

impl<K: Key> Default for LippIndex<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Key> LippIndex<K> {
    pub fn new() -> Self {
        Self::with_params(Params::default()).expect("default parameters are valid")
    }

    pub fn with_params(params: Params) -> Result<Self> {
        params.validate()?;
        let pair_len = build::node_len(2, &params).0;
        Ok(LippIndex {
            store: NodeStore::new(pair_len),
            root: None,
            params,
            left: SortedBuf::descending(),
            right: SortedBuf::ascending(),
            bootstrap: SortedBuf::ascending(),
            bounds: None,
            len: 0,
            counters: Counters::default(),
            path: Vec::with_capacity(MAX_DEPTH),
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node<K> {
        self.store.get(id)
    }

    pub fn pool_stats(&self) -> PoolStats {
        self.store.stats()
    }

    /// Smallest and largest key covered by the tree.
    pub fn tree_bounds(&self) -> Option<(K, K)> {
        self.bounds
    }

    pub fn counters(&self) -> CounterSnapshot {
        let c = &self.counters;
        let get = |a: &AtomicU64| a.load(Ordering::Relaxed);
        CounterSnapshot {
            lookups: get(&c.lookups),
            node_visits: get(&c.node_visits),
            key_comparisons: get(&c.key_comparisons),
            inserts: get(&c.inserts),
            conflicts: get(&c.conflicts),
            adjustments: get(&c.adjustments),
            overflow_rebuilds: get(&c.overflow_rebuilds),
            adjust_nanos: get(&c.adjust_nanos),
        }
    }

    pub fn reset_counters(&mut self) {
        self.counters = Counters::default();
    }

    #[inline]
    fn in_tree_range(&self, key: K) -> Option<NodeId> {
        match (self.root, self.bounds) {
            (Some(root), Some((lo, hi))) if key >= lo && key <= hi => Some(root),
            _ => None,
        }
    }

    /// Walks from `root` to the terminal entry for `key`.
    #[inline]
    fn descend(&self, root: NodeId, key: K) -> (NodeId, NodeView<'_, K>, usize, usize) {
        let kernel = &self.params.kernel;
        let mut id = root;
        let mut node = self.store.get(root).view();
        let mut depth = 1;
        loop {
            let pos = node.model().predict(kernel, key, node.len());
            if node.tag(pos) != EntryTag::Node {
                return (id, node, pos, depth);
            }
            (id, node) = node.child(pos);
            depth += 1;
        }
    }

    pub fn lookup(&self, key: K) -> LookupResult {
        bump(&self.counters.lookups, 1);
        if self.params.kernel.check(key).is_err() {
            return LookupResult { found: false, payload: None, location: Location::Empty, depth: 0 };
        }
        if let Some(root) = self.in_tree_range(key) {
            let (id, node, pos, depth) = self.descend(root, key);
            bump(&self.counters.node_visits, depth as u64);
            let payload = if node.tag(pos) == EntryTag::Data {
                bump(&self.counters.key_comparisons, 1);
                let slot = node.slot(pos);
                (slot.key == key).then_some(slot.value)
            } else {
                None
            };
            return LookupResult { found: payload.is_some(), payload, location: Location::Tree { node: id, pos }, depth };
        }
        let (payload, location) = match self.bounds {
            None if self.bootstrap.is_empty() => (None, Location::Empty),
            None => (self.bootstrap.get(key), Location::Bootstrap),
            Some((lo, _)) if key < lo => (self.left.get(key), Location::LeftBuffer),
            Some(_) => (self.right.get(key), Location::RightBuffer),
        };
        LookupResult { found: payload.is_some(), payload, location, depth: 0 }
    }

    /// Payload stored under `key`.
    #[inline]
    pub fn get(&self, key: K) -> Option<u64> {
        self.lookup(key).payload
    }

    pub fn contains(&self, key: K) -> bool {
        self.get(key).is_some()
    }

    pub fn insert(&mut self, key: K, payload: u64) -> Result<()> {
        self.params.kernel.check(key)?;
        let Some((lo, hi)) = self.bounds else {
            if !self.bootstrap.insert(key, payload) {
                return Err(Error::AlreadyExists);
            }
            self.len += 1;
            bump(&self.counters.inserts, 1);
            if self.bootstrap.len() >= self.params.min_adjust_elements {
                let items = self.bootstrap.drain_ascending();
                self.install_root(&items);
            }
            return Ok(());
        };
        if key < lo || key > hi {
            let buf = if key < lo { &mut self.left } else { &mut self.right };
            if !buf.insert(key, payload) {
                return Err(Error::AlreadyExists);
            }
            let full = buf.len() >= self.overflow_limit();
            self.len += 1;
            bump(&self.counters.inserts, 1);
            if full {
                self.rebuild_with_buffers();
            }
            return Ok(());
        }
        self.tree_insert(key, payload)
    }

    /// Overflow buffers are flushed into the tree when one of them reaches
    /// this size. It grows with the index so append-only workloads rebuild
    /// a geometrically growing tree instead of a fixed-size slice.
    fn overflow_limit(&self) -> usize {
        self.params.overflow_capacity.max(self.len / 4)
    }

    fn tree_insert(&mut self, key: K, payload: u64) -> Result<()> {
        let root = self.root.expect("bounds imply a root");
        let kernel = &self.params.kernel;
        let mut path = std::mem::take(&mut self.path);
        path.clear();
        let mut id = root;
        let conflicted = loop {
            let node = self.store.get(id);
            let pos = node.model().predict(kernel, key, node.len());
            path.push((id, pos));
            match node.tag(pos) {
                EntryTag::Node => id = node.child(pos),
                EntryTag::Null => {
                    self.store.get_mut(id).set_data(pos, key, payload);
                    break false;
                }
                EntryTag::Data => {
                    let slot = node.slot(pos);
                    if slot.key == key {
                        self.path = path;
                        return Err(Error::AlreadyExists);
                    }
                    let child = self.store.acquire_two_key_node(kernel, (slot.key, slot.value), (key, payload))?;
                    self.store.set_child(id, pos, child);
                    break true;
                }
            }
        };
        debug_assert!(path.len() <= MAX_DEPTH, "path of {} nodes", path.len());
        self.len += 1;
        bump(&self.counters.inserts, 1);
        if conflicted {
            bump(&self.counters.conflicts, 1);
        }
        self.adjust_after_insert(&path, conflicted);
        self.path = path;
        Ok(())
    }

    /// Updates the counters of every node on `path`, then rebuilds the
    /// deepest node that qualifies, if any.
    fn adjust_after_insert(&mut self, path: &[(NodeId, usize)], conflicted: bool) {
        for &(id, _) in path {
            self.store.get_mut(id).record_insert(conflicted);
        }
        for depth in (0..path.len()).rev() {
            let node = self.store.get(path[depth].0);
            if should_adjust(&node.stats(), node.is_fixed(), &self.params) {
                self.rebuild_at(path, depth);
                return;
            }
        }
    }

    fn rebuild_at(&mut self, path: &[(NodeId, usize)], depth: usize) {
        let started = Instant::now();
        let id = path[depth].0;
        let mut items = Vec::with_capacity(self.store.get(id).stats().element_num as usize);
        self.collect_subtree(id, &mut items);
        self.store.release_subtree(id);
        let fresh = build::build(&mut self.store, &self.params, &items);
        if depth == 0 {
            self.root = Some(fresh);
        } else {
            let (parent, pos) = path[depth - 1];
            self.store.set_child(parent, pos, fresh);
        }
        bump(&self.counters.adjustments, 1);
        bump(&self.counters.adjust_nanos, started.elapsed().as_nanos() as u64);
    }

    /// Rebuilds the whole tree over its keys plus both overflow buffers.
    fn rebuild_with_buffers(&mut self) {
        let started = Instant::now();
        let mut items = self.left.drain_ascending();
        items.reserve(self.len - items.len());
        if let Some(root) = self.root.take() {
            self.collect_subtree(root, &mut items);
            self.store.release_subtree(root);
        }
        items.append(&mut self.right.drain_ascending());
        self.install_root(&items);
        bump(&self.counters.adjustments, 1);
        bump(&self.counters.overflow_rebuilds, 1);
        bump(&self.counters.adjust_nanos, started.elapsed().as_nanos() as u64);
    }

    fn install_root(&mut self, items: &[(K, u64)]) {
        if let Some(old) = self.root.take() {
            self.store.release_subtree(old);
        }
        if items.is_empty() {
            self.bounds = None;
            return;
        }
        self.root = Some(build::build(&mut self.store, &self.params, items));
        self.bounds = Some((items[0].0, items[items.len() - 1].0));
    }

    /// Builds the index from scratch. The index must hold no elements;
    /// the input may be unsorted but must not contain duplicates.
    pub fn bulkload(&mut self, mut items: Vec<(K, u64)>) -> Result<()> {
        if self.len > 0 {
            return Err(Error::NotEmpty);
        }
        for &(k, _) in &items {
            self.params.kernel.check(k)?;
        }
        items.sort_unstable_by(|a, b| cmp_keys(a.0, b.0));
        if items.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateKey);
        }
        self.bootstrap.drain_ascending();
        self.left.drain_ascending();
        self.right.drain_ascending();
        self.install_root(&items);
        self.len = items.len();
        Ok(())
    }

    /// Removes `key`, returning its payload. Tree entries become gaps; the
    /// structure is left as is.
    pub fn remove(&mut self, key: K) -> Result<u64> {
        if self.params.kernel.check(key).is_err() {
            return Err(Error::NotFound);
        }
        let removed = match (self.in_tree_range(key), self.bounds) {
            (Some(root), _) => self.tree_remove(root, key),
            (None, None) => self.bootstrap.remove(key),
            (None, Some((lo, _))) if key < lo => self.left.remove(key),
            (None, Some(_)) => self.right.remove(key),
        };
        let payload = removed.ok_or(Error::NotFound)?;
        self.len -= 1;
        Ok(payload)
    }

    fn tree_remove(&mut self, root: NodeId, key: K) -> Option<u64> {
        let kernel = &self.params.kernel;
        let mut path = std::mem::take(&mut self.path);
        path.clear();
        let mut id = root;
        let found = loop {
            let node = self.store.get(id);
            let pos = node.model().predict(kernel, key, node.len());
            path.push((id, pos));
            match node.tag(pos) {
                EntryTag::Node => id = node.child(pos),
                EntryTag::Null => break None,
                EntryTag::Data => {
                    let slot = node.slot(pos);
                    break (slot.key == key).then_some((id, pos, slot.value));
                }
            }
        };
        let result = found.map(|(id, pos, payload)| {
            self.store.get_mut(id).clear_entry(pos);
            for &(n, _) in &path {
                self.store.get_mut(n).record_remove();
            }
            payload
        });
        self.path = path;
        result
    }

    /// Same as [`LippIndex::remove`], discarding the payload.
    pub fn delete(&mut self, key: K) -> Result<()> {
        self.remove(key).map(|_| ())
    }

    /// Overwrites the payload of `key`, returning the previous one.
    pub fn update(&mut self, key: K, payload: u64) -> Result<u64> {
        if self.params.kernel.check(key).is_err() {
            return Err(Error::NotFound);
        }
        let slot = match (self.in_tree_range(key), self.bounds) {
            (Some(root), _) => {
                let (id, _, pos, _) = self.descend(root, key);
                let node = self.store.get_mut(id);
                match node.tag(pos) {
                    EntryTag::Data if node.slot(pos).key == key => Some(node.value_mut(pos)),
                    _ => None,
                }
            }
            (None, None) => self.bootstrap.get_mut(key),
            (None, Some((lo, _))) if key < lo => self.left.get_mut(key),
            (None, Some(_)) => self.right.get_mut(key),
        };
        let slot = slot.ok_or(Error::NotFound)?;
        Ok(std::mem::replace(slot, payload))
    }

    /// Moves the element at `key` to `new_key` with `payload`. Nothing
    /// changes when `key` is absent or `new_key` is taken.
    pub fn update_key(&mut self, key: K, new_key: K, payload: u64) -> Result<()> {
        if !self.contains(key) {
            return Err(Error::NotFound);
        }
        if new_key == key {
            return self.update(key, payload).map(|_| ());
        }
        self.params.kernel.check(new_key)?;
        if self.contains(new_key) {
            return Err(Error::AlreadyExists);
        }
        let old = self.remove(key)?;
        if let Err(e) = self.insert(new_key, payload) {
            self.insert(key, old).expect("restoring a just-removed key");
            return Err(e);
        }
        Ok(())
    }

    /// Elements with keys in `[lo, hi]`, ascending.
    pub fn range(&self, lo: K, hi: K) -> Result<Vec<(K, u64)>> {
        if !(lo <= hi) {
            return Err(Error::InvalidRange);
        }
        let mut out = Vec::new();
        match (self.root, self.bounds) {
            (Some(root), Some((tree_lo, tree_hi))) => {
                self.left.extend_range(lo, hi, &mut out);
                if hi >= tree_lo && lo <= tree_hi {
                    let kernel = &self.params.kernel;
                    if kernel.check(lo).is_ok() && kernel.check(hi).is_ok() {
                        self.collect_range(root, Some(lo), Some(hi), &mut out);
                    } else {
                        let start = out.len();
                        self.collect_subtree(root, &mut out);
                        let mut kept = start;
                        for i in start..out.len() {
                            if out[i].0 >= lo && out[i].0 <= hi {
                                out[kept] = out[i];
                                kept += 1;
                            }
                        }
                        out.truncate(kept);
                    }
                }
                self.right.extend_range(lo, hi, &mut out);
            }
            _ => self.bootstrap.extend_range(lo, hi, &mut out),
        }
        Ok(out)
    }

    /// Scans `id` between the positions of the bounds. Only the first and
    /// last scanned entries can hold keys outside the range, so keys are
    /// compared there and nowhere else.
    fn collect_range(&self, id: NodeId, lo: Option<K>, hi: Option<K>, out: &mut Vec<(K, u64)>) {
        let node = self.store.get(id);
        let kernel = &self.params.kernel;
        let len = node.len();
        let first = lo.map_or(0, |k| node.model().predict(kernel, k, len));
        let last = hi.map_or(len - 1, |k| node.model().predict(kernel, k, len));
        let bits = node.bitmap();
        let mut next = bits.next_occupied(first, last);
        while let Some(i) = next {
            let lo_here = if i == first { lo } else { None };
            let hi_here = if i == last { hi } else { None };
            match node.tag(i) {
                EntryTag::Data => {
                    let s = node.slot(i);
                    if lo_here.map_or(true, |l| s.key >= l) && hi_here.map_or(true, |h| s.key <= h) {
                        out.push((s.key, s.value));
                    }
                }
                EntryTag::Node => self.collect_range(node.child(i), lo_here, hi_here, out),
                EntryTag::Null => unreachable!(),
            }
            next = if i < last { bits.next_occupied(i + 1, last) } else { None };
        }
    }

    fn collect_subtree(&self, id: NodeId, out: &mut Vec<(K, u64)>) {
        self.collect_range(id, None, None, out);
    }

    /// Every element in ascending key order.
    pub fn to_vec(&self) -> Vec<(K, u64)> {
        let mut out = Vec::with_capacity(self.len);
        match self.root {
            Some(root) => {
                self.left.extend_all(&mut out);
                self.collect_subtree(root, &mut out);
                self.right.extend_all(&mut out);
            }
            None => self.bootstrap.extend_all(&mut out),
        }
        out
    }

    /// Visits every DATA entry of the tree with its depth (root = 1).
    fn for_each_data(&self, mut f: impl FnMut(&[(NodeId, usize)], K, usize)) {
        let Some(root) = self.root else { return };
        let mut path: Vec<(NodeId, usize)> = Vec::new();
        // (node, next position to scan)
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        while let Some(&mut (id, ref mut from)) = stack.last_mut() {
            let node = self.store.get(id);
            let next = if *from < node.len() { node.bitmap().next_occupied(*from, node.len() - 1) } else { None };
            let Some(i) = next else {
                stack.pop();
                path.pop();
                continue;
            };
            *from = i + 1;
            match node.tag(i) {
                EntryTag::Data => {
                    path.push((id, i));
                    f(&path, node.slot(i).key, path.len());
                    path.pop();
                }
                EntryTag::Node => {
                    path.push((id, i));
                    stack.push((node.child(i), 0));
                }
                EntryTag::Null => unreachable!(),
            }
        }
    }

    pub fn stats(&self) -> IndexStats {
        let mut keys = 0usize;
        let mut depth_sum = 0usize;
        let mut max_depth = 0usize;
        self.for_each_data(|_, _, depth| {
            keys += 1;
            depth_sum += depth;
            max_depth = max_depth.max(depth);
        });
        let counters = self.counters();
        let pool = self.store.stats();
        IndexStats {
            elements: self.len,
            buffered: self.left.len() + self.right.len() + self.bootstrap.len(),
            nodes: pool.live_nodes,
            avg_depth: if keys > 0 { depth_sum as f64 / keys as f64 } else { 0.0 },
            max_depth,
            index_bytes: std::mem::size_of::<Self>()
                + self.store.live_bytes()
                + self.left.bytes()
                + self.right.bytes()
                + self.bootstrap.bytes(),
            adjustments: counters.adjustments,
            adjust_time_secs: Duration::from_nanos(counters.adjust_nanos).as_secs_f64(),
            pooled_nodes: pool.pooled,
            pool_hits: pool.pool_hits,
        }
    }

    /// Largest depth of any key in the tree.
    pub fn height(&self) -> usize {
        let mut h = 0;
        self.for_each_data(|_, _, d| h = h.max(d));
        h
    }

    /// Full structural check: every key sits where each model on its path
    /// predicts it, keys ascend in order, and the element count matches.
    pub fn audit(&self) -> Audit {
        let kernel = &self.params.kernel;
        let mut audit = Audit::default();
        let mut prev: Option<K> = None;
        self.for_each_data(|path, key, depth| {
            audit.data_entries += 1;
            if depth > MAX_DEPTH {
                audit.too_deep += 1;
            }
            let placed = path.iter().all(|&(id, pos)| {
                let node = self.store.get(id);
                node.model().predict(kernel, key, node.len()) == pos
            });
            if !placed {
                audit.misplaced += 1;
            }
            if let Some(p) = prev {
                if !(p < key) {
                    audit.order_violations += 1;
                }
            }
            prev = Some(key);
        });
        let all = self.to_vec();
        audit.order_violations += all.windows(2).filter(|w| !(w[0].0 < w[1].0)).count();
        audit.count_mismatch = all.len() != self.len;
        audit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::node::Entry;

    fn small() -> LippIndex<u64> {
        let mut idx = LippIndex::new();
        idx.bulkload(vec![(0, 100), (10, 110), (20, 120), (30, 130)]).unwrap();
        idx
    }

    #[test]
    fn empty_index_lookup() {
        let idx = LippIndex::<u64>::new();
        let r = idx.lookup(7);
        assert!(!r.found);
        assert_eq!(r.location, Location::Empty);
    }

    #[test]
    fn bulkload_builds_expected_shape() {
        let idx = small();
        let root = idx.node(idx.root().unwrap());
        assert_eq!(root.len(), 8);
        assert!((root.model().slope() - 0.6).abs() < 1e-12);
        assert!((root.model().intercept() + 5.0).abs() < 1e-12);
        assert_eq!(root.entry(0), Entry::Data { key: 0, payload: 100 });
        assert_eq!(root.entry(1), Entry::Data { key: 10, payload: 110 });
        let Entry::Node(child) = root.entry(7) else { panic!("expected child at 7") };
        let child = idx.node(child);
        assert_eq!(child.entry(0), Entry::Data { key: 20, payload: 120 });
        assert_eq!(child.entry(3), Entry::Data { key: 30, payload: 130 });

        let r = idx.lookup(20);
        assert!(r.found);
        assert_eq!(r.payload, Some(120));
        assert_eq!(r.depth, 2);

        let miss = idx.lookup(25);
        assert!(!miss.found);
        assert_eq!(miss.depth, 2);
        assert!(matches!(miss.location, Location::Tree { pos: 1, .. }));
    }

    #[test]
    fn stats_of_small_tree() {
        let s = small().stats();
        assert_eq!(s.max_depth, 2);
        assert!((s.avg_depth - 1.5).abs() < 1e-12);
        assert_eq!(s.nodes, 2);

        let mut one = LippIndex::<u64>::new();
        one.bulkload(vec![(5, 0)]).unwrap();
        assert_eq!(one.stats().max_depth, 1);
        let root = one.node(one.root().unwrap());
        assert_eq!(root.entry(0), Entry::Data { key: 5, payload: 0 });
    }

    #[test]
    fn range_examples() {
        let idx = small();
        let keys = |v: Vec<(u64, u64)>| v.into_iter().map(|e| e.0).collect::<Vec<_>>();
        assert_eq!(keys(idx.range(5, 25).unwrap()), vec![10, 20]);
        assert_eq!(keys(idx.range(0, 30).unwrap()), vec![0, 10, 20, 30]);
        assert!(idx.range(31, 40).unwrap().is_empty());
        assert!(matches!(idx.range(9, 8), Err(Error::InvalidRange)));
    }

    #[test]
    fn insert_into_gap_and_conflict() {
        let mut idx = small();
        let root_id = idx.root().unwrap();
        idx.insert(15, 1).unwrap();
        assert_eq!(idx.node(root_id).entry(4), Entry::Data { key: 15, payload: 1 });

        idx.insert(11, 2).unwrap();
        let root = idx.node(root_id);
        let Entry::Node(child) = root.entry(1) else { panic!("expected a child at 1") };
        assert_eq!(root.stats().conflict_num, 1);
        assert_eq!(root.stats().element_num, 6);
        let child = idx.node(child);
        assert_eq!(child.stats().element_num, 2);
        assert_eq!(idx.get(10), Some(110));
        assert_eq!(idx.get(11), Some(2));

        assert!(matches!(idx.insert(20, 9), Err(Error::AlreadyExists)));
        assert_eq!(idx.get(20), Some(120));
        assert_eq!(idx.len(), 6);
        assert!(idx.audit().is_clean());
    }

    #[test]
    fn adjustment_rule() {
        let p = Params::default();
        let s = |element_num, build_num, conflict_num| NodeStats { element_num, build_num, conflict_num };
        assert!(should_adjust(&s(128, 64, 7), false, &p));
        assert!(!should_adjust(&s(128, 64, 6), false, &p));
        assert!(!should_adjust(&s(128, 64, 7), true, &p));
        assert!(!should_adjust(&s(127, 64, 60), false, &p));
        assert!(!should_adjust(&s(32, 2, 30), false, &p));
        assert!(!should_adjust(&s(64, 64, 0), false, &Params { beta: 1.0, ..p }));
    }

    #[test]
    fn delete_leaves_reusable_gap() {
        let mut idx = small();
        idx.insert(7, 70).unwrap();
        idx.delete(7).unwrap();
        assert!(!idx.contains(7));
        assert!(matches!(idx.delete(7), Err(Error::NotFound)));
        let nodes = idx.stats().nodes;
        idx.insert(7, 71).unwrap();
        assert_eq!(idx.get(7), Some(71));
        assert_eq!(idx.stats().nodes, nodes);
    }

    #[test]
    fn updates() {
        let mut idx = LippIndex::<u64>::new();
        idx.insert(3, 100).unwrap();
        assert_eq!(idx.update(3, 200).unwrap(), 100);
        assert_eq!(idx.get(3), Some(200));
        assert!(matches!(idx.update(99, 1), Err(Error::NotFound)));
        idx.update_key(3, 4, 300).unwrap();
        assert!(!idx.contains(3));
        assert_eq!(idx.get(4), Some(300));
        idx.insert(5, 500).unwrap();
        assert!(matches!(idx.update_key(4, 5, 1), Err(Error::AlreadyExists)));
        assert_eq!(idx.get(4), Some(300));
        assert_eq!(idx.get(5), Some(500));
        assert!(matches!(idx.update_key(42, 43, 1), Err(Error::NotFound)));
    }

    #[test]
    fn bulkload_rejects_duplicates_and_non_empty() {
        let mut idx = LippIndex::<u64>::new();
        assert!(matches!(idx.bulkload(vec![(1, 0), (2, 0), (1, 1)]), Err(Error::DuplicateKey)));
        assert!(idx.is_empty());
        assert!(idx.root().is_none());
        idx.bulkload(vec![(2, 0), (1, 0)]).unwrap();
        assert!(matches!(idx.bulkload(vec![(5, 0)]), Err(Error::NotEmpty)));
    }

    #[test]
    fn bootstrap_then_root() {
        let mut idx = LippIndex::<u64>::new();
        for k in 0..63u64 {
            idx.insert(k * 3, k).unwrap();
        }
        assert!(idx.root().is_none());
        assert_eq!(idx.get(30), Some(10));
        assert_eq!(idx.lookup(30).location, Location::Bootstrap);
        assert!(matches!(idx.insert(30, 0), Err(Error::AlreadyExists)));
        idx.insert(1000, 0).unwrap();
        assert!(idx.root().is_some());
        assert_eq!(idx.tree_bounds(), Some((0, 1000)));
        assert_eq!(idx.get(30), Some(10));
        assert!(matches!(idx.lookup(30).location, Location::Tree { .. }));
        assert!(idx.audit().is_clean());
    }

    #[test]
    fn overflow_buffers() {
        let mut idx = LippIndex::<u64>::with_params(Params { overflow_capacity: 4, ..Params::default() }).unwrap();
        idx.bulkload((100..108).map(|k| (k, k)).collect()).unwrap();
        for k in [50u64, 40, 30] {
            idx.insert(k, k).unwrap();
        }
        assert_eq!(idx.lookup(40).location, Location::LeftBuffer);
        assert_eq!(idx.get(40), Some(40));
        idx.insert(500, 5).unwrap();
        assert_eq!(idx.lookup(500).location, Location::RightBuffer);
        let got: Vec<u64> = idx.range(0, 1000).unwrap().iter().map(|e| e.0).collect();
        assert_eq!(got.len(), 12);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        idx.delete(30).unwrap();
        assert_eq!(idx.update(50, 1).unwrap(), 50);
        // fourth buffered key flushes the buffers into a rebuilt tree
        idx.insert(20, 2).unwrap();
        idx.insert(10, 1).unwrap();
        assert_eq!(idx.counters().overflow_rebuilds, 1);
        assert_eq!(idx.tree_bounds(), Some((10, 500)));
        assert_eq!(idx.stats().buffered, 0);
        assert_eq!(idx.get(50), Some(1));
        assert_eq!(idx.len(), 13);
        assert!(idx.audit().is_clean());
    }

    #[test]
    fn rejects_invalid_keys() {
        let mut idx = LippIndex::<f64>::new();
        assert!(matches!(idx.insert(f64::NAN, 0), Err(Error::InvalidKey(_))));
        assert!(!idx.contains(f64::NAN));
        idx.insert(0.0, 1).unwrap();
        assert!(matches!(idx.insert(-0.0, 2), Err(Error::AlreadyExists)));
    }

    #[test]
    fn lookups_compare_at_most_once() {
        let mut idx = LippIndex::<u64>::new();
        idx.bulkload((0..10_000u64).map(|k| (k * k, k)).collect()).unwrap();
        idx.reset_counters();
        let mut visits = 0;
        for k in 0..20_000u64 {
            visits += idx.lookup(k * 7).depth as u64;
        }
        let c = idx.counters();
        assert_eq!(c.lookups, 20_000);
        assert!(c.key_comparisons <= c.lookups);
        assert_eq!(c.node_visits, visits);
    }

    #[test]
    fn conflicting_inserts_trigger_a_rebuild() {
        let mut idx = LippIndex::<u64>::new();
        idx.bulkload((0..=100u64).map(|k| (k * 1000, k)).collect()).unwrap();
        for k in 0..101u64 {
            idx.insert(k % 100 * 1000 + 1 + k / 100, k).unwrap();
        }
        assert_eq!(idx.counters().adjustments, 1);
        assert_eq!(idx.node(idx.root().unwrap()).stats().build_num, 202);
        assert_eq!(idx.len(), 202);
        assert!(idx.audit().is_clean());
    }
}
