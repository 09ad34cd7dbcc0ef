//! Node layout: a model, an entry array, a two-bit-per-entry type vector
//! and per-node statistics, plus the arena that owns every node of an
//! index and recycles two-entry nodes.
//!
//! Each node is one contiguous block of 64-bit words:
//!
//! | words            | contents                                   |
//! |------------------|--------------------------------------------|
//! | 0..4             | model: slope, offset, origin, anchor       |
//! | 4                | entry count (low 32 bits) and flags        |
//! | 5..8             | element_num, build_num, conflict_num       |
//! | 8..8+ceil(L/32)  | type bits                                  |
//! | then 2L words    | entries as (key, value) pairs              |
//!
//! so a lookup reads the header, the type word and the entry from one
//! allocation.

use std::marker::PhantomData;
use std::mem;

use crate::error::{Error, Result};
use crate::fmcd;
use crate::kernel::{KernelFn, Model};
use crate::key::Key;

/// Opaque handle to a node inside a [`NodeStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

impl NodeId {
    #[inline]
    pub(crate) fn from_payload(v: u64) -> Self {
        NodeId(v as u32)
    }

    #[inline]
    pub(crate) fn as_payload(self) -> u64 {
        self.0 as u64
    }

    #[inline]
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryTag {
    Null,
    Data,
    Node,
}

/// Decoded view of one entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entry<K> {
    Null,
    Data { key: K, payload: u64 },
    Node(NodeId),
}

/// One 16-byte entry. For NODE entries `value` holds the child handle and
/// `key` is unused.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Slot<K> {
    pub(crate) key: K,
    pub(crate) value: u64,
}

const EVEN_BITS: u64 = 0x5555_5555_5555_5555;

#[inline]
fn tag_words(len: usize) -> usize {
    len.div_ceil(32)
}

#[inline]
fn get_tag(words: &[u64], i: usize) -> EntryTag {
    match (words[i / 32] >> (2 * (i % 32))) & 0b11 {
        0b00 => EntryTag::Null,
        0b01 => EntryTag::Data,
        _ => EntryTag::Node,
    }
}

#[inline]
fn set_tag(words: &mut [u64], i: usize, tag: EntryTag) {
    let shift = 2 * (i % 32);
    let bits = match tag {
        EntryTag::Null => 0b00,
        EntryTag::Data => 0b01,
        EntryTag::Node => 0b11,
    };
    let w = &mut words[i / 32];
    *w = (*w & !(0b11 << shift)) | (bits << shift);
}

fn next_occupied(words: &[u64], from: usize, to: usize) -> Option<usize> {
    if from > to {
        return None;
    }
    let mut wi = from / 32;
    let mut mask = EVEN_BITS & (u64::MAX << (2 * (from % 32)));
    let last = to / 32;
    loop {
        let hits = words[wi] & mask;
        if hits != 0 {
            let i = wi * 32 + hits.trailing_zeros() as usize / 2;
            return (i <= to).then_some(i);
        }
        if wi == last {
            return None;
        }
        wi += 1;
        mask = EVEN_BITS;
    }
}

/// Borrowed view of a node's type bits. Bit `2i` set means entry `i` is
/// not NULL, bit `2i + 1` set means it is a NODE.
#[derive(Clone, Copy, Debug)]
pub struct Bits<'a>(&'a [u64]);

impl Bits<'_> {
    #[inline]
    pub fn get(&self, i: usize) -> EntryTag {
        get_tag(self.0, i)
    }

    /// First non-NULL entry in `from..=to`.
    #[inline]
    pub fn next_occupied(&self, from: usize, to: usize) -> Option<usize> {
        next_occupied(self.0, from, to)
    }

    pub fn words(&self) -> &[u64] {
        self.0
    }
}

/// Free-standing type vector with the same encoding as a node's.
#[derive(Clone, Debug)]
pub struct TypeBitmap {
    words: Box<[u64]>,
}

impl TypeBitmap {
    pub fn new(len: usize) -> Self {
        TypeBitmap { words: vec![0; tag_words(len)].into_boxed_slice() }
    }

    pub fn get(&self, i: usize) -> EntryTag {
        get_tag(&self.words, i)
    }

    pub fn set(&mut self, i: usize, tag: EntryTag) {
        set_tag(&mut self.words, i, tag)
    }

    pub fn next_occupied(&self, from: usize, to: usize) -> Option<usize> {
        next_occupied(&self.words, from, to)
    }

    pub fn as_bits(&self) -> Bits<'_> {
        Bits(&self.words)
    }
}

/// Per-node counters driving the adjustment policy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NodeStats {
    /// Elements currently in the subtree.
    pub element_num: u64,
    /// Elements in the subtree when it was last built.
    pub build_num: u64,
    /// Conflicting inserts in the subtree since it was last built.
    pub conflict_num: u64,
}

const W_LEN: usize = 4;
const W_ELEMENTS: usize = 5;
const W_BUILD: usize = 6;
const W_CONFLICTS: usize = 7;
const HEADER: usize = 8;

const F_IDENTITY: u64 = 1 << 32;
const F_FIXED: u64 = 1 << 33;
const F_LIVE: u64 = 1 << 34;

pub struct Node<K> {
    words: Box<[u64]>,
    _key: PhantomData<K>,
}

impl<K: Key> Node<K> {
    fn new(model: Model<K>, len: usize, fixed: bool) -> Self {
        assert!(len >= 1 && len <= u32::MAX as usize, "bad node length {len}");
        let mut words = vec![0u64; HEADER + tag_words(len) + 2 * len].into_boxed_slice();
        words[W_LEN] = len as u64 | F_LIVE | if fixed { F_FIXED } else { 0 };
        let mut node = Node { words, _key: PhantomData };
        node.set_model(model);
        node
    }

    fn vacant() -> Self {
        Node { words: Box::new([]), _key: PhantomData }
    }

    fn set_model(&mut self, model: Model<K>) {
        let (w, identity) = model.to_words();
        self.words[..4].copy_from_slice(&w);
        self.set_flag(F_IDENTITY, identity);
    }

    fn set_flag(&mut self, flag: u64, on: bool) {
        if on {
            self.words[W_LEN] |= flag;
        } else {
            self.words[W_LEN] &= !flag;
        }
    }

    fn flag(&self, flag: u64) -> bool {
        self.words[W_LEN] & flag != 0
    }

    fn is_live(&self) -> bool {
        !self.words.is_empty() && self.flag(F_LIVE)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words[W_LEN] as u32 as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn model(&self) -> Model<K> {
        let w = &self.words;
        Model::from_words([w[0], w[1], w[2], w[3]], w[W_LEN] & F_IDENTITY != 0)
    }

    pub fn stats(&self) -> NodeStats {
        NodeStats {
            element_num: self.words[W_ELEMENTS],
            build_num: self.words[W_BUILD],
            conflict_num: self.words[W_CONFLICTS],
        }
    }

    pub(crate) fn set_stats(&mut self, stats: NodeStats) {
        self.words[W_ELEMENTS] = stats.element_num;
        self.words[W_BUILD] = stats.build_num;
        self.words[W_CONFLICTS] = stats.conflict_num;
    }

    #[inline]
    pub(crate) fn record_insert(&mut self, conflicted: bool) {
        self.words[W_ELEMENTS] += 1;
        self.words[W_CONFLICTS] += conflicted as u64;
    }

    #[inline]
    pub(crate) fn record_remove(&mut self) {
        self.words[W_ELEMENTS] = self.words[W_ELEMENTS].saturating_sub(1);
    }

    /// Fixed nodes reached the size cap and are never rebuilt.
    pub fn is_fixed(&self) -> bool {
        self.flag(F_FIXED)
    }

    #[inline]
    fn tag_range(&self) -> std::ops::Range<usize> {
        HEADER..HEADER + tag_words(self.len())
    }

    #[inline]
    fn entry_base(&self) -> usize {
        HEADER + tag_words(self.len())
    }

    #[inline]
    pub fn bitmap(&self) -> Bits<'_> {
        Bits(&self.words[self.tag_range()])
    }

    pub fn get_tag(&self, i: usize) -> Result<EntryTag> {
        self.check(i)?;
        Ok(self.tag(i))
    }

    pub fn set_tag(&mut self, i: usize, tag: EntryTag) -> Result<()> {
        self.check(i)?;
        let r = self.tag_range();
        set_tag(&mut self.words[r], i, tag);
        Ok(())
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::OutOfRange { index: i, len: self.len() })
        }
    }

    #[inline]
    pub(crate) fn tag(&self, i: usize) -> EntryTag {
        debug_assert!(i < self.len());
        get_tag(&self.words[HEADER..], i)
    }

    #[inline]
    pub(crate) fn slot(&self, i: usize) -> Slot<K> {
        debug_assert!(i < self.len());
        let e = self.entry_base() + 2 * i;
        Slot { key: K::from_bits(self.words[e]), value: self.words[e + 1] }
    }

    #[inline]
    pub(crate) fn value_mut(&mut self, i: usize) -> &mut u64 {
        debug_assert!(i < self.len());
        let e = self.entry_base() + 2 * i;
        &mut self.words[e + 1]
    }

    #[inline]
    pub(crate) fn child(&self, i: usize) -> NodeId {
        NodeId::from_payload(self.slot(i).value)
    }

    pub fn entry(&self, i: usize) -> Entry<K> {
        let s = self.slot(i);
        match self.tag(i) {
            EntryTag::Null => Entry::Null,
            EntryTag::Data => Entry::Data { key: s.key, payload: s.value },
            EntryTag::Node => Entry::Node(NodeId::from_payload(s.value)),
        }
    }

    #[inline]
    fn write(&mut self, i: usize, key: u64, value: u64, tag: EntryTag) {
        let e = self.entry_base() + 2 * i;
        self.words[e] = key;
        self.words[e + 1] = value;
        set_tag(&mut self.words[HEADER..], i, tag);
    }

    #[inline]
    pub(crate) fn set_data(&mut self, i: usize, key: K, payload: u64) {
        self.write(i, key.to_bits(), payload, EntryTag::Data);
    }

    /// The key word of a NODE entry caches the address of the child's
    /// block so lookups can skip the arena.
    #[inline]
    fn set_child(&mut self, i: usize, child: NodeId, addr: u64) {
        self.write(i, addr, child.as_payload(), EntryTag::Node);
    }

    #[inline]
    pub(crate) fn view(&self) -> NodeView<'_, K> {
        NodeView { words: &self.words, _key: PhantomData }
    }

    #[inline]
    pub(crate) fn clear_entry(&mut self, i: usize) {
        self.write(i, 0, 0, EntryTag::Null);
    }

    fn reset(&mut self) {
        let base = self.entry_base();
        self.words[HEADER..base].fill(0);
    }

    /// Bytes of the block plus the arena handle.
    pub fn footprint(&self) -> usize {
        mem::size_of::<Self>() + self.words.len() * 8
    }
}

/// Read-only access to a node block that follows child links through the
/// cached block addresses instead of the arena.
pub(crate) struct NodeView<'a, K> {
    words: &'a [u64],
    _key: PhantomData<K>,
}

impl<K> Clone for NodeView<'_, K> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<K> Copy for NodeView<'_, K> {}

impl<'a, K: Key> NodeView<'a, K> {
    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.words[W_LEN] as u32 as usize
    }

    #[inline]
    pub(crate) fn model(&self) -> Model<K> {
        let w = self.words;
        Model::from_words([w[0], w[1], w[2], w[3]], w[W_LEN] & F_IDENTITY != 0)
    }

    #[inline]
    pub(crate) fn tag(&self, i: usize) -> EntryTag {
        get_tag(&self.words[HEADER..], i)
    }

    #[inline]
    pub(crate) fn slot(&self, i: usize) -> Slot<K> {
        let e = HEADER + tag_words(self.len()) + 2 * i;
        Slot { key: K::from_bits(self.words[e]), value: self.words[e + 1] }
    }

    /// The child behind NODE entry `i`.
    #[inline]
    pub(crate) fn child(&self, i: usize) -> (NodeId, NodeView<'a, K>) {
        debug_assert_eq!(self.tag(i), EntryTag::Node);
        let slot = self.slot(i);
        let ptr = slot.key.to_bits() as usize as *const u64;
        // SAFETY: a NODE entry's key word always holds the address of the
        // live block of the child named by its value word (set in
        // `NodeStore::set_child`). Blocks are never moved or freed while
        // reachable from a live parent, and the returned view borrows the
        // store through `'a`, so no mutation can happen while it is held.
        let words = unsafe {
            let len = *ptr.add(W_LEN) as u32 as usize;
            std::slice::from_raw_parts(ptr, HEADER + tag_words(len) + 2 * len)
        };
        (NodeId::from_payload(slot.value), NodeView { words, _key: PhantomData })
    }
}

/// Allocation counters of a [`NodeStore`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PoolStats {
    pub live_nodes: usize,
    /// Released two-entry nodes waiting for reuse.
    pub pooled: usize,
    pub pool_hits: u64,
}

/// Arena owning every node of one index. Released two-entry nodes keep
/// their blocks and are handed out again by
/// [`NodeStore::acquire_two_key_node`].
pub struct NodeStore<K> {
    nodes: Vec<Node<K>>,
    free: Vec<NodeId>,
    pool: Vec<NodeId>,
    pair_len: usize,
    pool_hits: u64,
    live: usize,
    live_words: usize,
}

impl<K: Key> NodeStore<K> {
    /// `pair_len` is the entry count of nodes built for two keys.
    pub fn new(pair_len: usize) -> Self {
        assert!(pair_len >= 2, "two-key nodes need at least two entries");
        NodeStore { nodes: Vec::new(), free: Vec::new(), pool: Vec::new(), pair_len, pool_hits: 0, live: 0, live_words: 0 }
    }

    pub fn pair_len(&self) -> usize {
        self.pair_len
    }

    #[inline]
    pub fn get(&self, id: NodeId) -> &Node<K> {
        &self.nodes[id.index()]
    }

    #[inline]
    pub fn get_mut(&mut self, id: NodeId) -> &mut Node<K> {
        &mut self.nodes[id.index()]
    }

    /// Points entry `i` of `parent` at `child`.
    pub fn set_child(&mut self, parent: NodeId, i: usize, child: NodeId) {
        let addr = self.nodes[child.index()].words.as_ptr() as usize as u64;
        debug_assert!(self.nodes[child.index()].is_live());
        self.nodes[parent.index()].set_child(i, child, addr);
    }

    /// True when NODE entry `i` of `parent` caches the address of the block
    /// its handle names.
    pub fn link_is_consistent(&self, parent: NodeId, i: usize) -> bool {
        let slot = self.get(parent).slot(i);
        let child = &self.nodes[NodeId::from_payload(slot.value).index()];
        child.is_live() && child.words.as_ptr() as usize as u64 == slot.key.to_bits()
    }

    pub fn stats(&self) -> PoolStats {
        PoolStats { live_nodes: self.live, pooled: self.pool.len(), pool_hits: self.pool_hits }
    }

    /// A fresh node with every entry NULL and zeroed statistics.
    pub fn alloc(&mut self, model: Model<K>, len: usize, fixed: bool) -> NodeId {
        let node = Node::new(model, len, fixed);
        self.live += 1;
        self.live_words += node.words.len();
        match self.free.pop() {
            Some(id) => {
                self.nodes[id.index()] = node;
                id
            }
            None => {
                let id = NodeId(u32::try_from(self.nodes.len()).expect("node arena exhausted"));
                self.nodes.push(node);
                id
            }
        }
    }

    /// A node holding exactly `a` and `b`, taken from the pool when one is
    /// available.
    pub fn acquire_two_key_node(&mut self, kernel: &KernelFn, a: (K, u64), b: (K, u64)) -> Result<NodeId> {
        let (lo, hi) = if a.0 < b.0 {
            (a, b)
        } else if b.0 < a.0 {
            (b, a)
        } else {
            return Err(Error::DuplicateKey);
        };
        let len = self.pair_len;
        let kernel = if kernel.gap(lo.0, hi.0) > 0.0 { kernel } else { &KernelFn::Linear };
        let keys = [lo.0, hi.0];
        let model = fmcd::fmcd_by(2, |i| keys[i], len, kernel).model;
        let id = match self.pool.pop() {
            Some(id) => {
                self.pool_hits += 1;
                self.live += 1;
                let node = &mut self.nodes[id.index()];
                self.live_words += node.words.len();
                node.reset();
                node.set_model(model);
                node.set_flag(F_FIXED, false);
                node.set_flag(F_LIVE, true);
                id
            }
            None => self.alloc(model, len, false),
        };
        let node = self.get_mut(id);
        let p_lo = model.predict(kernel, lo.0, len);
        let p_hi = model.predict(kernel, hi.0, len);
        debug_assert!(p_lo < p_hi);
        node.set_data(p_lo, lo.0, lo.1);
        node.set_data(p_hi, hi.0, hi.1);
        node.set_stats(NodeStats { element_num: 2, build_num: 2, conflict_num: 0 });
        Ok(id)
    }

    /// Returns `root` and all of its descendants to the store. The subtree
    /// must no longer be reachable from the index.
    pub fn release_subtree(&mut self, root: NodeId) {
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let node = &mut self.nodes[id.index()];
            debug_assert!(node.is_live(), "node {id:?} released twice");
            let bits = node.bitmap();
            let last = node.len() - 1;
            let mut next = bits.next_occupied(0, last);
            while let Some(i) = next {
                if bits.get(i) == EntryTag::Node {
                    stack.push(node.child(i));
                }
                next = if i < last { bits.next_occupied(i + 1, last) } else { None };
            }
            self.live -= 1;
            self.live_words -= node.words.len();
            if node.len() == self.pair_len {
                node.set_flag(F_LIVE, false);
                self.pool.push(id);
            } else {
                *node = Node::vacant();
                self.free.push(id);
            }
        }
    }

    /// Drops the pooled two-entry nodes.
    pub fn clear_pool(&mut self) {
        for id in self.pool.drain(..) {
            self.nodes[id.index()] = Node::vacant();
            self.free.push(id);
        }
    }

    /// Bytes held by live nodes.
    pub fn live_bytes(&self) -> usize {
        self.live_words * 8 + self.live * mem::size_of::<Node<K>>()
    }
}
