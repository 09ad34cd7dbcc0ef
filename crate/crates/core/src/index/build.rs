//! Recursive partial-tree construction shared by bulkload and adjustment.

use crate::error::{Error, Result};
use crate::fmcd::{self, validate_keys};
use crate::kernel::KernelFn;
use crate::key::Key;
use crate::node::{NodeId, NodeStats, NodeStore};

use super::Params;

/// Entry count for a node built over `n` keys, and whether it hit the cap.
pub(crate) fn node_len(n: usize, params: &Params) -> (usize, bool) {
    let want = (params.delta * n as f64).ceil() as usize;
    let floor = if n >= 2 { 4 } else { 1 };
    let len = want.min(params.max_len).max(floor);
    (len, want >= params.max_len)
}

/// Builds a subtree over `items`, which must be non-empty, strictly
/// ascending and inside the kernel's domain.
pub fn build_partial_tree<K: Key>(store: &mut NodeStore<K>, params: &Params, items: &[(K, u64)]) -> Result<NodeId> {
    if items.is_empty() {
        return Err(Error::Empty);
    }
    let keys: Vec<K> = items.iter().map(|e| e.0).collect();
    match validate_keys(&keys, &params.kernel) {
        Ok(()) | Err(Error::KernelTie { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(build(store, params, items))
}

pub(crate) fn build<K: Key>(store: &mut NodeStore<K>, params: &Params, items: &[(K, u64)]) -> NodeId {
    let n = items.len();
    debug_assert!(n > 0);
    if n == 2 && store.pair_len() == node_len(2, params).0 {
        return store
            .acquire_two_key_node(&params.kernel, items[0], items[1])
            .expect("build input has distinct keys");
    }

    let (len, fixed) = node_len(n, params);
    let kernel = kernel_for(&params.kernel, items);
    let key_at = |i: usize| items[i].0;
    let mut model = fmcd::fmcd_by(n, key_at, len, kernel).model;
    if n > 1 && model.predict(kernel, items[0].0, len) == model.predict(kernel, items[n - 1].0, len) {
        model = fmcd::spread_model(n, &key_at, len, kernel);
        assert_ne!(
            model.predict(kernel, items[0].0, len),
            model.predict(kernel, items[n - 1].0, len),
            "cannot separate {n} keys in a node of {len} entries"
        );
    }

    let id = store.alloc(model, len, fixed);
    let mut start = 0;
    let mut pos = model.predict(kernel, items[0].0, len);
    while start < n {
        let mut end = start + 1;
        let mut next_pos = pos;
        while end < n {
            next_pos = model.predict(kernel, items[end].0, len);
            if next_pos != pos {
                break;
            }
            end += 1;
        }
        if end - start == 1 {
            let (k, p) = items[start];
            store.get_mut(id).set_data(pos, k, p);
        } else {
            let child = build(store, params, &items[start..end]);
            store.set_child(id, pos, child);
        }
        start = end;
        pos = next_pos;
    }
    store.get_mut(id).set_stats(NodeStats { element_num: n as u64, build_num: n as u64, conflict_num: 0 });
    id
}

/// The configured kernel, or the linear one when the configured kernel
/// collapses two of these keys onto the same value.
fn kernel_for<'a, K: Key>(kernel: &'a KernelFn, items: &[(K, u64)]) -> &'a KernelFn {
    if kernel.is_linear() || items.windows(2).all(|w| kernel.gap(w[0].0, w[1].0) > 0.0) {
        kernel
    } else {
        &KernelFn::Linear
    }
}
