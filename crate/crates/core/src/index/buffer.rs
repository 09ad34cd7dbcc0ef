use std::cmp::Ordering;

use crate::key::Key;

#[inline]
pub(crate) fn cmp_keys<K: Key>(a: K, b: K) -> Ordering {
    a.partial_cmp(&b).expect("keys are validated as totally ordered")
}

/// Sorted key/payload buffer searched by binary search. A descending
/// buffer turns a run of decreasing inserts into appends.
#[derive(Clone, Debug, Default)]
pub(crate) struct SortedBuf<K> {
    items: Vec<(K, u64)>,
    descending: bool,
}

impl<K: Key> SortedBuf<K> {
    pub(crate) fn ascending() -> Self {
        SortedBuf { items: Vec::new(), descending: false }
    }

    pub(crate) fn descending() -> Self {
        SortedBuf { items: Vec::new(), descending: true }
    }

    pub(crate) fn len(&self) -> usize {
        self.items.len()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn find(&self, key: K) -> Result<usize, usize> {
        if self.descending {
            self.items.binary_search_by(|e| cmp_keys(key, e.0))
        } else {
            self.items.binary_search_by(|e| cmp_keys(e.0, key))
        }
    }

    pub(crate) fn get(&self, key: K) -> Option<u64> {
        self.find(key).ok().map(|i| self.items[i].1)
    }

    pub(crate) fn get_mut(&mut self, key: K) -> Option<&mut u64> {
        self.find(key).ok().map(move |i| &mut self.items[i].1)
    }

    /// False when the key is already present.
    pub(crate) fn insert(&mut self, key: K, payload: u64) -> bool {
        match self.find(key) {
            Ok(_) => false,
            Err(i) => {
                self.items.insert(i, (key, payload));
                true
            }
        }
    }

    pub(crate) fn remove(&mut self, key: K) -> Option<u64> {
        self.find(key).ok().map(|i| self.items.remove(i).1)
    }

    /// Moves the contents out in ascending key order.
    pub(crate) fn drain_ascending(&mut self) -> Vec<(K, u64)> {
        let mut items = std::mem::take(&mut self.items);
        if self.descending {
            items.reverse();
        }
        items
    }

    pub(crate) fn extend_range(&self, lo: K, hi: K, out: &mut Vec<(K, u64)>) {
        let inside = |e: &&(K, u64)| e.0 >= lo && e.0 <= hi;
        if self.descending {
            out.extend(self.items.iter().rev().filter(inside));
        } else {
            out.extend(self.items.iter().filter(inside));
        }
    }

    pub(crate) fn extend_all(&self, out: &mut Vec<(K, u64)>) {
        if self.descending {
            out.extend(self.items.iter().rev());
        } else {
            out.extend(self.items.iter());
        }
    }

    pub(crate) fn bytes(&self) -> usize {
        self.items.capacity() * std::mem::size_of::<(K, u64)>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_orders_keep_keys_sorted() {
        for mut buf in [SortedBuf::<u64>::ascending(), SortedBuf::descending()] {
            for k in [5, 1, 9, 3, 7] {
                assert!(buf.insert(k, k * 10));
            }
            assert!(!buf.insert(3, 0));
            assert_eq!(buf.get(9), Some(90));
            assert_eq!(buf.get(4), None);
            *buf.get_mut(7).unwrap() = 1;
            let mut out = Vec::new();
            buf.extend_range(3, 7, &mut out);
            assert_eq!(out, vec![(3, 30), (5, 50), (7, 1)]);
            assert_eq!(buf.remove(5), Some(50));
            assert_eq!(buf.remove(5), None);
            let keys: Vec<u64> = buf.drain_ascending().into_iter().map(|e| e.0).collect();
            assert_eq!(keys, vec![1, 3, 7, 9]);
            assert!(buf.is_empty());
        }
    }
}
