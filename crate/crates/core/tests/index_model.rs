//! The index against `BTreeMap` under random operation sequences, with
//! small parameters so that rebuilds and buffer flushes happen often.

use std::collections::BTreeMap;

use lipp::{Error, KernelFn, LippIndex, Params};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Op {
    Insert(u64, u64),
    Get(u64),
    Remove(u64),
    Update(u64, u64),
    Range(u64, u64),
}

fn op(domain: u64) -> impl Strategy<Value = Op> {
    let k = 0..domain;
    prop_oneof![
        4 => (k.clone(), any::<u64>()).prop_map(|(k, v)| Op::Insert(k, v)),
        3 => k.clone().prop_map(Op::Get),
        1 => k.clone().prop_map(Op::Remove),
        1 => (k.clone(), any::<u64>()).prop_map(|(k, v)| Op::Update(k, v)),
        1 => (k.clone(), 0..domain / 4).prop_map(|(k, w)| Op::Range(k, k + w)),
    ]
}

fn small_params() -> Params {
    Params { min_adjust_elements: 4, overflow_capacity: 4, ..Params::default() }
}

fn check(idx: &mut LippIndex<u64>, model: &mut BTreeMap<u64, u64>, op: &Op) -> Result<(), TestCaseError> {
    match *op {
        Op::Insert(k, v) => {
            let r = idx.insert(k, v);
            if let std::collections::btree_map::Entry::Vacant(e) = model.entry(k) {
                prop_assert!(r.is_ok());
                e.insert(v);
            } else {
                prop_assert!(matches!(r, Err(Error::AlreadyExists)));
            }
        }
        Op::Get(k) => prop_assert_eq!(idx.get(k), model.get(&k).copied()),
        Op::Remove(k) => prop_assert_eq!(idx.remove(k).ok(), model.remove(&k)),
        Op::Update(k, v) => {
            let want = model.get_mut(&k).map(|s| std::mem::replace(s, v));
            prop_assert_eq!(idx.update(k, v).ok(), want);
        }
        Op::Range(lo, hi) => {
            let want: Vec<(u64, u64)> = model.range(lo..=hi).map(|(&k, &v)| (k, v)).collect();
            prop_assert_eq!(idx.range(lo, hi).unwrap(), want);
        }
    }
    prop_assert_eq!(idx.len(), model.len());
    Ok(())
}

fn scaled(ops: Vec<Op>, scale: u64) -> Vec<Op> {
    ops.into_iter()
        .map(|o| match o {
            Op::Insert(k, v) => Op::Insert(k * scale, v),
            Op::Get(k) => Op::Get(k * scale),
            Op::Remove(k) => Op::Remove(k * scale),
            Op::Update(k, v) => Op::Update(k * scale, v),
            Op::Range(a, b) => Op::Range(a * scale, b * scale),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_ordered_map(ops in prop::collection::vec(op(2000), 1..3000), scale in 1u64..1_000_000_000) {
        let mut idx = LippIndex::with_params(small_params()).unwrap();
        let mut model = BTreeMap::new();
        for o in scaled(ops, scale) {
            check(&mut idx, &mut model, &o)?;
        }
        prop_assert!(idx.audit().is_clean(), "{:?}", idx.audit());
        prop_assert_eq!(idx.to_vec(), model.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn matches_after_bulkload(
        base in prop::collection::btree_set(0u64..100_000, 0..2000),
        ops in prop::collection::vec(op(120_000), 1..2000),
    ) {
        let mut idx = LippIndex::with_params(small_params()).unwrap();
        let items: Vec<(u64, u64)> = base.iter().map(|&k| (k, !k)).collect();
        idx.bulkload(items.clone()).unwrap();
        let mut model: BTreeMap<u64, u64> = items.into_iter().collect();
        for o in &ops {
            check(&mut idx, &mut model, o)?;
        }
        prop_assert!(idx.audit().is_clean(), "{:?}", idx.audit());
    }

    #[test]
    fn every_key_found_in_one_comparison(keys in prop::collection::btree_set(any::<u64>(), 2..3000)) {
        let mut idx = LippIndex::<u64>::new();
        idx.bulkload(keys.iter().map(|&k| (k, k)).collect()).unwrap();
        for &k in &keys {
            idx.reset_counters();
            let r = idx.lookup(k);
            prop_assert_eq!(r.payload, Some(k));
            prop_assert!(idx.counters().key_comparisons <= 1);
        }
        let s = idx.stats();
        prop_assert!(s.max_depth <= 10, "depth {}", s.max_depth);
    }

    #[test]
    fn float_keys(keys in prop::collection::vec(-1e12f64..1e12, 1..1500)) {
        let mut idx = LippIndex::<f64>::with_params(Params { min_adjust_elements: 8, ..Params::default() }).unwrap();
        let mut model = BTreeMap::new();
        for (i, &k) in keys.iter().enumerate() {
            let fresh = !model.contains_key(&k.to_bits());
            prop_assert_eq!(idx.insert(k, i as u64).is_ok(), fresh);
            if fresh {
                model.insert(k.to_bits(), i as u64);
            }
        }
        for &k in &keys {
            prop_assert_eq!(idx.get(k), model.get(&k.to_bits()).copied());
        }
        let got = idx.to_vec();
        prop_assert!(got.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert!(idx.audit().is_clean());
    }
}

#[test]
fn nonlinear_kernels_index_their_domain() {
    let keys: Vec<u64> = (1..20_000u64).map(|i| i * i + 7).collect();
    for kernel in [KernelFn::Quadratic, KernelFn::Logarithmic] {
        let mut idx = LippIndex::with_params(Params { kernel: kernel.clone(), ..Params::default() }).unwrap();
        idx.bulkload(keys.iter().step_by(2).map(|&k| (k, k)).collect()).unwrap();
        for &k in keys.iter().skip(1).step_by(2) {
            idx.insert(k, k).unwrap();
        }
        assert!(keys.iter().all(|&k| idx.get(k) == Some(k)), "{kernel}");
        assert!(idx.audit().is_clean(), "{kernel}");
        assert!(matches!(idx.insert(0, 0), Err(Error::KernelDomain { .. })), "{kernel}");
    }
}

#[test]
fn descending_inserts_stay_shallow() {
    let mut idx = LippIndex::<u64>::new();
    for k in (0..200_000u64).rev() {
        idx.insert(k * 5, k).unwrap();
    }
    assert_eq!(idx.len(), 200_000);
    assert!((0..200_000u64).all(|k| idx.get(k * 5) == Some(k)));
    assert!(idx.stats().max_depth <= 2 * 18);
    assert!(idx.audit().is_clean());
}

#[test]
fn invalid_float_keys_are_rejected() {
    let mut idx = LippIndex::<f64>::new();
    assert!(matches!(idx.insert(f64::NAN, 1), Err(Error::InvalidKey(_))));
    assert!(matches!(idx.insert(f64::INFINITY, 1), Err(Error::InvalidKey(_))));
    assert!(idx.is_empty());
}
