//! Self-check suites: FMCD against exhaustive enumeration, realized
//! occupancy, precise positions, ordered-map equivalence and tree height.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fmcd::{brute_force_min_t, fmcd, realized_conflict_profile};
use crate::index::{LippIndex, Params};
use crate::kernel::KernelFn;
use crate::workload::{generate, Provenance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Fmcd,
    Conflict,
    Positions,
    Oracle,
    Height,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Fmcd, Suite::Conflict, Suite::Positions, Suite::Oracle, Suite::Height];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fmcd => "fmcd",
            Suite::Conflict => "conflict",
            Suite::Positions => "positions",
            Suite::Oracle => "oracle",
            Suite::Height => "height",
        }
    }

    /// Cases run when none are requested. A case is one random instance
    /// for `fmcd` and `conflict`, one randomized workload for `positions`,
    /// one operation for `oracle` and one build for `height`.
    pub fn default_cases(self) -> usize {
        match self {
            Suite::Fmcd | Suite::Conflict => 1000,
            Suite::Positions => 30,
            Suite::Oracle => 200_000,
            Suite::Height => 4,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Overrides every suite's default case count.
    pub cases: Option<usize>,
    /// Reports FMCD results off by one, to check that failures surface.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 42, cases: None, inject_fault: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub cases: usize,
    pub checks: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {:<9} cases={} checks={} failures={}", self.suite, self.cases, self.checks, self.failures)?;
        if let Some(msg) = &self.first_failure {
            write!(f, " first: {msg}")?;
        }
        Ok(())
    }
}

struct Tally {
    checks: u64,
    failures: u64,
    first: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { checks: 0, failures: 0, first: None }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(msg());
            }
        }
    }

    fn finish(self, suite: Suite, cases: usize) -> SuiteOutcome {
        SuiteOutcome { suite, cases, checks: self.checks, failures: self.failures, first_failure: self.first }
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> SuiteOutcome {
    let cases = cfg.cases.unwrap_or_else(|| suite.default_cases());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(suite as u64);
    let tally = match suite {
        Suite::Fmcd => fmcd_suite(cases, &mut rng, cfg.inject_fault),
        Suite::Conflict => conflict_suite(cases, &mut rng),
        Suite::Positions => positions_suite(cases, &mut rng),
        Suite::Oracle => oracle_suite(cases, rng.random()),
        Suite::Height => height_suite(cases, &mut rng),
    };
    tally.finish(suite, cases)
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<SuiteOutcome> {
    Suite::ALL.iter().map(|&s| run_suite(s, cfg)).collect()
}

/// A random FMCD instance: `N` in `[3, 200]` distinct ascending keys and
/// `L` in `[3, 4N]`. Keys stay below 2^40 so the quadratic kernel keeps
/// every pair apart.
pub fn random_instance(rng: &mut impl Rng) -> (Vec<u64>, usize) {
    let n = rng.random_range(3..=200usize);
    let mut keys = std::collections::BTreeSet::new();
    match rng.random_range(0..3) {
        0 => {
            let hi = 1u64 << rng.random_range(9..=40);
            while keys.len() < n {
                keys.insert(rng.random_range(1..hi.max(n as u64 * 2)));
            }
        }
        1 => {
            // runs of adjacent keys separated by large gaps
            let mut k = rng.random_range(1..1000u64);
            while keys.len() < n {
                keys.insert(k);
                k += if rng.random_bool(0.8) { 1 } else { rng.random_range(2..1u64 << 30) };
            }
        }
        _ => {
            let mut k = 1u64;
            while keys.len() < n {
                keys.insert(k);
                k += 1 + (rng.random::<f64>().powi(6) * 1e6) as u64;
            }
        }
    }
    let keys: Vec<u64> = keys.into_iter().collect();
    let len = rng.random_range(3..=4 * n);
    (keys, len)
}

fn kernel_for_case(i: usize) -> KernelFn {
    if i % 2 == 0 {
        KernelFn::Linear
    } else {
        KernelFn::Quadratic
    }
}

fn fmcd_suite(cases: usize, rng: &mut impl Rng, fault: bool) -> Tally {
    let mut t = Tally::new();
    for i in 0..cases {
        let (keys, len) = random_instance(rng);
        let kernel = kernel_for_case(i);
        let fast = fmcd(&keys, len, &kernel).map(|r| r.conflict_degree + fault as usize);
        let slow = brute_force_min_t(&keys, len, &kernel);
        t.check(matches!((&fast, &slow), (Ok(a), Ok(b)) if a == b), || {
            format!("N={} L={len} {kernel}: fmcd {fast:?} vs enumeration {slow:?}", keys.len())
        });
    }
    t
}

fn conflict_suite(cases: usize, rng: &mut impl Rng) -> Tally {
    let mut t = Tally::new();
    for i in 0..cases {
        let (keys, len) = random_instance(rng);
        let kernel = kernel_for_case(i);
        let Ok(r) = fmcd(&keys, len, &kernel) else {
            t.check(false, || format!("fmcd failed on N={} L={len}", keys.len()));
            continue;
        };
        let profile = realized_conflict_profile(&r.model, &keys, len, &kernel).expect("valid instance");
        let deg = r.conflict_degree as u32;
        for (pos, count) in profile.occupied() {
            let limit = if pos == 0 || pos == len - 1 { deg + 1 } else { deg };
            t.check(count <= limit, || format!("N={} L={len} {kernel}: {count} keys at {pos}, T={deg}", keys.len()));
        }
    }
    t
}

fn positions_suite(cases: usize, rng: &mut impl Rng) -> Tally {
    let mut t = Tally::new();
    for case in 0..cases {
        let provenance = Provenance::GENERATED[case % Provenance::GENERATED.len()];
        let n = rng.random_range(500..5000usize);
        let mut keys = generate(provenance, n, rng.random()).expect("valid generator").keys;
        keys.shuffle(rng);
        let loaded = rng.random_range(0..n / 2);
        let params = Params { overflow_capacity: rng.random_range(8..300), ..Params::default() };
        let mut idx = LippIndex::with_params(params).expect("valid params");
        let mut bulk: Vec<(u64, u64)> = keys[..loaded].iter().map(|&k| (k, k)).collect();
        bulk.sort_unstable();
        idx.bulkload(bulk).expect("distinct keys");
        for &k in &keys[loaded..] {
            idx.insert(k, k).expect("fresh key");
        }
        for &k in keys.iter().step_by(7) {
            idx.delete(k).expect("present key");
        }
        let audit = idx.audit();
        t.check(audit.is_clean(), || format!("{provenance} n={n}: {audit:?}"));

        idx.reset_counters();
        let mut wrong = 0;
        for (i, &k) in keys.iter().enumerate() {
            let want = (i % 7 != 0).then_some(k);
            wrong += (idx.get(k) != want) as usize;
            idx.get(k.wrapping_add(1));
        }
        let c = idx.counters();
        t.check(wrong == 0, || format!("{provenance} n={n}: {wrong} wrong lookups"));
        t.check(c.key_comparisons <= c.lookups, || {
            format!("{provenance} n={n}: {} comparisons for {} lookups", c.key_comparisons, c.lookups)
        });
    }
    t
}

/// Mixed operations against `BTreeMap`: 40% lookup, 40% insert, 10%
/// delete, 5% update, 5% range, with periodic audits.
pub fn oracle_run(ops: usize, seed: u64) -> OracleRun {
    let t = oracle_suite(ops, seed);
    OracleRun { ops, checks: t.checks, divergences: t.failures, first: t.first }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleRun {
    pub ops: usize,
    /// Operation results plus audits and final comparisons.
    pub checks: u64,
    pub divergences: u64,
    pub first: Option<String>,
}

fn oracle_suite(ops: usize, seed: u64) -> Tally {
    let mut t = Tally::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keys are scrambled draws from a domain small enough to repeat
    let domain = (ops as u64 / 2).max(16);
    let key_of = |d: u64| d.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let span = u64::MAX / domain * 20;
    let mut idx = LippIndex::<u64>::new();
    let mut oracle = BTreeMap::new();
    for op in 0..ops {
        let key = key_of(rng.random_range(0..domain));
        let roll = rng.random_range(0..100);
        let ok = match roll {
            0..=39 => idx.get(key) == oracle.get(&key).copied(),
            40..=79 => {
                let v = rng.random::<u64>();
                let got = idx.insert(key, v);
                let want_ok = !oracle.contains_key(&key);
                if want_ok {
                    oracle.insert(key, v);
                }
                match got {
                    Ok(()) => want_ok,
                    Err(Error::AlreadyExists) => !want_ok,
                    Err(_) => false,
                }
            }
            80..=89 => idx.remove(key).ok() == oracle.remove(&key),
            90..=94 => {
                let v = rng.random::<u64>();
                let got = idx.update(key, v).ok();
                let want = oracle.get_mut(&key).map(|slot| std::mem::replace(slot, v));
                got == want
            }
            _ => {
                let hi = key.saturating_add(rng.random_range(0..span));
                let got = idx.range(key, hi).unwrap_or_default();
                got.iter().copied().eq(oracle.range(key..=hi).map(|(&k, &v)| (k, v)))
            }
        };
        t.check(ok, || format!("op {op} (roll {roll}) on key {key} diverged"));
        if op % 100_000 == 99_999 {
            let audit = idx.audit();
            t.check(audit.is_clean(), || format!("audit after op {op}: {audit:?}"));
        }
    }
    t.check(idx.len() == oracle.len(), || format!("len {} vs {}", idx.len(), oracle.len()));
    t.check(idx.to_vec().into_iter().eq(oracle), || "final contents differ".into());
    t
}

fn height_suite(cases: usize, rng: &mut impl Rng) -> Tally {
    let mut t = Tally::new();
    for _ in 0..cases {
        let n = 200_000;
        let data = generate(Provenance::Uniform, n, rng.random()).expect("valid generator");
        let mut bulk = LippIndex::<u64>::new();
        bulk.bulkload(data.keys.iter().map(|&k| (k, k)).collect()).expect("distinct keys");
        let s = bulk.stats();
        t.check(s.avg_depth <= 3.5 && s.max_depth <= 10, || format!("bulkload n={n}: avg {} max {}", s.avg_depth, s.max_depth));

        let mut keys = data.keys;
        keys.shuffle(rng);
        let mut grown = LippIndex::<u64>::new();
        for &k in &keys {
            grown.insert(k, k).expect("fresh key");
        }
        let s = grown.stats();
        let bound = 2.0 * (n as f64).log2();
        t.check(s.avg_depth <= 4.0 && s.max_depth as f64 <= bound, || {
            format!("inserts n={n}: avg {} max {} (bound {bound:.1})", s.avg_depth, s.max_depth)
        });
    }
    t
}
