//! Workload execution against the learned index or an ordered-map baseline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::index::{LippIndex, Params};
use crate::key::{Key, KeyType};

/// Operation mix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mix {
    ReadOnly,
    ReadHeavy,
    WriteHeavy,
    WriteOnly,
}

impl Mix {
    pub const ALL: [Mix; 4] = [Mix::ReadOnly, Mix::ReadHeavy, Mix::WriteHeavy, Mix::WriteOnly];

    pub fn name(self) -> &'static str {
        match self {
            Mix::ReadOnly => "read-only",
            Mix::ReadHeavy => "read-heavy",
            Mix::WriteHeavy => "write-heavy",
            Mix::WriteOnly => "write-only",
        }
    }

    /// Percentage of operations that are inserts.
    pub fn insert_percent(self) -> u64 {
        match self {
            Mix::ReadOnly => 0,
            Mix::ReadHeavy => 33,
            Mix::WriteHeavy => 67,
            Mix::WriteOnly => 100,
        }
    }

    /// Exact (inserts, lookups) for `ops` operations.
    pub fn split(self, ops: u64) -> (u64, u64) {
        let inserts = (ops as u128 * self.insert_percent() as u128 / 100) as u64;
        (inserts, ops - inserts)
    }
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        Mix::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::Workload(format!("unknown workload {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkloadSpec {
    pub mix: Mix,
    pub ops: u64,
    /// Keys bulkloaded before the timed operations start.
    pub bulkload_count: usize,
    pub seed: u64,
}

/// The operations a benchmarked structure must support.
pub trait BenchIndex<K: Key> {
    fn name(&self) -> &'static str;
    fn bulkload(&mut self, items: Vec<(K, u64)>) -> Result<()>;
    fn insert(&mut self, key: K, payload: u64) -> Result<()>;
    fn get(&self, key: K) -> Option<u64>;
    /// Learned-index internals, when there are any.
    fn structure(&self) -> Option<Structure> {
        None
    }
    /// Bytes of index structure, if the structure can tell.
    fn index_bytes(&self) -> Option<usize> {
        None
    }
}

/// Structural measurements of a learned index after a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Structure {
    pub avg_height: f64,
    pub max_height: usize,
    pub nodes: usize,
    pub adjustments: u64,
    pub adjust_secs: f64,
    pub conflicts: u64,
}

impl<K: Key> BenchIndex<K> for LippIndex<K> {
    fn name(&self) -> &'static str {
        "lipp"
    }

    fn bulkload(&mut self, items: Vec<(K, u64)>) -> Result<()> {
        LippIndex::bulkload(self, items)
    }

    fn insert(&mut self, key: K, payload: u64) -> Result<()> {
        LippIndex::insert(self, key, payload)
    }

    #[inline]
    fn get(&self, key: K) -> Option<u64> {
        LippIndex::get(self, key)
    }

    fn structure(&self) -> Option<Structure> {
        let s = self.stats();
        let c = self.counters();
        Some(Structure {
            avg_height: s.avg_depth,
            max_height: s.max_depth,
            nodes: s.nodes,
            adjustments: s.adjustments,
            adjust_secs: s.adjust_time_secs,
            conflicts: c.conflicts,
        })
    }

    fn index_bytes(&self) -> Option<usize> {
        Some(self.stats().index_bytes)
    }
}

/// Order-preserving u64 image of a key, so the baseline can use a plain
/// `BTreeMap<u64, u64>`.
#[inline]
pub fn order_bits<K: Key>(key: K) -> u64 {
    match K::TYPE {
        KeyType::U64 => key.to_bits(),
        KeyType::F64 => {
            let x = key.to_f64();
            let bits = if x == 0.0 { 0 } else { x.to_bits() };
            if bits >> 63 == 1 {
                !bits
            } else {
                bits | (1 << 63)
            }
        }
    }
}

/// The standard library's ordered map.
#[derive(Default)]
pub struct Baseline {
    map: BTreeMap<u64, u64>,
}

impl Baseline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl<K: Key> BenchIndex<K> for Baseline {
    fn name(&self) -> &'static str {
        "btreemap"
    }

    fn bulkload(&mut self, items: Vec<(K, u64)>) -> Result<()> {
        if !self.map.is_empty() {
            return Err(Error::NotEmpty);
        }
        let n = items.len();
        self.map = items.into_iter().map(|(k, v)| (order_bits(k), v)).collect();
        if self.map.len() != n {
            self.map.clear();
            return Err(Error::DuplicateKey);
        }
        Ok(())
    }

    fn insert(&mut self, key: K, payload: u64) -> Result<()> {
        match self.map.entry(order_bits(key)) {
            std::collections::btree_map::Entry::Occupied(_) => Err(Error::AlreadyExists),
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(payload);
                Ok(())
            }
        }
    }

    #[inline]
    fn get(&self, key: K) -> Option<u64> {
        self.map.get(&order_bits(key)).copied()
    }
}

/// Benchmark result, serialized as one flat JSON object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub index: String,
    pub workload: String,
    pub seed: u64,
    pub dataset: String,
    /// File the keys were read from, when they came from one.
    pub dataset_path: Option<String>,
    pub dataset_seed: u64,
    pub dataset_keys: usize,
    pub key_type: String,
    pub ops: u64,
    pub bulkload: usize,
    pub lookups: u64,
    pub inserts: u64,
    pub found: u64,
    pub errors: u64,
    pub elapsed_secs: f64,
    pub throughput_ops: f64,
    pub mean_latency_ns: f64,
    pub p50_latency_ns: u64,
    pub p99_latency_ns: u64,
    pub latency_stddev_ns: f64,
    pub adjustments: Option<u64>,
    pub adjust_time_secs: Option<f64>,
    pub adjust_time_fraction: Option<f64>,
    pub avg_height: Option<f64>,
    pub max_height: Option<usize>,
    pub nodes: Option<usize>,
    pub conflicts: Option<u64>,
    pub index_bytes: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub max_len: Option<usize>,
    pub min_adjust_elements: Option<usize>,
    pub overflow_capacity: Option<usize>,
    pub kernel: Option<String>,
    pub baseline_throughput_ops: Option<f64>,
    /// This run's throughput over the baseline's.
    pub throughput_ratio: Option<f64>,
}

impl Report {
    pub fn set_params(&mut self, p: &Params) {
        self.alpha = Some(p.alpha);
        self.beta = Some(p.beta);
        self.delta = Some(p.delta);
        self.max_len = Some(p.max_len);
        self.min_adjust_elements = Some(p.min_adjust_elements);
        self.overflow_capacity = Some(p.overflow_capacity);
        self.kernel = Some(p.kernel.to_string());
    }

    /// Records `baseline` as the reference for this run.
    pub fn compare_with(&mut self, baseline: &Report) {
        self.baseline_throughput_ops = Some(baseline.throughput_ops);
        self.throughput_ratio = (baseline.throughput_ops > 0.0).then(|| self.throughput_ops / baseline.throughput_ops);
    }

    pub fn to_json(&self, pretty: bool) -> String {
        if pretty {
            serde_json::to_string_pretty(self).expect("report serializes")
        } else {
            serde_json::to_string(self).expect("report serializes")
        }
    }
}

/// Derived sub-seeds, one stream per purpose.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The shuffled keys and operation schedule of a run. Exposed so that
/// structures can be driven identically outside [`run_workload`].
pub struct Plan<K> {
    /// Dataset keys in shuffled order: the first `bulkload_count` are
    /// loaded up front, the rest are inserted in order.
    pub keys: Vec<K>,
    /// `true` for an insert.
    pub schedule: Vec<bool>,
    pub lookup_rng: ChaCha8Rng,
}

impl<K: Key> Plan<K> {
    pub fn new(dataset: &Dataset<K>, spec: &WorkloadSpec) -> Result<Self> {
        let (inserts, lookups) = spec.mix.split(spec.ops);
        let n = dataset.len();
        if spec.bulkload_count > n {
            return Err(Error::Workload(format!("cannot bulkload {} of {n} keys", spec.bulkload_count)));
        }
        let held_out = (n - spec.bulkload_count) as u64;
        if inserts > held_out {
            return Err(Error::Workload(format!("{inserts} inserts requested but only {held_out} keys are held out")));
        }
        if lookups > 0 && spec.bulkload_count == 0 {
            return Err(Error::Workload("lookups need bulkloaded keys".into()));
        }
        let mut keys = dataset.keys.clone();
        keys.shuffle(&mut stream(spec.seed, 1));
        let mut schedule: Vec<bool> = (0..spec.ops).map(|i| i < inserts).collect();
        schedule.shuffle(&mut stream(spec.seed, 2));
        Ok(Plan { keys, schedule, lookup_rng: stream(spec.seed, 3) })
    }
}

/// One operation in this many is timed individually for the latency
/// statistics; timing every one would inflate throughput figures by the
/// cost of the clock reads.
pub const LATENCY_SAMPLE: usize = 8;

/// Payload stored with the key at shuffled position `i`.
#[inline]
fn payload(i: usize) -> u64 {
    i as u64 ^ 0x5bd1_e995
}

/// Runs `spec` on `index`, which must be empty. Lookups target keys that
/// are already present; inserts take held-out keys in shuffled order.
pub fn run_workload<K: Key, I: BenchIndex<K>>(index: &mut I, dataset: &Dataset<K>, spec: &WorkloadSpec) -> Result<Report> {
    let Plan { keys, schedule, mut lookup_rng } = Plan::new(dataset, spec)?;
    let loaded = spec.bulkload_count;
    if loaded > 0 {
        let mut items: Vec<(K, u64)> = keys[..loaded].iter().enumerate().map(|(i, &k)| (k, payload(i))).collect();
        items.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("dataset keys are ordered"));
        index.bulkload(items)?;
    }

    let mut latencies: Vec<u64> = Vec::with_capacity(schedule.len() / LATENCY_SAMPLE + 1);
    let (mut present, mut found, mut errors, mut lookups, mut inserts) = (loaded, 0u64, 0u64, 0u64, 0u64);
    let started = Instant::now();
    for (op, &is_insert) in schedule.iter().enumerate() {
        let t = (op % LATENCY_SAMPLE == 0).then(Instant::now);
        if is_insert {
            let r = index.insert(keys[present], payload(present));
            errors += r.is_err() as u64;
            present += 1;
            inserts += 1;
        } else {
            let i = lookup_rng.random_range(0..present);
            let r = index.get(keys[i]);
            found += r.is_some() as u64;
            errors += (r != Some(payload(i))) as u64;
            lookups += 1;
        }
        if let Some(t) = t {
            latencies.push(t.elapsed().as_nanos() as u64);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();

    let mut report = Report {
        index: index.name().to_string(),
        workload: spec.mix.to_string(),
        seed: spec.seed,
        dataset: dataset.provenance.to_string(),
        dataset_seed: dataset.seed,
        dataset_keys: dataset.len(),
        key_type: format!("{:?}", K::TYPE).to_lowercase(),
        ops: spec.ops,
        bulkload: loaded,
        lookups,
        inserts,
        found,
        errors,
        elapsed_secs: elapsed,
        throughput_ops: if elapsed > 0.0 { spec.ops as f64 / elapsed } else { 0.0 },
        index_bytes: index.index_bytes(),
        ..Report::default()
    };
    fill_latency(&mut report, &mut latencies);
    if let Some(s) = index.structure() {
        report.adjustments = Some(s.adjustments);
        report.adjust_time_secs = Some(s.adjust_secs);
        report.adjust_time_fraction = Some(if elapsed > 0.0 { s.adjust_secs / elapsed } else { 0.0 });
        report.avg_height = Some(s.avg_height);
        report.max_height = Some(s.max_height);
        report.nodes = Some(s.nodes);
        report.conflicts = Some(s.conflicts);
    }
    Ok(report)
}

fn fill_latency(report: &mut Report, latencies: &mut [u64]) {
    if latencies.is_empty() {
        return;
    }
    let n = latencies.len() as f64;
    let mean = latencies.iter().map(|&l| l as f64).sum::<f64>() / n;
    let var = latencies.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / n;
    latencies.sort_unstable();
    let rank = |q: f64| latencies[((q * n).ceil() as usize).clamp(1, latencies.len()) - 1];
    report.mean_latency_ns = mean;
    report.p50_latency_ns = rank(0.5);
    report.p99_latency_ns = rank(0.99);
    report.latency_stddev_ns = var.sqrt();
}

/// [`run_workload`] on a fresh learned index with `params`.
pub fn run_lipp<K: Key>(dataset: &Dataset<K>, spec: &WorkloadSpec, params: &Params) -> Result<Report> {
    let mut index = LippIndex::with_params(params.clone())?;
    let mut report = run_workload(&mut index, dataset, spec)?;
    report.set_params(params);
    Ok(report)
}

/// [`run_workload`] on the ordered-map baseline.
pub fn run_baseline<K: Key>(dataset: &Dataset<K>, spec: &WorkloadSpec) -> Result<Report> {
    run_workload(&mut Baseline::new(), dataset, spec)
}

/// Parameter varied by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Alpha,
    Beta,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            _ => Err(Error::InvalidParam(format!("cannot sweep {s:?}; expected alpha or beta"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
        })
    }
}

/// One run per value of `param`, everything else taken from `base`. All
/// values are validated before the first run.
pub fn sweep<K: Key>(
    param: SweepParam,
    values: &[f64],
    dataset: &Dataset<K>,
    spec: &WorkloadSpec,
    base: &Params,
) -> Result<Vec<Report>> {
    if values.is_empty() {
        return Err(Error::InvalidParam("sweep needs at least one value".into()));
    }
    let configs: Vec<Params> = values
        .iter()
        .map(|&v| {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!("{param} must be positive, got {v}")));
            }
            let p = match param {
                SweepParam::Alpha => Params { alpha: v, ..base.clone() },
                SweepParam::Beta => Params { beta: v, ..base.clone() },
            };
            p.validate()?;
            Ok(p)
        })
        .collect::<Result<_>>()?;
    configs.iter().map(|p| run_lipp(dataset, spec, p)).collect()
}
