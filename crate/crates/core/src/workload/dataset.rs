//! Key datasets: synthetic generators and the binary file format.
//!
//! File layout, all integers little-endian:
//!
//! | bytes  | contents                         |
//! |--------|----------------------------------|
//! | 0..8   | magic `LIDXKEY1`                 |
//! | 8      | key type, 0 = u64, 1 = f64       |
//! | 9..16  | zero                             |
//! | 16..24 | key count                        |
//! | 24..   | keys, 8 bytes each               |

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::{Key, KeyType};

pub const MAGIC: &[u8; 8] = b"LIDXKEY1";
pub const HEADER_LEN: usize = 24;

/// Function-generated datasets span `[0, 2^62]`.
pub const FUNCTION_KEY_SPAN: f64 = (1u64 << 62) as f64;
/// Growth rate of the `exp` generator, `e^(EXP_RATE * x)`.
pub const EXP_RATE: f64 = 20.0;

/// Where a dataset's keys came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Uniform,
    Lognormal,
    Pow2,
    Pow3,
    Pow4,
    Log,
    Exp,
    File,
}

impl Provenance {
    pub const GENERATED: [Provenance; 7] = [
        Provenance::Uniform,
        Provenance::Lognormal,
        Provenance::Pow2,
        Provenance::Pow3,
        Provenance::Pow4,
        Provenance::Log,
        Provenance::Exp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Provenance::Uniform => "uniform",
            Provenance::Lognormal => "lognormal",
            Provenance::Pow2 => "pow2",
            Provenance::Pow3 => "pow3",
            Provenance::Pow4 => "pow4",
            Provenance::Log => "log",
            Provenance::Exp => "exp",
            Provenance::File => "file",
        }
    }

    fn function(self) -> Option<GenFn> {
        match self {
            Provenance::Pow2 => Some(GenFn::Pow2),
            Provenance::Pow3 => Some(GenFn::Pow3),
            Provenance::Pow4 => Some(GenFn::Pow4),
            Provenance::Log => Some(GenFn::Log),
            Provenance::Exp => Some(GenFn::Exp),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Provenance::GENERATED
            .into_iter()
            .chain([Provenance::File])
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Workload(format!("unknown distribution {s:?}")))
    }
}

/// Generating functions over `x` in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenFn {
    Pow2,
    Pow3,
    Pow4,
    /// `ln(1 + (e^20 - 1) x)`: dense at the high end.
    Log,
    /// `e^(20 x)`: dense at the low end.
    Exp,
}

impl GenFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            GenFn::Pow2 => x * x,
            GenFn::Pow3 => x * x * x,
            GenFn::Pow4 => (x * x) * (x * x),
            GenFn::Log => (x * EXP_RATE.exp_m1()).ln_1p(),
            GenFn::Exp => (EXP_RATE * x).exp(),
        }
    }

    /// Maps `xs` (ascending, inside `[lo, hi]`) through the function and
    /// scales the result onto `[0, 2^62]`. Keys that round together are
    /// nudged apart so the output is strictly ascending.
    pub fn scaled_keys(self, xs: &[f64], lo: f64, hi: f64) -> Vec<u64> {
        let (f_lo, f_hi) = (self.eval(lo), self.eval(hi));
        let scale = FUNCTION_KEY_SPAN / (f_hi - f_lo);
        let mut keys = Vec::with_capacity(xs.len());
        let mut prev: Option<u64> = None;
        for &x in xs {
            let mut k = ((self.eval(x) - f_lo) * scale) as u64;
            if let Some(p) = prev {
                k = k.max(p + 1);
            }
            keys.push(k);
            prev = Some(k);
        }
        keys
    }
}

/// A set of unique keys and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<K> {
    pub provenance: Provenance,
    pub seed: u64,
    pub keys: Vec<K>,
}

impl<K: Key> Dataset<K> {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key_type(&self) -> KeyType {
        K::TYPE
    }

    pub fn min_max(&self) -> Option<(K, K)> {
        let mut it = self.keys.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), k| (if k < lo { k } else { lo }, if k > hi { k } else { hi })))
    }

    /// Writes the dataset in the binary format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(&header(K::TYPE, self.keys.len() as u64))?;
        for &k in &self.keys {
            out.write_all(&k.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.keys.len());
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    /// Reads a dataset whose key type must be `K`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        match AnyDataset::load(path)? {
            AnyDataset::U64(d) if K::TYPE == KeyType::U64 => Ok(Self::retype(d)),
            AnyDataset::F64(d) if K::TYPE == KeyType::F64 => Ok(Self::retype(d)),
            other => Err(Error::Format(format!("expected {:?} keys, file holds {:?} keys", K::TYPE, other.key_type()))),
        }
    }

    fn retype<J: Key>(d: Dataset<J>) -> Self {
        Dataset { provenance: d.provenance, seed: d.seed, keys: d.keys.into_iter().map(|k| K::from_bits(k.to_bits())).collect() }
    }
}

fn header(key_type: KeyType, count: u64) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[..8].copy_from_slice(MAGIC);
    h[8] = key_type.tag();
    h[16..24].copy_from_slice(&count.to_le_bytes());
    h
}

/// A dataset of either key type, as read from a file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyDataset {
    U64(Dataset<u64>),
    F64(Dataset<f64>),
}

impl AnyDataset {
    pub fn key_type(&self) -> KeyType {
        match self {
            AnyDataset::U64(_) => KeyType::U64,
            AnyDataset::F64(_) => KeyType::F64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyDataset::U64(d) => d.len(),
            AnyDataset::F64(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        Self::read_from(BufReader::new(file), Some(len))
    }

    /// Parses the binary format. `total_len`, when known, lets a truncated
    /// file be reported before any key is read.
    pub fn read_from(mut input: impl Read, total_len: Option<u64>) -> Result<Self> {
        let mut h = [0u8; HEADER_LEN];
        input.read_exact(&mut h).map_err(|_| Error::Format("truncated header".into()))?;
        if &h[..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let key_type = KeyType::from_tag(h[8]).ok_or_else(|| Error::Format(format!("unknown key type {}", h[8])))?;
        if h[9..16].iter().any(|&b| b != 0) {
            return Err(Error::Format("non-zero padding".into()));
        }
        let count = u64::from_le_bytes(h[16..24].try_into().expect("8 bytes"));
        if let Some(total) = total_len {
            let want = count.checked_mul(8).and_then(|b| b.checked_add(HEADER_LEN as u64));
            if want != Some(total) {
                return Err(Error::Format(format!("header announces {count} keys but the file has {total} bytes")));
            }
        }
        let mut raw = Vec::with_capacity(count.min(1 << 28) as usize);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            input.read_exact(&mut buf).map_err(|_| Error::Format("truncated key data".into()))?;
            raw.push(u64::from_le_bytes(buf));
        }
        match key_type {
            KeyType::U64 => Ok(AnyDataset::U64(checked(raw)?)),
            KeyType::F64 => Ok(AnyDataset::F64(checked(raw.into_iter().map(f64::from_bits).collect())?)),
        }
    }
}

fn checked<K: Key>(keys: Vec<K>) -> Result<Dataset<K>> {
    if let Some(bad) = keys.iter().find(|k| !k.is_valid()) {
        return Err(Error::Format(format!("invalid key {bad}")));
    }
    let mut sorted = keys.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("valid keys are ordered"));
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Format(format!("duplicate key {}", w[0])));
    }
    Ok(Dataset { provenance: Provenance::File, seed: 0, keys })
}

/// `n` distinct uniformly random u64 keys, ascending.
pub fn gen_uniform(n: usize, seed: u64) -> Dataset<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = distinct(n, || rng.random::<u64>());
    Dataset { provenance: Provenance::Uniform, seed, keys }
}

/// `floor(X * 10^9)` for lognormal `X` with `mu = 0`, ascending and
/// distinct.
pub fn gen_lognormal(n: usize, sigma: f64, seed: u64) -> Result<Dataset<u64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParam(format!("sigma must be positive, got {sigma}")));
    }
    let dist = LogNormal::new(0.0, sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = distinct(n, || loop {
        let v = dist.sample(&mut rng) * 1e9;
        if v < u64::MAX as f64 {
            break v as u64;
        }
    });
    Ok(Dataset { provenance: Provenance::Lognormal, seed, keys })
}

/// Keys `f(x_i)` for `x_i = (i + u_i) / n` with `u_i` uniform in `[0, 1)`.
pub fn gen_by_function(f: GenFn, n: usize, seed: u64) -> Dataset<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random::<f64>()) / n as f64).collect();
    let provenance = match f {
        GenFn::Pow2 => Provenance::Pow2,
        GenFn::Pow3 => Provenance::Pow3,
        GenFn::Pow4 => Provenance::Pow4,
        GenFn::Log => Provenance::Log,
        GenFn::Exp => Provenance::Exp,
    };
    Dataset { provenance, seed, keys: f.scaled_keys(&xs, 0.0, 1.0) }
}

/// Generates any synthetic distribution by name; lognormal uses sigma 2.
pub fn generate(provenance: Provenance, n: usize, seed: u64) -> Result<Dataset<u64>> {
    if n == 0 {
        return Err(Error::Workload("a dataset needs at least one key".into()));
    }
    match provenance {
        Provenance::Uniform => Ok(gen_uniform(n, seed)),
        Provenance::Lognormal => gen_lognormal(n, 2.0, seed),
        Provenance::File => Err(Error::Workload("file datasets are loaded, not generated".into())),
        p => Ok(gen_by_function(p.function().expect("function provenance"), n, seed)),
    }
}

/// Draws until `n` distinct values are collected, then sorts them.
fn distinct(n: usize, mut draw: impl FnMut() -> u64) -> Vec<u64> {
    let mut seen = HashSet::with_capacity(n);
    let mut keys = Vec::with_capacity(n);
    while keys.len() < n {
        let k = draw();
        if seen.insert(k) {
            keys.push(k);
        }
    }
    keys.sort_unstable();
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_key_file_bytes() {
        let d = Dataset { provenance: Provenance::File, seed: 0, keys: vec![1u64] };
        let bytes = d.to_bytes();
        let mut want = b"LIDXKEY1".to_vec();
        want.extend_from_slice(&[0; 8]);
        want.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0]);
        want.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes, want);
    }

    #[test]
    fn rejects_bad_files() {
        let good = Dataset { provenance: Provenance::File, seed: 0, keys: vec![3u64, 1, 2] }.to_bytes();
        let read = |b: &[u8]| AnyDataset::read_from(b, Some(b.len() as u64));
        assert!(matches!(read(&good), Ok(AnyDataset::U64(d)) if d.keys == vec![3, 1, 2]));

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(read(&bad), Err(Error::Format(m)) if m.contains("magic")));
        assert!(matches!(read(&good[..good.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(AnyDataset::read_from(&good[..good.len() - 8], None), Err(Error::Format(_))));
        let mut dup = good.clone();
        dup[24..32].copy_from_slice(&1u64.to_le_bytes());
        assert!(matches!(read(&dup), Err(Error::Format(m)) if m.contains("duplicate")));
        let mut ty = good;
        ty[8] = 7;
        assert!(matches!(read(&ty), Err(Error::Format(_))));
    }

    #[test]
    fn pow2_without_jitter() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let keys = GenFn::Pow2.scaled_keys(&xs, 0.0, 5.0);
        let unit = keys[0] as f64;
        for (k, want) in keys.iter().zip([1.0, 4.0, 9.0, 16.0, 25.0]) {
            assert!((*k as f64 / unit - want).abs() < 1e-9);
        }
    }

    #[test]
    fn generators_are_deterministic_and_distinct() {
        for p in Provenance::GENERATED {
            let a = generate(p, 5000, 9).unwrap();
            assert_eq!(a, generate(p, 5000, 9).unwrap(), "{p}");
            assert_ne!(a.keys, generate(p, 5000, 10).unwrap().keys, "{p}");
            assert!(a.keys.windows(2).all(|w| w[0] < w[1]), "{p}");
        }
        assert!(generate(Provenance::Uniform, 0, 1).is_err());
        assert!(gen_lognormal(10, 0.0, 1).is_err());
    }

    #[test]
    fn names_round_trip() {
        for p in Provenance::GENERATED {
            assert_eq!(p.name().parse::<Provenance>().unwrap(), p);
        }
        assert!("bogus".parse::<Provenance>().is_err());
    }
}
