//! Minimum-conflict-degree model fitting.
//!
//! [`fmcd`] finds, in one forward pass, the smallest conflict degree `T`
//! for which a monotone linear model over the kernel can map every window
//! of `T + 1` consecutive keys to distinct positions while keeping at most
//! about `T` keys on each boundary position. [`brute_force_min_t`] is the
//! quadratic enumeration it is checked against, and
//! [`fit_linear_regression`] is the least-squares baseline.

use crate::error::{Error, Result};
use crate::kernel::{KernelFn, Model};
use crate::key::Key;

/// Model returned by [`fmcd`] along with its conflict degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FmcdResult<K> {
    pub model: Model<K>,
    pub conflict_degree: usize,
}

/// Checks that `keys` are valid for `kernel`, strictly ascending, and that
/// the kernel keeps neighbours apart.
pub fn validate_keys<K: Key>(keys: &[K], kernel: &KernelFn) -> Result<()> {
    if keys.is_empty() {
        return Err(Error::Empty);
    }
    for (i, &k) in keys.iter().enumerate() {
        kernel.check(k)?;
        if i > 0 {
            if !(keys[i - 1] < k) {
                return Err(Error::Unsorted { index: i });
            }
            if !(kernel.gap(keys[i - 1], k) > 0.0) {
                return Err(Error::KernelTie { index: i });
            }
        }
    }
    Ok(())
}

fn check_len(n: usize, len: usize) -> Result<()> {
    let need = match n {
        1 => 1,
        2 => 2,
        _ => 3,
    };
    if len < need {
        Err(Error::InvalidLength { len, keys: n })
    } else {
        Ok(())
    }
}

/// Fits the minimum-conflict-degree model for `keys` in a node of `len`
/// entries.
pub fn fmcd<K: Key>(keys: &[K], len: usize, kernel: &KernelFn) -> Result<FmcdResult<K>> {
    validate_keys(keys, kernel)?;
    check_len(keys.len(), len)?;
    Ok(fmcd_by(keys.len(), |i| keys[i], len, kernel))
}

/// Unchecked core of [`fmcd`] over an indexed key accessor.
pub(crate) fn fmcd_by<K: Key>(
    n: usize,
    key_at: impl Fn(usize) -> K,
    len: usize,
    kernel: &KernelFn,
) -> FmcdResult<K> {
    let first = key_at(0);
    match n {
        1 => {
            return FmcdResult {
                model: Model::anchored(kernel, 0.0, 0.0, first),
                conflict_degree: 1,
            }
        }
        2 => {
            let slope = (len - 1) as f64 / kernel.gap(first, key_at(1));
            return FmcdResult {
                model: Model::anchored(kernel, slope, 0.0, first),
                conflict_degree: 1,
            };
        }
        _ => {}
    }

    let span = (len - 2) as f64;
    let g = |i: usize| kernel.gap(first, key_at(i));
    let bound = |t: usize| (g(n - 1 - t) - g(t)) / span;

    let mut i = 0;
    let mut t = 1;
    let mut u = bound(t);
    while i + t < n {
        while i + t < n && kernel.gap(key_at(i), key_at(i + t)) >= u {
            i += 1;
        }
        if i + t >= n {
            break;
        }
        t += 1;
        u = bound(t);
    }

    let model = if u > 0.0 {
        let slope = 1.0 / u;
        let offset = (len as f64 - slope * (g(n - 1 - t) + g(t))) / 2.0;
        Model::anchored(kernel, slope, offset, first)
    } else {
        let spread = spread_model(n, &key_at, len, kernel);
        if respects_degree(&spread, n, &key_at, len, kernel, t) {
            spread
        } else {
            split_model(t, &key_at, len, kernel)
        }
    };
    FmcdResult { model, conflict_degree: t }
}

/// True when no interior position holds more than `t` keys and neither
/// boundary position holds more than `t + 1`.
fn respects_degree<K: Key>(
    model: &Model<K>,
    n: usize,
    key_at: &impl Fn(usize) -> K,
    len: usize,
    kernel: &KernelFn,
    t: usize,
) -> bool {
    let mut run_pos = usize::MAX;
    let mut run = 0;
    for i in 0..n {
        let pos = model.predict(kernel, key_at(i), len);
        if pos == run_pos {
            run += 1;
        } else {
            run_pos = pos;
            run = 1;
        }
        let limit = if pos == 0 || pos == len - 1 { t + 1 } else { t };
        if run > limit {
            return false;
        }
    }
    true
}

/// Sends `k[0..=t]` to position 0 and the remaining keys to the last
/// position.
fn split_model<K: Key>(t: usize, key_at: &impl Fn(usize) -> K, len: usize, kernel: &KernelFn) -> Model<K> {
    let first = key_at(0);
    let slope = (len - 1) as f64 / kernel.gap(key_at(t), key_at(t + 1));
    let offset = -slope * kernel.gap(first, key_at(t));
    Model::anchored(kernel, slope, offset, first)
}

/// Spreads the whole key range over positions `1 ..= L-1`.
pub(crate) fn spread_model<K: Key>(
    n: usize,
    key_at: &impl Fn(usize) -> K,
    len: usize,
    kernel: &KernelFn,
) -> Model<K> {
    let first = key_at(0);
    let slope = (len - 2) as f64 / kernel.gap(first, key_at(n - 1));
    Model::anchored(kernel, slope, 1.0, first)
}

/// Smallest `T >= 1` such that every window of `T + 1` keys spans at least
/// `U_T = (G(k[N-1-T]) - G(k[T])) / (L - 2)` in kernel space; a
/// non-positive `U_T` satisfies the condition vacuously.
pub fn brute_force_min_t<K: Key>(keys: &[K], len: usize, kernel: &KernelFn) -> Result<usize> {
    validate_keys(keys, kernel)?;
    check_len(keys.len(), len)?;
    let n = keys.len();
    if n <= 2 {
        return Ok(1);
    }
    let g: Vec<f64> = keys.iter().map(|&k| kernel.eval_unchecked(k)).collect();
    let span = (len - 2) as f64;
    for t in 1..n {
        let u = (g[n - 1 - t] - g[t]) / span;
        if u <= 0.0 || (0..n - t).all(|i| g[i + t] - g[i] >= u) {
            return Ok(t);
        }
    }
    unreachable!("U_T turns non-positive once T >= (N - 1) / 2")
}

/// Per-position occupancy of `keys` under `model` in a node of `len`
/// entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictProfile {
    pub occupancy: Vec<u32>,
    pub max: usize,
}

impl ConflictProfile {
    /// Non-empty positions and their counts, ascending by position.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.occupancy.iter().enumerate().filter(|(_, &c)| c > 0).map(|(p, &c)| (p, c))
    }
}

/// Counts how many keys the model sends to each position; the maximum is
/// the realized conflict degree.
pub fn realized_conflict_profile<K: Key>(
    model: &Model<K>,
    keys: &[K],
    len: usize,
    kernel: &KernelFn,
) -> Result<ConflictProfile> {
    if len == 0 {
        return Err(Error::InvalidLength { len, keys: keys.len() });
    }
    for (i, w) in keys.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::Unsorted { index: i + 1 });
        }
    }
    let mut occupancy = vec![0u32; len];
    for &k in keys {
        occupancy[model.try_predict(kernel, k, len)?] += 1;
    }
    let max = occupancy.iter().copied().max().unwrap_or(0) as usize;
    Ok(ConflictProfile { occupancy, max })
}

/// Least-squares fit of the evenly spread targets `i * (L-1) / (N-1)`
/// against `G(k_i)`, slope clamped at zero.
pub fn fit_linear_regression<K: Key>(keys: &[K], len: usize, kernel: &KernelFn) -> Result<Model<K>> {
    if keys.len() < 2 {
        return Err(Error::InvalidParam("linear regression needs at least two keys".into()));
    }
    validate_keys(keys, kernel)?;
    let n = keys.len();
    let first = keys[0];
    let step = (len.max(1) - 1) as f64 / (n - 1) as f64;
    let xs = keys.iter().map(|&k| kernel.gap(first, k));
    let mean_x = xs.clone().sum::<f64>() / n as f64;
    let mean_y = step * (n - 1) as f64 / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, x) in xs.enumerate() {
        let dx = x - mean_x;
        sxy += dx * (i as f64 * step - mean_y);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    Ok(Model::anchored(kernel, slope, mean_y - slope * mean_x, first))
}
