//! Monotone kernel functions and the clamped kernelized linear model that
//! maps a key to an entry position.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::key::Key;

/// Largest argument for which `exp` stays finite.
const EXP_MAX: f64 = 709.0;
/// Below this `exp` loses enough precision that distinct keys collapse.
const EXP_MIN: f64 = -700.0;
/// Number of points at which a polynomial's derivative is sampled.
const POLY_SAMPLES: usize = 1025;

/// A polynomial kernel `c0 + c1*x + c2*x^2 + ...`, valid on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Polynomial {
    /// Builds a polynomial kernel and checks that it is increasing on
    /// `[lo, hi]` by sampling the sign of its derivative.
    pub fn new(coeffs: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidKernel("polynomial needs finite coefficients".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidKernel(format!("bad polynomial domain [{lo}, {hi}]")));
        }
        let poly = Polynomial { coeffs, lo, hi };
        for i in 0..POLY_SAMPLES {
            let x = lo + (hi - lo) * (i as f64) / ((POLY_SAMPLES - 1) as f64);
            let d = poly.derivative(x);
            if !(d > 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "polynomial is not increasing at x = {x} (derivative {d})"
                )));
            }
        }
        Ok(poly)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * x + c * i as f64)
    }
}

/// A strictly increasing transform applied to keys before the linear model.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum KernelFn {
    #[default]
    Linear,
    /// `x^2`, positive keys only.
    Quadratic,
    /// `e^x`.
    Exponential,
    /// `ln x`, positive keys only.
    Logarithmic,
    Polynomial(Polynomial),
}

impl KernelFn {
    /// Parses a kernel name. Polynomial kernels (`poly:c0,c1,...`) need the
    /// key interval over which they must be monotone.
    pub fn parse(name: &str, domain: Option<(f64, f64)>) -> Result<Self> {
        match name {
            "linear" => Ok(KernelFn::Linear),
            "pow2" => Ok(KernelFn::Quadratic),
            "exp" => Ok(KernelFn::Exponential),
            "log" => Ok(KernelFn::Logarithmic),
            _ => {
                let Some(list) = name.strip_prefix("poly:") else {
                    return Err(Error::InvalidKernel(format!("unknown kernel '{name}'")));
                };
                let coeffs = list
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidKernel(format!("bad coefficient: {e}")))?;
                let (lo, hi) = domain.ok_or_else(|| {
                    Error::InvalidKernel("polynomial kernel needs an explicit key domain".into())
                })?;
                Ok(KernelFn::Polynomial(Polynomial::new(coeffs, lo, hi)?))
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelFn::Linear)
    }

    /// Fails when `key` lies outside the interval where this kernel is
    /// finite and strictly increasing.
    pub fn check<K: Key>(&self, key: K) -> Result<()> {
        if !key.is_valid() {
            return Err(Error::InvalidKey(format!("{key}")));
        }
        let x = key.to_f64();
        let ok = match self {
            KernelFn::Linear => true,
            KernelFn::Quadratic | KernelFn::Logarithmic => x > 0.0,
            KernelFn::Exponential => (EXP_MIN..=EXP_MAX).contains(&x),
            KernelFn::Polynomial(p) => x >= p.lo && x <= p.hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::KernelDomain { kernel: self.to_string(), key: format!("{key}") })
        }
    }

    /// `G(key)`.
    pub fn eval<K: Key>(&self, key: K) -> Result<f64> {
        self.check(key)?;
        Ok(self.eval_unchecked(key))
    }

    #[inline]
    pub(crate) fn eval_unchecked<K: Key>(&self, key: K) -> f64 {
        match self {
            KernelFn::Linear => key.to_f64(),
            other => other.eval_nonlinear(key.to_f64()),
        }
    }

    // Kept out of line: once inlined, the compiler evaluates every arm
    // eagerly and the linear path pays for exp and ln on each call.
    #[inline(never)]
    fn eval_nonlinear(&self, x: f64) -> f64 {
        match self {
            KernelFn::Linear => x,
            KernelFn::Quadratic => x * x,
            KernelFn::Exponential => x.exp(),
            KernelFn::Logarithmic => x.ln(),
            KernelFn::Polynomial(p) => p.value(x),
        }
    }

    /// `G(hi) - G(lo)`, exact up to one rounding for the linear kernel.
    #[inline]
    pub(crate) fn gap<K: Key>(&self, lo: K, hi: K) -> f64 {
        match self {
            KernelFn::Linear => hi.diff(lo),
            _ => self.eval_unchecked(hi) - self.eval_unchecked(lo),
        }
    }
}

impl fmt::Display for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFn::Linear => f.write_str("linear"),
            KernelFn::Quadratic => f.write_str("pow2"),
            KernelFn::Exponential => f.write_str("exp"),
            KernelFn::Logarithmic => f.write_str("log"),
            KernelFn::Polynomial(p) => {
                f.write_str("poly:")?;
                for (i, c) in p.coeffs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for KernelFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelFn::parse(s, None)
    }
}

/// Clamped linear position model over a kernel: `floor(A * G(k) + b)`
/// restricted to `[0, L-1]`.
///
/// Internally the model is anchored at an origin key so that the kernel
/// value is taken relative to it; this keeps nodes deep in the tree, whose
/// keys are close together but large in magnitude, from losing resolution.
/// [`Model::intercept`] reports the equivalent unanchored intercept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Model<K> {
    slope: f64,
    offset: f64,
    origin: K,
    anchor: f64,
    /// Evaluate with the identity kernel whatever the index kernel is.
    identity: bool,
}

impl<K: Key> Model<K> {
    /// A model in plain slope/intercept form.
    pub fn new(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope.is_finite() && slope >= 0.0) || !intercept.is_finite() {
            return Err(Error::InvalidParam(format!(
                "model needs finite A >= 0 and finite b (got A = {slope}, b = {intercept})"
            )));
        }
        Ok(Model { slope, offset: intercept, origin: K::ZERO, anchor: 0.0, identity: false })
    }

    /// `raw(k) = slope * (G(k) - G(origin)) + offset`. A model anchored on
    /// the linear kernel keeps using it even inside an index configured
    /// with another kernel.
    pub(crate) fn anchored(kernel: &KernelFn, slope: f64, offset: f64, origin: K) -> Self {
        debug_assert!(slope.is_finite() && slope >= 0.0, "slope {slope}");
        debug_assert!(offset.is_finite(), "offset {offset}");
        Model {
            slope,
            offset,
            origin,
            anchor: kernel.eval_unchecked(origin),
            identity: kernel.is_linear(),
        }
    }

    /// Slope, offset, origin and anchor as raw words, plus the identity flag.
    #[inline]
    pub(crate) fn to_words(self) -> ([u64; 4], bool) {
        ([self.slope.to_bits(), self.offset.to_bits(), self.origin.to_bits(), self.anchor.to_bits()], self.identity)
    }

    #[inline]
    pub(crate) fn from_words(w: [u64; 4], identity: bool) -> Self {
        Model {
            slope: f64::from_bits(w[0]),
            offset: f64::from_bits(w[1]),
            origin: K::from_bits(w[2]),
            anchor: f64::from_bits(w[3]),
            identity,
        }
    }

    /// `A`.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// `b` in `A * G(k) + b`.
    pub fn intercept(&self) -> f64 {
        self.offset - self.slope * self.anchor
    }

    #[inline]
    pub fn raw(&self, kernel: &KernelFn, key: K) -> f64 {
        let base = match kernel {
            _ if self.identity => key.diff(self.origin),
            KernelFn::Linear => key.diff(self.origin),
            other => other.eval_unchecked(key) - self.anchor,
        };
        self.slope * base + self.offset
    }

    /// Entry position for `key` in a node of `len` entries. The key must
    /// already be known to lie in the kernel's domain.
    #[inline]
    pub fn predict(&self, kernel: &KernelFn, key: K, len: usize) -> usize {
        clamp_position(self.raw(kernel, key), len)
    }

    /// Like [`Model::predict`] but validates the key and `len`.
    pub fn try_predict(&self, kernel: &KernelFn, key: K, len: usize) -> Result<usize> {
        if len == 0 {
            return Err(Error::InvalidLength { len, keys: 0 });
        }
        kernel.check(key)?;
        Ok(self.predict(kernel, key, len))
    }
}

/// Floors `raw` and clamps it into `[0, len - 1]`.
#[inline]
pub(crate) fn clamp_position(raw: f64, len: usize) -> usize {
    if !(raw >= 0.0) {
        0
    } else if raw >= len as f64 {
        len - 1
    } else {
        raw as usize
    }
}
