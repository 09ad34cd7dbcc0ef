//! Key types accepted by the index.
//!
//! Keys are 64-bit, totally ordered values. Two concrete types are
//! supported: unsigned integers and finite doubles.

use std::fmt::{Debug, Display};

/// Key type tag as stored in dataset files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyType {
    U64,
    F64,
}

impl KeyType {
    pub fn tag(self) -> u8 {
        match self {
            KeyType::U64 => 0,
            KeyType::F64 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(KeyType::U64),
            1 => Some(KeyType::F64),
            _ => None,
        }
    }
}

pub trait Key: Copy + PartialOrd + Debug + Display + Send + Sync + 'static {
    const TYPE: KeyType;
    const ZERO: Self;

    /// False for NaN and infinities.
    fn is_valid(self) -> bool;

    fn to_f64(self) -> f64;

    /// `self - origin` as a double. Computed without first converting both
    /// operands to doubles where the representation allows it, so nearby
    /// large integers keep their distance.
    fn diff(self, origin: Self) -> f64;

    fn to_bits(self) -> u64;

    fn from_bits(bits: u64) -> Self;
}

impl Key for u64 {
    const TYPE: KeyType = KeyType::U64;
    const ZERO: Self = 0;

    #[inline]
    fn is_valid(self) -> bool {
        true
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn diff(self, origin: Self) -> f64 {
        if self >= origin {
            (self - origin) as f64
        } else {
            -((origin - self) as f64)
        }
    }

    #[inline]
    fn to_bits(self) -> u64 {
        self
    }

    #[inline]
    fn from_bits(bits: u64) -> Self {
        bits
    }
}

/// Largest magnitude accepted for double keys, so that the distance
/// between any two keys stays finite.
pub const F64_KEY_LIMIT: f64 = 1e300;

impl Key for f64 {
    const TYPE: KeyType = KeyType::F64;
    const ZERO: Self = 0.0;

    #[inline]
    fn is_valid(self) -> bool {
        self.abs() <= F64_KEY_LIMIT
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn diff(self, origin: Self) -> f64 {
        self - origin
    }

    #[inline]
    fn to_bits(self) -> u64 {
        f64::to_bits(self)
    }

    #[inline]
    fn from_bits(bits: u64) -> Self {
        f64::from_bits(bits)
    }
}
