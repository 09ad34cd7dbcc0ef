//! An in-memory ordered index whose nodes place every key exactly where a
//! per-node linear model predicts it, so lookups never search inside a
//! node.
//!
//! ```
//! use lipp::LippIndex;
//!
//! let mut index = LippIndex::<u64>::new();
//! index.bulkload((0..1000).map(|k| (k * 3, k)).collect()).unwrap();
//! index.insert(1, 42).unwrap();
//! assert_eq!(index.get(1), Some(42));
//! assert_eq!(index.range(0, 6).unwrap(), vec![(0, 0), (1, 42), (3, 1), (6, 2)]);
//! ```

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fmcd;
pub mod index;
pub mod kernel;
pub mod key;
pub mod node;
pub mod verify;
pub mod workload;

pub use error::{Error, Result};
pub use fmcd::{brute_force_min_t, fit_linear_regression, fmcd, realized_conflict_profile, FmcdResult};
pub use index::{LippIndex, LookupResult, Params};
pub use kernel::{KernelFn, Model};
pub use key::{Key, KeyType};
