//! Probabilistic set-membership filters over 64-bit integer keys.
//!
//! Three filter kinds share one engine:
//!
//! * a standard Bloom filter over a flat bit array,
//! * a Blocked Bloom filter, where all bits of a key live in one 512-bit block,
//! * a Blocked Bloom filter with choices ("BlowChoc"), where every key has
//!   `c` candidate blocks and is stored in the one with the lowest insertion
//!   cost. Lookups succeed if any candidate block holds all bits of the key.
//!
//! The crate also contains the evaluation machinery used to compare them
//! (empirical false positive rates, block load histograms, analytic bounds),
//! a sharded single-writer parallel build, a binary file format and
//! readers for integer and DNA q-gram key streams.
//!
//! ```
//! use blowchoc::{Filter, FilterConfig, FilterKind};
//!
//! let config = FilterConfig::new(FilterKind::BlowChoc, 10_000, 14);
//! let mut filter = Filter::new(config).unwrap();
//! for key in 0..10_000u64 {
//!     filter.insert(key * 2);
//! }
//! assert!(filter.lookup(42));
//! ```

pub mod analysis;
pub mod blockstore;
pub mod filters;
pub mod format;
pub mod hashing;
pub mod input;
pub mod keygen;
pub mod qgram;
pub mod sharding;

pub use analysis::{FprEstimate, LoadHistogram};
pub use blockstore::{BlockArray, Insertion, DEFAULT_BLOCK_BITS};
pub use filters::{
    BitStrategy, Choice, CostKind, CostModel, Filter, FilterConfig, FilterKind, Layout, Probe,
};
pub use hashing::{BitAddrs, BitSelector, HashSpec};
pub use input::KeyFormat;
pub use qgram::QGramEncoder;
pub use sharding::{BuildOptions, ShardPlan};

/// Errors produced by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("corrupt filter file: {0}")]
    Corrupt(String),
    #[error("search failed: {0}")]
    Bracket(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
