use std::f64::consts::LN_2;

use super::cost::CostModel;
use crate::blockstore::{valid_block_bits, DEFAULT_BLOCK_BITS};
use crate::hashing::BitStrategy;
use crate::{Error, Result};

/// Largest supported number of candidate blocks per key.
pub const MAX_CHOICES: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    /// Flat bit array, `k` independent bit addresses per key.
    Standard,
    /// One block per key.
    Blocked,
    /// `c >= 2` candidate blocks per key, insertion picks the cheapest.
    BlowChoc,
}

/// Everything needed to create a filter. Two filters built from equal
/// configurations and the same key sequence are bit-identical.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterConfig {
    pub kind: FilterKind,
    /// Planned number of keys `n`.
    pub capacity: u64,
    /// Bit address functions per key.
    pub k: u32,
    /// Candidate blocks per key; 1 for blocked, ignored for standard.
    pub choices: u32,
    pub cost: CostModel,
    pub strategy: BitStrategy,
    /// Size relative to a standard Bloom filter for `capacity` keys.
    pub relative_size: f64,
    /// Overrides capacity-based sizing with an explicit bit count.
    pub size_bits: Option<u64>,
    /// Number of single-writer sub-arrays `T`.
    pub shards: u32,
    pub seed: u64,
    pub block_bits: u32,
    /// Width `u` of the keys in bits.
    pub key_bits: u32,
}

impl FilterConfig {
    /// Defaults: 2 choices for BlowChoc, exponential cost with the golden
    /// ratio, random bit selection, relative size 1, one shard, seed 0.
    pub fn new(kind: FilterKind, capacity: u64, k: u32) -> Self {
        Self {
            kind,
            capacity,
            k,
            choices: match kind {
                FilterKind::BlowChoc => 2,
                _ => 1,
            },
            cost: CostModel::default(),
            strategy: BitStrategy::Random,
            relative_size: 1.0,
            size_bits: None,
            shards: 1,
            seed: 0,
            block_bits: DEFAULT_BLOCK_BITS as u32,
            key_bits: 64,
        }
    }

    pub fn with_choices(mut self, choices: u32) -> Self {
        self.choices = choices;
        self
    }

    pub fn with_strategy(mut self, strategy: BitStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_cost(mut self, cost: CostModel) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_relative_size(mut self, relative_size: f64) -> Self {
        self.relative_size = relative_size;
        self
    }

    pub fn with_size_bits(mut self, bits: u64) -> Self {
        self.size_bits = Some(bits);
        self
    }

    pub fn with_shards(mut self, shards: u32) -> Self {
        self.shards = shards;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_block_bits(mut self, block_bits: u32) -> Self {
        self.block_bits = block_bits;
        self
    }

    pub fn with_key_bits(mut self, key_bits: u32) -> Self {
        self.key_bits = key_bits;
        self
    }

    /// Number of candidate blocks actually probed per key.
    pub fn effective_choices(&self) -> u32 {
        match self.kind {
            FilterKind::Standard => 0,
            FilterKind::Blocked => 1,
            FilterKind::BlowChoc => self.choices,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if !valid_block_bits(self.block_bits as usize) {
            return invalid(format!("unsupported block width {}", self.block_bits));
        }
        if self.k == 0 || self.k > self.block_bits {
            return invalid(format!("k = {} must be in 1..={}", self.k, self.block_bits));
        }
        if !(1..=64).contains(&self.key_bits) {
            return invalid(format!("key width {} not in 1..=64", self.key_bits));
        }
        if self.shards == 0 {
            return invalid("at least one shard is required".into());
        }
        match self.kind {
            FilterKind::Standard => {
                if self.strategy == BitStrategy::Distinct {
                    return invalid("distinct bit selection needs a blocked filter".into());
                }
            }
            FilterKind::Blocked => {
                if self.choices != 1 {
                    return invalid(format!(
                        "blocked filters use 1 choice, got {}",
                        self.choices
                    ));
                }
            }
            FilterKind::BlowChoc => {
                if !(2..=MAX_CHOICES).contains(&self.choices) {
                    return invalid(format!(
                        "choices = {} must be in 2..={MAX_CHOICES}",
                        self.choices
                    ));
                }
                self.cost.validate()?;
            }
        }
        match self.size_bits {
            Some(0) => return invalid("size must be positive".into()),
            Some(_) => {}
            None => {
                if self.capacity == 0 {
                    return invalid("capacity must be positive".into());
                }
                if !(self.relative_size > 0.0 && self.relative_size.is_finite()) {
                    return invalid(format!(
                        "relative size {} must be positive",
                        self.relative_size
                    ));
                }
            }
        }
        Ok(())
    }

    /// Derives the block layout. Validates the configuration first.
    pub fn layout(&self) -> Result<Layout> {
        self.validate()?;
        let layout = match self.size_bits {
            Some(bits) => Layout::from_bits(bits, self.block_bits, self.shards)?,
            None => size_for(
                self.capacity,
                self.k,
                self.relative_size,
                self.block_bits,
                self.shards,
            )?,
        };
        let shard_blocks = layout.blocks_per_shard();
        if self.kind != FilterKind::Standard && !range_fits(shard_blocks, self.key_bits) {
            return Err(Error::InvalidConfig(format!(
                "{shard_blocks} blocks per shard exceed the {}-bit key space",
                self.key_bits
            )));
        }
        if self.kind == FilterKind::Standard && !range_fits(layout.shard_bits(), self.key_bits) {
            return Err(Error::InvalidConfig(format!(
                "{} bits per shard exceed the {}-bit key space",
                layout.shard_bits(),
                self.key_bits
            )));
        }
        Ok(layout)
    }
}

/// Power-of-two hash ranges take their bits from the top of a `u`-bit
/// product, so they cannot exceed `2^u`.
fn range_fits(range: u64, key_bits: u32) -> bool {
    !range.is_power_of_two() || range.trailing_zeros() <= key_bits
}

/// Sizes of a filter: `M` blocks of `B` bits split into `T` equal shards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub block_bits: u32,
    pub num_blocks: u64,
    pub shards: u32,
}

impl Layout {
    fn from_bits(bits: u64, block_bits: u32, shards: u32) -> Result<Self> {
        let blocks = bits.div_ceil(u64::from(block_bits));
        Self::rounded(blocks, block_bits, shards)
    }

    fn rounded(blocks: u64, block_bits: u32, shards: u32) -> Result<Self> {
        if block_bits == 0 || shards == 0 {
            return Err(Error::InvalidConfig(
                "block width and shard count must be positive".into(),
            ));
        }
        let num_blocks = blocks.max(1).next_multiple_of(u64::from(shards));
        num_blocks
            .checked_mul(u64::from(block_bits))
            .filter(|&m| usize::try_from(m).is_ok())
            .ok_or_else(|| Error::InvalidConfig("filter too large".into()))?;
        Ok(Self {
            block_bits,
            num_blocks,
            shards,
        })
    }

    /// Total bits `m = M * B`.
    pub fn total_bits(&self) -> u64 {
        self.num_blocks * u64::from(self.block_bits)
    }

    pub fn blocks_per_shard(&self) -> u64 {
        self.num_blocks / u64::from(self.shards)
    }

    pub fn shard_bits(&self) -> u64 {
        self.blocks_per_shard() * u64::from(self.block_bits)
    }
}

/// Standard Bloom sizing: `relative_size * n k / ln 2` bits, rounded up to
/// whole blocks and then to a multiple of `shards` blocks.
pub fn size_for(
    n: u64,
    k: u32,
    relative_size: f64,
    block_bits: u32,
    shards: u32,
) -> Result<Layout> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidConfig("n and k must be positive".into()));
    }
    if k > block_bits {
        return Err(Error::InvalidConfig(format!(
            "k = {k} exceeds the block width {block_bits}"
        )));
    }
    if !(relative_size > 0.0 && relative_size.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "relative size {relative_size} must be positive"
        )));
    }
    let raw = relative_size * n as f64 * f64::from(k) / LN_2;
    let blocks = (raw / f64::from(block_bits)).ceil();
    if blocks >= u64::MAX as f64 {
        return Err(Error::InvalidConfig("filter too large".into()));
    }
    Layout::rounded(blocks as u64, block_bits, shards)
}

/// False positive rate of a standard Bloom filter holding `gamma` times its
/// design capacity: `(1 - 2^-gamma)^k`.
pub fn overload_fpr(gamma: f64, k: u32) -> f64 {
    (1.0 - (-gamma).exp2()).powi(k as i32)
}
