//! Binary filter files.
//!
//! All integers are little-endian.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `BWCH` |
//! | 4  | 4 | format version (u32, currently 1) |
//! | 8  | 1 | kind: 0 standard, 1 blocked, 2 blowchoc |
//! | 9  | 1 | bit strategy: 0 random, 1 distinct |
//! | 10 | 1 | cost kind: 0 exp, 1 mix, 2 lookahead |
//! | 11 | 1 | key width `u` in bits |
//! | 12 | 4 | `k` (u32) |
//! | 16 | 4 | choices `c` (u32) |
//! | 20 | 4 | reserved, zero |
//! | 24 | 8 | cost parameter (f64) |
//! | 32 | 8 | block width `B` (u64) |
//! | 40 | 8 | blocks `M` (u64) |
//! | 48 | 8 | shards `T` (u64) |
//! | 56 | 8 | seed (u64) |
//! | 64 | 8 | inserted key count (u64) |
//! | 72 | .. | bit array |
//!
//! The bit array holds all `M * B` bits in block order, packed into 64-bit
//! little-endian words, least significant bit first, zero-padded to a whole
//! word (`M * B / 8` bytes for 512-bit blocks).

use std::io::{self, Read, Write};

use crate::filters::{BitStrategy, CostKind, CostModel, Filter, FilterConfig, FilterKind};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"BWCH";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 72;

/// Decoded fixed-size header.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterFileHeader {
    pub version: u32,
    pub kind: FilterKind,
    pub strategy: BitStrategy,
    pub cost: CostModel,
    pub key_bits: u32,
    pub k: u32,
    pub choices: u32,
    pub block_bits: u64,
    pub num_blocks: u64,
    pub shards: u64,
    pub seed: u64,
    pub inserted: u64,
}

impl FilterFileHeader {
    pub fn of(filter: &Filter) -> Self {
        let config = filter.config();
        let layout = filter.layout();
        Self {
            version: FORMAT_VERSION,
            kind: config.kind,
            strategy: config.strategy,
            cost: config.cost,
            key_bits: config.key_bits,
            k: config.k,
            choices: config.effective_choices().max(1),
            block_bits: u64::from(layout.block_bits),
            num_blocks: layout.num_blocks,
            shards: u64::from(layout.shards),
            seed: config.seed,
            inserted: filter.inserted(),
        }
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut buf = [0u8; HEADER_LEN];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4..8].copy_from_slice(&self.version.to_le_bytes());
        buf[8] = match self.kind {
            FilterKind::Standard => 0,
            FilterKind::Blocked => 1,
            FilterKind::BlowChoc => 2,
        };
        buf[9] = match self.strategy {
            BitStrategy::Random => 0,
            BitStrategy::Distinct => 1,
        };
        buf[10] = match self.cost.kind {
            CostKind::Exp => 0,
            CostKind::Mix => 1,
            CostKind::Lookahead => 2,
        };
        buf[11] = self.key_bits as u8;
        buf[12..16].copy_from_slice(&self.k.to_le_bytes());
        buf[16..20].copy_from_slice(&self.choices.to_le_bytes());
        buf[24..32].copy_from_slice(&self.cost.param.to_le_bytes());
        buf[32..40].copy_from_slice(&self.block_bits.to_le_bytes());
        buf[40..48].copy_from_slice(&self.num_blocks.to_le_bytes());
        buf[48..56].copy_from_slice(&self.shards.to_le_bytes());
        buf[56..64].copy_from_slice(&self.seed.to_le_bytes());
        buf[64..72].copy_from_slice(&self.inserted.to_le_bytes());
        buf
    }

    pub fn decode(buf: &[u8; HEADER_LEN]) -> Result<Self> {
        let corrupt = |msg: &str| Err(Error::Corrupt(msg.to_string()));
        if buf[0..4] != MAGIC {
            return corrupt("bad magic");
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != FORMAT_VERSION {
            return Err(Error::Corrupt(format!(
                "unsupported format version {version}"
            )));
        }
        let kind = match buf[8] {
            0 => FilterKind::Standard,
            1 => FilterKind::Blocked,
            2 => FilterKind::BlowChoc,
            _ => return corrupt("unknown filter kind"),
        };
        let strategy = match buf[9] {
            0 => BitStrategy::Random,
            1 => BitStrategy::Distinct,
            _ => return corrupt("unknown bit strategy"),
        };
        let cost_kind = match buf[10] {
            0 => CostKind::Exp,
            1 => CostKind::Mix,
            2 => CostKind::Lookahead,
            _ => return corrupt("unknown cost kind"),
        };
        if u32_at(20) != 0 {
            return corrupt("reserved bytes set");
        }
        Ok(Self {
            version,
            kind,
            strategy,
            cost: CostModel {
                kind: cost_kind,
                param: f64::from_le_bytes(buf[24..32].try_into().unwrap()),
            },
            key_bits: u32::from(buf[11]),
            k: u32_at(12),
            choices: u32_at(16),
            block_bits: u64_at(32),
            num_blocks: u64_at(40),
            shards: u64_at(48),
            seed: u64_at(56),
            inserted: u64_at(64),
        })
    }

    /// The configuration that rebuilds this filter; inconsistent fields are
    /// reported as [`Error::Corrupt`].
    pub fn config(&self) -> Result<FilterConfig> {
        let small = |v: u64, what: &str| {
            u32::try_from(v).map_err(|_| Error::Corrupt(format!("{what} out of range")))
        };
        let block_bits = small(self.block_bits, "block width")?;
        let shards = small(self.shards, "shard count")?;
        if self.num_blocks == 0 || shards == 0 || !self.num_blocks.is_multiple_of(u64::from(shards)) {
            return Err(Error::Corrupt(
                "block count is not a multiple of the shard count".into(),
            ));
        }
        let size_bits = self
            .num_blocks
            .checked_mul(self.block_bits)
            .ok_or_else(|| Error::Corrupt("filter size overflows".into()))?;
        let config = FilterConfig {
            kind: self.kind,
            capacity: self.inserted.max(1),
            k: self.k,
            choices: self.choices,
            cost: self.cost,
            strategy: self.strategy,
            relative_size: 1.0,
            size_bits: Some(size_bits),
            shards,
            seed: self.seed,
            block_bits,
            key_bits: self.key_bits,
        };
        config
            .validate()
            .map_err(|e| Error::Corrupt(format!("header describes an invalid filter: {e}")))?;
        Ok(config)
    }
}

/// Bytes of the packed bit array.
pub(crate) fn bit_bytes(filter: &Filter) -> Vec<u8> {
    let words = packed_words(filter);
    let mut out = Vec::with_capacity(words.len() * 8);
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

fn shard_bits_aligned(filter: &Filter) -> bool {
    filter.layout().shard_bits().is_multiple_of(64)
}

fn packed_words(filter: &Filter) -> Vec<u64> {
    let total = filter.total_bits() as usize;
    if shard_bits_aligned(filter) {
        return filter
            .shards()
            .iter()
            .flat_map(|s| s.words().iter().copied())
            .collect();
    }
    let mut words = vec![0u64; total.div_ceil(64)];
    let mut g = 0usize;
    for shard in filter.shards() {
        for i in 0..shard.total_bits() {
            if shard.test_flat(i) {
                words[g >> 6] |= 1 << (g & 63);
            }
            g += 1;
        }
    }
    words
}

fn unpack_words(filter: &mut Filter, words: &[u64]) {
    let aligned = shard_bits_aligned(filter);
    let (_, shards, _) = filter.parts_mut();
    if aligned {
        let mut offset = 0;
        for shard in shards.iter_mut() {
            let dst = shard.words_mut();
            dst.copy_from_slice(&words[offset..offset + dst.len()]);
            offset += dst.len();
        }
        return;
    }
    let mut g = 0usize;
    for shard in shards.iter_mut() {
        for i in 0..shard.total_bits() {
            if words[g >> 6] >> (g & 63) & 1 == 1 {
                shard.set_flat(i);
            }
            g += 1;
        }
    }
}

/// Writes header and bit array.
pub fn write_filter<W: Write>(filter: &Filter, mut out: W) -> io::Result<()> {
    out.write_all(&FilterFileHeader::of(filter).encode())?;
    let mut buf = Vec::with_capacity(1 << 16);
    for w in packed_words(filter) {
        buf.extend_from_slice(&w.to_le_bytes());
        if buf.len() >= 1 << 16 {
            out.write_all(&buf)?;
            buf.clear();
        }
    }
    out.write_all(&buf)?;
    out.flush()
}

/// Reads a filter written by [`write_filter`]. Truncated input, trailing
/// bytes, unknown versions and inconsistent headers are reported as
/// [`Error::Corrupt`].
pub fn read_filter<R: Read>(mut input: R) -> Result<Filter> {
    let mut head = [0u8; HEADER_LEN];
    read_exact_or_corrupt(&mut input, &mut head, "header")?;
    let header = FilterFileHeader::decode(&head)?;
    let config = header.config()?;
    let mut filter = Filter::new(config).map_err(|e| Error::Corrupt(e.to_string()))?;
    if filter.layout().num_blocks != header.num_blocks {
        return Err(Error::Corrupt("header sizes are inconsistent".into()));
    }
    let n_words = (filter.total_bits() as usize).div_ceil(64);
    let mut bytes = vec![0u8; n_words * 8];
    read_exact_or_corrupt(&mut input, &mut bytes, "bit array")?;
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(Error::Corrupt("trailing bytes after bit array".into()));
    }
    let words: Vec<u64> = bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let pad = n_words * 64 - filter.total_bits() as usize;
    if pad > 0 && words[n_words - 1] >> (64 - pad) != 0 {
        return Err(Error::Corrupt("padding bits set".into()));
    }
    unpack_words(&mut filter, &words);
    filter.set_inserted(header.inserted);
    Ok(filter)
}

fn read_exact_or_corrupt<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Corrupt(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}
