//! Contiguous storage of fixed-width bit blocks.
//!
//! Bit `i` of block `b` is global bit `b * block_bits + i`, stored in word
//! `g / 64` at position `g % 64` (least significant bit first). With the
//! default 512-bit blocks every block is exactly one 64-byte cache line.

use std::fmt;

use smallvec::SmallVec;

use crate::{Error, Result};

/// Block width used unless configured otherwise: one cache line.
pub const DEFAULT_BLOCK_BITS: usize = 512;

const LINE_WORDS: usize = 8;

#[derive(Clone, Copy, Default, PartialEq, Eq)]
#[repr(C, align(64))]
struct Line([u64; LINE_WORDS]);

/// Result of simulating an insertion into a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Insertion {
    /// Set bits in the block after the insertion (`j`).
    pub total: u32,
    /// Bits that the insertion would newly set (`a`).
    pub added: u32,
}

/// `num_blocks` blocks of `block_bits` bits each, zero-initialized and
/// aligned to 64 bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct BlockArray {
    num_blocks: usize,
    block_bits: usize,
    num_words: usize,
    lines: Vec<Line>,
}

/// Block widths are either whole words or a power of two dividing a word.
pub fn valid_block_bits(block_bits: usize) -> bool {
    block_bits > 0 && (block_bits.is_multiple_of(64) || 64 % block_bits == 0)
}

impl BlockArray {
    pub fn new(num_blocks: usize, block_bits: usize) -> Result<Self> {
        if num_blocks == 0 {
            return Err(Error::InvalidConfig(
                "block array needs at least one block".into(),
            ));
        }
        if !valid_block_bits(block_bits) {
            return Err(Error::InvalidConfig(format!(
                "block width {block_bits} is neither a multiple of 64 nor a power of two below 64"
            )));
        }
        let total_bits = num_blocks
            .checked_mul(block_bits)
            .ok_or_else(|| Error::InvalidConfig("block array too large".into()))?;
        let num_words = total_bits.div_ceil(64);
        let lines = vec![Line::default(); num_words.div_ceil(LINE_WORDS)];
        Ok(Self {
            num_blocks,
            block_bits,
            num_words,
            lines,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_bits(&self) -> usize {
        self.block_bits
    }

    pub fn total_bits(&self) -> usize {
        self.num_blocks * self.block_bits
    }

    /// The backing words, `ceil(total_bits / 64)` of them.
    pub fn words(&self) -> &[u64] {
        // SAFETY: `Line` is `repr(C)` over `[u64; 8]`, so the vector is a
        // contiguous run of at least `num_words` initialized u64 values.
        unsafe { std::slice::from_raw_parts(self.lines.as_ptr().cast::<u64>(), self.num_words) }
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        // SAFETY: see `words`; the exclusive borrow of `self` covers the slice.
        unsafe {
            std::slice::from_raw_parts_mut(self.lines.as_mut_ptr().cast::<u64>(), self.num_words)
        }
    }

    #[inline]
    fn global(&self, block: usize, bit: u32) -> usize {
        debug_assert!(block < self.num_blocks, "block {block} out of range");
        debug_assert!((bit as usize) < self.block_bits, "bit {bit} out of range");
        block * self.block_bits + bit as usize
    }

    /// Sets every addressed bit of `block` to one.
    #[inline]
    pub fn set_bits(&mut self, block: usize, addrs: &[u32]) {
        for &bit in addrs {
            let g = self.global(block, bit);
            self.words_mut()[g >> 6] |= 1u64 << (g & 63);
        }
    }

    /// True iff every addressed bit of `block` is one. Stops at the first
    /// unset bit.
    #[inline]
    pub fn test_all(&self, block: usize, addrs: &[u32]) -> bool {
        let words = self.words();
        addrs.iter().all(|&bit| {
            let g = self.global(block, bit);
            words[g >> 6] >> (g & 63) & 1 == 1
        })
    }

    #[inline]
    pub fn test_bit(&self, block: usize, bit: u32) -> bool {
        let g = self.global(block, bit);
        self.words()[g >> 6] >> (g & 63) & 1 == 1
    }

    /// Sets bit `index` of the array viewed as one flat bit vector.
    #[inline]
    pub fn set_flat(&mut self, index: usize) {
        debug_assert!(index < self.total_bits());
        self.words_mut()[index >> 6] |= 1u64 << (index & 63);
    }

    #[inline]
    pub fn test_flat(&self, index: usize) -> bool {
        debug_assert!(index < self.total_bits());
        self.words()[index >> 6] >> (index & 63) & 1 == 1
    }

    /// Copy of one block, normalized so that block bit `i` sits in word
    /// `i / 64` at position `i % 64`.
    fn block_copy(&self, block: usize) -> SmallVec<[u64; LINE_WORDS]> {
        debug_assert!(block < self.num_blocks);
        let words = self.words();
        if self.block_bits >= 64 {
            let per = self.block_bits / 64;
            SmallVec::from_slice(&words[block * per..(block + 1) * per])
        } else {
            let g = block * self.block_bits;
            let mask = (1u64 << self.block_bits) - 1;
            smallvec::smallvec![(words[g >> 6] >> (g & 63)) & mask]
        }
    }

    /// Number of set bits in `block`.
    #[inline]
    pub fn popcount_block(&self, block: usize) -> u32 {
        debug_assert!(block < self.num_blocks);
        if self.block_bits >= 64 {
            let per = self.block_bits / 64;
            popcount_words(&self.words()[block * per..(block + 1) * per])
        } else {
            let g = block * self.block_bits;
            let mask = (1u64 << self.block_bits) - 1;
            ((self.words()[g >> 6] >> (g & 63)) & mask).count_ones()
        }
    }

    /// Set bits in the whole array.
    pub fn popcount(&self) -> u64 {
        self.words().iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Computes `(j, a)` for inserting `addrs` into `block` without
    /// modifying it. Duplicate addresses are counted once.
    #[inline]
    pub fn simulate_insertion(&self, block: usize, addrs: &[u32]) -> Insertion {
        let before = self.popcount_block(block);
        let mut copy = self.block_copy(block);
        for &bit in addrs {
            debug_assert!((bit as usize) < self.block_bits);
            copy[bit as usize >> 6] |= 1u64 << (bit & 63);
        }
        let total = popcount_words(&copy);
        Insertion {
            total,
            added: total - before,
        }
    }

    /// Hints the CPU to pull `block` into L1.
    #[inline(always)]
    pub fn prefetch(&self, block: usize) {
        #[cfg(target_arch = "x86_64")]
        {
            let g = (block * self.block_bits) >> 6;
            if g < self.num_words {
                // SAFETY: the pointer is in bounds; prefetch never faults.
                unsafe {
                    use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
                    _mm_prefetch(self.words().as_ptr().add(g).cast::<i8>(), _MM_HINT_T0);
                }
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        let _ = block;
    }
}

impl fmt::Debug for BlockArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockArray")
            .field("num_blocks", &self.num_blocks)
            .field("block_bits", &self.block_bits)
            .field("ones", &self.popcount())
            .finish()
    }
}

/// Population count over a word slice, using the `popcnt` instruction when
/// the CPU has it.
#[inline]
pub fn popcount_words(words: &[u64]) -> u32 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("popcnt") {
            // SAFETY: feature presence checked above.
            return unsafe { popcount_hw(words) };
        }
    }
    words.iter().map(|w| w.count_ones()).sum()
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn popcount_hw(words: &[u64]) -> u32 {
    words.iter().map(|w| w.count_ones()).sum()
}
