//! Multiply-mod hash functions and in-block bit address selection.
//!
//! Every hash is `x -> (a * x) mod 2^64`, reduced into `[b]` in one of three
//! ways depending on `b`:
//!
//! * odd `b`: plain `mod b`;
//! * `b` a power of two: the `log2 b` most significant bits of the
//!   `u`-bit product;
//! * other even `b`: fold the high half onto the low half with XOR, then
//!   `mod b`.

use num_integer::Integer;
use rand_chacha::rand_core::RngCore;
use smallvec::SmallVec;
use strength_reduce::StrengthReducedU64;

use crate::{Error, Result};

/// Bit addresses of one key inside a block.
pub type BitAddrs = SmallVec<[u32; 32]>;

/// `mod b` by multiplication with a precomputed reciprocal.
#[derive(Clone, Copy, Debug)]
struct Modulus(StrengthReducedU64);

impl PartialEq for Modulus {
    fn eq(&self, other: &Self) -> bool {
        self.0.get() == other.0.get()
    }
}

impl Eq for Modulus {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reduction {
    Odd(Modulus),
    PowerOfTwo { shift: u32, mask: u64 },
    Even { fold: u32, modulus: Modulus },
    Constant,
}

/// One hash function `x -> ((a x) mod 2^64) reduced into [b]` for keys of
/// `u` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashSpec {
    a: u64,
    b: u64,
    u: u32,
    reduction: Reduction,
}

impl HashSpec {
    /// Builds a hash from explicit parameters. `a` must be odd and coprime
    /// to `b`.
    pub fn from_parts(a: u64, b: u64, u: u32) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidArgument(
                "hash range must be at least 1".into(),
            ));
        }
        if !(1..=64).contains(&u) {
            return Err(Error::InvalidArgument(format!(
                "key width {u} not in 1..=64"
            )));
        }
        if a.is_multiple_of(2) || a.gcd(&b) != 1 {
            return Err(Error::InvalidArgument(format!(
                "multiplier {a} must be odd and coprime to {b}"
            )));
        }
        let reduction = if b == 1 {
            Reduction::Constant
        } else if b.is_power_of_two() {
            let log = b.trailing_zeros();
            if log > u {
                return Err(Error::InvalidArgument(format!(
                    "range 2^{log} exceeds the {u}-bit key space"
                )));
            }
            let mask = if u == 64 { u64::MAX } else { (1u64 << u) - 1 };
            Reduction::PowerOfTwo {
                shift: u - log,
                mask,
            }
        } else if b.is_multiple_of(2) {
            Reduction::Even {
                fold: u / 2,
                modulus: Modulus(StrengthReducedU64::new(b)),
            }
        } else {
            Reduction::Odd(Modulus(StrengthReducedU64::new(b)))
        };
        Ok(Self { a, b, u, reduction })
    }

    /// Draws a random hash for range `b`: `a` uniform among odd integers in
    /// `[2^63, 2^64)`, redrawn until coprime to `b`.
    pub fn sample<R: RngCore + ?Sized>(rng: &mut R, b: u64, u: u32) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidArgument(
                "hash range must be at least 1".into(),
            ));
        }
        loop {
            let a = rng.next_u64() | (1 << 63) | 1;
            if a.gcd(&b) == 1 {
                return Self::from_parts(a, b, u);
            }
        }
    }

    pub fn multiplier(&self) -> u64 {
        self.a
    }

    pub fn range(&self) -> u64 {
        self.b
    }

    pub fn key_bits(&self) -> u32 {
        self.u
    }

    #[inline(always)]
    pub fn eval(&self, x: u64) -> u64 {
        debug_assert!(
            self.u == 64 || x >> self.u == 0,
            "key {x} wider than {} bits",
            self.u
        );
        let p = self.a.wrapping_mul(x);
        match self.reduction {
            Reduction::Odd(m) => p % m.0,
            Reduction::PowerOfTwo { shift, mask } => (p & mask) >> shift,
            Reduction::Even { fold, modulus } => (p ^ (p >> fold)) % modulus.0,
            Reduction::Constant => 0,
        }
    }
}

/// How the bit addresses of a key inside its block are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BitStrategy {
    /// `k` independent hashes into `[B]`; collisions shrink the set.
    Random,
    /// A uniform `k`-subset of `[B]`.
    Distinct,
}

/// The `k` bit address functions of a blocked filter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSelector {
    strategy: BitStrategy,
    block_bits: u32,
    specs: Vec<HashSpec>,
}

impl BitSelector {
    /// Draws `k` hashes. Random uses range `B` for all of them, distinct
    /// uses `B, B-1, ..., B-k+1`.
    pub fn sample<R: RngCore + ?Sized>(
        rng: &mut R,
        strategy: BitStrategy,
        k: u32,
        block_bits: u32,
        key_bits: u32,
    ) -> Result<Self> {
        if k == 0 || k > block_bits {
            return Err(Error::InvalidConfig(format!(
                "k = {k} must be in 1..={block_bits}"
            )));
        }
        let specs = (0..k)
            .map(|i| {
                let range = match strategy {
                    BitStrategy::Random => block_bits,
                    BitStrategy::Distinct => block_bits - i,
                };
                HashSpec::sample(rng, u64::from(range), key_bits)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            strategy,
            block_bits,
            specs,
        })
    }

    /// Builds a selector from explicit hashes, checking their ranges.
    pub fn from_specs(
        strategy: BitStrategy,
        block_bits: u32,
        specs: Vec<HashSpec>,
    ) -> Result<Self> {
        if specs.is_empty() || specs.len() > block_bits as usize {
            return Err(Error::InvalidConfig("need 1..=B bit hashes".into()));
        }
        for (i, spec) in specs.iter().enumerate() {
            let expected = match strategy {
                BitStrategy::Random => u64::from(block_bits),
                BitStrategy::Distinct => u64::from(block_bits) - i as u64,
            };
            if spec.range() != expected {
                return Err(Error::InvalidConfig(format!(
                    "bit hash {i} has range {}, expected {expected}",
                    spec.range()
                )));
            }
        }
        Ok(Self {
            strategy,
            block_bits,
            specs,
        })
    }

    pub fn strategy(&self) -> BitStrategy {
        self.strategy
    }

    pub fn k(&self) -> usize {
        self.specs.len()
    }

    pub fn block_bits(&self) -> u32 {
        self.block_bits
    }

    pub fn specs(&self) -> &[HashSpec] {
        &self.specs
    }

    /// Raw value of the `i`-th bit hash. For the random strategy this is
    /// already a final bit address.
    #[inline(always)]
    pub fn raw(&self, i: usize, x: u64) -> u32 {
        self.specs[i].eval(x) as u32
    }

    /// `F(x)` as a sorted set. Random selection may yield fewer than `k`
    /// addresses; distinct selection always yields exactly `k`.
    #[inline]
    pub fn select(&self, x: u64, out: &mut BitAddrs) {
        out.clear();
        match self.strategy {
            BitStrategy::Random => {
                out.extend(self.specs.iter().map(|h| h.eval(x) as u32));
                out.sort_unstable();
                out.dedup();
            }
            BitStrategy::Distinct => {
                for h in &self.specs {
                    insert_distinct(out, h.eval(x) as u32);
                }
            }
        }
    }

    /// Like [`select`](Self::select), but random addresses are left in hash
    /// order and may repeat. Enough for setting and testing bits.
    #[inline]
    pub fn select_unordered(&self, x: u64, out: &mut BitAddrs) {
        match self.strategy {
            BitStrategy::Random => {
                out.clear();
                out.extend(self.specs.iter().map(|h| h.eval(x) as u32));
            }
            BitStrategy::Distinct => self.select(x, out),
        }
    }
}

/// Adds raw value `r` to the sorted set `chosen`, bumping it past every
/// chosen value that is smaller or equal to its current value. `r` must be
/// below `B - chosen.len()`, which keeps the result below `B`.
#[inline]
pub fn insert_distinct(chosen: &mut BitAddrs, mut r: u32) {
    let mut pos = 0;
    while pos < chosen.len() && chosen[pos] <= r {
        r += 1;
        pos += 1;
    }
    chosen.insert(pos, r);
}

/// Maps raw values `r_1 .. r_k` (with `r_i < B - i + 1`) to the distinct
/// bit address set.
pub fn distinct_from_raw(raw: &[u32]) -> BitAddrs {
    let mut out = BitAddrs::new();
    for &r in raw {
        insert_distinct(&mut out, r);
    }
    out
}

/// Probability that `k` independent uniform draws from `[B]` are not all
/// distinct.
pub fn collision_probability(k: u32, block_bits: u32) -> Result<f64> {
    if k == 0 || k > block_bits {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={block_bits}"
        )));
    }
    let b = f64::from(block_bits);
    let all_distinct: f64 = (0..k).map(|i| (b - f64::from(i)) / b).product();
    Ok(1.0 - all_distinct)
}
