//! Standard Bloom, Blocked Bloom and BlowChoc filters.

mod config;
mod cost;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

pub use crate::hashing::BitStrategy;
pub use config::{overload_fpr, size_for, FilterConfig, FilterKind, Layout, MAX_CHOICES};
pub use cost::{cost_exp, cost_la, cost_mix, CostKind, CostModel, GOLDEN_RATIO};

use crate::blockstore::BlockArray;
use crate::hashing::{BitAddrs, BitSelector, HashSpec};
use crate::Result;
use cost::CostTable;

/// Addresses of one key in a blocked filter: its shard, its `c` candidate
/// blocks (shard-local indices) and its in-block bit set `F(x)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Probe {
    pub shard: usize,
    pub blocks: SmallVec<[usize; MAX_CHOICES as usize]>,
    pub bits: BitAddrs,
}

/// Outcome of block selection for one insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Choice {
    /// Index into the candidate list.
    pub index: usize,
    /// The candidate already holds every bit; nothing needs to be written.
    pub noop: bool,
}

#[derive(Clone, Debug)]
enum BitAddressing {
    /// Standard Bloom: `k` hashes over the shard's flat bit range.
    Flat(Vec<HashSpec>),
    InBlock(BitSelector),
}

/// Index of the lowest-cost `(load, added)` pair; ties go to the lowest index.
#[inline]
fn cheapest<F: Fn(u32, u32) -> f64>(sims: &[(u32, u32)], cost: F) -> usize {
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for (i, &(j, a)) in sims.iter().enumerate() {
        let c = cost(j, a);
        if c < best_cost {
            best = i;
            best_cost = c;
        }
    }
    best
}

/// The immutable part of a filter: every hash function plus the cost table.
/// Shared by all shard writers during a parallel build.
#[derive(Clone, Debug)]
pub(crate) struct FilterHashes {
    shard: HashSpec,
    blocks: Vec<HashSpec>,
    bits: BitAddressing,
    cost: CostTable,
}

impl FilterHashes {
    /// Derives all hashes from the seed, in order: shard hash, block
    /// hashes, bit hashes.
    fn sample(config: &FilterConfig, layout: &Layout) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let u = config.key_bits;
        let shard = HashSpec::sample(&mut rng, u64::from(layout.shards), u)?;
        let blocks = (0..config.effective_choices())
            .map(|_| HashSpec::sample(&mut rng, layout.blocks_per_shard(), u))
            .collect::<Result<Vec<_>>>()?;
        let bits = match config.kind {
            FilterKind::Standard => BitAddressing::Flat(
                (0..config.k)
                    .map(|_| HashSpec::sample(&mut rng, layout.shard_bits(), u))
                    .collect::<Result<Vec<_>>>()?,
            ),
            FilterKind::Blocked | FilterKind::BlowChoc => BitAddressing::InBlock(
                BitSelector::sample(&mut rng, config.strategy, config.k, config.block_bits, u)?,
            ),
        };
        let cost = CostTable::new(config.cost, config.k, config.block_bits);
        Ok(Self {
            shard,
            blocks,
            bits,
            cost,
        })
    }

    #[inline(always)]
    pub(crate) fn route(&self, x: u64) -> usize {
        self.shard.eval(x) as usize
    }

    pub(crate) fn shard_hash(&self) -> HashSpec {
        self.shard
    }

    /// Fills `probe` for `x`. Unless `sorted`, random bit addresses keep
    /// hash order and may repeat.
    #[inline]
    fn probe_into(&self, x: u64, probe: &mut Probe, sorted: bool) {
        probe.shard = self.route(x);
        probe.blocks.clear();
        probe
            .blocks
            .extend(self.blocks.iter().map(|h| h.eval(x) as usize));
        match &self.bits {
            BitAddressing::InBlock(sel) if sorted => sel.select(x, &mut probe.bits),
            BitAddressing::InBlock(sel) => sel.select_unordered(x, &mut probe.bits),
            BitAddressing::Flat(_) => probe.bits.clear(),
        }
    }

    #[inline]
    fn choose(&self, shard: &BlockArray, blocks: &[usize], bits: &[u32]) -> Choice {
        if blocks.len() == 1 {
            return Choice {
                index: 0,
                noop: false,
            };
        }
        for &b in blocks {
            shard.prefetch(b);
        }
        let mut sims = [(0u32, 0u32); MAX_CHOICES as usize];
        for (i, &b) in blocks.iter().enumerate() {
            let sim = shard.simulate_insertion(b, bits);
            if sim.added == 0 {
                return Choice {
                    index: i,
                    noop: true,
                };
            }
            sims[i] = (sim.total, sim.added);
        }
        Choice {
            index: cheapest(&sims[..blocks.len()], |j, a| self.cost.cost(j, a)),
            noop: false,
        }
    }

    /// Inserts `x` into `shard`, which must be the shard `x` routes to.
    #[inline]
    pub(crate) fn insert_key(&self, shard: &mut BlockArray, x: u64, probe: &mut Probe) {
        match &self.bits {
            BitAddressing::Flat(specs) => {
                for h in specs {
                    shard.set_flat(h.eval(x) as usize);
                }
            }
            BitAddressing::InBlock(_) => {
                self.probe_into(x, probe, false);
                let choice = self.choose(shard, &probe.blocks, &probe.bits);
                if !choice.noop {
                    shard.set_bits(probe.blocks[choice.index], &probe.bits);
                }
            }
        }
    }

    #[inline]
    fn contains(&self, shard: &BlockArray, x: u64) -> bool {
        match &self.bits {
            BitAddressing::Flat(specs) => specs.iter().all(|h| shard.test_flat(h.eval(x) as usize)),
            BitAddressing::InBlock(sel) => {
                let mut blocks = [0usize; MAX_CHOICES as usize];
                let blocks = &mut blocks[..self.blocks.len()];
                for (slot, h) in blocks.iter_mut().zip(&self.blocks) {
                    *slot = h.eval(x) as usize;
                }
                if blocks.len() > 1 {
                    for &b in blocks.iter() {
                        shard.prefetch(b);
                    }
                }
                match sel.strategy() {
                    BitStrategy::Random => blocks
                        .iter()
                        .any(|&b| (0..sel.k()).all(|i| shard.test_bit(b, sel.raw(i, x)))),
                    BitStrategy::Distinct => {
                        let mut bits = BitAddrs::new();
                        sel.select(x, &mut bits);
                        blocks.iter().any(|&b| shard.test_all(b, &bits))
                    }
                }
            }
        }
    }
}

/// A probabilistic filter of one of the three kinds.
///
/// The bit array is split into `T` shards of `M/T` blocks each; a key's
/// shard is picked by a dedicated hash and all of its candidate blocks lie
/// in that shard. With `T = 1` the filter is a single array.
#[derive(Clone, Debug)]
pub struct Filter {
    config: FilterConfig,
    layout: Layout,
    hashes: FilterHashes,
    shards: Vec<BlockArray>,
    inserted: u64,
}

impl Filter {
    pub fn new(config: FilterConfig) -> Result<Self> {
        let layout = config.layout()?;
        let hashes = FilterHashes::sample(&config, &layout)?;
        let shards = (0..layout.shards)
            .map(|_| {
                BlockArray::new(
                    layout.blocks_per_shard() as usize,
                    config.block_bits as usize,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            layout,
            hashes,
            shards,
            inserted: 0,
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn kind(&self) -> FilterKind {
        self.config.kind
    }

    /// Number of insert calls so far, duplicates included.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub(crate) fn set_inserted(&mut self, inserted: u64) {
        self.inserted = inserted;
    }

    pub fn shards(&self) -> &[BlockArray] {
        &self.shards
    }

    pub(crate) fn parts_mut(&mut self) -> (&FilterHashes, &mut [BlockArray], &mut u64) {
        (&self.hashes, &mut self.shards, &mut self.inserted)
    }

    pub(crate) fn hashes(&self) -> &FilterHashes {
        &self.hashes
    }

    /// Shard that key `x` is stored in.
    #[inline]
    pub fn route(&self, x: u64) -> usize {
        self.hashes.route(x)
    }

    pub fn insert(&mut self, x: u64) {
        let mut probe = Probe::default();
        let shard = self.hashes.route(x);
        self.hashes
            .insert_key(&mut self.shards[shard], x, &mut probe);
        self.inserted += 1;
    }

    pub fn insert_all<I: IntoIterator<Item = u64>>(&mut self, keys: I) {
        let mut probe = Probe::default();
        for x in keys {
            let shard = self.hashes.route(x);
            self.hashes
                .insert_key(&mut self.shards[shard], x, &mut probe);
            self.inserted += 1;
        }
    }

    /// True if `x` may have been inserted; always true for inserted keys.
    #[inline]
    pub fn lookup(&self, x: u64) -> bool {
        let shard = &self.shards[self.hashes.route(x)];
        self.hashes.contains(shard, x)
    }

    /// Addresses of `x`. `None` for standard filters, which have no blocks.
    pub fn probe(&self, x: u64) -> Option<Probe> {
        if self.config.kind == FilterKind::Standard {
            return None;
        }
        let mut probe = Probe::default();
        self.hashes.probe_into(x, &mut probe, true);
        Some(probe)
    }

    /// Block selection for a probe: a candidate that already holds every
    /// bit wins (first one in candidate order); otherwise the lowest cost,
    /// ties going to the first candidate. A single candidate is returned
    /// without evaluating costs.
    pub fn choose_block(&self, probe: &Probe) -> Choice {
        self.hashes
            .choose(&self.shards[probe.shard], &probe.blocks, &probe.bits)
    }

    /// Inserts a key given directly by its addresses.
    pub fn insert_probe(&mut self, probe: &Probe) -> Choice {
        let shard = &mut self.shards[probe.shard];
        let choice = self.hashes.choose(shard, &probe.blocks, &probe.bits);
        if !choice.noop {
            shard.set_bits(probe.blocks[choice.index], &probe.bits);
        }
        self.inserted += 1;
        choice
    }

    pub fn lookup_probe(&self, probe: &Probe) -> bool {
        let shard = &self.shards[probe.shard];
        probe.blocks.iter().any(|&b| shard.test_all(b, &probe.bits))
    }

    /// Total bits `m`.
    pub fn total_bits(&self) -> u64 {
        self.layout.total_bits()
    }

    pub fn count_ones(&self) -> u64 {
        self.shards.iter().map(BlockArray::popcount).sum()
    }

    /// Fraction of set bits.
    pub fn load(&self) -> f64 {
        self.count_ones() as f64 / self.total_bits() as f64
    }

    /// Set bits of every block in global block order (shard by shard).
    pub fn block_popcounts(&self) -> impl Iterator<Item = u32> + '_ {
        self.shards
            .iter()
            .flat_map(|s| (0..s.num_blocks()).map(move |b| s.popcount_block(b)))
    }

    /// Bytes of the bit array in serialized order.
    pub fn bit_bytes(&self) -> Vec<u8> {
        crate::format::bit_bytes(self)
    }
}

/// Filters are equal when they have the same parameters, seed, inserted
/// count and bits. Capacity-based and explicit sizing that give the same
/// layout compare equal.
impl PartialEq for Filter {
    fn eq(&self, other: &Self) -> bool {
        crate::format::FilterFileHeader::of(self) == crate::format::FilterFileHeader::of(other)
            && self.shards == other.shards
    }
}
