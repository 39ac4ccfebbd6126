//! Evaluation: empirical false positive rates, block load histograms and
//! the analytic bounds used to interpret them.

use std::thread;

use crate::filters::{Filter, FilterConfig};
use crate::keygen::{positive_keys, NegativeKeys, CHUNK_KEYS};
use crate::sharding::{insert_sharded, BuildOptions};
use crate::{Error, Result};

/// An empirical false positive rate: `W` hits among `N` negative queries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FprEstimate {
    pub queries: u64,
    pub false_positives: u64,
}

impl FprEstimate {
    pub fn new(queries: u64, false_positives: u64) -> Self {
        debug_assert!(false_positives <= queries);
        Self {
            queries,
            false_positives,
        }
    }

    pub fn fpr(&self) -> f64 {
        self.false_positives as f64 / self.queries as f64
    }

    /// Binomial standard error of [`fpr`](Self::fpr).
    pub fn stderr(&self) -> f64 {
        let p = self.fpr();
        (p * (1.0 - p) / self.queries as f64).sqrt()
    }

    /// `log2` of the rate; `None` when no false positive was seen.
    pub fn log2_fpr(&self) -> Option<f64> {
        (self.false_positives > 0).then(|| self.fpr().log2())
    }

    /// Standard error on the log2 scale (delta method).
    pub fn log2_stderr(&self) -> Option<f64> {
        (self.false_positives > 0).then(|| self.stderr() / (self.fpr() * std::f64::consts::LN_2))
    }
}

/// Queries the first `n` keys of `negatives`. Keys are generated per chunk,
/// so the estimate is the same for every thread count.
pub fn estimate_fpr(
    filter: &Filter,
    negatives: &NegativeKeys,
    n: u64,
    threads: usize,
) -> Result<FprEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one query".into()));
    }
    let chunks = n.div_ceil(CHUNK_KEYS);
    let count_chunk = |c: u64| {
        let len = CHUNK_KEYS.min(n - c * CHUNK_KEYS);
        negatives
            .chunk(c, len)
            .filter(|&x| filter.lookup(x))
            .count() as u64
    };
    let threads = threads.max(1).min(chunks as usize);
    let hits = if threads == 1 {
        (0..chunks).map(count_chunk).sum()
    } else {
        thread::scope(|scope| {
            let workers: Vec<_> = (0..threads as u64)
                .map(|t| {
                    scope.spawn(move || (t..chunks).step_by(threads).map(count_chunk).sum::<u64>())
                })
                .collect();
            workers
                .into_iter()
                .map(|w| w.join().expect("query worker panicked"))
                .sum()
        })
    };
    Ok(FprEstimate::new(n, hits))
}

/// Queries explicit keys, which must not have been inserted.
pub fn estimate_fpr_keys(
    filter: &Filter,
    negatives: &[u64],
    threads: usize,
) -> Result<FprEstimate> {
    if negatives.is_empty() {
        return Err(Error::InvalidArgument("need at least one query".into()));
    }
    let answers = crate::sharding::lookup_chunked(filter, negatives, threads);
    let hits = answers.iter().filter(|&&a| a).count() as u64;
    Ok(FprEstimate::new(negatives.len() as u64, hits))
}

/// Number of blocks per set-bit count `j`, `0..=B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadHistogram {
    pub counts: Vec<u64>,
}

impl LoadHistogram {
    pub fn blocks(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_bits_set(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(j, &c)| j as u64 * c)
            .sum()
    }

    /// Mean set bits per block.
    pub fn mean_load(&self) -> f64 {
        self.total_bits_set() as f64 / self.blocks() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean_load();
        let ss: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(j, &c)| c as f64 * (j as f64 - mean).powi(2))
            .sum();
        ss / self.blocks() as f64
    }
}

/// Per-block popcount tally. For standard filters the flat array is cut
/// into `B`-bit windows at the block boundaries.
pub fn block_load_histogram(filter: &Filter) -> LoadHistogram {
    let mut counts = vec![0u64; filter.layout().block_bits as usize + 1];
    for j in filter.block_popcounts() {
        counts[j as usize] += 1;
    }
    LoadHistogram { counts }
}

/// Most set bits a block may hold so that its local false positive rate
/// `(j/B)^k` stays at `2^-k / c`, i.e. `(B/2) c^(-1/k)`, rounded to nearest.
pub fn max_allowed_load(k: u32, choices: u32, block_bits: u32) -> Result<u32> {
    if k == 0 || choices == 0 {
        return Err(Error::InvalidArgument("k and c must be positive".into()));
    }
    let bound = f64::from(block_bits) / 2.0 * f64::from(choices).powf(-1.0 / f64::from(k));
    Ok(bound.round() as u32)
}

/// Settings for [`required_overhead`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverheadSearch {
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub queries: u64,
    pub threads: usize,
}

impl Default for OverheadSearch {
    fn default() -> Self {
        Self {
            lower: 0.7,
            upper: 1.6,
            tolerance: 0.01,
            queries: 10_000_000,
            threads: 1,
        }
    }
}

/// One build-and-measure step: `n` fresh keys into a filter of the given
/// relative size, then `queries` fresh negatives.
pub fn measure_fpr(
    template: &FilterConfig,
    n: u64,
    relative_size: f64,
    queries: u64,
    seed: u64,
    threads: usize,
) -> Result<FprEstimate> {
    let config = template
        .clone()
        .with_relative_size(relative_size)
        .with_seed(seed);
    let mut filter = Filter::new(config)?;
    let keys = positive_keys(seed ^ 0x005E_ED0F_4E75, n as usize);
    let options = if threads > 1 {
        BuildOptions::parallel(threads)
    } else {
        BuildOptions::sequential()
    };
    insert_sharded(&mut filter, keys.into_iter().map(Ok), options)?;
    estimate_fpr(
        &filter,
        &NegativeKeys::new(seed.rotate_left(17) ^ 0xA11CE),
        queries,
        threads,
    )
}

/// Smallest relative size whose empirical false positive rate reaches
/// `target_fpr`, found by bisection on `[lower, upper]` to `tolerance`.
/// Each probe builds a fresh filter with a fresh seed derived from `seed`.
pub fn required_overhead(
    template: &FilterConfig,
    n: u64,
    target_fpr: f64,
    search: OverheadSearch,
    seed: u64,
) -> Result<f64> {
    let mut probe_seed = seed;
    let mut passes = |rel: f64| -> Result<bool> {
        probe_seed = probe_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let est = measure_fpr(template, n, rel, search.queries, probe_seed, search.threads)?;
        Ok(est.fpr() <= target_fpr)
    };
    let (mut lo, mut hi) = (search.lower, search.upper);
    if !passes(hi)? {
        return Err(Error::Bracket(format!(
            "false positive rate stays above {target_fpr:e} up to relative size {hi}"
        )));
    }
    if passes(lo)? {
        return Err(Error::Bracket(format!(
            "false positive rate already below {target_fpr:e} at relative size {lo}"
        )));
    }
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::FilterKind;

    #[test]
    fn estimate_fields() {
        let e = FprEstimate::new(1000, 10);
        assert_eq!(e.fpr(), 0.01);
        assert!((e.stderr() - (0.01f64 * 0.99 / 1000.0).sqrt()).abs() < 1e-15);
        assert!((e.log2_fpr().unwrap() - 0.01f64.log2()).abs() < 1e-12);
        assert_eq!(FprEstimate::new(10, 0).log2_fpr(), None);
    }

    #[test]
    fn empty_and_full_filters() {
        let mut f = Filter::new(FilterConfig::new(FilterKind::Blocked, 1000, 8)).unwrap();
        let e = estimate_fpr(&f, &NegativeKeys::new(1), 10_000, 1).unwrap();
        assert_eq!(e.false_positives, 0);
        assert_eq!(e.fpr(), 0.0);

        let (_, shards, _) = f.parts_mut();
        shards[0].words_mut().fill(u64::MAX);
        let e = estimate_fpr(&f, &NegativeKeys::new(1), 10_000, 2).unwrap();
        assert_eq!(e.fpr(), 1.0);
        assert!(estimate_fpr(&f, &NegativeKeys::new(1), 0, 1).is_err());
        assert!(estimate_fpr_keys(&f, &[], 1).is_err());
    }

    #[test]
    fn thread_count_does_not_change_estimate() {
        let mut f = Filter::new(FilterConfig::new(FilterKind::BlowChoc, 5000, 4)).unwrap();
        f.insert_all(positive_keys(1, 5000));
        let n = 3 * CHUNK_KEYS + 17;
        let one = estimate_fpr(&f, &NegativeKeys::new(2), n, 1).unwrap();
        let three = estimate_fpr(&f, &NegativeKeys::new(2), n, 3).unwrap();
        assert_eq!(one, three);
        let explicit: Vec<u64> = NegativeKeys::new(2).take(n).collect();
        assert_eq!(estimate_fpr_keys(&f, &explicit, 2).unwrap(), one);
    }

    #[test]
    fn histogram_identities() {
        let mut f = Filter::new(FilterConfig::new(FilterKind::BlowChoc, 1000, 9)).unwrap();
        let blocks = f.layout().num_blocks;
        let h = block_load_histogram(&f);
        assert_eq!(h.counts[0], blocks);
        assert_eq!(h.counts.len(), 513);

        let probe = f.probe(2).unwrap();
        f.insert(2);
        let h = block_load_histogram(&f);
        assert_eq!(h.counts[probe.bits.len()], 1);
        assert_eq!(h.counts[0], blocks - 1);

        f.insert_all(positive_keys(3, 1000));
        let h = block_load_histogram(&f);
        assert_eq!(h.blocks(), blocks);
        assert_eq!(h.total_bits_set(), f.count_ones());

        let mut s = Filter::new(FilterConfig::new(FilterKind::Standard, 1000, 9)).unwrap();
        s.insert_all(positive_keys(3, 1000));
        let h = block_load_histogram(&s);
        assert_eq!(h.total_bits_set(), s.count_ones());
    }

    #[test]
    fn max_load_table() {
        for k in [1, 5, 14, 20] {
            assert_eq!(max_allowed_load(k, 1, 512).unwrap(), 256);
        }
        assert_eq!(max_allowed_load(7, 2, 512).unwrap(), 232);
        assert_eq!(max_allowed_load(7, 3, 512).unwrap(), 219);
        assert_eq!(max_allowed_load(14, 2, 512).unwrap(), 244);
        assert_eq!(max_allowed_load(14, 3, 512).unwrap(), 237);
        assert!(max_allowed_load(0, 2, 512).is_err());
    }

    #[test]
    fn bracket_failure_is_reported() {
        let template = FilterConfig::new(FilterKind::Standard, 2000, 4);
        let search = OverheadSearch {
            queries: 20_000,
            ..OverheadSearch::default()
        };
        // unreachable target: nothing at these sizes gets near 1e-9
        let err = required_overhead(&template, 2000, 1e-9, search, 1).unwrap_err();
        assert!(matches!(err, Error::Bracket(_)));
        let err = required_overhead(&template, 2000, 0.9, search, 1).unwrap_err();
        assert!(matches!(err, Error::Bracket(_)));
    }

    #[test]
    fn small_overhead_search_converges() {
        let template = FilterConfig::new(FilterKind::Standard, 20_000, 4);
        let search = OverheadSearch {
            queries: 400_000,
            tolerance: 0.02,
            ..OverheadSearch::default()
        };
        let rel = required_overhead(&template, 20_000, 1.0 / 16.0, search, 7).unwrap();
        assert!((rel - 1.0).abs() < 0.06, "{rel}");
    }
}
