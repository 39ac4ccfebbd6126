//! Workloads shared by the throughput benchmarks.

use blowchoc::keygen::{negative_keys, positive_keys};
use blowchoc::{BitStrategy, Filter, FilterConfig, FilterKind};

/// A named filter configuration used in the benchmark matrix.
#[derive(Clone, Debug)]
pub struct Workload {
    pub name: &'static str,
    pub config: FilterConfig,
}

/// Standard, blocked, and blowchoc with 2 and 3 choices, all sized for
/// `n` keys at `k` bits per key.
pub fn workloads(n: u64, k: u32) -> Vec<Workload> {
    let blow = |c| {
        FilterConfig::new(FilterKind::BlowChoc, n, k)
            .with_choices(c)
            .with_strategy(BitStrategy::Random)
    };
    vec![
        Workload {
            name: "standard",
            config: FilterConfig::new(FilterKind::Standard, n, k),
        },
        Workload {
            name: "blocked",
            config: FilterConfig::new(FilterKind::Blocked, n, k),
        },
        Workload {
            name: "blow2",
            config: blow(2),
        },
        Workload {
            name: "blow3",
            config: blow(3),
        },
    ]
}

/// Inserted keys and disjoint query keys.
pub fn keys(n: usize, seed: u64) -> (Vec<u64>, Vec<u64>) {
    (positive_keys(seed, n), negative_keys(seed, n))
}

/// A filter holding every key of `keys`.
pub fn filled(config: &FilterConfig, keys: &[u64]) -> Filter {
    let mut filter = Filter::new(config.clone()).expect("benchmark configuration is valid");
    filter.insert_all(keys.iter().copied());
    filter
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_build() {
        let (pos, neg) = keys(2000, 1);
        for w in workloads(2000, 14) {
            let f = filled(&w.config, &pos);
            assert!(pos.iter().all(|&x| f.lookup(x)), "{}", w.name);
            assert!(
                neg.iter().filter(|&&x| f.lookup(x)).count() < 100,
                "{}",
                w.name
            );
        }
    }
}
