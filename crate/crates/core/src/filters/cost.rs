//! Block selection costs.
//!
//! All costs are functions of `j` (set bits in the block after inserting)
//! and `a` (bits the insertion newly sets). The constants 128 and 256 of
//! the 512-bit formulas are the quarter-load and half-load points and scale
//! as `B/4` and `B/2` for other block widths.

use crate::{Error, Result};

/// The golden ratio, the default base of the exponential cost.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// `beta^(j / (B/4)) + a / k`
    Exp,
    /// `sigma * k * (j / (B/2))^k + a`
    Mix,
    /// `k * ((j + mu * k) / (B/2))^k + a`
    Lookahead,
}

/// A cost function kind together with its parameter (`beta`, `sigma` or
/// `mu`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub kind: CostKind,
    pub param: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self::exp(GOLDEN_RATIO)
    }
}

impl CostModel {
    pub fn exp(beta: f64) -> Self {
        Self {
            kind: CostKind::Exp,
            param: beta,
        }
    }

    pub fn mix(sigma: f64) -> Self {
        Self {
            kind: CostKind::Mix,
            param: sigma,
        }
    }

    pub fn lookahead(mu: f64) -> Self {
        Self {
            kind: CostKind::Lookahead,
            param: mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            CostKind::Exp => self.param > 0.0,
            CostKind::Mix | CostKind::Lookahead => self.param >= 0.0,
        };
        if ok && self.param.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{:?} cost parameter {} out of range",
                self.kind, self.param
            )))
        }
    }

    pub fn eval(&self, j: u32, a: u32, k: u32, block_bits: u32) -> f64 {
        match self.kind {
            CostKind::Exp => cost_exp(j, a, k, self.param, block_bits),
            CostKind::Mix => cost_mix(j, a, k, self.param, block_bits),
            CostKind::Lookahead => cost_la(j, a, k, self.param, block_bits),
        }
    }
}

pub fn cost_exp(j: u32, a: u32, k: u32, beta: f64, block_bits: u32) -> f64 {
    let quarter = f64::from(block_bits) / 4.0;
    beta.powf(f64::from(j) / quarter) + f64::from(a) / f64::from(k)
}

pub fn cost_mix(j: u32, a: u32, k: u32, sigma: f64, block_bits: u32) -> f64 {
    let half = f64::from(block_bits) / 2.0;
    sigma * f64::from(k) * (f64::from(j) / half).powi(k as i32) + f64::from(a)
}

pub fn cost_la(j: u32, a: u32, k: u32, mu: f64, block_bits: u32) -> f64 {
    let half = f64::from(block_bits) / 2.0;
    let shifted = f64::from(j) + mu * f64::from(k);
    f64::from(k) * (shifted / half).powi(k as i32) + f64::from(a)
}

/// A cost model specialised to fixed `k` and `B`: the load term is looked up
/// from a table indexed by `j`, the reuse term is `a` times a weight.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CostTable {
    load: Vec<f64>,
    added_weight: f64,
}

impl CostTable {
    pub(crate) fn new(model: CostModel, k: u32, block_bits: u32) -> Self {
        let load = (0..=block_bits)
            .map(|j| model.eval(j, 0, k, block_bits))
            .collect();
        let added_weight = match model.kind {
            CostKind::Exp => 1.0 / f64::from(k),
            CostKind::Mix | CostKind::Lookahead => 1.0,
        };
        Self { load, added_weight }
    }

    #[inline(always)]
    pub(crate) fn cost(&self, j: u32, a: u32) -> f64 {
        self.load[j as usize] + f64::from(a) * self.added_weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_examples() {
        assert!((cost_exp(128, 0, 14, GOLDEN_RATIO, 512) - GOLDEN_RATIO).abs() < 1e-12);
        assert_eq!(cost_exp(0, 0, 14, GOLDEN_RATIO, 512), 1.0);
        let v = cost_exp(256, 14, 14, GOLDEN_RATIO, 512);
        assert!((v - 3.618_033_988_749_895).abs() < 1e-12);
        // quarter load of a 64-bit block
        assert!((cost_exp(16, 0, 3, 2.0, 64) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mix_examples() {
        for k in [1, 4, 7, 14] {
            for a in [0, 3, 7] {
                assert!((cost_mix(256, a, k, 1.0, 512) - f64::from(k + a)).abs() < 1e-12);
            }
        }
        assert_eq!(cost_mix(0, 5, 7, 2.5, 512), 5.0);
        assert_eq!(cost_mix(128, 3, 7, 1.0, 512), 3.054_687_5);
    }

    #[test]
    fn lookahead_examples() {
        for j in [0, 17, 128, 300] {
            for a in [0, 2, 9] {
                for k in [3, 7, 14] {
                    assert_eq!(cost_la(j, a, k, 0.0, 512), cost_mix(j, a, k, 1.0, 512));
                }
            }
        }
        // j + mu k = 256 with mu = 4, k = 8
        assert!((cost_la(224, 3, 8, 4.0, 512) - 11.0).abs() < 1e-12);
        let v = cost_la(200, 2, 7, 3.5, 512);
        assert!((v - 4.792_111_132_395_451).abs() < 1e-12, "{v}");
    }

    #[test]
    fn table_matches_formulas() {
        for model in [
            CostModel::exp(1.6),
            CostModel::mix(2.5),
            CostModel::lookahead(3.5),
        ] {
            let table = CostTable::new(model, 7, 512);
            for j in [0, 1, 100, 256, 511, 512] {
                for a in [0, 1, 7] {
                    let direct = model.eval(j, a, 7, 512);
                    assert!((table.cost(j, a) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(CostModel::exp(0.0).validate().is_err());
        assert!(CostModel::exp(1.5).validate().is_ok());
        assert!(CostModel::mix(-1.0).validate().is_err());
        assert!(CostModel::mix(0.0).validate().is_ok());
        assert!(CostModel::lookahead(f64::NAN).validate().is_err());
    }
}
