//! Seeded, prefix-stable sample stream over a box.
//!
//! Sample `i` depends only on `(seed, i)`: base points follow the additive
//! R_d low-discrepancy sequence shifted by a seeded offset, and every tenth
//! sample is redirected into a cube around an anchor point (normally `z*`)
//! whose half-width halves with each tier.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tiers of the anchor neighbourhood; half-width of tier `t` is `r₀·2^{−t}`.
pub const ANCHOR_TIERS: u32 = 16;
/// Every `ANCHOR_PERIOD`-th sample lands near the anchor.
pub const ANCHOR_PERIOD: usize = 10;

/// Unique positive root of `x^{d+1} = x + 1`.
fn generalized_golden_ratio(d: usize) -> f64 {
    let mut x = 1.5f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

#[derive(Debug, Clone)]
pub struct BoxSampler {
    bounds: Vec<(f64, f64)>,
    anchor: Option<DVector<f64>>,
    alpha: Vec<f64>,
    offset: Vec<f64>,
    anchor_radius: f64,
}

impl BoxSampler {
    pub fn new(bounds: &[(f64, f64)], seed: u64) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::argument("sample box must have at least one dimension"));
        }
        if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(Error::argument("sample box bounds must be finite with lo < hi"));
        }
        let d = bounds.len();
        let g = generalized_golden_ratio(d);
        let alpha = (1..=d).map(|k| g.powi(-(k as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset = (0..d).map(|_| rng.random::<f64>()).collect();
        let anchor_radius = 0.5 * bounds.iter().map(|&(lo, hi)| hi - lo).fold(f64::INFINITY, f64::min) / 2.0;
        Ok(Self {
            bounds: bounds.to_vec(),
            anchor: None,
            alpha,
            offset,
            anchor_radius,
        })
    }

    pub fn with_anchor(mut self, anchor: DVector<f64>) -> Result<Self> {
        if anchor.len() != self.bounds.len() {
            return Err(Error::Dimension {
                expected: self.bounds.len(),
                got: anchor.len(),
            });
        }
        self.anchor = Some(anchor);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Point `n` of the shifted R_d sequence in `[0, 1)^d`.
    fn unit(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        self.alpha
            .iter()
            .zip(&self.offset)
            .map(move |(a, o)| (o + a * n as f64).fract())
    }

    pub fn sample(&self, i: usize) -> DVector<f64> {
        match &self.anchor {
            Some(anchor) if i % ANCHOR_PERIOD == ANCHOR_PERIOD - 1 => {
                let j = i / ANCHOR_PERIOD;
                let tier = (j as u32) % ANCHOR_TIERS;
                let radius = self.anchor_radius * 0.5f64.powi(tier as i32);
                let u: Vec<f64> = self.unit(i).collect();
                DVector::from_iterator(
                    self.dim(),
                    anchor.iter().zip(u).map(|(c, u)| c + radius * (2.0 * u - 1.0)),
                )
            }
            _ => DVector::from_iterator(
                self.dim(),
                self.bounds
                    .iter()
                    .zip(self.unit(i))
                    .map(|(&(lo, hi), u)| lo + (hi - lo) * u),
            ),
        }
    }
}

/// Deterministic arg-max: largest value wins, ties go to the smallest index.
pub(crate) fn better(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    match a.1.partial_cmp(&b.1) {
        Some(std::cmp::Ordering::Greater) => a,
        Some(std::cmp::Ordering::Less) => b,
        _ if a.0 <= b.0 => a,
        _ => b,
    }
}
