//! Counter-based on-site disorder.
//!
//! Each site value is a keyed hash of `(seed, realization, i, j)`, so a
//! field can be queried in any order, from any thread, and always yields
//! the same bits.

use serde::{Deserialize, Serialize};

use super::Site;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN) ^ word.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// i.i.d. uniform potential `ω_{ij} ∈ [-c, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    disorder: f64,
    seed: u64,
    realization: u64,
}

impl PotentialField {
    /// Panics if `disorder` is negative or not finite.
    pub fn new(disorder: f64, seed: u64, realization: u64) -> Self {
        assert!(
            disorder.is_finite() && disorder >= 0.0,
            "disorder must be finite and non-negative, got {disorder}"
        );
        Self {
            disorder,
            seed,
            realization,
        }
    }

    /// Identically zero potential (the free Laplacian).
    pub fn clean() -> Self {
        Self::new(0.0, 0, 0)
    }

    pub fn disorder(&self) -> f64 {
        self.disorder
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    /// Raw 64 random bits attached to `site`.
    pub fn site_bits(&self, site: Site) -> u64 {
        let mut h = mix64(self.seed ^ GOLDEN);
        h = absorb(h, self.realization);
        h = absorb(h, site.i as u64);
        absorb(h, site.j as u64)
    }

    pub fn value(&self, site: Site) -> f64 {
        if self.disorder == 0.0 {
            return 0.0;
        }
        let unit = (self.site_bits(site) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.disorder * (2.0 * unit - 1.0)
    }
}

/// Free-function form of [`PotentialField::value`].
pub fn potential_value(field: &PotentialField, site: Site) -> f64 {
    field.value(site)
}
