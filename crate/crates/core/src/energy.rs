//! Distribution of `‖m_k‖²` over ℓ¹-shells around the origin.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krylov::{KrylovError, KrylovProcess, OrthogonalizationMode};
use crate::lattice::PotentialField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error("shell cut {s_cut} exceeds profile depth {k}")]
    CutOutOfRange { s_cut: usize, k: usize },
    #[error("profile has zero total energy")]
    ZeroTotal,
}

/// Shell energies of `m_k`.
///
/// `shells[s]` and `total` are in units of `4^log2_scale`, matching the
/// power-of-two representation of [`crate::KrylovVector`]. All fractions
/// are unit-free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellProfile {
    pub field: PotentialField,
    pub k: usize,
    pub shells: Vec<f64>,
    pub total: f64,
    pub log2_scale: i32,
    pub drift: f64,
}

impl ShellProfile {
    pub fn disorder(&self) -> f64 {
        self.field.disorder()
    }

    /// `Σ_{s ≤ t} energy_s / total` for every `t`.
    pub fn cumulative_fractions(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.shells
            .iter()
            .map(|e| {
                acc += e;
                if self.total > 0.0 {
                    acc / self.total
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Index of the shell carrying the most energy (first one on ties).
    pub fn peak_shell(&self) -> usize {
        self.shells
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }

    /// Energy on the outermost shell `s = k`.
    pub fn outermost(&self) -> f64 {
        self.shells.last().copied().unwrap_or(0.0)
    }
}

/// Runs the Krylov process to step `k` and bins `m_k` by ℓ¹ distance.
pub fn energy_profile(
    field: &PotentialField,
    k: usize,
    mode: OrthogonalizationMode,
) -> Result<ShellProfile, EnergyError> {
    let mut process = KrylovProcess::from_field(*field, k.max(1), mode);
    while process.step_index() < k {
        if !process.advance() {
            return Err(KrylovError::Breakdown {
                step: process.breakdown().unwrap_or(process.step_index() + 1),
                requested: k,
            }
            .into());
        }
    }
    let m = process.current();
    Ok(ShellProfile {
        field: *field,
        k,
        shells: m.values().shell_energies(),
        total: m.values().squared_norm(),
        log2_scale: m.log2_scale(),
        drift: process.drift(),
    })
}

/// Fraction of the energy within ℓ¹ distance `s_cut` of the origin.
pub fn near_origin_fraction(profile: &ShellProfile, s_cut: usize) -> Result<f64, EnergyError> {
    if s_cut > profile.k {
        return Err(EnergyError::CutOutOfRange { s_cut, k: profile.k });
    }
    if profile.total <= 0.0 {
        return Err(EnergyError::ZeroTotal);
    }
    let inner: f64 = profile.shells[..=s_cut].iter().sum();
    Ok((inner / profile.total).clamp(0.0, 1.0))
}
