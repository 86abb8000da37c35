//! Unnormalized orthogonalization of the Krylov sequence `H^k δ₀₀` and the
//! distance series built from it.
//!
//! The basis vectors `m_k` are never normalized. They do grow geometrically
//! (roughly like `(spectral width / 2)^k`), so each stored vector carries a
//! power-of-two exponent and the true vector is `values · 2^log2_scale`.
//! Rescaling by a power of two is exact, and every quantity the series
//! needs (`<m_k, δ₁₁>² / ‖m_k‖²` and the projection coefficients) is
//! invariant under it.

use std::collections::VecDeque;
use std::fmt;
use std::num::NonZeroUsize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{DiamondVector, Hamiltonian, PotentialField, Site};

/// `‖m_k‖² < BREAKDOWN_RATIO · ‖m₀‖²` declares an invariant Krylov space.
pub const BREAKDOWN_RATIO: f64 = 1e-24;
/// Partial Bessel sums above `1 + DEGENERACY_SLACK` abort the run.
pub const DEGENERACY_SLACK: f64 = 1e-6;

/// Number of leading basis vectors kept as orthogonality probes in
/// recurrence mode. They live on tiny diamonds, so checking against them
/// costs almost nothing.
pub const DRIFT_ANCHORS: usize = 8;

// Stored vectors are renormalized once ‖s‖² leaves [2^-RESCALE_LOG2, 2^RESCALE_LOG2].
const RESCALE_LOG2: i32 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrthogonalizationMode {
    /// Project every new vector against all earlier ones (two modified
    /// Gram–Schmidt passes). Memory grows like `n³`.
    FullGramSchmidt,
    /// Lanczos three-term recurrence. With `reorthogonalize_every = Some(p)`
    /// the new vector is additionally projected against the retained history
    /// every `p` steps; `window` bounds that history (None keeps all of it).
    ThreeTermRecurrence {
        reorthogonalize_every: Option<NonZeroUsize>,
        window: Option<NonZeroUsize>,
    },
}

impl OrthogonalizationMode {
    /// Plain recurrence, two working vectors.
    pub const fn recurrence() -> Self {
        Self::ThreeTermRecurrence {
            reorthogonalize_every: None,
            window: None,
        }
    }

    /// Recurrence re-projected against the full history at every step.
    pub const fn recurrence_full_reorth() -> Self {
        Self::ThreeTermRecurrence {
            reorthogonalize_every: Some(NonZeroUsize::MIN),
            window: None,
        }
    }

    fn retains_history(&self) -> bool {
        match self {
            Self::FullGramSchmidt => true,
            Self::ThreeTermRecurrence {
                reorthogonalize_every,
                ..
            } => reorthogonalize_every.is_some(),
        }
    }

    fn history_limit(&self) -> Option<usize> {
        match self {
            Self::FullGramSchmidt => None,
            Self::ThreeTermRecurrence { window, .. } => window.map(NonZeroUsize::get),
        }
    }
}

impl Default for OrthogonalizationMode {
    fn default() -> Self {
        Self::recurrence()
    }
}

impl fmt::Display for OrthogonalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FullGramSchmidt => write!(f, "full"),
            Self::ThreeTermRecurrence {
                reorthogonalize_every,
                window,
            } => {
                write!(f, "recurrence")?;
                if let Some(p) = reorthogonalize_every {
                    write!(f, "(reorth every {p}")?;
                    match window {
                        Some(w) => write!(f, ", window {w})"),
                        None => write!(f, ", full history)"),
                    }?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error("Krylov depth must be at least 1")]
    ZeroDepth,
    #[error(
        "partial Bessel sum reached {partial_sum} at step {step}; orthogonality was lost \
         (switch to full Gram-Schmidt or reorthogonalize more often)"
    )]
    LostOrthogonality { step: usize, partial_sum: f64 },
    #[error("Krylov space became invariant at step {step} before vector {requested}")]
    Breakdown { step: usize, requested: usize },
}

/// An orthogonal basis vector `m_k = values · 2^log2_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovVector {
    values: DiamondVector,
    log2_scale: i32,
    stored_norm_sq: f64,
}

impl KrylovVector {
    fn new(values: DiamondVector, log2_scale: i32) -> Self {
        let stored_norm_sq = values.squared_norm();
        Self {
            values,
            log2_scale,
            stored_norm_sq,
        }
    }

    /// Stored entries; multiply by `2^log2_scale` for the true vector.
    pub fn values(&self) -> &DiamondVector {
        &self.values
    }

    pub fn log2_scale(&self) -> i32 {
        self.log2_scale
    }

    pub fn radius(&self) -> usize {
        self.values.radius()
    }

    /// `‖m_k‖²`; may overflow to infinity for deep steps.
    pub fn squared_norm(&self) -> f64 {
        self.stored_norm_sq * 2f64.powi(2 * self.log2_scale)
    }

    /// `<m_k, δ₁₁>² / ‖m_k‖²`.
    pub fn bessel_term(&self) -> f64 {
        let probe = self.values.get(Site::DIAGONAL);
        if probe == 0.0 {
            return 0.0;
        }
        probe * probe / self.stored_norm_sq
    }

    /// The true vector `m_k`. Entries overflow when `log2_scale` is large.
    pub fn to_unscaled(&self) -> DiamondVector {
        let mut v = self.values.clone();
        if self.log2_scale != 0 {
            v.scale(2f64.powi(self.log2_scale));
        }
        v
    }

    fn true_norm_is_below(&self, threshold: f64) -> bool {
        if self.stored_norm_sq == 0.0 {
            return true;
        }
        self.squared_norm() < threshold
    }

    fn renormalize(&mut self) {
        let exp = self.stored_norm_sq.log2();
        if exp.is_finite() && exp.abs() > RESCALE_LOG2 as f64 {
            let shift = (exp / 2.0).floor() as i32;
            self.values.scale(2f64.powi(-shift));
            self.log2_scale += shift;
            self.stored_norm_sq = self.values.squared_norm();
        }
    }
}

/// Projects `v` against every basis vector in two modified Gram–Schmidt
/// passes. Returns the largest normalized overlap seen in the second pass,
/// i.e. how much the first pass missed.
fn project_out<'a>(
    v: &mut DiamondVector,
    basis: impl Iterator<Item = &'a KrylovVector> + Clone,
) -> f64 {
    let mut residual_overlap = 0.0f64;
    for pass in 0..2 {
        for m in basis.clone() {
            let overlap = v.dot(&m.values);
            if overlap == 0.0 {
                continue;
            }
            if pass == 1 {
                let scale = (v.squared_norm() * m.stored_norm_sq).sqrt();
                if scale > 0.0 {
                    residual_overlap = residual_overlap.max(overlap.abs() / scale);
                }
            }
            v.add_scaled(-overlap / m.stored_norm_sq, &m.values);
        }
    }
    residual_overlap
}

fn normalized_overlap(a: &DiamondVector, a_norm_sq: f64, b: &KrylovVector) -> f64 {
    let scale = (a_norm_sq * b.stored_norm_sq).sqrt();
    if scale > 0.0 {
        a.dot(&b.values).abs() / scale
    } else {
        0.0
    }
}

/// Step-by-step generator of `m_0, m_1, …` for a fixed Hamiltonian.
#[derive(Debug, Clone)]
pub struct KrylovProcess {
    hamiltonian: Hamiltonian,
    mode: OrthogonalizationMode,
    step: usize,
    current: KrylovVector,
    previous: Option<KrylovVector>,
    // Excludes `current` and `previous` in recurrence mode; holds every
    // earlier vector in full mode.
    history: VecDeque<KrylovVector>,
    // m_0 .. m_{DRIFT_ANCHORS-1}, recurrence mode only.
    anchors: Vec<KrylovVector>,
    drift: f64,
    breakdown: Option<usize>,
}

impl KrylovProcess {
    /// Starts at `m_0 = δ₀₀`.
    pub fn new(hamiltonian: Hamiltonian, mode: OrthogonalizationMode) -> Self {
        Self {
            hamiltonian,
            mode,
            step: 0,
            current: KrylovVector::new(DiamondVector::delta(Site::ORIGIN), 0),
            previous: None,
            history: VecDeque::new(),
            anchors: Vec::new(),
            drift: 0.0,
            breakdown: None,
        }
    }

    pub fn from_field(field: PotentialField, depth: usize, mode: OrthogonalizationMode) -> Self {
        Self::new(Hamiltonian::new(field, depth), mode)
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn current(&self) -> &KrylovVector {
        &self.current
    }

    pub fn mode(&self) -> OrthogonalizationMode {
        self.mode
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    /// Largest normalized overlap between a new vector and the earlier
    /// vectors it was checked against, measured before correction.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Step at which the Krylov space became invariant, if it did.
    pub fn breakdown(&self) -> Option<usize> {
        self.breakdown
    }

    /// Advances to `m_{k+1}`. Returns `false` (and leaves the state
    /// untouched) once breakdown has happened.
    pub fn advance(&mut self) -> bool {
        if self.breakdown.is_some() {
            return false;
        }
        if self.current.radius() > self.hamiltonian.radius() {
            let target = (2 * self.hamiltonian.radius()).max(self.current.radius());
            self.hamiltonian = self.hamiltonian.grown_to(target);
        }
        let next_step = self.step + 1;
        let mut w = self.hamiltonian.apply(&self.current.values);
        let scale = self.current.log2_scale;

        match self.mode {
            OrthogonalizationMode::FullGramSchmidt => {
                let basis = self.history.iter().chain(std::iter::once(&self.current));
                let overlap = project_out(&mut w, basis);
                self.drift = self.drift.max(overlap);
            }
            OrthogonalizationMode::ThreeTermRecurrence {
                reorthogonalize_every,
                ..
            } => {
                let cur = &self.current;
                let alpha = w.dot(&cur.values) / cur.stored_norm_sq;
                w.add_scaled(-alpha, &cur.values);
                if let Some(prev) = &self.previous {
                    // β = ‖m_k‖² / ‖m_{k-1}‖², expressed in prev's stored units.
                    let beta = cur.stored_norm_sq / prev.stored_norm_sq
                        * 2f64.powi(cur.log2_scale - prev.log2_scale);
                    w.add_scaled(-beta, &prev.values);
                }
                let reorth = reorthogonalize_every.is_some_and(|p| next_step % p.get() == 0);
                if reorth {
                    let basis = self
                        .history
                        .iter()
                        .chain(self.previous.iter())
                        .chain(std::iter::once(&self.current));
                    let overlap = project_out(&mut w, basis);
                    self.drift = self.drift.max(overlap);
                } else {
                    let w_sq = w.squared_norm();
                    let mut seen = normalized_overlap(&w, w_sq, &self.current);
                    if let Some(prev) = &self.previous {
                        seen = seen.max(normalized_overlap(&w, w_sq, prev));
                    }
                    // Anchors still adjacent to the new vector were covered above.
                    for a in self.anchors.iter().take(self.step.saturating_sub(1)) {
                        seen = seen.max(normalized_overlap(&w, w_sq, a));
                    }
                    self.drift = self.drift.max(seen);
                }
            }
        }

        let mut next = KrylovVector::new(w, scale);
        if next.true_norm_is_below(BREAKDOWN_RATIO) {
            self.breakdown = Some(next_step);
            return false;
        }
        next.renormalize();

        if self.mode != OrthogonalizationMode::FullGramSchmidt && self.anchors.len() < DRIFT_ANCHORS {
            self.anchors.push(self.current.clone());
        }
        let old = std::mem::replace(&mut self.current, next);
        if self.mode.retains_history() {
            match self.mode {
                OrthogonalizationMode::FullGramSchmidt => self.history.push_back(old),
                OrthogonalizationMode::ThreeTermRecurrence { .. } => {
                    if let Some(p) = self.previous.replace(old) {
                        self.history.push_back(p);
                    }
                    if let Some(limit) = self.mode.history_limit() {
                        // Window counts previous and current too.
                        while self.history.len() + 2 > limit && !self.history.is_empty() {
                            self.history.pop_front();
                        }
                    }
                }
            }
        } else {
            self.previous = Some(old);
        }
        self.step = next_step;
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceTerm {
    pub k: usize,
    /// `<m_k, δ₁₁>² / ‖m_k‖²`
    pub bessel_term: f64,
    pub partial_sum: f64,
    /// `sqrt(max(0, 1 - partial_sum))`
    pub distance: f64,
}

/// `D_0, …, D_n` for one potential realization.
///
/// After a breakdown at step `b` the remaining terms carry a zero Bessel
/// term, so the series always has `n + 1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSeries {
    pub field: PotentialField,
    pub mode: OrthogonalizationMode,
    pub diagonal_offset: f64,
    pub terms: Vec<DistanceTerm>,
    pub breakdown: Option<usize>,
    pub drift: f64,
}

impl DistanceSeries {
    pub fn depth(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn distances(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.distance).collect()
    }

    pub fn final_distance(&self) -> f64 {
        self.terms.last().map_or(1.0, |t| t.distance)
    }
}

fn push_term(terms: &mut Vec<DistanceTerm>, k: usize, bessel_term: f64) -> Result<(), KrylovError> {
    let partial_sum = terms.last().map_or(0.0, |t| t.partial_sum) + bessel_term;
    if partial_sum > 1.0 + DEGENERACY_SLACK {
        return Err(KrylovError::LostOrthogonality { step: k, partial_sum });
    }
    terms.push(DistanceTerm {
        k,
        bessel_term,
        partial_sum,
        distance: (1.0 - partial_sum).max(0.0).sqrt(),
    });
    Ok(())
}

/// Drives an existing process for `n` steps and records the series.
pub fn run_process(mut process: KrylovProcess, n: usize) -> Result<DistanceSeries, KrylovError> {
    if n == 0 {
        return Err(KrylovError::ZeroDepth);
    }
    let mut terms = Vec::with_capacity(n + 1);
    push_term(&mut terms, 0, process.current().bessel_term())?;
    for k in 1..=n {
        let bessel = if process.advance() {
            process.current().bessel_term()
        } else {
            0.0
        };
        push_term(&mut terms, k, bessel)?;
    }
    Ok(DistanceSeries {
        field: *process.hamiltonian().field(),
        mode: process.mode(),
        diagonal_offset: process.hamiltonian().diagonal_offset(),
        terms,
        breakdown: process.breakdown(),
        drift: process.drift(),
    })
}

/// Distance series `D_0 … D_n` for `H = -Δ + V` with the positive Laplacian.
pub fn run_krylov(
    field: &PotentialField,
    n: usize,
    mode: OrthogonalizationMode,
) -> Result<DistanceSeries, KrylovError> {
    if n == 0 {
        return Err(KrylovError::ZeroDepth);
    }
    run_process(KrylovProcess::from_field(*field, n, mode), n)
}

/// The `k`-th orthogonal basis vector `m_k`.
pub fn orthogonal_vector(
    field: &PotentialField,
    k: usize,
    mode: OrthogonalizationMode,
) -> Result<KrylovVector, KrylovError> {
    let mut process = KrylovProcess::from_field(*field, k.max(1), mode);
    while process.step_index() < k {
        if !process.advance() {
            return Err(KrylovError::Breakdown {
                step: process.breakdown().unwrap_or(process.step_index() + 1),
                requested: k,
            });
        }
    }
    Ok(process.current().clone())
}
