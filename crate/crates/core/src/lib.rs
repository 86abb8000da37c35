//! Matrix-free Krylov-distance experiment for the discrete random
//! Schrödinger operator `H = -Δ + V` on the square lattice.
//!
//! The central quantity is the distance `D_n` between the unit vector at
//! site `(1, 1)` and the Krylov space `span{H^k δ₀₀ : k ≤ n}`. It is computed
//! from an unnormalized orthogonal basis `m_0, m_1, …` as
//!
//! ```text
//! D_n = sqrt(1 - Σ_{k ≤ n} <m_k, δ₁₁>² / ‖m_k‖²)
//! ```
//!
//! Vectors live on ℓ¹-diamonds that grow by one shell per application of
//! `H`, so no finite box or boundary condition is ever imposed.

pub mod energy;
pub mod ensemble;
pub mod estimate;
pub mod krylov;
pub mod lattice;
pub mod oracle;

pub use energy::{energy_profile, near_origin_fraction, EnergyError, ShellProfile};
pub use ensemble::{run_sweep, EnsembleRecord, RealizationOutcome, SweepConfig, SweepError};
pub use estimate::{estimate, fit_intercept, lower_estimate, EstimateError, FitConfig, FitResult};
pub use krylov::{
    orthogonal_vector, run_krylov, DistanceSeries, DistanceTerm, KrylovError, KrylovProcess,
    KrylovVector, OrthogonalizationMode,
};
pub use lattice::{
    apply_hamiltonian, potential_value, shell_energy, DiamondVector, Hamiltonian, LatticeError,
    PotentialField, Site,
};
pub use oracle::{oracle_distance_series, oracle_orthogonal_vector, DenseBoxOperator, OracleError};
