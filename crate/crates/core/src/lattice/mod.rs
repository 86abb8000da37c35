//! Lattice sites, diamond-supported vectors, the random potential, and the
//! matrix-free action of `H = -Δ + V`.

mod diamond;
mod potential;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diamond::{diamond_len, DiamondVector};
pub use potential::{potential_value, PotentialField};

/// Diagonal of the positive discrete Laplacian `(-Δψ)(n) = 4ψ(n) - Σ ψ(m)`.
pub const LAPLACIAN_DIAGONAL: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("shell {shell} exceeds diamond radius {radius}")]
    ShellOutOfRange { shell: usize, radius: usize },
    #[error("site {site} lies outside the radius-{radius} diamond")]
    SiteOutsideDiamond { site: Site, radius: usize },
    #[error("radius-{radius} diamond needs {expected} values, got {actual}")]
    LengthMismatch {
        radius: usize,
        expected: usize,
        actual: usize,
    },
    #[error("cannot embed a radius-{from} vector into radius {to}")]
    ShrinkingEmbed { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub i: i64,
    pub j: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { i: 0, j: 0 };
    /// The probe site of the distance experiment.
    pub const DIAGONAL: Site = Site { i: 1, j: 1 };

    pub const fn new(i: i64, j: i64) -> Self {
        Self { i, j }
    }

    /// ℓ¹ norm, used as the shell index.
    pub fn l1(&self) -> usize {
        (self.i.unsigned_abs() + self.j.unsigned_abs()) as usize
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// `H = d·I - A + V` where `A` is the 4-neighbour adjacency and `d` the
/// diagonal offset (4 for the positive Laplacian).
///
/// Holds a cached diamond of diagonal values so that repeated applications
/// do not re-hash the potential. Vectors up to the cached radius can be
/// applied; the result has radius one larger.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    field: PotentialField,
    offset: f64,
    diagonal: DiamondVector,
}

impl Hamiltonian {
    pub fn new(field: PotentialField, radius: usize) -> Self {
        Self::with_diagonal_offset(field, radius, LAPLACIAN_DIAGONAL)
    }

    pub fn with_diagonal_offset(field: PotentialField, radius: usize, offset: f64) -> Self {
        let diagonal = DiamondVector::from_fn(radius, |s| offset + field.value(s));
        Self {
            field,
            offset,
            diagonal,
        }
    }

    pub fn field(&self) -> &PotentialField {
        &self.field
    }

    pub fn diagonal_offset(&self) -> f64 {
        self.offset
    }

    /// Largest input radius [`apply`](Self::apply) accepts.
    pub fn radius(&self) -> usize {
        self.diagonal.radius()
    }

    /// Returns a copy whose cache covers at least `radius`.
    pub fn grown_to(&self, radius: usize) -> Hamiltonian {
        if radius <= self.radius() {
            return self.clone();
        }
        Self::with_diagonal_offset(self.field, radius, self.offset)
    }

    /// `H ψ` on the diamond of radius `ψ.radius() + 1`.
    ///
    /// Panics if `psi` is larger than the cached radius.
    pub fn apply(&self, psi: &DiamondVector) -> DiamondVector {
        let r = psi.radius();
        assert!(
            r <= self.radius(),
            "vector radius {r} exceeds Hamiltonian cache radius {}",
            self.radius()
        );
        let mut out = DiamondVector::zeros(r + 1);
        let diag_offset = self.radius() - r;
        let ri = r as i64;
        for i in -ri..=ri {
            let inp = psi.row(i);
            let h = inp.len() / 2;
            let diag = &self.diagonal.row(i)[diag_offset..diag_offset + inp.len()];

            // Same row: output half-width is h + 1.
            let row = out.row_mut(i);
            for ((o, &p), &d) in row[1..2 * h + 2].iter_mut().zip(inp).zip(diag) {
                *o += d * p;
            }
            for (o, &p) in row[2..2 * h + 3].iter_mut().zip(inp) {
                *o -= p;
            }
            for (o, &p) in row[..2 * h + 1].iter_mut().zip(inp) {
                *o -= p;
            }

            // Vertical neighbours land at offset (out half-width - h).
            for ni in [i - 1, i + 1] {
                let row = out.row_mut(ni);
                let start = row.len() / 2 - h;
                for (o, &p) in row[start..start + inp.len()].iter_mut().zip(inp) {
                    *o -= p;
                }
            }
        }
        out
    }
}

/// One application of `H` to `psi`, building the potential cache on the
/// fly. Prefer [`Hamiltonian::apply`] inside loops.
pub fn apply_hamiltonian(psi: &DiamondVector, field: &PotentialField) -> DiamondVector {
    Hamiltonian::new(*field, psi.radius()).apply(psi)
}

pub fn shell_energy(psi: &DiamondVector, s: usize) -> Result<f64, LatticeError> {
    psi.shell_energy(s)
}
