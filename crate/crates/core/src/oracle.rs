//! Dense reference implementation used to cross-check the matrix-free
//! engine at small depth.
//!
//! The operator is materialized as an explicit matrix on the ℓ∞ box
//! `|i|, |j| ≤ B`. The Krylov space is spanned by Chebyshev vectors
//! `T_k(A) δ₀₀` with `A = (H - 4)/(4 + c)`, whose spectrum lies in [-1, 1].
//! They span the same space as the monomials `H^k δ₀₀` but stay well
//! conditioned, so a Householder QR gives an accurate orthonormal basis.
//! Distances are then read off as explicit projector residuals.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::lattice::{DiamondVector, PotentialField, Site, LAPLACIAN_DIAGONAL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("box radius {box_radius} must exceed the Krylov depth {n}")]
    BoxTooSmall { box_radius: usize, n: usize },
}

/// Explicit matrix of `H` on the `(2B + 1)²` sites of the box `|i|,|j| ≤ B`.
#[derive(Debug, Clone)]
pub struct DenseBoxOperator {
    box_radius: usize,
    disorder: f64,
    matrix: DMatrix<f64>,
}

impl DenseBoxOperator {
    pub fn new(field: &PotentialField, box_radius: usize) -> Self {
        let side = 2 * box_radius + 1;
        let dim = side * side;
        let b = box_radius as i64;
        let mut matrix = DMatrix::zeros(dim, dim);
        for i in -b..=b {
            for j in -b..=b {
                let row = Self::flat_index(box_radius, i, j);
                matrix[(row, row)] = LAPLACIAN_DIAGONAL + field.value(Site::new(i, j));
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (ni, nj) = (i + di, j + dj);
                    if ni.abs() <= b && nj.abs() <= b {
                        matrix[(row, Self::flat_index(box_radius, ni, nj))] = -1.0;
                    }
                }
            }
        }
        Self {
            box_radius,
            disorder: field.disorder(),
            matrix,
        }
    }

    fn flat_index(box_radius: usize, i: i64, j: i64) -> usize {
        let b = box_radius as i64;
        let side = 2 * b + 1;
        ((i + b) * side + (j + b)) as usize
    }

    pub fn box_radius(&self) -> usize {
        self.box_radius
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn index(&self, site: Site) -> Option<usize> {
        let b = self.box_radius as i64;
        (site.i.abs() <= b && site.j.abs() <= b).then(|| Self::flat_index(self.box_radius, site.i, site.j))
    }

    pub fn unit(&self, site: Site) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[self.index(site).expect("site inside box")] = 1.0;
        v
    }

    /// `max |M - Mᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// Restriction of a box vector to the radius-`radius` diamond.
    pub fn to_diamond(&self, v: &DVector<f64>, radius: usize) -> DiamondVector {
        DiamondVector::from_fn(radius, |s| self.index(s).map_or(0.0, |idx| v[idx]))
    }

    /// Orthonormal basis of `span{H^k δ₀₀ : k ≤ n}` as the columns of the
    /// thin Q factor; column prefixes span the nested Krylov spaces.
    fn krylov_basis(&self, n: usize) -> DMatrix<f64> {
        let width = LAPLACIAN_DIAGONAL + self.disorder;
        let scaled = |v: &DVector<f64>| (&self.matrix * v - v * LAPLACIAN_DIAGONAL) / width;

        let dim = self.dim();
        let mut columns = DMatrix::zeros(dim, n + 1);
        let mut older = self.unit(Site::ORIGIN);
        columns.set_column(0, &older);
        if n >= 1 {
            let mut newer = scaled(&older);
            columns.set_column(1, &(&newer / newer.norm()));
            for k in 2..=n {
                let next = scaled(&newer) * 2.0 - &older;
                older = newer;
                newer = next;
                columns.set_column(k, &(&newer / newer.norm()));
            }
        }
        columns.qr().q()
    }
}

fn project_off(v: &mut DVector<f64>, basis: &DMatrix<f64>, count: usize) {
    for _ in 0..2 {
        for j in 0..count {
            let q = basis.column(j);
            let coef = q.dot(v);
            v.axpy(-coef, &q, 1.0);
        }
    }
}

fn check_box(box_radius: usize, n: usize) -> Result<(), OracleError> {
    if box_radius <= n {
        return Err(OracleError::BoxTooSmall { box_radius, n });
    }
    Ok(())
}

/// `D_k = ‖δ₁₁ - P_k δ₁₁‖` for `k = 0 … n`, with `P_k` the orthogonal
/// projector onto the order-`k` Krylov space.
pub fn oracle_distance_series(
    field: &PotentialField,
    n: usize,
    box_radius: usize,
) -> Result<Vec<f64>, OracleError> {
    check_box(box_radius, n)?;
    let op = DenseBoxOperator::new(field, box_radius);
    let q = op.krylov_basis(n);
    let probe = op.unit(Site::DIAGONAL);
    let mut distances = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut residual = probe.clone();
        project_off(&mut residual, &q, k + 1);
        distances.push(residual.norm());
    }
    Ok(distances)
}

/// `m_k`: the part of `H^k δ₀₀` orthogonal to the order-`(k-1)` Krylov
/// space, restricted to the radius-`k` diamond.
pub fn oracle_orthogonal_vector(
    field: &PotentialField,
    k: usize,
    box_radius: usize,
) -> Result<DiamondVector, OracleError> {
    check_box(box_radius, k)?;
    let op = DenseBoxOperator::new(field, box_radius);
    let mut power = op.unit(Site::ORIGIN);
    for _ in 0..k {
        power = op.matrix() * power;
    }
    if k > 0 {
        let q = op.krylov_basis(k - 1);
        project_off(&mut power, &q, k);
    }
    Ok(op.to_diamond(&power, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_matrix_is_exactly_symmetric() {
        let op = DenseBoxOperator::new(&PotentialField::new(1.5, 3, 1), 6);
        assert_eq!(op.asymmetry(), 0.0);
        assert_eq!(op.dim(), 169);
    }

    #[test]
    fn diagonal_and_stencil_pattern() {
        let field = PotentialField::new(0.8, 4, 0);
        let op = DenseBoxOperator::new(&field, 3);
        let m = op.matrix();
        let o = op.index(Site::ORIGIN).unwrap();
        assert_eq!(m[(o, o)], 4.0 + field.value(Site::ORIGIN));
        let row_nnz = m.row(o).iter().filter(|v| **v != 0.0).count();
        assert_eq!(row_nnz, 5);
        let e = op.index(Site::new(1, 0)).unwrap();
        assert_eq!(m[(o, e)], -1.0);
        // Corner sites keep only two neighbours.
        let corner = op.index(Site::new(3, 3)).unwrap();
        let off: f64 = m.row(corner).iter().filter(|v| **v < 0.0).sum();
        assert_eq!(off, -2.0);
    }

    #[test]
    fn depth_one_is_all_ones() {
        let d = oracle_distance_series(&PotentialField::new(2.0, 1, 0), 1, 2).unwrap();
        assert_eq!(d.len(), 2);
        for v in d {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_small_box() {
        assert_eq!(
            oracle_distance_series(&PotentialField::clean(), 4, 4),
            Err(OracleError::BoxTooSmall { box_radius: 4, n: 4 })
        );
        assert!(oracle_orthogonal_vector(&PotentialField::clean(), 3, 3).is_err());
    }

    #[test]
    fn clean_m1() {
        let m1 = oracle_orthogonal_vector(&PotentialField::clean(), 1, 3).unwrap();
        assert!(m1.get(Site::ORIGIN).abs() < 1e-14);
        assert!((m1.get(Site::new(0, 1)) + 1.0).abs() < 1e-14);
    }
}
