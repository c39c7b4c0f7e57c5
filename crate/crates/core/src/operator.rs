//! Linear operators between basis-coordinate spaces.
//!
//! All coordinates are orthonormal, so adjoints are plain transposes and
//! the spectral norm of a coordinate matrix is the operator norm.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::basis::Space;
use crate::error::{ArhdError, Result};

/// Coordinate matrix of a linear map `dom → cod`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpMatrix {
    pub dom: Space,
    pub cod: Space,
    pub mat: DMatrix<f64>,
}

impl OpMatrix {
    pub fn new(dom: Space, cod: Space, mat: DMatrix<f64>) -> Self {
        Self { dom, cod, mat }
    }

    pub fn identity(space: Space, n: usize) -> Self {
        Self::new(space, space, DMatrix::identity(n, n))
    }

    pub fn zeros(dom: Space, cod: Space, n: usize) -> Self {
        Self::new(dom, cod, DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Adjoint: transpose with swapped space tags.
    pub fn adjoint(&self) -> Self {
        Self::new(self.cod, self.dom, self.mat.transpose())
    }

    /// `self ∘ rhs`, i.e. apply `rhs` first.
    pub fn compose(&self, rhs: &OpMatrix) -> Result<Self> {
        if self.dom != rhs.cod {
            return Err(ArhdError::SpaceMismatch {
                expected: self.dom,
                got: rhs.cod,
            });
        }
        check_dims(self.mat.ncols(), rhs.mat.nrows())?;
        Ok(Self::new(rhs.dom, self.cod, &self.mat * &rhs.mat))
    }

    pub fn sub(&self, rhs: &OpMatrix) -> Result<Self> {
        self.same_shape(rhs)?;
        Ok(Self::new(self.dom, self.cod, &self.mat - &rhs.mat))
    }

    pub fn add(&self, rhs: &OpMatrix) -> Result<Self> {
        self.same_shape(rhs)?;
        Ok(Self::new(self.dom, self.cod, &self.mat + &rhs.mat))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.dom, self.cod, &self.mat * s)
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dims(self.mat.ncols(), x.len())?;
        Ok(&self.mat * x)
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.mat)
    }

    fn same_shape(&self, rhs: &OpMatrix) -> Result<()> {
        if self.dom != rhs.dom {
            return Err(ArhdError::SpaceMismatch {
                expected: self.dom,
                got: rhs.dom,
            });
        }
        if self.cod != rhs.cod {
            return Err(ArhdError::SpaceMismatch {
                expected: self.cod,
                got: rhs.cod,
            });
        }
        check_dims(self.mat.nrows(), rhs.mat.nrows())?;
        check_dims(self.mat.ncols(), rhs.mat.ncols())
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(ArhdError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Largest entrywise `|m - mᵀ|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Eigenpairs sorted by decreasing eigenvalue.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_checks_spaces() {
        let a = OpMatrix::identity(Space::W, 3);
        let b = OpMatrix::zeros(Space::W, Space::L, 3);
        assert!(a.compose(&b).is_err());
        let c = b.compose(&a).unwrap();
        assert_eq!((c.dom, c.cod), (Space::W, Space::L));
    }

    #[test]
    fn adjoint_swaps_tags() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let op = OpMatrix::new(Space::W, Space::L, m.clone());
        let adj = op.adjoint();
        assert_eq!((adj.dom, adj.cod), (Space::L, Space::W));
        assert_eq!(adj.mat, m.transpose());
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let (vals, vecs) = sym_eigen_desc(&m);
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }
}
