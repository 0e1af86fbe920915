//! Magic-point selection and interpolation onto finite-dimensional spaces.
//!
//! A space is described only through its basis evaluated on a candidate pool:
//! `B[x, i] = φ_i(x)`. The greedy picks a point and a basis index maximizing
//! `|B|`, then replaces `B` by the residual functions that vanish at every
//! chosen point and along every chosen basis direction, and repeats. The
//! residual is the Schur complement `B - B[:, I] B[X, I]⁻¹ B[X, :]`, kept up to
//! date with one rank-one update per step.

use nalgebra::{DMatrix, Dyn, LU};
use thiserror::Error;

use crate::tensor_ops::{fold, unfold};

/// Relative pivot threshold below which the candidate pool is declared not
/// unisolvent.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("candidate pool is not unisolvent: pivot {pivot:e} at step {step} is below tolerance")]
    Unisolvence { step: usize, pivot: f64 },
    #[error("empty basis or candidate pool")]
    Empty,
    #[error("expected {expected} rows of values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Magic points of a space inside a candidate pool, with the factorized
/// interpolation matrix `(φ_j(x^k))_{k,j}`.
#[derive(Clone, Debug)]
pub struct MagicGrid {
    point_indices: Vec<usize>,
    basis_indices: Vec<usize>,
    interp_matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl MagicGrid {
    /// Indices into the candidate pool, in selection order.
    pub fn point_indices(&self) -> &[usize] {
        &self.point_indices
    }

    /// The basis index chosen at each step.
    pub fn basis_indices(&self) -> &[usize] {
        &self.basis_indices
    }

    /// Row `k` holds the basis evaluated at the `k`-th magic point.
    pub fn interp_matrix(&self) -> &DMatrix<f64> {
        &self.interp_matrix
    }

    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }

    /// Coefficients `c` with `interp_matrix · c = values`, one column per
    /// right-hand side.
    pub fn interp_coeffs(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>, InterpError> {
        if values.nrows() != self.len() {
            return Err(InterpError::DimensionMismatch {
                expected: self.len(),
                got: values.nrows(),
            });
        }
        Ok(self.lu.solve(values).expect("factorization checked at construction"))
    }
}

/// Greedy magic-point selection over the rows of `b` (`#candidates × n`).
///
/// Ties go to the lowest candidate index, then the lowest basis index.
pub fn magic_points(b: &DMatrix<f64>) -> Result<MagicGrid, InterpError> {
    let (rows, n) = b.shape();
    if n == 0 || rows == 0 {
        return Err(InterpError::Empty);
    }
    let scale = b.amax();
    let mut res = b.clone();
    let mut points = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(n);
    for step in 1..=n {
        let mut best = (0usize, 0usize, -1.0f64);
        for x in 0..rows {
            for i in 0..n {
                let v = res[(x, i)].abs();
                if v > best.2 {
                    best = (x, i, v);
                }
            }
        }
        let (x, i, pivot) = best;
        if pivot.is_nan() || pivot <= PIVOT_TOLERANCE * scale {
            return Err(InterpError::Unisolvence {
                step,
                pivot: pivot.max(0.0),
            });
        }
        debug_assert!(!bases.contains(&i), "basis index chosen twice");
        points.push(x);
        bases.push(i);

        // ψ ← ψ - ψ[:, i] ψ[x, :] / ψ[x, i]
        let col = res.column(i).clone_owned();
        let row = res.row(x).clone_owned() / res[(x, i)];
        res -= col * row;
        // the update zeroes these exactly in exact arithmetic; pin them
        res.column_mut(i).fill(0.0);
        res.row_mut(x).fill(0.0);
    }
    let interp_matrix = b.select_rows(points.iter());
    let lu = interp_matrix.clone().lu();
    Ok(MagicGrid {
        point_indices: points,
        basis_indices: bases,
        interp_matrix,
        lu,
    })
}

/// Interpolation on a product grid `Γ_1 × … × Γ_k`, where each factor has its
/// own interpolation matrix. The full matrix is the Kronecker product of the
/// factors; solves are done one axis at a time.
#[derive(Clone, Debug)]
pub struct ProductInterpolator {
    dims: Vec<usize>,
    matrices: Vec<DMatrix<f64>>,
    factors: Vec<LU<f64, Dyn, Dyn>>,
}

impl ProductInterpolator {
    pub fn new(matrices: &[DMatrix<f64>]) -> Self {
        Self {
            dims: matrices.iter().map(|m| m.nrows()).collect(),
            matrices: matrices.to_vec(),
            factors: matrices.iter().map(|m| m.clone().lu()).collect(),
        }
    }

    /// Sizes of the factor grids.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of points in the product grid.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn tensor_layout(&self, values: &DMatrix<f64>) -> Result<Vec<usize>, InterpError> {
        let n = self.len();
        if values.nrows() != n {
            return Err(InterpError::DimensionMismatch {
                expected: n,
                got: values.nrows(),
            });
        }
        // column-major storage == row-major tensor [cols, dims...]
        let mut shape = Vec::with_capacity(self.dims.len() + 1);
        shape.push(values.ncols());
        shape.extend_from_slice(&self.dims);
        Ok(shape)
    }

    /// Multiply every column of `coeffs` by the Kronecker product of the
    /// factor matrices: the inverse of [`ProductInterpolator::solve`].
    pub fn apply(&self, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>, InterpError> {
        let shape = self.tensor_layout(coeffs)?;
        let mut data: Vec<f64> = coeffs.as_slice().to_vec();
        for (k, m) in self.matrices.iter().enumerate() {
            data = fold(&(m * unfold(&data, &shape, k + 1)), &shape, k + 1);
        }
        Ok(DMatrix::from_vec(coeffs.nrows(), coeffs.ncols(), data))
    }

    /// Solve the Kronecker system for every column of `values`. Rows are
    /// product-grid points in row-major order over the factors.
    pub fn solve(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>, InterpError> {
        let shape = self.tensor_layout(values)?;
        let mut data: Vec<f64> = values.as_slice().to_vec();
        for (k, lu) in self.factors.iter().enumerate() {
            let fibers = unfold(&data, &shape, k + 1);
            let solved = lu.solve(&fibers).ok_or(InterpError::Unisolvence {
                step: k + 1,
                pivot: 0.0,
            })?;
            data = fold(&solved, &shape, k + 1);
        }
        Ok(DMatrix::from_vec(values.nrows(), values.ncols(), data))
    }
}
