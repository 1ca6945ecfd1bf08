//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The kernel adds the pieces the
//! thermodynamic code needs on top of it: a Hermitian eigendecomposition with a
//! deterministic ascending order, spectral matrix functions, Kronecker products
//! and the partial trace over an ancilla factor.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Max-abs tolerance for Hermiticity, unitarity and trace-preservation checks.
pub const KERNEL_TOL: f64 = 1e-10;

/// Eigenvalues below this are treated as exact zeros (rank deficiency).
pub const EIGEN_CLAMP: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

/// Builds a matrix from real row slices. Handy for small literal operators.
pub fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Max-abs distance of `u† u` from the identity.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.ncols()))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_dim(m: &ComplexMatrix, dim: usize) -> Result<()> {
    let n = ensure_square(m)?;
    if n != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: n,
        });
    }
    Ok(())
}

/// `(m + m†) / 2`.
pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Real part of `tr(a b)` without forming the product.
pub fn trace_product_re(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from explicit parts, checking order and unitarity.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: ComplexMatrix) -> Result<Self> {
        let n = ensure_square(&eigenvectors)?;
        if eigenvalues.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: eigenvalues.len(),
            });
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) || !is_finite(&eigenvectors) {
            return Err(Error::NonFinite);
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidDecomposition(
                "eigenvalues must be sorted ascending".into(),
            ));
        }
        let dev = unitarity_deviation(&eigenvectors);
        if dev > KERNEL_TOL {
            return Err(Error::InvalidDecomposition(format!(
                "eigenvector matrix is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    /// Largest minus smallest eigenvalue.
    pub fn range(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.with_values(&self.eigenvalues)
    }

    fn with_values(&self, values: &[f64]) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = self.dim();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| v[(i, j)] * values[j]);
        symmetrize(&(scaled * v.adjoint()))
    }
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
///
/// The input is symmetrized before decomposition. Ordering inside a degenerate
/// cluster is whatever the solver returns (stable sort on the value).
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let n = ensure_square(m)?;
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let deviation = hermiticity_deviation(m);
    if deviation > KERNEL_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `V diag(f(λ)) V†`. Fails with `DomainError` if `f` is not finite on some eigenvalue.
pub fn matrix_function<F>(d: &SpectralDecomposition, f: F) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> f64,
{
    let mut values = Vec::with_capacity(d.dim());
    for &lambda in d.eigenvalues() {
        let v = f(lambda);
        if !v.is_finite() {
            return Err(Error::DomainError { eigenvalue: lambda });
        }
        values.push(v);
    }
    Ok(d.with_values(&values))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Traces out the second (ancilla) factor of a `(d_sys·d_anc)`-square matrix.
pub fn partial_trace_ancilla(m: &ComplexMatrix, d_sys: usize, d_anc: usize) -> Result<ComplexMatrix> {
    let total = d_sys * d_anc;
    ensure_dim(m, total)?;
    Ok(ComplexMatrix::from_fn(d_sys, d_sys, |i, j| {
        (0..d_anc)
            .map(|a| m[(i * d_anc + a, j * d_anc + a)])
            .sum()
    }))
}
