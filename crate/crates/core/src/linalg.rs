//! Symmetric eigendecomposition helpers shared by sampling, whitening and the
//! Gaussian oracle.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: DMatrix<f64>,
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Dot product with eight independent accumulators. Summation order is
/// fixed, so results are reproducible.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `(m + mᵀ) / 2`
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn sym_eigen_desc(m: &DMatrix<f64>) -> Result<SortedEigen> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(symmetrize(m), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SortedEigen { values, vectors })
}

/// `V diag(f(λ)) Vᵀ`
pub fn spectral_map(eig: &SortedEigen, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for j in 0..n {
        let s = f(eig.values[j]);
        scaled.column_mut(j).scale_mut(s);
    }
    symmetrize(&(scaled * eig.vectors.transpose()))
}

/// Symmetric square root of a positive semi-definite matrix.
#[derive(Debug, Clone)]
pub struct MatrixRoot {
    pub input: DMatrix<f64>,
    pub root: DMatrix<f64>,
    /// Set when negative round-off eigenvalues were clamped to zero.
    pub floor_applied: bool,
}

impl MatrixRoot {
    /// Eigenvalues in `[-1e-8 · λmax, 0)` are treated as round-off and clamped
    /// to zero; anything more negative is rejected.
    pub fn new(input: &DMatrix<f64>) -> Result<Self> {
        let eig = sym_eigen_desc(input)?;
        let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-8 * scale {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        let floor_applied = min < 0.0;
        let root = spectral_map(&eig, |v| v.max(0.0).sqrt());
        Ok(Self {
            input: input.clone(),
            root,
            floor_applied,
        })
    }
}

/// `Σ^{-1/2}` with eigenvalues floored at `ridge · λmax` before inversion.
pub fn inverse_sqrt_floored(m: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eigen_desc(m)?;
    let lmax = eig.values[0];
    if !(lmax > 0.0) {
        return Err(Error::DegenerateCovariance);
    }
    let floor = ridge * lmax;
    if eig.values.iter().any(|&v| v.max(floor) <= 0.0) {
        return Err(Error::DegenerateCovariance);
    }
    Ok(spectral_map(&eig, |v| 1.0 / v.max(floor).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0])
    }

    #[test]
    fn eigenvalues_sorted_descending() {
        let eig = sym_eigen_desc(&spd3()).unwrap();
        for w in eig.values.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
        let recon = spectral_map(&eig, |v| v);
        assert!((recon - spd3()).amax() < 1e-12);
    }

    #[test]
    fn root_squares_back() {
        let r = MatrixRoot::new(&spd3()).unwrap();
        assert!(!r.floor_applied);
        assert!(max_asymmetry(&r.root) < 1e-10);
        assert!((&r.root * &r.root - spd3()).amax() <= 1e-8 * spd3().amax());
    }

    #[test]
    fn root_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            MatrixRoot::new(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn root_of_singular_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = MatrixRoot::new(&m).unwrap();
        assert!((&r.root * &r.root - m).amax() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_whitens() {
        let w = inverse_sqrt_floored(&spd3(), 1e-10).unwrap();
        let id = &w * spd3() * &w;
        assert!((id - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn inverse_sqrt_of_zero_is_degenerate() {
        let z = DMatrix::zeros(2, 2);
        assert!(matches!(
            inverse_sqrt_floored(&z, 1e-10),
            Err(Error::DegenerateCovariance)
        ));
    }

    #[test]
    fn inverse_sqrt_floors_singular_direction() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let w = inverse_sqrt_floored(&m, 1e-4).unwrap();
        assert!((w[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((w[(1, 1)] - 100.0).abs() < 1e-9);
    }
}
