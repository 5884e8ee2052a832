//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) type CMatrix = DMatrix<Complex64>;

/// Eigenvalues and eigenvectors (columns) of a Hermitian matrix.
pub(crate) fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in hermitian matrix".into()));
    }
    // Symmetrize to keep round-off from leaking an anti-hermitian part in.
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// `exp(-i * angle * A)` for Hermitian `A`.
pub(crate) fn unitary_exp(a: &CMatrix, angle: f64) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(a)?;
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &lam) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -angle * lam);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Minimum-norm solution of `(M + lambda I) x = rhs` for real symmetric `M`.
///
/// Eigen-directions whose shifted eigenvalue is below `1e-12 * max|eig|` are
/// dropped, which gives the pseudo-inverse solution when `lambda = 0`.
pub(crate) fn symmetric_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let shifted: Vec<f64> = eig.eigenvalues.iter().map(|v| v + lambda).collect();
    let scale = shifted.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let cutoff = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let proj = eig.eigenvectors.transpose() * rhs;
    let mut coeffs = DVector::zeros(proj.len());
    for k in 0..proj.len() {
        if shifted[k].abs() > cutoff {
            coeffs[k] = proj[k] / shifted[k];
        }
    }
    &eig.eigenvectors * coeffs
}
