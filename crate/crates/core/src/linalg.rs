//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ||M^dag M - I||_F
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    frobenius(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

/// ||M - M^dag||_F
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigendecomposition `M = Q diag(lambda) Q^dag` of a normal matrix.
///
/// The complex Schur form of a normal matrix is diagonal, so the Schur
/// vectors are already an orthonormal eigenbasis even inside degenerate
/// eigenspaces. A final Gram-Schmidt pass removes the rounding drift that
/// the QR iteration leaves in `Q`.
pub fn normal_eigen(m: &CMatrix) -> Result<(CMatrix, Vec<C64>)> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let lambda: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    Ok((orthonormalize(q), lambda))
}

/// Modified Gram-Schmidt on the columns.
pub fn orthonormalize(mut q: CMatrix) -> CMatrix {
    let n = q.ncols();
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = q.column(k).dotc(&q.column(j));
            let col_k = q.column(k).clone_owned();
            let mut col_j = q.column_mut(j);
            col_j -= col_k * proj;
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
    q
}

/// `exp(-i H)` for Hermitian `H` via its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| (-I * l).exp()),
    );
    let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |r, col| v[(r, col)] * phases[col]);
    scaled * v.adjoint()
}

/// Thin SVD `m = U diag(s) V^dag`, returning `(U, s, V^dag)`.
///
/// Goes through faer: nalgebra's complex SVD mis-factorises some
/// rank-deficient inputs, which is exactly what MPS truncation produces.
pub fn thin_svd(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let fm = faer::Mat::<C64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed to converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    Ok((
        CMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]),
        (0..k).map(|i| s[i].re).collect(),
        CMatrix::from_fn(k, m.ncols(), |i, j| v[(j, i)].conj()),
    ))
}

/// Kronecker product, first factor is the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_pauli_x() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let t = 0.3_f64;
        let u = expm_hermitian(&(x.clone() * c(t, 0.)));
        let expected = CMatrix::identity(2, 2) * c(t.cos(), 0.) - x * (I * t.sin());
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }

    #[test]
    fn degenerate_unitary_gets_orthonormal_eigenbasis() {
        // diag(1, 1, -1) rotated by a non-trivial unitary
        let s = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0., 0.),
                c(1., 0.),
                c(0., 0.),
                c(1., 0.),
                c(0., 0.),
                c(0., 0.),
                c(0., 0.),
                c(0., 0.),
                c(1., 0.),
            ],
        );
        let (q, lambda) = normal_eigen(&s).unwrap();
        assert!(unitarity_residual(&q) < 1e-12);
        let d = CMatrix::from_diagonal(&CVector::from_vec(lambda));
        assert!(max_abs_diff(&(&q * d * q.adjoint()), &s) < 1e-12);
    }
}
