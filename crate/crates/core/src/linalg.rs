//! Eigenvalue helpers with a bounded QR iteration.
//!
//! nalgebra's default Schur loop has no iteration cap, and the Francis shifts can
//! cycle on matrices with exact purely imaginary spectra. We cap the iteration and
//! retry after a fixed orthogonal similarity, which breaks the symmetry that
//! causes the cycle without changing the spectrum.

use nalgebra::{ComplexField, DMatrix, Dim, Matrix, Schur, Storage};
use num_complex::Complex64;

const MAX_ITER: usize = 10_000;

fn mixing<T: ComplexField<RealField = f64>>(n: usize) -> DMatrix<T> {
    let raw = DMatrix::<f64>::from_fn(n, n, |i, j| ((i * 7 + j * 13 + 3) as f64 * 0.618_033_988_75).fract() - 0.5);
    raw.qr().q().map(|x| T::from_real(x))
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues<R: Dim, C: Dim, S: Storage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Vec<Complex64> {
    let n = m.nrows();
    let d = DMatrix::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    if d.iter().any(|x| !x.is_finite()) {
        return vec![Complex64::new(f64::NAN, f64::NAN); n];
    }
    if let Some(s) = Schur::try_new(d.clone(), f64::EPSILON, MAX_ITER) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    let q = mixing::<f64>(n);
    let mixed = q.transpose() * d * &q;
    Schur::try_new(mixed, f64::EPSILON, 10 * MAX_ITER)
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
        .unwrap_or_else(|| vec![Complex64::new(f64::NAN, f64::NAN); n])
}

/// Eigenvalues of a complex square matrix; `None` if the iteration does not settle.
pub fn eigenvalues_complex(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    let n = m.nrows();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    if let Some(ev) = Schur::try_new(m.clone(), f64::EPSILON, MAX_ITER).and_then(|s| s.eigenvalues()) {
        return Some(ev.iter().copied().collect());
    }
    let q = mixing::<Complex64>(n);
    let mixed = q.adjoint() * m * &q;
    Schur::try_new(mixed, f64::EPSILON, 10 * MAX_ITER).and_then(|s| s.eigenvalues()).map(|ev| ev.iter().copied().collect())
}
