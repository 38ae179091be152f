//! Small dense complex linear-algebra helpers shared across the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` (column-major storage). The
//! hot paths of the steppers are matrix-matrix products, which go through
//! `matrixmultiply`'s zgemm kernel; `nalgebra`'s generic complex product is
//! noticeably slower at the sizes we care about (d up to a few hundred).

use matrixmultiply::{zgemm, CGemmOption};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `a * b` through the zgemm kernel.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "matmul: inner dimensions {k} and {k2} differ");
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    unsafe {
        zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_slice().as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_slice().as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_slice().as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// Identity matrix of size n.
pub fn eye(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

/// Row-major vectorization: `vec(ρ) = (ρ_11, ρ_12, ..., ρ_1d, ρ_21, ...)`.
///
/// This ordering makes the 4x4 superoperators and amplification matrices of
/// the single-qubit test problems come out in the basis
/// (ρ_11, ρ_12, ρ_21, ρ_22).
pub fn vec_row_major(rho: &DMatrix<C64>) -> DVector<C64> {
    let (r, c) = rho.shape();
    DVector::from_fn(r * c, |idx, _| rho[(idx / c, idx % c)])
}

/// Inverse of [`vec_row_major`] for square matrices.
pub fn unvec_row_major(v: &DVector<C64>, d: usize) -> DMatrix<C64> {
    assert_eq!(v.len(), d * d);
    DMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Kronecker product.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Relative deviation from Hermitian symmetry, `‖A - A†‖_F / ‖A‖_F`.
pub fn hermiticity_defect(a: &DMatrix<C64>) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        return 0.0;
    }
    (a - a.adjoint()).norm() / n
}

/// Eigenvalues of a general complex square matrix via the complex Schur form.
pub fn eigenvalues(a: &DMatrix<C64>) -> Vec<C64> {
    let schur = a
        .clone()
        .try_schur(1.0e-14, 10_000)
        .unwrap_or_else(|| a.clone().schur());
    let (_, t) = schur.unpack();
    t.diagonal().iter().copied().collect()
}

/// Eigenvalues of a Hermitian matrix (the input is symmetrized first).
pub fn hermitian_eigenvalues(a: &DMatrix<C64>) -> Vec<f64> {
    let h = (a + a.adjoint()).scale(0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(a: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(a)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral radius of a general complex matrix.
pub fn spectral_radius(a: &DMatrix<C64>) -> f64 {
    eigenvalues(a).into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_nalgebra() {
        let a = DMatrix::from_fn(5, 7, |i, j| C64::new(i as f64 - j as f64, 0.3 * j as f64));
        let b = DMatrix::from_fn(7, 3, |i, j| C64::new(0.1 * i as f64, (i * j) as f64));
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-12);
    }

    #[test]
    fn vec_row_major_round_trip() {
        let a = DMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let v = vec_row_major(&a);
        assert_eq!(v[1], a[(0, 1)]);
        assert_eq!(unvec_row_major(&v, 3), a);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 2.0), C64::new(5.0, 0.0), C64::new(0.0, 0.0), C64::new(-3.0, 1.0)],
        );
        let mut ev = eigenvalues(&a);
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - C64::new(-3.0, 1.0)).norm() < 1e-10);
        assert!((ev[1] - C64::new(1.0, 2.0)).norm() < 1e-10);
    }
}
