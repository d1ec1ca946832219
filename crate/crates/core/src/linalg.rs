//! Dense complex matrix helpers shared by the kernel and the map layer.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` (column-major). The product
//! here skips zero entries of the right operand, which matters because most
//! matrices in this crate are images of matrix units and are very sparse.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn is_zero_scalar(z: Complex64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

pub fn is_zero(a: &CMat) -> bool {
    a.iter().all(|z| is_zero_scalar(*z))
}

/// `a * b`, accumulating column by column and skipping zero entries of `b`.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMat::zeros(m, n);
    let a_s = a.as_slice();
    let b_s = b.as_slice();
    let c_s = c.as_mut_slice();
    for j in 0..n {
        let cj = &mut c_s[j * m..(j + 1) * m];
        for p in 0..k {
            let bpj = b_s[j * k + p];
            if is_zero_scalar(bpj) {
                continue;
            }
            let ap = &a_s[p * m..(p + 1) * m];
            for (ci, &ai) in cj.iter_mut().zip(ap) {
                *ci += ai * bpj;
            }
        }
    }
    c
}

/// `a * b * a^*`.
pub fn sandwich(a: &CMat, b: &CMat) -> CMat {
    matmul(&matmul(a, b), &a.adjoint())
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entrywise modulus of `a - a^*`; zero for exactly Hermitian input.
pub fn hermitian_defect_max(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let d = a[(i, j)] - a[(j, i)].conj();
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) of the Hermitian part of `a`.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[(0, 0)].re];
    }
    if is_zero(a) {
        return vec![0.0; n];
    }
    let h = hermitian_part(a);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Eigen-decomposition of the Hermitian part of `a`: eigenvalues with the
/// matching eigenvectors as columns.
pub fn hermitian_eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 1 {
        return (vec![a[(0, 0)].re], CMat::identity(1, 1));
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `V diag(f(λ)) V^*` for the Hermitian part of `a`.
pub fn hermitian_function(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = a.nrows();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let (values, vectors) = hermitian_eigh(a);
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let s = f(lambda);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

/// Largest singular value.
///
/// Hermitian input is handled through its own spectrum; everything else
/// goes through the spectrum of `a^* a`.
pub fn spectral_norm(a: &CMat) -> f64 {
    let (r, c) = a.shape();
    if r == 0 || c == 0 || is_zero(a) {
        return 0.0;
    }
    if r == 1 && c == 1 {
        return a[(0, 0)].norm();
    }
    if r == c && hermitian_defect_max(a) == 0.0 {
        let ev = hermitian_eigenvalues(a);
        return ev.first().map_or(0.0, |v| v.abs()).max(ev.last().map_or(0.0, |v| v.abs()));
    }
    let gram = if r >= c {
        matmul(&a.adjoint(), a)
    } else {
        matmul(a, &a.adjoint())
    };
    let ev = hermitian_eigenvalues(&gram);
    ev.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `a ⊗ b` with the entries of `a` outer and those of `b` inner.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for q in 0..ac {
        for p in 0..ar {
            let apq = a[(p, q)];
            if is_zero_scalar(apq) {
                continue;
            }
            for j in 0..bc {
                for i in 0..br {
                    out[(p * br + i, q * bc + j)] = apq * b[(i, j)];
                }
            }
        }
    }
    out
}

pub fn real_diagonal(values: &[f64]) -> CMat {
    let n = values.len();
    let mut out = CMat::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        out[(i, i)] = Complex64::new(v, 0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_agrees_with_nalgebra() {
        let a = CMat::from_fn(3, 4, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.5));
        let b = CMat::from_fn(4, 2, |i, j| if (i + j) % 2 == 0 { ZERO } else { c(1.0, -(i as f64)) });
        let ours = matmul(&a, &b);
        let reference = &a * &b;
        assert!((ours - reference).norm() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let d = real_diagonal(&[1.0, -3.0, 2.0]);
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_nilpotent() {
        let mut e = CMat::zeros(2, 2);
        e[(0, 1)] = c(0.0, 2.0);
        assert!((spectral_norm(&e) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kron_convention_puts_outer_factor_first() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = ONE;
        let b = CMat::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 2)], ONE);
        assert_eq!(k[(1, 3)], ONE);
        assert_eq!(k[(0, 1)], ZERO);
    }
}
