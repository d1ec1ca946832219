//! Seeded random elements used as probes.
//!
//! Every routine takes the generator explicitly so that a run is fully
//! determined by its seed.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kernel::{AlgebraShape, Element};
use crate::linalg::{self, CMat};

pub type ProbeRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ProbeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a list of indices so that independent probe
/// families (per stage, per step, ...) get independent streams.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    // splitmix64 finalizer over the running state
    let mut z = base ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        z = z.wrapping_add(p.wrapping_mul(0xBF58_476D_1CE4_E5B9)).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn gaussian_element(shape: &AlgebraShape, rng: &mut impl Rng) -> Element {
    let blocks = shape.blocks().iter().map(|&k| gaussian_matrix(k, k, rng)).collect();
    Element::new(shape.clone(), blocks).expect("blocks follow the shape")
}

/// Gaussian element rescaled to a uniformly drawn norm in `(0, 1]`.
pub fn contraction(shape: &AlgebraShape, rng: &mut impl Rng) -> Element {
    let g = gaussian_element(shape, rng);
    let norm = g.operator_norm();
    let target: f64 = 1.0 - rng.random::<f64>();
    if norm == 0.0 {
        return g;
    }
    g.scale_real(target / norm)
}

pub fn hermitian(shape: &AlgebraShape, rng: &mut impl Rng) -> Element {
    let g = gaussian_element(shape, rng);
    g.add(&g.adjoint()).expect("same shape").scale_real(0.5)
}

/// Self-adjoint element of norm at most one.
pub fn hermitian_contraction(shape: &AlgebraShape, rng: &mut impl Rng) -> Element {
    let h = hermitian(shape, rng);
    let norm = h.operator_norm();
    if norm == 0.0 {
        return h;
    }
    h.scale_real((1.0 - rng.random::<f64>()) / norm)
}

/// `exp(iH)` for a random Hermitian `H`, blockwise.
pub fn unitary(shape: &AlgebraShape, rng: &mut impl Rng) -> Element {
    let h = hermitian(shape, rng);
    let blocks = h
        .blocks()
        .iter()
        .map(|b| {
            let (values, vectors) = linalg::hermitian_eigh(b);
            let phases = DVector::from_iterator(values.len(), values.iter().map(|&l| Complex64::from_polar(1.0, l)));
            let scaled = CMat::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * phases[j]);
            scaled * vectors.adjoint()
        })
        .collect();
    Element::new(shape.clone(), blocks).expect("blocks follow the shape")
}

/// `a^* a` for a random contraction `a`.
pub fn positive_contraction(shape: &AlgebraShape, rng: &mut impl Rng) -> Element {
    let a = contraction(shape, rng);
    a.adjoint().multiply(&a).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Tolerances;

    #[test]
    fn same_seed_same_draws() {
        let s = AlgebraShape::new(vec![2, 3]).unwrap();
        let a = contraction(&s, &mut rng(7));
        let b = contraction(&s, &mut rng(7));
        assert_eq!(a, b);
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
    }

    #[test]
    fn unitary_is_unitary() {
        let s = AlgebraShape::new(vec![3]).unwrap();
        let u = unitary(&s, &mut rng(3));
        let p = u.adjoint().multiply(&u).unwrap();
        assert!(p.max_abs_diff(&Element::unit(&s)) < 1e-12);
    }

    #[test]
    fn contractions_have_norm_at_most_one() {
        let s = AlgebraShape::new(vec![1, 4]).unwrap();
        let mut r = rng(11);
        for _ in 0..20 {
            assert!(contraction(&s, &mut r).operator_norm() <= 1.0 + 1e-12);
            assert!(positive_contraction(&s, &mut r).is_positive(&Tolerances::default()));
        }
    }
}
