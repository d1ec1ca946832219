mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cpcstar::maps::{
    choi, complete_order_embedding_probe, diagonal_tensor_embedding, is_completely_positive, is_contractive_cp,
    map_norm_estimate, multiplicativity_defect, order_zero_defect, structure_decomposition, ProbeSpec,
};
use cpcstar::{random, AlgebraShape, CpMap, Element, Error, Tolerances};

use common::{c, dense_choi, CMat};

fn m(k: usize) -> AlgebraShape {
    AlgebraShape::full(k).unwrap()
}

fn sorted_eigs(h: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = ((h + h.adjoint()) * c(0.5)).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn assert_close(a: &[f64], b: &[f64], eps: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= eps, "{a:?} vs {b:?}");
    }
}

#[test]
fn apply_examples() {
    let m2 = m(2);
    let e12 = Element::matrix_unit(&m2, 0, 0, 1).unwrap();
    assert_eq!(CpMap::identity(&m2).apply(&e12).unwrap(), e12);
    assert!(CpMap::diagonal_expectation(&m2).apply(&e12).unwrap().is_zero());
    let wrong = Element::unit(&m(3));
    assert!(matches!(CpMap::identity(&m2).apply(&wrong), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn choi_spectra_match_dense_oracle() {
    let m2 = m(2);
    let cases: [(CpMap, Box<dyn Fn(&CMat) -> CMat>, Vec<f64>); 3] = [
        (CpMap::identity(&m2), Box::new(|x: &CMat| x.clone()), vec![0.0, 0.0, 0.0, 2.0]),
        (CpMap::transpose(&m2), Box::new(|x: &CMat| x.transpose()), vec![-1.0, 1.0, 1.0, 1.0]),
        (
            CpMap::diagonal_expectation(&m2),
            Box::new(|x: &CMat| CMat::from_diagonal(&x.diagonal())),
            vec![0.0, 0.0, 1.0, 1.0],
        ),
    ];
    for (f, dense, expected) in cases {
        let blocks = choi(&f);
        assert_eq!(blocks.len(), 1);
        let oracle = dense_choi(2, 2, dense);
        assert!((&blocks[0].matrix - &oracle).iter().all(|z| z.norm() < 1e-14));
        assert_close(&sorted_eigs(&oracle), &expected, 1e-12);
        assert!((blocks[0].min_eigenvalue - expected[0]).abs() < 1e-12);
    }
}

#[test]
fn choi_reconstructs_the_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let dom = common::random_shape(&mut rng, 2, 3);
        let cod = common::random_shape(&mut rng, 2, 3);
        let (f, _) = common::random_kraus(&dom, &cod, 1.0, &mut rng);
        let blocks = choi(&f);
        let x = random::gaussian_element(&dom, &mut rng);
        let fx = f.apply(&x).unwrap();
        let mut rebuilt: Vec<CMat> = cod.blocks().iter().map(|&k| CMat::zeros(k, k)).collect();
        for b in &blocks {
            let (kd, e) = (dom.blocks()[b.domain_block], cod.blocks()[b.codomain_block]);
            let xb = x.block(b.domain_block);
            for p in 0..kd {
                for q in 0..kd {
                    for a in 0..e {
                        for bb in 0..e {
                            rebuilt[b.codomain_block][(a, bb)] += xb[(p, q)] * b.matrix[(p * e + a, q * e + bb)];
                        }
                    }
                }
            }
        }
        for (j, r) in rebuilt.iter().enumerate() {
            assert!((r - fx.block(j)).iter().all(|z| z.norm() < 1e-12));
        }
    }
}

#[test]
fn complete_positivity_examples() {
    let tol = Tolerances::default();
    let m2 = m(2);
    let amp = diagonal_tensor_embedding(&m2, &[1.0, 1.0]).unwrap().to_matrix_form();
    assert!(is_completely_positive(&amp, &tol));
    assert!(!is_completely_positive(&CpMap::transpose(&m2), &tol));
    // x ↦ v* x v, a map M_2 → C
    let v = [Complex64::new(0.6, 0.1), Complex64::new(-0.3, 0.7)];
    let f = CpMap::from_fn(m2.clone(), m(1), |x| {
        let b = x.block(0);
        let mut s = Complex64::new(0.0, 0.0);
        for p in 0..2 {
            for q in 0..2 {
                s += v[p].conj() * b[(p, q)] * v[q];
            }
        }
        Element::from_blocks(vec![CMat::from_element(1, 1, s)]).unwrap()
    })
    .unwrap();
    assert!(!f.is_kraus());
    assert!(is_completely_positive(&f, &tol));
}

#[test]
fn contractivity_examples() {
    let tol = Tolerances::default();
    let m2 = m(2);
    assert!(is_contractive_cp(&CpMap::identity(&m2), &tol).unwrap());
    assert!(!is_contractive_cp(&CpMap::scalar(&m2, c(2.0)), &tol).unwrap());
    let h = Element::diagonal(&[c(0.8), c(0.3)]).unwrap();
    let root = h.positive_sqrt(&tol).unwrap();
    let f = CpMap::sandwich(&root);
    assert!(is_contractive_cp(&f, &tol).unwrap());
    assert!((f.unit_image().operator_norm() - h.operator_norm()).abs() < 1e-14);
    assert!(is_contractive_cp(&CpMap::transpose(&m2), &tol).is_err());
}

#[test]
fn compose_examples() {
    let m2 = m(2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (f, _) = common::random_kraus(&m2, &m(3), 1.0, &mut rng);
    let left = CpMap::compose(&CpMap::identity(&m(3)), &f).unwrap();
    let right = CpMap::compose(&f, &CpMap::identity(&m2)).unwrap();
    assert!(left.max_abs_diff(&f) < 1e-14 && right.max_abs_diff(&f) < 1e-14);
    assert!(CpMap::compose(&f, &f).is_err());

    let up = diagonal_tensor_embedding(&m2, &[1.0, 1.0]).unwrap();
    let up2 = diagonal_tensor_embedding(&m(4), &[1.0, 1.0, 1.0]).unwrap();
    let hom = CpMap::compose(&up2, &up).unwrap();
    assert!(order_zero_defect(&hom, &ProbeSpec::default()) <= 1e-12);
    assert!(multiplicativity_defect(&hom, &ProbeSpec::default()) <= 1e-12);
    assert!(hom.is_unital(&Tolerances::default()));
}

#[test]
fn amplify_examples() {
    let m2 = m(2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (f, _) = common::random_kraus(&m2, &m(2), 0.7, &mut rng);
    assert!(f.amplify(1).unwrap().max_abs_diff(&f) < 1e-14);
    let id3 = CpMap::identity(&m2).amplify(3).unwrap();
    assert!(id3.max_abs_diff(&CpMap::identity(&m(6))) < 1e-14);
    assert!(matches!(f.amplify(0), Err(Error::ZeroAmplification)));
    for r in [1, 2, 3] {
        let est = map_norm_estimate(&f.amplify(r).unwrap(), 16, r as u64).value;
        assert!(est <= f.unit_image().operator_norm() + 1e-9, "r={r}: {est}");
    }
}

#[test]
fn order_zero_examples() {
    let c2 = AlgebraShape::commutative(2).unwrap();
    let h = Element::diagonal(&[c(1.0), c(0.5)]).unwrap();
    let scaling = CpMap::from_fn(c2.clone(), c2.clone(), |x| h.multiply(x).unwrap()).unwrap();
    assert!(order_zero_defect(&scaling, &ProbeSpec::default()) <= 1e-12);

    let sum = CpMap::from_fn(m(2), m(1), |x| {
        Element::from_blocks(vec![CMat::from_element(1, 1, x.block(0).sum())]).unwrap()
    })
    .unwrap();
    assert!(order_zero_defect(&sum, &ProbeSpec::units_only()) >= 1.0);
}

#[test]
fn structure_decomposition_examples() {
    let tol = Tolerances::default();
    let c2 = AlgebraShape::commutative(2).unwrap();
    let h = Element::diagonal(&[c(1.0), c(0.5)]).unwrap();
    let scaling = CpMap::from_fn(c2.clone(), c2.clone(), |x| h.multiply(x).unwrap()).unwrap();
    let d = structure_decomposition(&scaling, &tol, 1e-9, &ProbeSpec::default()).unwrap();
    assert!(d.residual <= 1e-12);
    assert!(d.pi_action.max_abs_diff(&CpMap::identity(&c2)) <= 1e-12);

    let hom = diagonal_tensor_embedding(&m(2), &[1.0, 1.0]).unwrap();
    let d = structure_decomposition(&hom, &tol, 1e-9, &ProbeSpec::default()).unwrap();
    assert!(d.residual <= 1e-12);
    assert!(d.h.max_abs_diff(&Element::unit(&m(4))) <= 1e-12);
    assert!(d.pi_action.max_abs_diff(&hom) <= 1e-12);

    let weighted = diagonal_tensor_embedding(&m(2), &[1.0, 0.5]).unwrap();
    let d = structure_decomposition(&weighted, &tol, 1e-9, &ProbeSpec::default()).unwrap();
    assert!(d.residual <= 1e-9);
    assert!((d.h.operator_norm() - map_norm_estimate(&weighted, 32, 0).value).abs() <= 1e-9);

    let sum = CpMap::from_fn(m(2), m(1), |x| {
        Element::from_blocks(vec![CMat::from_element(1, 1, x.block(0).sum())]).unwrap()
    })
    .unwrap();
    assert!(matches!(
        structure_decomposition(&sum, &tol, 1e-6, &ProbeSpec::default()),
        Err(Error::OrderZeroThreshold { .. })
    ));
    let zero = CpMap::zero(&m(2), &m(2));
    assert!(matches!(
        structure_decomposition(&zero, &tol, 1e-6, &ProbeSpec::default()),
        Err(Error::SingularUnitImage { .. })
    ));
}

#[test]
fn norm_estimate_examples() {
    let m2 = m(2);
    assert!((map_norm_estimate(&CpMap::identity(&m2), 8, 0).value - 1.0).abs() < 1e-12);
    assert_eq!(map_norm_estimate(&CpMap::zero(&m2, &m2), 8, 0).value, 0.0);
    let z = Complex64::new(0.3, -0.4);
    assert!((map_norm_estimate(&CpMap::scalar(&m2, z), 8, 0).value - 0.5).abs() < 1e-9);
}

#[test]
fn embedding_probe_examples() {
    let tol = Tolerances::default();
    let m2 = m(2);
    let id = complete_order_embedding_probe(&CpMap::identity(&m2), &[1, 2, 3], &tol, 16, 0).unwrap();
    assert!(id.max_isometry_defect() <= 1e-12 && id.total_failures() == 0);

    let double = CpMap::from_fn(m2.clone(), AlgebraShape::new(vec![2, 2]).unwrap(), |x| x.direct_sum(x)).unwrap();
    let rep = complete_order_embedding_probe(&double, &[1, 2], &tol, 16, 1).unwrap();
    assert!(rep.max_isometry_defect() <= 1e-12 && rep.total_failures() == 0);

    let weighted = diagonal_tensor_embedding(&m2, &[1.0, 0.5]).unwrap();
    let rep = complete_order_embedding_probe(&weighted, &[1, 2, 3], &tol, 16, 2).unwrap();
    assert_eq!(rep.total_failures(), 0);
    assert!(rep.max_isometry_defect() <= 1e-12);

    // a positive map that forgets the off-diagonal part does not reflect order
    let rep = complete_order_embedding_probe(&CpMap::diagonal_expectation(&m2), &[1], &tol, 16, 3).unwrap();
    assert!(rep.total_failures() > 0);
}

/// `x ↦ h^{1/2} u (x ⊗ 1_r) u* h^{1/2}` with `h` diagonal in the commutant.
fn generated_order_zero(k: usize, r: usize, rng: &mut ChaCha8Rng) -> (CpMap, f64) {
    let big = m(k * r);
    let u = random::unitary(&big, rng);
    let weights: Vec<f64> = (0..r).map(|_| rng.random_range(0.1..1.0)).collect();
    let pi = CpMap::compose(&CpMap::sandwich(&u), &diagonal_tensor_embedding(&m(k), &vec![1.0; r]).unwrap()).unwrap();
    let mut diag = Vec::with_capacity(k * r);
    for _ in 0..k {
        for w in &weights {
            diag.push(c(w.sqrt()));
        }
    }
    let root = Element::from_blocks(vec![CMat::from_diagonal(&nalgebra::DVector::from_vec(diag))]).unwrap();
    let root = u.multiply(&root).unwrap().multiply(&u.adjoint()).unwrap();
    let f = CpMap::compose(&CpMap::sandwich(&root), &pi).unwrap();
    (f, weights.iter().copied().fold(0.0, f64::max))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composition_matches_sequential_application(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_shape(&mut rng, 2, 3);
        let b = common::random_shape(&mut rng, 2, 3);
        let cc = common::random_shape(&mut rng, 2, 3);
        let (g, _) = common::random_kraus(&a, &b, 1.0, &mut rng);
        let (f, _) = common::random_kraus(&b, &cc, 1.0, &mut rng);
        let x = random::contraction(&a, &mut rng);
        for (ff, gg) in [(f.clone(), g.clone()), (f.to_matrix_form(), g.clone()), (f.clone(), g.to_matrix_form())] {
            let h = CpMap::compose(&ff, &gg).unwrap();
            let seq = ff.apply(&gg.apply(&x).unwrap()).unwrap();
            prop_assert!(h.apply(&x).unwrap().max_abs_diff(&seq) <= 1e-12);
        }
    }

    #[test]
    fn kraus_and_matrix_forms_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_shape(&mut rng, 3, 3);
        let b = common::random_shape(&mut rng, 3, 3);
        let (f, terms) = common::random_kraus(&a, &b, 1.0, &mut rng);
        let x = random::gaussian_element(&a, &mut rng);
        let mut expected: Vec<CMat> = b.blocks().iter().map(|&k| CMat::zeros(k, k)).collect();
        for (from, to, ops) in &terms {
            for k in ops {
                expected[*to] += k * x.block(*from) * k.adjoint();
            }
        }
        let got = f.to_matrix_form().apply(&x).unwrap();
        for (j, e) in expected.iter().enumerate() {
            prop_assert!((e - got.block(j)).iter().all(|z| z.norm() <= 1e-12 * (1.0 + x.operator_norm())));
        }
        prop_assert!((f.unit_image().operator_norm() - common::kraus_unit_norm(&b, &terms)).abs() <= 1e-12);
    }

    #[test]
    fn cp_is_closed_under_composition_and_amplification(seed in any::<u64>(), r in 1usize..=3) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_shape(&mut rng, 2, 2);
        let b = common::random_shape(&mut rng, 2, 2);
        let (g, _) = common::random_kraus(&a, &b, 1.0, &mut rng);
        let (f, _) = common::random_kraus(&b, &a, 1.0, &mut rng);
        let h = CpMap::compose(&f, &g).unwrap().to_matrix_form();
        prop_assert!(is_completely_positive(&h, &tol));
        prop_assert!(is_contractive_cp(&h, &tol).unwrap());
        let hr = h.amplify(r).unwrap();
        prop_assert!(!hr.is_kraus());
        prop_assert!(is_completely_positive(&hr, &tol));
    }

    #[test]
    fn norm_of_amplified_cp_map_is_attained_at_the_unit(seed in any::<u64>(), r in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_shape(&mut rng, 2, 2);
        let b = common::random_shape(&mut rng, 2, 2);
        let (f, _) = common::random_kraus(&a, &b, rng.random_range(0.1..2.0), &mut rng);
        let est = map_norm_estimate(&f.amplify(r).unwrap(), 8, seed).value;
        prop_assert!(est <= f.unit_image().operator_norm() + 1e-9);
    }

    #[test]
    fn homomorphisms_have_zero_order_zero_defect(seed in any::<u64>(), k in 1usize..=3, r in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random::unitary(&m(k * r), &mut rng);
        let f = CpMap::compose(&CpMap::sandwich(&u), &diagonal_tensor_embedding(&m(k), &vec![1.0; r]).unwrap()).unwrap();
        let probes = ProbeSpec { random_pairs: 4, seed };
        prop_assert!(order_zero_defect(&f, &probes) <= 1e-12);
    }

    #[test]
    fn structure_theorem_recovers_generated_order_zero_maps(seed in any::<u64>(), k in 1usize..=2, r in 1usize..=3) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, h_norm) = generated_order_zero(k, r, &mut rng);
        let probes = ProbeSpec { random_pairs: 8, seed };
        let d = structure_decomposition(&f, &tol, 1e-9, &probes).unwrap();
        prop_assert!(d.residual <= 1e-9);
        prop_assert!(d.commutation_defect <= 1e-9);
        prop_assert!((d.h.operator_norm() - h_norm).abs() <= 1e-12);
        prop_assert!((d.h.operator_norm() - map_norm_estimate(&f, 8, seed).value).abs() <= 1e-8);
    }
}
