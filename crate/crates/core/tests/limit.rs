mod common;

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cpcstar::constructions::{interval_sampling_system, uhf_system, weighted_embedding_system};
use cpcstar::limit::{
    associativity_defect, cstar_identity_defect, default_inner, mult_id_defect, star_product, theta_order_zero_defect,
    LimitElement,
};
use cpcstar::systems::{cpc_defect, InductiveSystem};
use cpcstar::{random, AlgebraShape, Element, Error, Tolerances};

use common::{c, CMat, IntervalOracle};

const DYADIC: [usize; 6] = [2, 3, 5, 9, 17, 33];

fn real(v: &[f64]) -> Element {
    Element::from_real_values(v).unwrap()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn random_system(seed: u64, stages: usize) -> InductiveSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes: Vec<AlgebraShape> = (0..stages).map(|_| common::random_shape(&mut rng, 2, 3)).collect();
    let steps = shapes
        .windows(2)
        .map(|w| common::random_kraus(&w[0], &w[1], rng.random_range(0.3..=1.0), &mut rng).0)
        .collect();
    InductiveSystem::new("random", shapes, steps, Tolerances::default()).unwrap()
}

#[test]
fn construction_and_index_errors() {
    let sys = Arc::new(uhf_system(2, 3).unwrap());
    let s1 = sys.stage(1).unwrap().clone();
    let x = Element::unit(&s1);
    assert!(LimitElement::new(sys.clone(), 2, x.clone(), 1).is_err());
    assert!(LimitElement::new(sys.clone(), 1, x.clone(), 4).is_err());
    assert!(matches!(LimitElement::at(&sys, 2, x.clone()), Err(Error::ShapeMismatch { .. })));
    let a = LimitElement::at(&sys, 1, x.clone()).unwrap();
    assert_eq!(a.horizon(), 3);
    assert!(a.promote(0).is_err());
    assert!(a.promote(4).is_err());
    assert!(star_product(&a, &a, 1).is_err());
    assert!(star_product(&a, &a, 4).is_err());
    assert!(associativity_defect(&a, &a, &a, 2, 2).is_err());
    assert!(mult_id_defect(&a, &a, 2, 4).is_err());

    let twin = Arc::new(uhf_system(2, 3).unwrap());
    let b = LimitElement::at(&twin, 1, x.clone()).unwrap();
    assert!(matches!(star_product(&a, &b, 2), Err(Error::SystemMismatch)));
    let short = LimitElement::new(sys.clone(), 1, x, 2).unwrap();
    assert!(matches!(a.axpy(c(1.0), &short), Err(Error::SystemMismatch)));
    assert_eq!(default_inner(5), 4);
    assert_eq!(default_inner(0), 0);
}

#[test]
fn uhf_limit_is_the_matrix_algebra() {
    let sys = Arc::new(uhf_system(2, 4).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s1 = sys.stage(1).unwrap().clone();
    let x = random::contraction(&s1, &mut rng);
    let y = random::contraction(&s1, &mut rng);
    let (a, b) = (LimitElement::at(&sys, 1, x.clone()).unwrap(), LimitElement::at(&sys, 1, y.clone()).unwrap());
    for n in 2..=4 {
        let p = star_product(&a, &b, n).unwrap();
        assert_eq!(p.stage(), n);
        // x ⊗ 1 times y ⊗ 1 is xy ⊗ 1, and the norm is that of xy
        let expected = sys.push_forward(4, 1, &x.multiply(&y).unwrap()).unwrap();
        assert!(p.at_horizon().unwrap().max_abs_diff(&expected) < 1e-15);
        assert!((p.norm().unwrap() - x.multiply(&y).unwrap().operator_norm()).abs() < 1e-12);
        assert!(mult_id_defect(&a, &b, n, 2).unwrap() < 1e-15);
        assert!(cstar_identity_defect(&a, n).unwrap() < 1e-12);
    }
    for (c1, c2, c3) in [(&a, &b, &a), (&b, &a, &b)] {
        assert!(associativity_defect(c1, c2, c3, 2, 3).unwrap() < 1e-15);
    }
}

#[test]
fn interval_associativity_matches_direct_oracle() {
    let (sys, _) = interval_sampling_system(&DYADIC).unwrap();
    let sys = Arc::new(sys);
    let oracle = IntervalOracle::new(&DYADIC);
    let big_n = DYADIC.len() - 1;
    let fs: [fn(f64) -> f64; 3] = [|t| t, |t| 1.0 - t * t, |t| (2.0 * t - 1.0).abs()];
    let k = 1;
    let samples: Vec<Vec<f64>> = fs.iter().map(|f| oracle.sample(k, f)).collect();
    let el: Vec<LimitElement> = samples.iter().map(|v| LimitElement::at(&sys, k, real(v)).unwrap()).collect();
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
    for inner in k + 1..big_n {
        for outer in inner + 1..=big_n {
            let (x, y, z) = (&samples[0], &samples[1], &samples[2]);
            // (x • y) • z: the product lives at `inner`, is promoted to `outer` and multiplied by z there
            let xy = mul(&oracle.push(inner, k, x), &oracle.push(inner, k, y));
            let left = mul(&oracle.push(outer, inner, &xy), &oracle.push(outer, k, z));
            let yz = mul(&oracle.push(inner, k, y), &oracle.push(inner, k, z));
            let right = mul(&oracle.push(outer, k, x), &oracle.push(outer, inner, &yz));
            let diff: Vec<f64> = oracle
                .push(big_n, outer, &left)
                .iter()
                .zip(&oracle.push(big_n, outer, &right))
                .map(|(p, q)| p - q)
                .collect();
            let got = associativity_defect(&el[0], &el[1], &el[2], inner, outer).unwrap();
            assert!((got - sup(&diff)).abs() < 1e-14, "inner={inner} outer={outer}: {got} vs {}", sup(&diff));
        }
    }
}

#[test]
fn interval_cstar_identity_matches_direct_oracle() {
    let (sys, _) = interval_sampling_system(&DYADIC).unwrap();
    let sys = Arc::new(sys);
    let oracle = IntervalOracle::new(&DYADIC);
    let big_n = DYADIC.len() - 1;
    let x = oracle.sample(1, |t| 2.0 * t - 1.0);
    let a = LimitElement::at(&sys, 1, real(&x)).unwrap();
    for n in 2..=big_n {
        let xn = oracle.push(n, 1, &x);
        let sq: Vec<f64> = xn.iter().map(|v| v * v).collect();
        let expected = (sup(&oracle.push(big_n, n, &sq)) - sup(&oracle.push(big_n, 1, &x)).powi(2)).abs();
        let got = cstar_identity_defect(&a, n).unwrap();
        assert!((got - expected).abs() < 1e-14, "n={n}");
    }
}

#[test]
fn weighted_theta_defect_matches_kronecker_oracle() {
    let gamma = 0.5;
    let sys = Arc::new(weighted_embedding_system(4, &[gamma]).unwrap());
    let d = CMat::from_diagonal(&DVector::from_vec(vec![c(1.0), c(gamma)]));
    // ρ_{m,k}(x) = x ⊗ d ⊗ … ⊗ d with m − k factors
    let push = |x: &CMat, steps: usize| (0..steps).fold(x.clone(), |acc, _| acc.kronecker(&d));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = 1;
    let x = random::contraction(sys.stage(k).unwrap(), &mut rng);
    let y = random::contraction(sys.stage(k).unwrap(), &mut rng);
    let (a, b) = (LimitElement::at(&sys, k, x.clone()).unwrap(), LimitElement::at(&sys, k, y.clone()).unwrap());
    for n in k + 1..=4 {
        for unit in 0..=4 {
            let side = 2usize.pow(unit as u32);
            let e = push(&CMat::identity(side, side), 4 - unit);
            let xn = push(x.block(0), n - k);
            let yn = push(y.block(0), n - k);
            let damped = e * push(&(xn * yn), 4 - n);
            let ambient = push(x.block(0), 4 - k) * push(y.block(0), 4 - k);
            let expected = common::op_norm(&(ambient - damped));
            let got = theta_order_zero_defect(&a, &b, n, unit).unwrap();
            assert!((got - expected).abs() < 1e-12, "n={n} unit={unit}");
            if unit == n {
                assert!(got < 1e-15);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mult_id_is_the_cpc_defect_at_the_horizon(seed in any::<u64>()) {
        let sys = Arc::new(random_system(seed, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random::contraction(sys.stage(0).unwrap(), &mut rng);
        let y = random::contraction(sys.stage(0).unwrap(), &mut rng);
        let (a, b) = (LimitElement::at(&sys, 0, x.clone()).unwrap(), LimitElement::at(&sys, 0, y.clone()).unwrap());
        for n in 1..4 {
            for l in 1..4 {
                let m = mult_id_defect(&a, &b, n, l).unwrap();
                let t = theta_order_zero_defect(&a, &b, n, l).unwrap();
                let direct = cpc_defect(&sys, 0, &x, &y, 4, n, l).unwrap();
                prop_assert!((m - direct).abs() <= 1e-12);
                prop_assert!((t - m).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn star_product_is_bilinear_and_star_preserving(seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let sys = Arc::new(random_system(seed, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let s0 = sys.stage(0).unwrap().clone();
        let s1 = sys.stage(1).unwrap().clone();
        let a = LimitElement::at(&sys, 0, random::contraction(&s0, &mut rng)).unwrap();
        let cc = LimitElement::at(&sys, 1, random::contraction(&s1, &mut rng)).unwrap();
        let b = LimitElement::at(&sys, 1, random::contraction(&s1, &mut rng)).unwrap();
        let alpha = Complex64::new(re, im);
        let lhs = star_product(&a.axpy(alpha, &cc).unwrap(), &b, 2).unwrap().at_horizon().unwrap();
        let ab = star_product(&a, &b, 2).unwrap().at_horizon().unwrap();
        let cb = star_product(&cc, &b, 2).unwrap().at_horizon().unwrap();
        let rhs = ab.scale(alpha).add(&cb).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + alpha.norm()));
        // (a • b)* = b* • a*
        let adj = star_product(&a, &b, 3).unwrap().adjoint().at_horizon().unwrap();
        let rev = star_product(&b.adjoint(), &a.adjoint(), 3).unwrap().at_horizon().unwrap();
        prop_assert!(adj.max_abs_diff(&rev) <= 1e-12);
    }

    #[test]
    fn star_product_norm_is_bounded_by_stage_norms(seed in any::<u64>(), n in 1usize..=3) {
        let sys = Arc::new(random_system(seed, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let s0 = sys.stage(0).unwrap().clone();
        let (x, y) = (random::gaussian_element(&s0, &mut rng), random::gaussian_element(&s0, &mut rng));
        let (a, b) = (LimitElement::at(&sys, 0, x.clone()).unwrap(), LimitElement::at(&sys, 0, y.clone()).unwrap());
        let p = star_product(&a, &b, n).unwrap().norm().unwrap();
        prop_assert!(p <= x.operator_norm() * y.operator_norm() * (1.0 + 1e-12));
        prop_assert!(a.norm().unwrap() <= x.operator_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn promotion_does_not_change_the_limit_element(seed in any::<u64>(), j in 0usize..=3) {
        let sys = Arc::new(random_system(seed, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let a = LimitElement::at(&sys, 0, random::gaussian_element(sys.stage(0).unwrap(), &mut rng)).unwrap();
        let p = a.promote(j).unwrap();
        prop_assert_eq!(p.stage(), j);
        prop_assert!(p.at_horizon().unwrap().max_abs_diff(&a.at_horizon().unwrap()) <= 1e-12 * (1.0 + a.rep().operator_norm()));
    }
}
