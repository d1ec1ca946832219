use rayon::prelude::*;

use super::{map_norm_estimate, CpMap};
use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element, Tolerances};
use crate::linalg::{self, CMat};
use crate::random;

/// Probe-set descriptor: all matrix-unit pairs are always used, plus
/// `random_pairs` seeded random contraction pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbeSpec {
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            random_pairs: 16,
            seed: 0,
        }
    }
}

impl ProbeSpec {
    pub fn units_only() -> Self {
        ProbeSpec {
            random_pairs: 0,
            seed: 0,
        }
    }

    pub fn random_pairs(&self, shape: &AlgebraShape) -> Vec<(Element, Element)> {
        let mut rng = random::rng(self.seed);
        (0..self.random_pairs)
            .map(|_| (random::contraction(shape, &mut rng), random::contraction(shape, &mut rng)))
            .collect()
    }
}

/// Index of `E_pq` of block `b` in the coordinate order of `shape`.
fn unit_index(offsets: &[usize], sides: &[usize], b: usize, p: usize, q: usize) -> usize {
    offsets[b] + q * sides[b] + p
}

/// `max ‖lhs(a, b) − rhs(a, b)‖` over probe pairs, where the products are
/// formed from precomputed images of matrix units.
fn pair_defect(f: &CpMap, probes: &ProbeSpec, damp_with_unit: bool) -> f64 {
    let shape = f.domain();
    let units = shape.matrix_units();
    let images: Vec<Element> = units.par_iter().map(|u| f.apply(u).expect("domain shape")).collect();
    let h = f.unit_image();
    let sides = shape.blocks();
    let offsets = shape.offsets();

    // (block, p, q) of each unit, same order as `units`
    let mut labels = Vec::with_capacity(units.len());
    for (b, &k) in sides.iter().enumerate() {
        for q in 0..k {
            for p in 0..k {
                labels.push((b, p, q));
            }
        }
    }

    let zero = Element::zeros(f.codomain());
    let unit_pairs = (0..units.len())
        .into_par_iter()
        .map(|i| {
            let (b1, p, q) = labels[i];
            let mut worst: f64 = 0.0;
            for j in 0..units.len() {
                let (b2, r, s) = labels[j];
                let prod_image = if b1 == b2 && q == r {
                    &images[unit_index(&offsets, sides, b1, p, s)]
                } else {
                    &zero
                };
                let lhs = images[i].multiply(&images[j]).expect("codomain shape");
                let rhs = if damp_with_unit {
                    h.multiply(prod_image).expect("codomain shape")
                } else {
                    prod_image.clone()
                };
                worst = worst.max(lhs.distance(&rhs).expect("codomain shape"));
            }
            worst
        })
        .reduce(|| 0.0, f64::max);

    let random_pairs = probes
        .random_pairs(shape)
        .par_iter()
        .map(|(a, b)| {
            let fa = f.apply(a).expect("domain shape");
            let fb = f.apply(b).expect("domain shape");
            let fab = f.apply(&a.multiply(b).expect("same shape")).expect("domain shape");
            let rhs = if damp_with_unit {
                h.multiply(&fab).expect("codomain shape")
            } else {
                fab
            };
            fa.multiply(&fb).expect("codomain shape").distance(&rhs).expect("codomain shape")
        })
        .reduce(|| 0.0, f64::max);

    unit_pairs.max(random_pairs)
}

/// `max ‖f(a)f(b) − f(1)f(ab)‖` over the probe set.
///
/// This is a lower bound for the supremum over the unit ball.
pub fn order_zero_defect(f: &CpMap, probes: &ProbeSpec) -> f64 {
    pair_defect(f, probes, true)
}

/// `max ‖f(a)f(b) − f(ab)‖` over the probe set (lower bound).
pub fn multiplicativity_defect(f: &CpMap, probes: &ProbeSpec) -> f64 {
    pair_defect(f, probes, false)
}

/// `f = h^{1/2} π(·) h^{1/2}` recovered from an order-zero map.
#[derive(Clone, Debug)]
pub struct OrderZeroDecomposition {
    /// `f(1)`.
    pub h: Element,
    pub support_projection: Element,
    /// `a ↦ h⁺^{1/2} f(a) h⁺^{1/2}`, valued in the support corner.
    pub pi_action: CpMap,
    /// `max ‖f(a) − h^{1/2} π(a) h^{1/2}‖` over the probes.
    pub residual: f64,
    /// `max ‖h f(a) − f(a) h‖` over the probes.
    pub commutation_defect: f64,
    pub order_zero_defect: f64,
    /// Lower-bound estimate of `‖f‖`.
    pub norm_estimate: f64,
}

/// Structure decomposition of an (approximately) order-zero CP map.
///
/// Eigenvalues of `h` below `psd_tol · ‖h‖` are excluded from the support.
pub fn structure_decomposition(
    f: &CpMap,
    tol: &Tolerances,
    threshold: f64,
    probes: &ProbeSpec,
) -> Result<OrderZeroDecomposition> {
    let defect = order_zero_defect(f, probes);
    if defect > threshold {
        return Err(Error::OrderZeroThreshold { defect, threshold });
    }
    let h = f.unit_image();
    let h_norm = h.operator_norm();
    if h_norm <= tol.psd_tol {
        return Err(Error::SingularUnitImage { norm: h_norm });
    }
    let cutoff = tol.psd_tol * h_norm;

    let mut sqrt_blocks = Vec::new();
    let mut inv_sqrt_blocks = Vec::new();
    let mut proj_blocks = Vec::new();
    for b in h.blocks() {
        let (values, vectors) = linalg::hermitian_eigh(b);
        let build = |g: &dyn Fn(f64) -> f64| -> CMat {
            let n = values.len();
            let mut scaled = vectors.clone();
            for (j, &l) in values.iter().enumerate() {
                let s = g(l);
                for i in 0..n {
                    scaled[(i, j)] *= s;
                }
            }
            scaled * vectors.adjoint()
        };
        sqrt_blocks.push(build(&|l| if l > cutoff { l.sqrt() } else { 0.0 }));
        inv_sqrt_blocks.push(build(&|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 }));
        proj_blocks.push(build(&|l| if l > cutoff { 1.0 } else { 0.0 }));
    }
    let cod = f.codomain().clone();
    let h_sqrt = Element::new(cod.clone(), sqrt_blocks)?;
    let h_inv_sqrt = Element::new(cod.clone(), inv_sqrt_blocks)?;
    let support_projection = Element::new(cod, proj_blocks)?;

    let pi_action = CpMap::compose(&CpMap::sandwich(&h_inv_sqrt), f)?;

    let mut elems = f.domain().matrix_units();
    for (a, b) in probes.random_pairs(f.domain()) {
        elems.push(a);
        elems.push(b);
    }
    let (residual, commutation_defect) = elems
        .par_iter()
        .map(|a| {
            let fa = f.apply(a).expect("domain shape");
            let pa = pi_action.apply(a).expect("domain shape");
            let rebuilt = h_sqrt.multiply(&pa).and_then(|x| x.multiply(&h_sqrt)).expect("codomain shape");
            let res = fa.distance(&rebuilt).expect("codomain shape");
            let comm = h
                .multiply(&fa)
                .and_then(|x| x.sub(&fa.multiply(&h)?))
                .expect("codomain shape")
                .operator_norm();
            (res, comm)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));

    let norm_estimate = map_norm_estimate(f, probes.random_pairs.max(1), probes.seed).value;
    Ok(OrderZeroDecomposition {
        h,
        support_projection,
        pi_action,
        residual,
        commutation_defect,
        order_zero_defect: defect,
        norm_estimate,
    })
}
