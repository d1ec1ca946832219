use rayon::prelude::*;

use super::CpMap;
use crate::kernel::{AlgebraShape, Element, Tolerances};
use crate::random;

/// Which probe attained a norm estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormWitness {
    Unit,
    MatrixUnit,
    Unitary,
    Contraction,
    None,
}

/// Lower-bound estimate of `sup_{‖x‖ ≤ 1} ‖f(x)‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub witness: NormWitness,
    pub probes: usize,
}

/// Estimates the norm of an arbitrary linear map given as a closure by
/// maximizing over the unit, all matrix units, `samples` random unitaries and
/// `samples` random contractions.
pub fn estimate_norm<F>(domain: &AlgebraShape, samples: usize, seed: u64, eval: F) -> NormEstimate
where
    F: Fn(&Element) -> f64 + Sync,
{
    let mut rng = random::rng(seed);
    let mut probes: Vec<(NormWitness, Element)> = vec![(NormWitness::Unit, Element::unit(domain))];
    probes.extend(domain.matrix_units().into_iter().map(|u| (NormWitness::MatrixUnit, u)));
    for _ in 0..samples {
        probes.push((NormWitness::Unitary, random::unitary(domain, &mut rng)));
    }
    for _ in 0..samples {
        probes.push((NormWitness::Contraction, random::contraction(domain, &mut rng)));
    }
    let count = probes.len();
    let (value, witness) = probes
        .par_iter()
        .map(|(w, x)| (eval(x), *w))
        .reduce(|| (0.0, NormWitness::None), |a, b| if b.0 > a.0 { b } else { a });
    NormEstimate {
        value,
        witness,
        probes: count,
    }
}

/// Norm estimate of a single map.
pub fn map_norm_estimate(f: &CpMap, samples: usize, seed: u64) -> NormEstimate {
    estimate_norm(f.domain(), samples, seed, |x| f.apply(x).expect("domain shape").operator_norm())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingLevel {
    pub r: usize,
    /// `max | ‖f^{(r)}(x)‖ − ‖x‖ |` over probes.
    pub isometry_defect: f64,
    /// Probes `x` with `f^{(r)}(x) ≥ 0` but `x` not positive.
    pub order_reflection_failures: usize,
    pub probes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingReport {
    pub levels: Vec<EmbeddingLevel>,
}

impl EmbeddingReport {
    pub fn max_isometry_defect(&self) -> f64 {
        self.levels.iter().map(|l| l.isometry_defect).fold(0.0, f64::max)
    }

    pub fn total_failures(&self) -> usize {
        self.levels.iter().map(|l| l.order_reflection_failures).sum()
    }
}

/// Probes whether `f` behaves as a complete order embedding on each
/// amplification level.
///
/// Order reflection is tested on self-adjoint probes pushed just below the
/// positive cone (minimum eigenvalue `−margin`) as well as on generic ones.
pub fn complete_order_embedding_probe(
    f: &CpMap,
    levels: &[usize],
    tol: &Tolerances,
    samples: usize,
    seed: u64,
) -> crate::error::Result<EmbeddingReport> {
    const MARGIN: f64 = 1e-3;
    let mut out = Vec::with_capacity(levels.len());
    for &r in levels {
        let fr = f.amplify(r)?;
        let dom = fr.domain().clone();
        let mut rng = random::rng(random::derive_seed(seed, &[r as u64]));
        let mut norm_probes = vec![Element::unit(&dom)];
        let mut order_probes = Vec::new();
        for _ in 0..samples {
            norm_probes.push(random::contraction(&dom, &mut rng));
            let h = random::hermitian_contraction(&dom, &mut rng);
            let shift = h.min_eigenvalue() + MARGIN;
            let near = h.sub(&Element::unit(&dom).scale_real(shift))?;
            order_probes.push(h);
            order_probes.push(near);
        }
        let isometry_defect = norm_probes
            .par_iter()
            .map(|x| (fr.apply(x).expect("domain shape").operator_norm() - x.operator_norm()).abs())
            .reduce(|| 0.0, f64::max);
        let order_reflection_failures = order_probes
            .par_iter()
            .filter(|x| fr.apply(x).expect("domain shape").is_positive(tol) && !x.is_positive(tol))
            .count();
        out.push(EmbeddingLevel {
            r,
            isometry_defect,
            order_reflection_failures,
            probes: norm_probes.len() + order_probes.len(),
        });
    }
    Ok(EmbeddingReport { levels: out })
}
