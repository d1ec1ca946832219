//! Reference computations used by the integration tests. They work on plain
//! `f64` vectors or dense matrices and do not go through `CpMap`.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use cpcstar::maps::{CpMap, KrausTerm};
use cpcstar::AlgebraShape;

pub type CMat = DMatrix<Complex64>;

/// Evenly spaced points `0, 1/(g−1), …, 1`.
pub fn grid(g: usize) -> Vec<f64> {
    (0..g).map(|i| i as f64 / (g - 1) as f64).collect()
}

/// Piecewise-linear interpolant through `(points, values)` evaluated at `t`.
pub fn pl_eval(points: &[f64], values: &[f64], t: f64) -> f64 {
    let last = points.len() - 1;
    let mut i = 0;
    while i + 1 < last && points[i + 1] < t {
        i += 1;
    }
    let (a, b) = (points[i], points[i + 1]);
    let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
    values[i] * (1.0 - s) + values[i + 1] * s
}

/// The interval system evaluated directly: stage `n` holds function values
/// on `grid(sizes[n])`, a step interpolates and resamples.
pub struct IntervalOracle {
    pub grids: Vec<Vec<f64>>,
}

impl IntervalOracle {
    pub fn new(sizes: &[usize]) -> Self {
        IntervalOracle {
            grids: sizes.iter().map(|&g| grid(g)).collect(),
        }
    }

    pub fn push(&self, m: usize, n: usize, values: &[f64]) -> Vec<f64> {
        let mut cur = values.to_vec();
        for j in n..m {
            cur = self.grids[j + 1].iter().map(|&t| pl_eval(&self.grids[j], &cur, t)).collect();
        }
        cur
    }

    pub fn ones(&self, n: usize) -> Vec<f64> {
        vec![1.0; self.grids[n].len()]
    }

    pub fn sample(&self, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.grids[n].iter().map(|&t| f(t)).collect()
    }

    pub fn cpc(&self, k: usize, x: &[f64], y: &[f64], m: usize, n: usize, l: usize) -> f64 {
        let e = self.push(m, l, &self.ones(l));
        let (xn, yn) = (self.push(n, k, x), self.push(n, k, y));
        let prod: Vec<f64> = xn.iter().zip(&yn).map(|(a, b)| a * b).collect();
        let inner = self.push(m, n, &prod);
        let (xm, ym) = (self.push(m, k, x), self.push(m, k, y));
        (0..e.len())
            .map(|i| (e[i] * inner[i] - xm[i] * ym[i]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Matrix unit `E_pq` of `M_d`.
pub fn unit(d: usize, p: usize, q: usize) -> CMat {
    let mut e = CMat::zeros(d, d);
    e[(p, q)] = c(1.0);
    e
}

/// Choi matrix `Σ E_pq ⊗ f(E_pq)` of a map `M_d → M_e`, with `f` given as a
/// closure on dense matrices.
pub fn dense_choi(d: usize, e: usize, f: impl Fn(&CMat) -> CMat) -> CMat {
    let mut choi = CMat::zeros(d * e, d * e);
    for p in 0..d {
        for q in 0..d {
            let img = f(&unit(d, p, q));
            for a in 0..e {
                for b in 0..e {
                    choi[(p * e + a, q * e + b)] = img[(a, b)];
                }
            }
        }
    }
    choi
}

/// Smallest eigenvalue of a Hermitian matrix, by nalgebra's
/// Hermitian eigensolver on the symmetrized input.
pub fn min_eig(h: &CMat) -> f64 {
    let sym = (h + h.adjoint()) * c(0.5);
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// A random shape with at most `max_blocks` blocks of side at most `max_side`.
pub fn random_shape(rng: &mut ChaCha8Rng, max_blocks: usize, max_side: usize) -> AlgebraShape {
    let nb = rng.random_range(1..=max_blocks);
    AlgebraShape::new((0..nb).map(|_| rng.random_range(1..=max_side)).collect()).unwrap()
}

/// Random Kraus map between two shapes, rescaled so that `‖f(1)‖` equals
/// `unit_norm`. The unit image is computed blockwise as `Σ K K*` here.
pub fn random_kraus(
    dom: &AlgebraShape,
    cod: &AlgebraShape,
    unit_norm: f64,
    rng: &mut ChaCha8Rng,
) -> (CpMap, Vec<(usize, usize, Vec<CMat>)>) {
    let mut terms = Vec::new();
    for (i, &kd) in dom.blocks().iter().enumerate() {
        for (j, &kc) in cod.blocks().iter().enumerate() {
            if rng.random_bool(0.7) {
                let count = rng.random_range(1..=2);
                terms.push((i, j, (0..count).map(|_| gaussian(kc, kd, rng)).collect::<Vec<_>>()));
            }
        }
    }
    if terms.is_empty() {
        terms.push((0, 0, vec![gaussian(cod.blocks()[0], dom.blocks()[0], rng)]));
    }
    let norm = kraus_unit_norm(cod, &terms);
    let s = (unit_norm / norm).sqrt();
    for t in &mut terms {
        for op in &mut t.2 {
            *op *= c(s);
        }
    }
    let f = CpMap::from_kraus(
        dom.clone(),
        cod.clone(),
        terms
            .iter()
            .map(|(from, to, ops)| KrausTerm {
                from: *from,
                to: *to,
                ops: ops.clone(),
            })
            .collect(),
    )
    .unwrap();
    (f, terms)
}

/// `max_j ‖Σ_{terms into j} K K*‖`.
pub fn kraus_unit_norm(cod: &AlgebraShape, terms: &[(usize, usize, Vec<CMat>)]) -> f64 {
    let mut acc: Vec<CMat> = cod.blocks().iter().map(|&k| CMat::zeros(k, k)).collect();
    for (_, to, ops) in terms {
        for k in ops {
            acc[*to] += k * k.adjoint();
        }
    }
    acc.iter().map(op_norm).fold(0.0, f64::max)
}
