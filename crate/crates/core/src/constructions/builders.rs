use num_complex::Complex64;

use super::cpap::CpapSystem;
use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element, Tolerances};
use crate::linalg::CMat;
use crate::maps::{diagonal_tensor_embedding, CpMap};
use crate::systems::InductiveSystem;

/// Default upper bound on any block side produced by a builder.
pub const DEFAULT_MAX_SIDE: usize = 512;

fn check_side(shape: &AlgebraShape, cap: usize) -> Result<()> {
    if shape.max_side() > cap {
        return Err(Error::SizeCap(format!("block side {} exceeds cap {cap}", shape.max_side())));
    }
    Ok(())
}

/// Tower `M_1 → M_b → M_{b²} → …` whose steps are `x ↦ ⊕_i w_i (x ⊗ E_ii)`
/// with the given per-step weight vectors.
fn tensor_tower(name: String, weights: &[Vec<f64>], cap: usize) -> Result<InductiveSystem> {
    let mut stages = vec![AlgebraShape::full(1)?];
    let mut steps = Vec::with_capacity(weights.len());
    for w in weights {
        let cur = stages.last().expect("non-empty").clone();
        let next = cur.amplify(w.len())?;
        check_side(&next, cap)?;
        steps.push(diagonal_tensor_embedding(&cur, w)?);
        stages.push(next);
    }
    InductiveSystem::new(name, stages, steps, Tolerances::default())
}

/// `M_{bⁿ}` with the unital steps `x ↦ x ⊗ 1_b`, stages `0..=depth`.
pub fn uhf_system(base: usize, depth: usize) -> Result<InductiveSystem> {
    uhf_system_capped(base, depth, DEFAULT_MAX_SIDE)
}

pub fn uhf_system_capped(base: usize, depth: usize, cap: usize) -> Result<InductiveSystem> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!("uhf base must be >= 2, got {base}")));
    }
    if depth < 1 {
        return Err(Error::InvalidParameter("uhf depth must be >= 1".into()));
    }
    tensor_tower(format!("uhf{{{base},{depth}}}"), &vec![vec![1.0; base]; depth], cap)
}

/// Steps `x ↦ (x ⊗ 1_2)(1 ⊗ diag(1, γ_n))`. A single weight is used for
/// every step.
pub fn weighted_embedding_system(depth: usize, gammas: &[f64]) -> Result<InductiveSystem> {
    if depth < 1 {
        return Err(Error::InvalidParameter("weighted depth must be >= 1".into()));
    }
    let gammas = broadcast(gammas, depth, "gammas")?;
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(Error::InvalidParameter(format!("weight {g} outside (0, 1]")));
    }
    let weights: Vec<Vec<f64>> = gammas.iter().map(|&g| vec![1.0, g]).collect();
    tensor_tower(format!("weighted{{{depth},{}}}", join(&gammas)), &weights, DEFAULT_MAX_SIDE)
}

/// Steps `x ↦ c_n (x ⊗ 1_b)`, scales in `(0, 1]`.
pub fn scaled_embedding_system(base: usize, scales: &[f64]) -> Result<InductiveSystem> {
    if base < 1 {
        return Err(Error::InvalidParameter("scaled base must be >= 1".into()));
    }
    if scales.is_empty() {
        return Err(Error::InvalidParameter("scaled system needs at least one scale".into()));
    }
    if let Some(c) = scales.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
        return Err(Error::InvalidParameter(format!("scale {c} outside (0, 1]")));
    }
    let weights: Vec<Vec<f64>> = scales.iter().map(|&c| vec![c; base]).collect();
    tensor_tower(format!("scaled{{{base},{}}}", join(scales)), &weights, DEFAULT_MAX_SIDE)
}

fn broadcast(values: &[f64], len: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; len]),
        n if n == len => Ok(values.to_vec()),
        n => Err(Error::InvalidParameter(format!("{what}: expected 1 or {len} values, got {n}"))),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Point grids on `[0, 1]` and the master grid containing all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalGrids {
    pub sizes: Vec<usize>,
    /// Sorted union of all stage points.
    pub master: Vec<f64>,
    /// For each stage, the master index of each of its points.
    pub positions: Vec<Vec<usize>>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl IntervalGrids {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidParameter("need at least one grid".into()));
        }
        if let Some(g) = sizes.iter().find(|&&g| g < 2) {
            return Err(Error::InvalidParameter(format!("grid size {g} < 2")));
        }
        if sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid sizes must be strictly increasing".into()));
        }
        // points i/(g-1) as reduced fractions, so shared points coincide exactly
        let mut fracs: Vec<(usize, usize)> = Vec::new();
        for &g in sizes {
            for i in 0..g {
                let d = gcd(i, g - 1);
                fracs.push((i / d, (g - 1) / d));
            }
        }
        fracs.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
        fracs.dedup();
        let master: Vec<f64> = fracs.iter().map(|&(p, q)| p as f64 / q as f64).collect();
        let positions = sizes
            .iter()
            .map(|&g| {
                (0..g)
                    .map(|i| {
                        let d = gcd(i, g - 1);
                        let key = (i / d, (g - 1) / d);
                        fracs.binary_search_by(|f| (f.0 * key.1).cmp(&(key.0 * f.1))).expect("point in master grid")
                    })
                    .collect()
            })
            .collect();
        Ok(IntervalGrids {
            sizes: sizes.to_vec(),
            master,
            positions,
        })
    }

    pub fn stage_points(&self, n: usize) -> Vec<f64> {
        self.positions[n].iter().map(|&i| self.master[i]).collect()
    }

    /// Sampling matrix `g_n × G`.
    pub fn sampling(&self, n: usize) -> CMat {
        let mut m = CMat::zeros(self.sizes[n], self.master.len());
        for (i, &p) in self.positions[n].iter().enumerate() {
            m[(i, p)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Piecewise-linear interpolation matrix `G × g_n`.
    pub fn interpolation(&self, n: usize) -> CMat {
        let pts = self.stage_points(n);
        let g = pts.len();
        let mut m = CMat::zeros(self.master.len(), g);
        for (row, &t) in self.master.iter().enumerate() {
            let i = pts.partition_point(|&p| p <= t).saturating_sub(1).min(g - 2);
            let (a, b) = (pts[i], pts[i + 1]);
            let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
            m[(row, i)] += Complex64::new(1.0 - w, 0.0);
            m[(row, i + 1)] += Complex64::new(w, 0.0);
        }
        m
    }
}

/// A function on the master grid as an element of `ℂ^G`.
pub fn grid_function(grids: &IntervalGrids, f: impl Fn(f64) -> f64) -> Element {
    Element::from_real_values(&grids.master.iter().map(|&t| f(t)).collect::<Vec<_>>()).expect("non-empty grid")
}

/// Commutative CPAP for `C[0, 1]` modelled on the master grid: `ψ_n`
/// samples at the stage points, `φ_n` interpolates piecewise linearly.
pub fn interval_cpap(sizes: &[usize]) -> Result<CpapSystem> {
    let grids = IntervalGrids::new(sizes)?;
    let algebra = AlgebraShape::commutative(grids.master.len())?;
    let stages = sizes.iter().map(|&g| AlgebraShape::commutative(g)).collect::<Result<Vec<_>>>()?;
    let mut psi = Vec::with_capacity(sizes.len());
    let mut phi = Vec::with_capacity(sizes.len());
    for (n, stage) in stages.iter().enumerate() {
        psi.push(CpMap::from_matrix(algebra.clone(), stage.clone(), grids.sampling(n))?);
        phi.push(CpMap::from_matrix(stage.clone(), algebra.clone(), grids.interpolation(n))?);
    }
    let probes = vec![
        grid_function(&grids, |t| t),
        grid_function(&grids, |t| 1.0 - t),
        grid_function(&grids, |t| t * t),
        grid_function(&grids, |t| (2.0 * t - 1.0).powi(2)),
        grid_function(&grids, |t| 4.0 * t * (1.0 - t)),
    ];
    CpapSystem::new(
        format!("interval{{{}}}", sizes.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",")),
        algebra,
        probes,
        stages,
        psi,
        phi,
        true,
        Tolerances::default(),
    )
}

/// The associated system `ρ_{n+1,n} = ψ_{n+1} ∘ φ_n` of the interval CPAP,
/// with row-stochastic step matrices.
pub fn interval_sampling_system(sizes: &[usize]) -> Result<(InductiveSystem, CpapSystem)> {
    let cpap = interval_cpap(sizes)?;
    let sys = cpap.associated_system()?;
    Ok((sys, cpap))
}

/// `A = F_n = shape` with every `ψ_n`, `φ_n` the identity.
pub fn exact_cpap(shape: &AlgebraShape, stages: usize) -> Result<CpapSystem> {
    if stages < 2 {
        return Err(Error::InvalidParameter("exact CPAP needs at least 2 stages".into()));
    }
    let id = CpMap::identity(shape);
    let mut probes = vec![Element::unit(shape)];
    probes.extend(shape.matrix_units());
    CpapSystem::new(
        format!("exact{{{shape},{stages}}}"),
        shape.clone(),
        probes,
        vec![shape.clone(); stages],
        vec![id.clone(); stages],
        vec![id; stages],
        true,
        Tolerances::default(),
    )
}
