use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element, Tolerances};
use crate::maps::CpMap;
use crate::systems::InductiveSystem;

/// A system of c.p.c. approximations `A --ψ_n--> F_n --φ_n--> A` on a
/// concrete finite-dimensional `A` with a designated probe list.
#[derive(Clone, Debug)]
pub struct CpapSystem {
    name: String,
    algebra: AlgebraShape,
    probes: Vec<Element>,
    stages: Vec<AlgebraShape>,
    psi: Vec<CpMap>,
    phi: Vec<CpMap>,
    unital: bool,
    tol: Tolerances,
    /// `approximation[n][p] = ‖φ_n(ψ_n(a_p)) − a_p‖`.
    approximation: Vec<Vec<f64>>,
}

/// How the lifts `h_m` are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitPolicy {
    /// `h_m := ψ_m(1_A)`; requires a unital CPAP.
    AlgebraUnit,
    /// `h_m := ψ_m(e)` for a caller-supplied approximate unit `e ∈ A`.
    Explicit(Element),
}

impl CpapSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        algebra: AlgebraShape,
        probes: Vec<Element>,
        stages: Vec<AlgebraShape>,
        psi: Vec<CpMap>,
        phi: Vec<CpMap>,
        unital: bool,
        tol: Tolerances,
    ) -> Result<Self> {
        tol.validate()?;
        if stages.is_empty() {
            return Err(Error::InvalidShape("CPAP needs at least one stage".into()));
        }
        if psi.len() != stages.len() || phi.len() != stages.len() {
            return Err(Error::shape(
                format!("{} psi and phi maps", stages.len()),
                format!("{} psi, {} phi", psi.len(), phi.len()),
            ));
        }
        if probes.is_empty() {
            return Err(Error::InvalidParameter("CPAP needs at least one probe".into()));
        }
        for (i, p) in probes.iter().enumerate() {
            if p.shape() != &algebra {
                return Err(Error::at(format!("probes[{i}]"), Error::shape(&algebra, p.shape())));
            }
            if p.operator_norm() > 1.0 + tol.eq_tol {
                return Err(Error::InvalidParameter(format!("probe {i} lies outside the unit ball")));
            }
        }
        for n in 0..stages.len() {
            let wrap = |e: Error| Error::InvalidStep {
                step: n,
                source: Box::new(e),
            };
            if psi[n].domain() != &algebra || psi[n].codomain() != &stages[n] {
                return Err(wrap(Error::shape(
                    format!("psi: {algebra} -> {}", stages[n]),
                    format!("{} -> {}", psi[n].domain(), psi[n].codomain()),
                )));
            }
            if phi[n].domain() != &stages[n] || phi[n].codomain() != &algebra {
                return Err(wrap(Error::shape(
                    format!("phi: {} -> {algebra}", stages[n]),
                    format!("{} -> {}", phi[n].domain(), phi[n].codomain()),
                )));
            }
            psi[n].ensure_cpc(&tol).map_err(wrap)?;
            phi[n].ensure_cpc(&tol).map_err(wrap)?;
        }
        let approximation = (0..stages.len())
            .into_par_iter()
            .map(|n| {
                probes
                    .iter()
                    .map(|a| {
                        let back = phi[n].apply(&psi[n].apply(a).expect("algebra shape")).expect("stage shape");
                        back.distance(a).expect("algebra shape")
                    })
                    .collect()
            })
            .collect();
        Ok(CpapSystem {
            name: name.into(),
            algebra,
            probes,
            stages,
            psi,
            phi,
            unital,
            tol,
            approximation,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &AlgebraShape {
        &self.algebra
    }

    pub fn probes(&self) -> &[Element] {
        &self.probes
    }

    pub fn stages(&self) -> &[AlgebraShape] {
        &self.stages
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn psi(&self, n: usize) -> &CpMap {
        &self.psi[n]
    }

    pub fn phi(&self, n: usize) -> &CpMap {
        &self.phi[n]
    }

    pub fn psi_maps(&self) -> &[CpMap] {
        &self.psi
    }

    pub fn phi_maps(&self) -> &[CpMap] {
        &self.phi
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `‖φ_n(ψ_n(a_p)) − a_p‖` per stage and probe.
    pub fn approximation_defects(&self) -> &[Vec<f64>] {
        &self.approximation
    }

    /// The associated system `ρ_{n+1,n} = ψ_{n+1} ∘ φ_n`.
    pub fn associated_system(&self) -> Result<InductiveSystem> {
        let steps = (0..self.stages.len() - 1)
            .map(|n| CpMap::compose(&self.psi[n + 1], &self.phi[n]))
            .collect::<Result<Vec<_>>>()?;
        InductiveSystem::new(self.name.clone(), self.stages.clone(), steps, self.tol)
    }

    /// The CPAP restricted to the given stage indices.
    pub fn subsystem(&self, indices: &[usize]) -> Result<CpapSystem> {
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("subsystem indices must increase strictly".into()));
        }
        if let Some(&j) = indices.iter().find(|&&j| j >= self.stages.len()) {
            return Err(Error::Index(format!("stage {j} out of range")));
        }
        Ok(CpapSystem {
            name: format!("{}[{}]", self.name, indices.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",")),
            algebra: self.algebra.clone(),
            probes: self.probes.clone(),
            stages: indices.iter().map(|&j| self.stages[j].clone()).collect(),
            psi: indices.iter().map(|&j| self.psi[j].clone()).collect(),
            phi: indices.iter().map(|&j| self.phi[j].clone()).collect(),
            unital: self.unital,
            tol: self.tol,
            approximation: indices.iter().map(|&j| self.approximation[j].clone()).collect(),
        })
    }

    /// `h_m` under the given policy.
    pub fn h(&self, m: usize, policy: &UnitPolicy) -> Result<Element> {
        match policy {
            UnitPolicy::AlgebraUnit => {
                if !self.unital {
                    return Err(Error::InvalidParameter(
                        "non-unital CPAP needs an explicit approximate-unit element".into(),
                    ));
                }
                self.psi[m].apply(&Element::unit(&self.algebra))
            }
            UnitPolicy::Explicit(e) => self.psi[m].apply(e),
        }
    }
}

/// Per-probe, per-level lower-norm check of the downwards maps.
#[derive(Clone, Debug, PartialEq)]
pub struct DownwardsRow {
    pub probe: usize,
    pub r: usize,
    /// `min over trailing stages of ‖ψ_n^{(r)}(a)‖ − ‖a‖`.
    pub norm_gap: f64,
    /// Largest approximation defect of the probe over the same stages.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DownwardsReport {
    pub rows: Vec<DownwardsRow>,
    /// `(m, max_x ‖ψ_m(a_x) − ρ_{m,0}(x)‖)` with `a_x = φ_N(ρ_{N,0}(x))`
    /// over the matrix units `x` of stage 0.
    pub coherence: Vec<(usize, f64)>,
}

fn trailing(len: usize) -> std::ops::Range<usize> {
    let q = (len / 4).max(1);
    len - q..len
}

/// Probe element of `M_r(A)`: `a ⊗ 1_r` when `mix` is false, otherwise the
/// matrix `[a_{(i+j) mod p} / r]_{ij}` built from the probe list.
fn amplified_probe(probes: &[Element], p: usize, r: usize, mix: bool) -> Result<Element> {
    let base = &probes[p];
    if !mix || r == 1 {
        return base.amplify(r);
    }
    let shape = base.shape().amplify(r)?;
    let mut out = Element::zeros(&shape);
    for i in 0..r {
        for j in 0..r {
            let a = &probes[(p + i + j) % probes.len()];
            for (b, blk) in a.blocks().iter().enumerate() {
                let k = blk.nrows();
                let target = out.block_mut(b);
                for q in 0..k {
                    for s in 0..k {
                        target[(s * r + i, q * r + j)] = blk[(s, q)] / r as f64;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Finite-stage check that `a ↦ [(ψ_n(a))_n]` does not shrink norms, on the
/// trailing quarter of the stages.
pub fn downwards_embedding_probe(cpap: &CpapSystem, levels: &[usize]) -> Result<DownwardsReport> {
    let window = trailing(cpap.num_stages());
    let mut rows = Vec::new();
    for &r in levels {
        let psis = window
            .clone()
            .map(|n| cpap.psi(n).amplify(r))
            .collect::<Result<Vec<_>>>()?;
        for p in 0..cpap.probes().len() {
            let slack = window.clone().map(|n| cpap.approximation[n][p]).fold(0.0, f64::max);
            for mix in [false, true] {
                if mix && r == 1 {
                    continue;
                }
                let a = amplified_probe(cpap.probes(), p, r, mix)?;
                let na = a.operator_norm();
                let gap = psis
                    .iter()
                    .map(|f| f.apply(&a).map(|x| x.operator_norm() - na))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                rows.push(DownwardsRow {
                    probe: p,
                    r,
                    norm_gap: gap,
                    slack,
                });
            }
        }
    }
    let coherence = if cpap.num_stages() >= 2 {
        let sys = cpap.associated_system()?;
        let last = sys.horizon();
        let units = sys.stage(0)?.matrix_units();
        window
            .clone()
            .filter(|&m| m > 0)
            .map(|m| {
                let worst = units
                    .iter()
                    .map(|x| {
                        let a = cpap.phi(last).apply(&sys.push_forward(last, 0, x)?)?;
                        cpap.psi(m).apply(&a)?.distance(&sys.push_forward(m, 0, x)?)
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                Ok((m, worst))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(DownwardsReport { rows, coherence })
}

/// Finite shadows of `h̄Ψ(a) = Ψ(a)h̄`, `‖h̄Ψ(a)‖ = ‖a‖` and
/// `h̄Ψ(ab) = Ψ(a)Ψ(b)` at one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct HBarRow {
    pub m: usize,
    pub a: usize,
    pub b: usize,
    /// `‖h_m ψ_m(ab) − ψ_m(a) ψ_m(b)‖`.
    pub product: f64,
    /// `‖h_m ψ_m(a) − ψ_m(a) h_m‖`.
    pub commutation: f64,
    /// `| ‖h_m ψ_m(a)‖ − ‖a‖ |`.
    pub norm: f64,
}

/// Evaluates the three families on every ordered probe pair and the given
/// stages (all stages when `stages` is empty).
pub fn h_bar_consistency_probe(cpap: &CpapSystem, policy: &UnitPolicy, stages: &[usize]) -> Result<Vec<HBarRow>> {
    let stages: Vec<usize> = if stages.is_empty() {
        (0..cpap.num_stages()).collect()
    } else {
        stages.to_vec()
    };
    let probes = cpap.probes();
    let mut rows = Vec::new();
    for &m in &stages {
        if m >= cpap.num_stages() {
            return Err(Error::Index(format!("stage {m} out of range")));
        }
        let h = cpap.h(m, policy)?;
        let images = probes.iter().map(|a| cpap.psi(m).apply(a)).collect::<Result<Vec<_>>>()?;
        for (i, a) in probes.iter().enumerate() {
            let ha = h.multiply(&images[i])?;
            let commutation = ha.distance(&images[i].multiply(&h)?)?;
            let norm = (ha.operator_norm() - a.operator_norm()).abs();
            for (j, b) in probes.iter().enumerate() {
                let ab = cpap.psi(m).apply(&a.multiply(b)?)?;
                let product = h.multiply(&ab)?.distance(&images[i].multiply(&images[j])?)?;
                rows.push(HBarRow {
                    m,
                    a: i,
                    b: j,
                    product,
                    commutation,
                    norm,
                });
            }
        }
    }
    Ok(rows)
}
