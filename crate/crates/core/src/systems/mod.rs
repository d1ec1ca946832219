//! Finite inductive systems `F_0 → F_1 → … → F_N` with c.p.c. connecting
//! maps, and the finite-stage defects built from them.

mod defects;
mod report;
mod sweep;

pub use defects::{
    approx_identity_defect, commutator_defect, cpc_defect, lift_coherence_defect, limit_norm_profile, nf_defect,
    nondegeneracy_profile, order_unit_domination_check, order_unit_domination_margin, product_at, NormProfile,
};
pub use report::{DefectEntry, DefectKind, DefectReport, TrendSummary};
pub use sweep::{defect_sweep, GeneratorPolicy, IndexGrid};

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element, Tolerances};
use crate::maps::{CpMap, MapVerdict};

#[derive(Clone)]
pub struct InductiveSystem {
    name: String,
    stages: Vec<AlgebraShape>,
    steps: Vec<CpMap>,
    verdicts: Vec<MapVerdict>,
    tol: Tolerances,
    // composites[m][n] caches ρ_{m,n} for n < m
    composites: Vec<Vec<OnceLock<Arc<CpMap>>>>,
}

impl fmt::Debug for InductiveSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InductiveSystem")
            .field("name", &self.name)
            .field("stages", &self.stages)
            .finish_non_exhaustive()
    }
}

impl InductiveSystem {
    /// Validates shapes and checks that every step is completely positive
    /// and contractive.
    pub fn new(name: impl Into<String>, stages: Vec<AlgebraShape>, steps: Vec<CpMap>, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        if stages.is_empty() {
            return Err(Error::InvalidShape("system needs at least one stage".into()));
        }
        if steps.len() + 1 != stages.len() {
            return Err(Error::shape(
                format!("{} steps for {} stages", stages.len() - 1, stages.len()),
                format!("{} steps", steps.len()),
            ));
        }
        let mut verdicts = Vec::with_capacity(steps.len());
        for (n, step) in steps.iter().enumerate() {
            let wrap = |e: Error| Error::InvalidStep {
                step: n,
                source: Box::new(e),
            };
            if step.domain() != &stages[n] {
                return Err(wrap(Error::shape(&stages[n], step.domain())));
            }
            if step.codomain() != &stages[n + 1] {
                return Err(wrap(Error::shape(&stages[n + 1], step.codomain())));
            }
            verdicts.push(step.ensure_cpc(&tol).map_err(wrap)?);
        }
        let composites = (0..stages.len()).map(|m| (0..m).map(|_| OnceLock::new()).collect()).collect();
        Ok(InductiveSystem {
            name: name.into(),
            stages,
            steps,
            verdicts,
            tol,
            composites,
        })
    }

    /// Stages are read off the step domains and codomains.
    pub fn from_steps(name: impl Into<String>, steps: Vec<CpMap>, tol: Tolerances) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::InvalidShape("need at least one step to infer stages".into()))?;
        let mut stages = vec![first.domain().clone()];
        stages.extend(steps.iter().map(|s| s.codomain().clone()));
        Self::new(name, stages, steps, tol)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn stages(&self) -> &[AlgebraShape] {
        &self.stages
    }

    pub fn stage(&self, n: usize) -> Result<&AlgebraShape> {
        self.stages
            .get(n)
            .ok_or_else(|| Error::Index(format!("stage {n} out of range 0..={}", self.horizon())))
    }

    pub fn steps(&self) -> &[CpMap] {
        &self.steps
    }

    pub fn step(&self, n: usize) -> Result<&CpMap> {
        self.steps
            .get(n)
            .ok_or_else(|| Error::Index(format!("step {n} out of range 0..{}", self.steps.len())))
    }

    pub fn verdicts(&self) -> &[MapVerdict] {
        &self.verdicts
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Index `N` of the last stage.
    pub fn horizon(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub(crate) fn check_order(&self, m: usize, n: usize) -> Result<()> {
        self.stage(m)?;
        if n > m {
            return Err(Error::Index(format!("need n <= m, got m={m}, n={n}")));
        }
        Ok(())
    }

    pub(crate) fn check_element(&self, k: usize, x: &Element) -> Result<()> {
        let s = self.stage(k)?;
        if x.shape() != s {
            return Err(Error::shape(s, x.shape()));
        }
        Ok(())
    }

    /// `ρ_{m,n}`, memoized; `ρ_{n,n}` is the identity.
    pub fn composite(&self, m: usize, n: usize) -> Result<Arc<CpMap>> {
        self.check_order(m, n)?;
        if m == n {
            return Ok(Arc::new(CpMap::identity(&self.stages[n])));
        }
        if let Some(c) = self.composites[m][n].get() {
            return Ok(c.clone());
        }
        let built = if m == n + 1 {
            self.steps[n].clone()
        } else {
            CpMap::compose(&self.steps[m - 1], &*self.composite(m - 1, n)?)?
        };
        Ok(self.composites[m][n].get_or_init(|| Arc::new(built)).clone())
    }

    /// `ρ_{m,n}(x)` by successive application of the steps.
    pub fn push_forward(&self, m: usize, n: usize, x: &Element) -> Result<Element> {
        self.check_order(m, n)?;
        self.check_element(n, x)?;
        let mut cur = x.clone();
        for step in &self.steps[n..m] {
            cur = step.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Every image `ρ_{j,n}(x)` for `j = n..=m`.
    pub fn trajectory(&self, m: usize, n: usize, x: &Element) -> Result<Vec<Element>> {
        self.check_order(m, n)?;
        self.check_element(n, x)?;
        let mut out = Vec::with_capacity(m - n + 1);
        out.push(x.clone());
        for step in &self.steps[n..m] {
            let next = step.apply(out.last().expect("non-empty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// `ρ_{m,n}(1_{F_n})`.
    pub fn unit_image(&self, m: usize, n: usize) -> Result<Element> {
        self.push_forward(m, n, &Element::unit(self.stage(n)?))
    }

    /// True iff every step is unital within `eq_tol`.
    pub fn has_unital_steps(&self) -> bool {
        self.steps.iter().all(|s| s.is_unital(&self.tol))
    }

    /// The system of `r`-fold amplifications `M_r(F_n)` with steps `ρ^{(r)}`.
    pub fn amplified(&self, r: usize) -> Result<InductiveSystem> {
        let stages = self.stages.iter().map(|s| s.amplify(r)).collect::<Result<Vec<_>>>()?;
        let steps = self.steps.iter().map(|s| s.amplify(r)).collect::<Result<Vec<_>>>()?;
        InductiveSystem::new(format!("{}^({r})", self.name), stages, steps, self.tol)
    }

    /// The system restricted to stages `from..=to`, renumbered from zero.
    pub fn truncated(&self, from: usize, to: usize) -> Result<InductiveSystem> {
        self.check_order(to, from)?;
        InductiveSystem::new(
            self.name.clone(),
            self.stages[from..=to].to_vec(),
            self.steps[from..to].to_vec(),
            self.tol,
        )
    }

    /// Same stages and, step by step, action matrices within `tol`.
    pub fn structurally_eq(&self, other: &InductiveSystem, tol: f64) -> bool {
        self.stages == other.stages
            && self.steps.len() == other.steps.len()
            && self.steps.iter().zip(&other.steps).all(|(a, b)| a.max_abs_diff(b) <= tol)
    }
}
