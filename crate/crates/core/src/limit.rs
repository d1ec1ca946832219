//! Truncated model of the limit algebra of an inductive system.
//!
//! An element `ρ_k(x)` is a stage `k` with a representative `x ∈ F_k`; all
//! norms are read at a fixed horizon stage `N`. The product
//! `ρ_k(x) • ρ_k(y) = lim_n ρ_n(ρ_{n,k}(x) ρ_{n,k}(y))` is truncated at an
//! inner index `n`: its representative is `ρ_{n,k}(x) ρ_{n,k}(y) ∈ F_n`,
//! whose horizon image is `ρ_{N,n}(ρ_{n,k}(x) ρ_{n,k}(y))`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::Element;
use crate::systems::InductiveSystem;

#[derive(Clone, Debug)]
pub struct LimitElement {
    system: Arc<InductiveSystem>,
    stage: usize,
    rep: Element,
    horizon: usize,
}

impl LimitElement {
    pub fn new(system: Arc<InductiveSystem>, stage: usize, rep: Element, horizon: usize) -> Result<Self> {
        system.stage(horizon)?;
        if stage > horizon {
            return Err(Error::Index(format!("stage {stage} beyond horizon {horizon}")));
        }
        let shape = system.stage(stage)?;
        if rep.shape() != shape {
            return Err(Error::shape(shape, rep.shape()));
        }
        Ok(LimitElement {
            system,
            stage,
            rep,
            horizon,
        })
    }

    /// Horizon defaults to the last stage of the system.
    pub fn at(system: &Arc<InductiveSystem>, stage: usize, rep: Element) -> Result<Self> {
        let horizon = system.horizon();
        Self::new(system.clone(), stage, rep, horizon)
    }

    pub fn system(&self) -> &Arc<InductiveSystem> {
        &self.system
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn rep(&self) -> &Element {
        &self.rep
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `ρ_{N,k}(rep)`.
    pub fn at_horizon(&self) -> Result<Element> {
        self.system.push_forward(self.horizon, self.stage, &self.rep)
    }

    /// The same limit element represented at a later stage `j`.
    pub fn promote(&self, j: usize) -> Result<LimitElement> {
        if j < self.stage || j > self.horizon {
            return Err(Error::Index(format!(
                "cannot promote stage {} to {j} (horizon {})",
                self.stage, self.horizon
            )));
        }
        Ok(LimitElement {
            system: self.system.clone(),
            stage: j,
            rep: self.system.push_forward(j, self.stage, &self.rep)?,
            horizon: self.horizon,
        })
    }

    pub fn adjoint(&self) -> LimitElement {
        LimitElement {
            rep: self.rep.adjoint(),
            ..self.clone()
        }
    }

    /// `α·self + other` after promotion to a common stage.
    pub fn axpy(&self, alpha: Complex64, other: &LimitElement) -> Result<LimitElement> {
        let (a, b) = common_stage(self, other)?;
        Ok(LimitElement {
            rep: a.rep.scale(alpha).add(&b.rep)?,
            ..a
        })
    }

    /// `‖ρ_{N,k}(rep)‖`.
    pub fn norm(&self) -> Result<f64> {
        Ok(self.at_horizon()?.operator_norm())
    }
}

fn common_stage(a: &LimitElement, b: &LimitElement) -> Result<(LimitElement, LimitElement)> {
    if !Arc::ptr_eq(&a.system, &b.system) || a.horizon != b.horizon {
        return Err(Error::SystemMismatch);
    }
    let k = a.stage.max(b.stage);
    Ok((a.promote(k)?, b.promote(k)?))
}

/// `a • b` truncated at inner index `n` (`k < n ≤ N` after promotion to the
/// common stage `k`).
pub fn star_product(a: &LimitElement, b: &LimitElement, n: usize) -> Result<LimitElement> {
    let (a, b) = common_stage(a, b)?;
    let k = a.stage;
    if !(k < n && n <= a.horizon) {
        return Err(Error::Index(format!("need k < n <= N, got k={k}, n={n}, N={}", a.horizon)));
    }
    let an = a.system.push_forward(n, k, &a.rep)?;
    let bn = a.system.push_forward(n, k, &b.rep)?;
    Ok(LimitElement {
        system: a.system.clone(),
        stage: n,
        rep: an.multiply(&bn)?,
        horizon: a.horizon,
    })
}

/// `‖ρ_{N,n'}(1) · ρ_{N,n}(ρ_{n,k}(a) ρ_{n,k}(b)) − ρ_{N,k}(a) ρ_{N,k}(b)‖`
/// with unit index `n'` (`n' ≤ N`).
pub fn mult_id_defect(a: &LimitElement, b: &LimitElement, n: usize, unit_index: usize) -> Result<f64> {
    let prod = star_product(a, b, n)?;
    let (a, b) = common_stage(a, b)?;
    if unit_index > a.horizon {
        return Err(Error::Index(format!("unit index {unit_index} beyond horizon {}", a.horizon)));
    }
    let e = a.system.unit_image(a.horizon, unit_index)?;
    let lhs = e.multiply(&prod.at_horizon()?)?;
    let rhs = a.at_horizon()?.multiply(&b.at_horizon()?)?;
    lhs.distance(&rhs)
}

/// `‖ρ_{N,k}(a) ρ_{N,k}(b) − ρ_{N,n'}(1) · rep(a • b)‖`; the same quantity
/// as [`mult_id_defect`], read as the order-zero identity of the embedding
/// of the limit.
pub fn theta_order_zero_defect(a: &LimitElement, b: &LimitElement, n: usize, unit_index: usize) -> Result<f64> {
    let prod = star_product(a, b, n)?;
    let (a, b) = common_stage(a, b)?;
    if unit_index > a.horizon {
        return Err(Error::Index(format!("unit index {unit_index} beyond horizon {}", a.horizon)));
    }
    let ambient = a.at_horizon()?.multiply(&b.at_horizon()?)?;
    let damped = a.system.unit_image(a.horizon, unit_index)?.multiply(&prod.at_horizon()?)?;
    ambient.distance(&damped)
}

/// `‖(a • b) • c − a • (b • c)‖` at the horizon, with the inner products
/// taken at `inner` and the outer ones at `outer > inner`.
pub fn associativity_defect(
    a: &LimitElement,
    b: &LimitElement,
    c: &LimitElement,
    inner: usize,
    outer: usize,
) -> Result<f64> {
    if outer <= inner {
        return Err(Error::Index(format!("need inner < outer, got {inner} and {outer}")));
    }
    let left = star_product(&star_product(a, b, inner)?, c, outer)?;
    let right = star_product(a, &star_product(b, c, inner)?, outer)?;
    left.at_horizon()?.distance(&right.at_horizon()?)
}

/// `| ‖a* • a‖ − ‖ρ_{N,k}(a)‖² |` at the horizon.
pub fn cstar_identity_defect(a: &LimitElement, n: usize) -> Result<f64> {
    let p = star_product(&a.adjoint(), a, n)?;
    Ok((p.norm()? - a.norm()?.powi(2)).abs())
}

/// Default inner and unit indices `N − 1`.
pub fn default_inner(horizon: usize) -> usize {
    horizon.saturating_sub(1)
}
