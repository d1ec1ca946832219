//! Subsystem selection for systems of c.p.c. approximations: the summable
//! subsystem and the inductive choice of indices making the associated
//! system asymptotically order zero.
//!
//! Both searches are greedy: stages are scanned in increasing order and the
//! first index passing every inequality is taken, without backtracking.

use std::fmt;

use rayon::prelude::*;

use super::cpap::{CpapSystem, UnitPolicy};
use crate::error::{Error, Result};
use crate::kernel::Element;
use crate::maps::estimate_norm;
use crate::random;
use crate::systems::InductiveSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Inequality {
    /// `‖φ_e − φ_l ∘ ψ_l ∘ φ_e‖ < ε_l` for stages `e < l` (estimated norm).
    Summable { earlier: usize, later: usize },
    /// `max_{k<n} ‖ψ_m(φ_{j_{n−1}}(1)) ψ_m(a_k) − h_m ψ_m(a_k)‖ < ε_{n−1}`.
    UnitCompression { m: usize },
    /// `max_{k≤n} ‖φ_{j_n}(1) a_k − a_k‖ < ε_n / 2`.
    ApproximateUnit,
    /// `‖φ_{j_n}(ψ_{j_n}(φ_{j_{n−1}}(1)^i)) − φ_{j_{n−1}}(1)^i‖ < ε_n² / 3`.
    UnitPower { i: u32 },
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inequality::Summable { earlier, later } => write!(f, "summable(earlier={earlier}, later={later})"),
            Inequality::UnitCompression { m } => write!(f, "unit-compression(m={m})"),
            Inequality::ApproximateUnit => write!(f, "approximate-unit"),
            Inequality::UnitPower { i } => write!(f, "unit-power(i={i})"),
        }
    }
}

/// One checked inequality: `factor · value < bound`, `slack = bound − factor · value`.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// Position `n` in the schedule.
    pub position: usize,
    /// Stage index `j_n` selected at that position.
    pub index: usize,
    pub inequality: Inequality,
    pub value: f64,
    pub factor: f64,
    pub bound: f64,
    pub slack: f64,
}

impl Certificate {
    fn new(position: usize, index: usize, inequality: Inequality, value: f64, factor: f64, bound: f64) -> Self {
        Certificate {
            position,
            index,
            inequality,
            value,
            factor,
            bound,
            slack: bound - factor * value,
        }
    }

    pub fn holds(&self) -> bool {
        self.factor * self.value < self.bound
    }

    fn describe(&self) -> String {
        format!(
            "{} at position {} (stage {}): value {:.6e}{} >= bound {:.6e}",
            self.inequality,
            self.position,
            self.index,
            self.value,
            if self.factor != 1.0 { format!(" x{}", self.factor) } else { String::new() },
            self.bound
        )
    }
}

/// Evaluation context recorded with a schedule so it can be re-checked.
#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    Summable { safety: f64, samples: usize, seed: u64 },
    CpcStar { policy: UnitPolicy },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemSchedule {
    pub indices: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub certificates: Vec<Certificate>,
    pub kind: ScheduleKind,
}

impl SubsystemSchedule {
    pub fn min_slack(&self) -> f64 {
        self.certificates.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummableOptions {
    /// Multiplier applied to the (lower-bound) norm estimates.
    pub safety: f64,
    pub samples: usize,
    pub seed: u64,
    /// Fewer selected stages than this is reported as infeasible.
    pub min_length: usize,
}

impl Default for SummableOptions {
    fn default() -> Self {
        SummableOptions {
            safety: 2.0,
            samples: 8,
            seed: 0,
            min_length: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractOptions {
    pub policy: UnitPolicy,
    /// Bound on the order-zero defect of the last downwards map on probes.
    pub order_zero_threshold: f64,
    /// Schedule length; defaults to `min(#epsilons, #stages)`.
    pub target_len: Option<usize>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            policy: UnitPolicy::AlgebraUnit,
            order_zero_threshold: 1e-6,
            target_len: None,
        }
    }
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidParameter("need at least one epsilon".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon {e} must be finite and > 0")));
    }
    if eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("epsilons must be non-increasing".into()));
    }
    Ok(())
}

/// Estimated `‖φ_e − φ_l ∘ ψ_l ∘ φ_e‖`.
pub fn summability_estimate(cpap: &CpapSystem, earlier: usize, later: usize, samples: usize, seed: u64) -> f64 {
    let (pe, pl, sl) = (cpap.phi(earlier), cpap.phi(later), cpap.psi(later));
    estimate_norm(
        &cpap.stages()[earlier],
        samples,
        random::derive_seed(seed, &[earlier as u64, later as u64]),
        |x| {
            let a = pe.apply(x).expect("stage shape");
            let back = pl.apply(&sl.apply(&a).expect("algebra shape")).expect("stage shape");
            a.distance(&back).expect("algebra shape")
        },
    )
    .value
}

/// Greedy summable subsystem: `n_0 = 0`, then the first `c` with
/// `safety · ‖φ_{n_k} − φ_c ψ_c φ_{n_k}‖ < ε_c` for every earlier `n_k`.
/// Epsilons are indexed by stage, so only stages `< #epsilons` are used.
pub fn make_summable(cpap: &CpapSystem, epsilons: &[f64], opts: &SummableOptions) -> Result<SubsystemSchedule> {
    check_epsilons(epsilons)?;
    if cpap.num_stages() < 2 {
        return Err(Error::InvalidParameter("need at least 2 stages".into()));
    }
    if !(opts.safety >= 1.0) {
        return Err(Error::InvalidParameter(format!("safety factor {} must be >= 1", opts.safety)));
    }
    let usable = cpap.num_stages().min(epsilons.len());
    let mut indices = vec![0usize];
    let mut certificates = Vec::new();
    let mut first_failure: Option<(usize, String)> = None;
    let mut next = 1;
    while next < usable {
        let position = indices.len();
        let mut accepted = None;
        for c in next..usable {
            let certs: Vec<Certificate> = indices
                .par_iter()
                .map(|&e| {
                    let v = summability_estimate(cpap, e, c, opts.samples, opts.seed);
                    Certificate::new(position, c, Inequality::Summable { earlier: e, later: c }, v, opts.safety, epsilons[c])
                })
                .collect();
            match certs.iter().find(|c| !c.holds()) {
                Some(bad) => {
                    if first_failure.is_none() {
                        first_failure = Some((position, bad.describe()));
                    }
                }
                None => {
                    accepted = Some((c, certs));
                    break;
                }
            }
        }
        match accepted {
            Some((c, certs)) => {
                indices.push(c);
                certificates.extend(certs);
                next = c + 1;
            }
            None => break,
        }
    }
    if indices.len() < opts.min_length {
        let (step, requirement) = first_failure.unwrap_or((indices.len(), "not enough stages".into()));
        return Err(Error::Infeasible { step, requirement });
    }
    Ok(SubsystemSchedule {
        indices,
        epsilons: epsilons.to_vec(),
        certificates,
        kind: ScheduleKind::Summable {
            safety: opts.safety,
            samples: opts.samples,
            seed: opts.seed,
        },
    })
}

/// Cached quantities for the inductive index choice.
struct Ctx<'a> {
    cpap: &'a CpapSystem,
    phi_one: Vec<Element>,
    h: Vec<Element>,
    psi_probe: Vec<Vec<Element>>,
}

impl<'a> Ctx<'a> {
    fn new(cpap: &'a CpapSystem, policy: &UnitPolicy) -> Result<Self> {
        let s = cpap.num_stages();
        let phi_one = (0..s).map(|j| Ok(cpap.phi(j).unit_image())).collect::<Result<Vec<_>>>()?;
        let h = (0..s).map(|m| cpap.h(m, policy)).collect::<Result<Vec<_>>>()?;
        let psi_probe = (0..s)
            .into_par_iter()
            .map(|m| cpap.probes().iter().map(|a| cpap.psi(m).apply(a)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Ctx {
            cpap,
            phi_one,
            h,
            psi_probe,
        })
    }

    fn probe_count(&self) -> usize {
        self.cpap.probes().len()
    }

    /// `max_{k < n} ‖ψ_m(φ_prev(1)) ψ_m(a_k) − h_m ψ_m(a_k)‖`.
    fn unit_compression(&self, n: usize, prev: usize, m: usize) -> Result<f64> {
        let e = self.cpap.psi(m).apply(&self.phi_one[prev])?;
        let mut worst: f64 = 0.0;
        for k in 0..n.min(self.probe_count()) {
            let x = &self.psi_probe[m][k];
            worst = worst.max(e.multiply(x)?.distance(&self.h[m].multiply(x)?)?);
        }
        Ok(worst)
    }

    /// `max_{k ≤ n} ‖φ_j(1) a_k − a_k‖`.
    fn approximate_unit(&self, n: usize, j: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for a in self.cpap.probes().iter().take((n + 1).min(self.probe_count())) {
            worst = worst.max(self.phi_one[j].multiply(a)?.distance(a)?);
        }
        Ok(worst)
    }

    /// `‖φ_j(ψ_j(φ_prev(1)^i)) − φ_prev(1)^i‖`.
    fn unit_power(&self, i: u32, prev: usize, j: usize) -> Result<f64> {
        let mut p = self.phi_one[prev].clone();
        for _ in 1..i {
            p = p.multiply(&self.phi_one[prev])?;
        }
        self.cpap.phi(j).apply(&self.cpap.psi(j).apply(&p)?)?.distance(&p)
    }

    /// Every certificate for choosing stage `j` at position `n ≥ 1`.
    fn certificates(&self, n: usize, prev: usize, j: usize, eps: &[f64]) -> Result<Vec<Certificate>> {
        let last = self.cpap.num_stages() - 1;
        let mut out = (j..=last)
            .into_par_iter()
            .map(|m| {
                let v = self.unit_compression(n, prev, m)?;
                Ok(Certificate::new(n, j, Inequality::UnitCompression { m }, v, 1.0, eps[n - 1]))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Certificate::new(
            n,
            j,
            Inequality::ApproximateUnit,
            self.approximate_unit(n, j)?,
            1.0,
            eps[n] / 2.0,
        ));
        for i in [1u32, 2] {
            out.push(Certificate::new(
                n,
                j,
                Inequality::UnitPower { i },
                self.unit_power(i, prev, j)?,
                1.0,
                eps[n] * eps[n] / 3.0,
            ));
        }
        Ok(out)
    }
}

/// Order-zero defect of `ψ_m` on probe pairs, damped by `h_m`.
fn probe_order_zero_defect(cpap: &CpapSystem, m: usize, h: &Element) -> Result<f64> {
    let probes = cpap.probes();
    let images = probes.iter().map(|a| cpap.psi(m).apply(a)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in probes.iter().enumerate() {
        for (j, b) in probes.iter().enumerate() {
            let ab = cpap.psi(m).apply(&a.multiply(b)?)?;
            worst = worst.max(images[i].multiply(&images[j])?.distance(&h.multiply(&ab)?)?);
        }
    }
    Ok(worst)
}

/// Inductive index choice `j_0 < j_1 < …` and the associated subsystem
/// `(F_{j_n}, ψ_{j_{n+1}} ∘ φ_{j_n})`.
pub fn extract_cpcstar_subsystem(
    cpap: &CpapSystem,
    epsilons: &[f64],
    opts: &ExtractOptions,
) -> Result<(SubsystemSchedule, InductiveSystem)> {
    check_epsilons(epsilons)?;
    let stages = cpap.num_stages();
    let target = opts.target_len.unwrap_or(stages.min(epsilons.len()));
    if target == 0 || target > epsilons.len() {
        return Err(Error::InvalidParameter(format!(
            "target length {target} must be in 1..={}",
            epsilons.len()
        )));
    }
    let ctx = Ctx::new(cpap, &opts.policy)?;
    let last = stages - 1;
    let oz = probe_order_zero_defect(cpap, last, &ctx.h[last])?;
    if oz > opts.order_zero_threshold {
        return Err(Error::OrderZeroThreshold {
            defect: oz,
            threshold: opts.order_zero_threshold,
        });
    }

    let mut certificates = Vec::new();
    let mut indices = Vec::with_capacity(target);

    let mut first = None;
    let mut failure = None;
    for j in 0..stages {
        let c = Certificate::new(0, j, Inequality::ApproximateUnit, ctx.approximate_unit(0, j)?, 1.0, epsilons[0] / 2.0);
        if c.holds() {
            first = Some((j, c));
            break;
        }
        failure.get_or_insert_with(|| c.describe());
    }
    let (j0, c0) = first.ok_or_else(|| Error::Infeasible {
        step: 0,
        requirement: failure.unwrap_or_else(|| "no stages".into()),
    })?;
    indices.push(j0);
    certificates.push(c0);

    for n in 1..target {
        let prev = *indices.last().expect("non-empty");
        let mut chosen = None;
        let mut failure = None;
        for j in prev + 1..stages {
            let certs = ctx.certificates(n, prev, j, epsilons)?;
            match certs.iter().find(|c| !c.holds()) {
                Some(bad) => {
                    failure.get_or_insert_with(|| bad.describe());
                }
                None => {
                    chosen = Some((j, certs));
                    break;
                }
            }
        }
        match chosen {
            Some((j, certs)) => {
                indices.push(j);
                certificates.extend(certs);
            }
            None => {
                return Err(Error::Infeasible {
                    step: n,
                    requirement: failure.unwrap_or_else(|| format!("no stage after {prev} left")),
                })
            }
        }
    }

    let sub = cpap.subsystem(&indices)?;
    let system = if indices.len() >= 2 {
        sub.associated_system()?
    } else {
        InductiveSystem::new(sub.name().to_string(), sub.stages().to_vec(), Vec::new(), *cpap.tolerances())?
    };
    Ok((
        SubsystemSchedule {
            indices,
            epsilons: epsilons.to_vec(),
            certificates,
            kind: ScheduleKind::CpcStar {
                policy: opts.policy.clone(),
            },
        },
        system,
    ))
}

/// Result of re-evaluating every certificate of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub checked: usize,
    pub failures: Vec<String>,
    pub min_slack: f64,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Recomputes each certificate from the CPAP data and checks it again,
/// together with strict monotonicity of the indices.
pub fn verify_schedule(cpap: &CpapSystem, schedule: &SubsystemSchedule) -> Result<Verification> {
    let mut failures = Vec::new();
    if schedule.indices.windows(2).any(|w| w[1] <= w[0]) {
        failures.push("indices are not strictly increasing".to_string());
    }
    let ctx = match &schedule.kind {
        ScheduleKind::CpcStar { policy } => Some(Ctx::new(cpap, policy)?),
        ScheduleKind::Summable { .. } => None,
    };
    let eps = &schedule.epsilons;
    let results = schedule
        .certificates
        .par_iter()
        .map(|c| -> Result<Certificate> {
            let prev = if c.position > 0 {
                schedule.indices.get(c.position - 1).copied()
            } else {
                None
            };
            let (value, factor, bound) = match (&schedule.kind, c.inequality) {
                (ScheduleKind::Summable { safety, samples, seed }, Inequality::Summable { earlier, later }) => {
                    (summability_estimate(cpap, earlier, later, *samples, *seed), *safety, eps[later])
                }
                (ScheduleKind::CpcStar { .. }, ineq) => {
                    let ctx = ctx.as_ref().expect("built for this kind");
                    match ineq {
                        Inequality::ApproximateUnit => (ctx.approximate_unit(c.position, c.index)?, 1.0, eps[c.position] / 2.0),
                        Inequality::UnitCompression { m } => {
                            let prev = prev.ok_or_else(|| Error::Index("certificate without predecessor".into()))?;
                            (ctx.unit_compression(c.position, prev, m)?, 1.0, eps[c.position - 1])
                        }
                        Inequality::UnitPower { i } => {
                            let prev = prev.ok_or_else(|| Error::Index("certificate without predecessor".into()))?;
                            (ctx.unit_power(i, prev, c.index)?, 1.0, eps[c.position] * eps[c.position] / 3.0)
                        }
                        Inequality::Summable { .. } => {
                            return Err(Error::InvalidParameter("summable certificate in a CPC* schedule".into()))
                        }
                    }
                }
                (ScheduleKind::Summable { .. }, _) => {
                    return Err(Error::InvalidParameter("foreign certificate in a summable schedule".into()))
                }
            };
            Ok(Certificate::new(c.position, c.index, c.inequality, value, factor, bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut min_slack = f64::INFINITY;
    for (orig, re) in schedule.certificates.iter().zip(&results) {
        min_slack = min_slack.min(re.slack);
        if !re.holds() || re.slack < 0.0 {
            failures.push(re.describe());
        }
        if schedule.indices.get(orig.position) != Some(&orig.index) {
            failures.push(format!("certificate for position {} names stage {}", orig.position, orig.index));
        }
    }
    Ok(Verification {
        checked: results.len(),
        failures,
        min_slack,
    })
}
