use super::InductiveSystem;
use crate::error::{Error, Result};
use crate::kernel::{Element, Tolerances};

fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Index(what()))
    }
}

fn check_knm(sys: &InductiveSystem, k: usize, n: usize, m: usize) -> Result<()> {
    sys.stage(m)?;
    require(k < n && n < m, || format!("need k < n < m, got k={k}, n={n}, m={m}"))
}

fn product(a: &Element, b: &Element) -> Element {
    a.multiply(b).expect("images of one stage share a shape")
}

/// `ρ_{m,n}(ρ_{n,k}(x) ρ_{n,k}(y))`.
fn pushed_product(sys: &InductiveSystem, k: usize, x: &Element, y: &Element, m: usize, n: usize) -> Result<Element> {
    let xn = sys.push_forward(n, k, x)?;
    let yn = sys.push_forward(n, k, y)?;
    sys.push_forward(m, n, &product(&xn, &yn))
}

/// `ρ_{m,k}(x) ρ_{m,k}(y)`.
fn ambient_product(sys: &InductiveSystem, k: usize, x: &Element, y: &Element, m: usize) -> Result<Element> {
    Ok(product(&sys.push_forward(m, k, x)?, &sys.push_forward(m, k, y)?))
}

/// `‖ρ_{m,l}(1) ρ_{m,n}(ρ_{n,k}(x) ρ_{n,k}(y)) − ρ_{m,k}(x) ρ_{m,k}(y)‖`
/// for `k < n < m` and `k < l < m`.
pub fn cpc_defect(
    sys: &InductiveSystem,
    k: usize,
    x: &Element,
    y: &Element,
    m: usize,
    n: usize,
    l: usize,
) -> Result<f64> {
    check_knm(sys, k, n, m)?;
    require(k < l && l < m, || format!("need k < l < m, got k={k}, l={l}, m={m}"))?;
    sys.check_element(k, x)?;
    sys.check_element(k, y)?;
    let inner = pushed_product(sys, k, x, y, m, n)?;
    let damped = product(&sys.unit_image(m, l)?, &inner);
    damped.distance(&ambient_product(sys, k, x, y, m)?)
}

/// `‖ρ_{m,n}(ρ_{n,k}(x) ρ_{n,k}(y)) − ρ_{m,k}(x) ρ_{m,k}(y)‖` for `k < n < m`.
pub fn nf_defect(sys: &InductiveSystem, k: usize, x: &Element, y: &Element, m: usize, n: usize) -> Result<f64> {
    check_knm(sys, k, n, m)?;
    sys.check_element(k, x)?;
    sys.check_element(k, y)?;
    pushed_product(sys, k, x, y, m, n)?.distance(&ambient_product(sys, k, x, y, m)?)
}

/// `‖ρ_{m,n}(1) ρ_{m,k}(x) − ρ_{m,k}(x) ρ_{m,n}(1)‖` for `k < n < m`.
pub fn commutator_defect(sys: &InductiveSystem, k: usize, x: &Element, m: usize, n: usize) -> Result<f64> {
    check_knm(sys, k, n, m)?;
    sys.check_element(k, x)?;
    let e = sys.unit_image(m, n)?;
    let xm = sys.push_forward(m, k, x)?;
    product(&e, &xm).distance(&product(&xm, &e))
}

/// Minimum eigenvalue of `‖ρ_{n,k}(x)‖ ρ_{m,n}(1) − ρ_{m,k}(x)` for
/// self-adjoint `x` and `k ≤ n ≤ m`. Nonnegative for any c.p. system.
pub fn order_unit_domination_margin(
    sys: &InductiveSystem,
    k: usize,
    x: &Element,
    m: usize,
    n: usize,
    tol: &Tolerances,
) -> Result<f64> {
    sys.check_order(m, n)?;
    require(k <= n, || format!("need k <= n, got k={k}, n={n}"))?;
    sys.check_element(k, x)?;
    let defect = x.hermitian_defect();
    if defect > tol.effective_herm(x) {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let xn = sys.push_forward(n, k, x)?;
    let xm = sys.push_forward(m, n, &xn)?;
    let e = sys.unit_image(m, n)?;
    Ok(e.scale_real(xn.operator_norm()).sub(&xm)?.min_eigenvalue())
}

/// True iff `‖ρ_{n,k}(x)‖ ρ_{m,n}(1) ≥ ρ_{m,k}(x)` up to `psd_tol`.
pub fn order_unit_domination_check(
    sys: &InductiveSystem,
    k: usize,
    x: &Element,
    m: usize,
    n: usize,
    tol: &Tolerances,
) -> Result<bool> {
    let margin = order_unit_domination_margin(sys, k, x, m, n, tol)?;
    let scale = if tol.relative {
        (1.0 + x.operator_norm()) * sys.stage(m)?.max_side() as f64
    } else {
        1.0
    };
    Ok(margin >= -tol.psd_tol * scale)
}

/// Ratios `‖ρ_{m,n}(1)^j ρ_{m,k}(x)‖ / ‖ρ_{m,k}(x)‖` for each `(m, n)`.
pub fn nondegeneracy_profile(
    sys: &InductiveSystem,
    k: usize,
    x: &Element,
    j: usize,
    pairs: &[(usize, usize)],
    tol: &Tolerances,
) -> Result<Vec<(usize, usize, f64)>> {
    if j == 0 {
        return Err(Error::InvalidParameter("power j must be >= 1".into()));
    }
    sys.check_element(k, x)?;
    pairs
        .iter()
        .map(|&(m, n)| {
            check_knm(sys, k, n, m)?;
            let xm = sys.push_forward(m, k, x)?;
            let denom = xm.operator_norm();
            if denom < tol.eq_tol {
                return Err(Error::DegenerateNorm(denom));
            }
            let e = sys.unit_image(m, n)?;
            let mut acc = xm;
            for _ in 0..j {
                acc = product(&e, &acc);
            }
            Ok((m, n, acc.operator_norm() / denom))
        })
        .collect()
}

/// `‖ρ_{m,n}(1) ρ_{m,k}(x) ρ_{m,k}(y) − ρ_{m,k}(x) ρ_{m,k}(y)‖` for `k < n < m`.
pub fn approx_identity_defect(
    sys: &InductiveSystem,
    k: usize,
    x: &Element,
    y: &Element,
    n: usize,
    m: usize,
) -> Result<f64> {
    check_knm(sys, k, n, m)?;
    sys.check_element(k, x)?;
    sys.check_element(k, y)?;
    let p = ambient_product(sys, k, x, y, m)?;
    product(&sys.unit_image(m, n)?, &p).distance(&p)
}

/// `‖ρ_{m,n}(lift[n]) − lift[m]‖` for `n < m`.
pub fn lift_coherence_defect(sys: &InductiveSystem, lift: &[Element], m: usize, n: usize) -> Result<f64> {
    sys.check_order(m, n)?;
    require(n < m, || format!("need n < m, got n={n}, m={m}"))?;
    require(lift.len() > m, || format!("lift has {} entries, need stage {m}", lift.len()))?;
    sys.check_element(n, &lift[n])?;
    sys.check_element(m, &lift[m])?;
    sys.push_forward(m, n, &lift[n])?.distance(&lift[m])
}

/// Stage-`horizon` representative `ρ_{N,n}(ρ_{n,k}(x) ρ_{n,k}(y))` of the
/// limit product with inner index `n`, for `k < n ≤ N`.
pub fn product_at(
    sys: &InductiveSystem,
    k: usize,
    x: &Element,
    y: &Element,
    n: usize,
    horizon: usize,
) -> Result<Element> {
    sys.stage(horizon)?;
    require(k < n && n <= horizon, || format!("need k < n <= N, got k={k}, n={n}, N={horizon}"))?;
    sys.check_element(k, x)?;
    sys.check_element(k, y)?;
    pushed_product(sys, k, x, y, horizon, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormProfile {
    pub entries: Vec<(usize, f64)>,
    /// Each norm is at most the previous one plus `eq_tol`.
    pub non_increasing: bool,
}

/// `‖ρ_{m,k}(x)‖` for the requested stages `m ≥ k`, in increasing order.
pub fn limit_norm_profile(
    sys: &InductiveSystem,
    k: usize,
    x: &Element,
    stages: &[usize],
    tol: &Tolerances,
) -> Result<NormProfile> {
    let mut sorted = stages.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let last = match sorted.last() {
        Some(&m) => m,
        None => {
            return Ok(NormProfile {
                entries: Vec::new(),
                non_increasing: true,
            })
        }
    };
    require(sorted[0] >= k, || format!("stages must be >= k={k}"))?;
    let traj = sys.trajectory(last, k, x)?;
    let entries: Vec<(usize, f64)> = sorted.iter().map(|&m| (m, traj[m - k].operator_norm())).collect();
    let non_increasing = entries.windows(2).all(|w| w[1].1 <= w[0].1 + tol.eq_tol);
    Ok(NormProfile { entries, non_increasing })
}
