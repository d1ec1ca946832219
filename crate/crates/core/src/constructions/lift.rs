use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element};
use crate::linalg::CMat;
use crate::maps::{CpMap, KrausTerm, MapRepr};
use crate::systems::InductiveSystem;

/// Default cap on the coordinate count of the largest lifted stage.
pub const DEFAULT_MAX_LIFT_DIM: usize = 1 << 20;

/// The system `B_n = F_0 ⊕ … ⊕ F_n` with steps `id_{B_n} ⊕ ρ_{n+1,n}`,
/// where `ρ_{n+1,n}` reads the last summand.
pub fn direct_sum_nf_lift(sys: &InductiveSystem) -> Result<InductiveSystem> {
    direct_sum_nf_lift_capped(sys, DEFAULT_MAX_LIFT_DIM)
}

pub fn direct_sum_nf_lift_capped(sys: &InductiveSystem, max_dim: usize) -> Result<InductiveSystem> {
    let mut b_stages: Vec<AlgebraShape> = vec![sys.stage(0)?.clone()];
    for n in 1..sys.num_stages() {
        let next = b_stages[n - 1].concat(sys.stage(n)?);
        if next.dim() > max_dim {
            return Err(Error::SizeCap(format!("lifted stage {n} has {} coordinates (cap {max_dim})", next.dim())));
        }
        b_stages.push(next);
    }
    let steps = (0..sys.horizon())
        .map(|n| lift_step(&b_stages[n], &b_stages[n + 1], sys.step(n)?, sys.stage(n)?.num_blocks()))
        .collect::<Result<Vec<_>>>()?;
    InductiveSystem::new(format!("nf_lift{{{}}}", sys.name()), b_stages, steps, *sys.tolerances())
}

fn lift_step(from: &AlgebraShape, to: &AlgebraShape, rho: &CpMap, last_blocks: usize) -> Result<CpMap> {
    let nb = from.num_blocks();
    let src0 = nb - last_blocks;
    match rho.repr() {
        MapRepr::Kraus(terms) => {
            let mut out: Vec<KrausTerm> = from
                .blocks()
                .iter()
                .enumerate()
                .map(|(b, &k)| KrausTerm {
                    from: b,
                    to: b,
                    ops: vec![CMat::identity(k, k)],
                })
                .collect();
            out.extend(terms.iter().map(|t| KrausTerm {
                from: src0 + t.from,
                to: nb + t.to,
                ops: t.ops.clone(),
            }));
            CpMap::from_kraus(from.clone(), to.clone(), out)
        }
        MapRepr::Matrix(a) => {
            let d_from = from.dim();
            let mut action = CMat::zeros(to.dim(), d_from);
            action.view_mut((0, 0), (d_from, d_from)).fill_with_identity();
            let col0 = d_from - a.ncols();
            action.view_mut((d_from, col0), (a.nrows(), a.ncols())).copy_from(a);
            CpMap::from_matrix(from.clone(), to.clone(), action)
        }
    }
}

/// `x̂ = 0 ⊕ … ⊕ 0 ⊕ x ∈ B_k` for `x ∈ F_k`.
pub fn lift_element(inner: &InductiveSystem, k: usize, x: &Element) -> Result<Element> {
    let fk = inner.stage(k)?;
    if x.shape() != fk {
        return Err(Error::shape(fk, x.shape()));
    }
    let mut acc: Option<Element> = None;
    for j in 0..k {
        let z = Element::zeros(inner.stage(j)?);
        acc = Some(match acc {
            None => z,
            Some(a) => a.direct_sum(&z),
        });
    }
    Ok(match acc {
        None => x.clone(),
        Some(a) => a.direct_sum(x),
    })
}

/// The `F_j` summand of an element of `B_n`, `j ≤ n`.
pub fn project_summand(inner: &InductiveSystem, b: &Element, j: usize) -> Result<Element> {
    let start: usize = (0..j).map(|i| inner.stage(i).map(|s| s.num_blocks())).sum::<Result<usize>>()?;
    let len = inner.stage(j)?.num_blocks();
    let part = b.sub_sum(start, len)?;
    if part.shape() != inner.stage(j)? {
        return Err(Error::shape(inner.stage(j)?, part.shape()));
    }
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::uhf_system;

    #[test]
    fn lifted_shapes_are_prefix_concatenations() {
        let b = direct_sum_nf_lift(&uhf_system(2, 3).unwrap()).unwrap();
        let shapes: Vec<Vec<usize>> = b.stages().iter().map(|s| s.blocks().to_vec()).collect();
        assert_eq!(shapes, vec![vec![1], vec![1, 2], vec![1, 2, 4], vec![1, 2, 4, 8]]);
    }

    #[test]
    fn last_summand_recovers_inner_composite() {
        let f = uhf_system(2, 3).unwrap();
        let b = direct_sum_nf_lift(&f).unwrap();
        let x = Element::matrix_unit(f.stage(1).unwrap(), 0, 1, 0).unwrap();
        let xh = lift_element(&f, 1, &x).unwrap();
        let img = b.push_forward(3, 1, &xh).unwrap();
        for j in 1..=3 {
            let expected = f.push_forward(j, 1, &x).unwrap();
            assert_eq!(project_summand(&f, &img, j).unwrap(), expected);
        }
        assert!(project_summand(&f, &img, 0).unwrap().is_zero());
    }
}
