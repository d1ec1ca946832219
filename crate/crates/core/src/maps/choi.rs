use rayon::prelude::*;

use super::{CpMap, MapRepr};
use crate::kernel::Tolerances;
use crate::linalg::{self, CMat};

/// Choi matrix `Σ_pq E_pq ⊗ f(E_pq)` of one domain block, restricted to one
/// codomain block. Row index `p * d + a` for codomain side `d`.
#[derive(Clone, Debug)]
pub struct ChoiBlock {
    pub domain_block: usize,
    pub codomain_block: usize,
    pub matrix: CMat,
    pub min_eigenvalue: f64,
}

/// One Choi block per (domain block, codomain block) pair.
pub fn choi(f: &CpMap) -> Vec<ChoiBlock> {
    let action = match f.repr() {
        MapRepr::Matrix(a) => std::borrow::Cow::Borrowed(a),
        MapRepr::Kraus(_) => std::borrow::Cow::Owned(f.action_matrix()),
    };
    let dom = f.domain().blocks();
    let cod = f.codomain().blocks();
    let dom_off = f.domain().offsets();
    let cod_off = f.codomain().offsets();
    let pairs: Vec<(usize, usize)> = (0..dom.len()).flat_map(|b| (0..cod.len()).map(move |c| (b, c))).collect();
    pairs
        .into_par_iter()
        .map(|(b, c)| {
            let (k, d) = (dom[b], cod[c]);
            let mut m = CMat::zeros(k * d, k * d);
            for q in 0..k {
                for p in 0..k {
                    let col = dom_off[b] + q * k + p;
                    for bb in 0..d {
                        for a in 0..d {
                            m[(p * d + a, q * d + bb)] = action[(cod_off[c] + bb * d + a, col)];
                        }
                    }
                }
            }
            let min_eigenvalue = linalg::hermitian_eigenvalues(&m).first().copied().unwrap_or(0.0);
            ChoiBlock {
                domain_block: b,
                codomain_block: c,
                matrix: m,
                min_eigenvalue,
            }
        })
        .collect()
}

pub(crate) fn blocks_are_psd(blocks: &[ChoiBlock], tol: &Tolerances) -> bool {
    blocks.iter().all(|blk| {
        let side = blk.matrix.nrows().max(1) as f64;
        let scale = if tol.relative {
            (1.0 + linalg::spectral_norm(&blk.matrix)) * side
        } else {
            1.0
        };
        linalg::hermitian_defect_max(&blk.matrix) <= tol.herm_tol * scale && blk.min_eigenvalue >= -tol.psd_tol * scale
    })
}

/// Blockwise Choi criterion. Kraus maps are CP by construction.
pub fn is_completely_positive(f: &CpMap, tol: &Tolerances) -> bool {
    match f.repr() {
        MapRepr::Kraus(_) => true,
        MapRepr::Matrix(_) => blocks_are_psd(&choi(f), tol),
    }
}
