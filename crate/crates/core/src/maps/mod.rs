//! Linear maps between shaped algebras.
//!
//! A [`CpMap`] is stored either as a dense action matrix on column-stacked
//! coordinates or as a Kraus family `x ↦ Σ K x K*` per (domain block,
//! codomain block) pair. The Kraus form is what keeps large stages such as
//! `M_256` tractable: its action matrix would have `256⁴` entries.

mod choi;
mod norm;
mod order_zero;

pub use choi::{choi, is_completely_positive, ChoiBlock};
pub use norm::{
    complete_order_embedding_probe, estimate_norm, map_norm_estimate, EmbeddingLevel, EmbeddingReport, NormEstimate,
    NormWitness,
};
pub use order_zero::{
    multiplicativity_defect, order_zero_defect, structure_decomposition, OrderZeroDecomposition, ProbeSpec,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element, Tolerances};
use crate::linalg::{self, CMat, ONE};

/// Kraus operators for one (domain block → codomain block) pair. Each
/// operator is `codomain side × domain side`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausTerm {
    pub from: usize,
    pub to: usize,
    pub ops: Vec<CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapRepr {
    /// `codomain.dim × domain.dim` matrix acting on coordinate vectors.
    Matrix(CMat),
    Kraus(Vec<KrausTerm>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    domain: AlgebraShape,
    codomain: AlgebraShape,
    repr: MapRepr,
}

/// Outcome of validating a map as completely positive and contractive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapVerdict {
    pub is_cp: bool,
    /// `None` for Kraus maps, which are CP by construction.
    pub choi_min_eigenvalue: Option<f64>,
    pub unit_norm: f64,
    pub is_contractive: bool,
}

impl CpMap {
    pub fn from_matrix(domain: AlgebraShape, codomain: AlgebraShape, action: CMat) -> Result<Self> {
        if action.nrows() != codomain.dim() || action.ncols() != domain.dim() {
            return Err(Error::shape(
                format!("{}x{} action matrix", codomain.dim(), domain.dim()),
                format!("{}x{}", action.nrows(), action.ncols()),
            ));
        }
        Ok(CpMap {
            domain,
            codomain,
            repr: MapRepr::Matrix(action),
        })
    }

    pub fn from_kraus(domain: AlgebraShape, codomain: AlgebraShape, terms: Vec<KrausTerm>) -> Result<Self> {
        for (t, term) in terms.iter().enumerate() {
            let from = *domain.blocks().get(term.from).ok_or_else(|| {
                Error::Index(format!("kraus term {t}: domain block {} out of range", term.from))
            })?;
            let to = *codomain.blocks().get(term.to).ok_or_else(|| {
                Error::Index(format!("kraus term {t}: codomain block {} out of range", term.to))
            })?;
            for (i, op) in term.ops.iter().enumerate() {
                if op.nrows() != to || op.ncols() != from {
                    return Err(Error::shape(
                        format!("kraus term {t} op {i} of size {to}x{from}"),
                        format!("{}x{}", op.nrows(), op.ncols()),
                    ));
                }
            }
        }
        Ok(CpMap {
            domain,
            codomain,
            repr: MapRepr::Kraus(terms),
        })
    }

    /// Builds the action matrix by evaluating `f` on every matrix unit.
    pub fn from_fn(domain: AlgebraShape, codomain: AlgebraShape, f: impl Fn(&Element) -> Element) -> Result<Self> {
        let mut action = CMat::zeros(codomain.dim(), domain.dim());
        for (j, e) in domain.matrix_units().iter().enumerate() {
            let img = f(e);
            if img.shape() != &codomain {
                return Err(Error::shape(&codomain, img.shape()));
            }
            for (i, z) in img.to_coords().into_iter().enumerate() {
                action[(i, j)] = z;
            }
        }
        Self::from_matrix(domain, codomain, action)
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let terms = shape
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, &k)| KrausTerm {
                from: b,
                to: b,
                ops: vec![CMat::identity(k, k)],
            })
            .collect();
        CpMap {
            domain: shape.clone(),
            codomain: shape.clone(),
            repr: MapRepr::Kraus(terms),
        }
    }

    pub fn zero(domain: &AlgebraShape, codomain: &AlgebraShape) -> Self {
        CpMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            repr: MapRepr::Kraus(Vec::new()),
        }
    }

    /// `x ↦ c·x`.
    pub fn scalar(shape: &AlgebraShape, c: Complex64) -> Self {
        let d = shape.dim();
        CpMap {
            domain: shape.clone(),
            codomain: shape.clone(),
            repr: MapRepr::Matrix(CMat::identity(d, d) * c),
        }
    }

    /// Blockwise transpose (positive, not completely positive).
    pub fn transpose(shape: &AlgebraShape) -> Self {
        Self::from_fn(shape.clone(), shape.clone(), |x| {
            Element::new(x.shape().clone(), x.blocks().iter().map(|b| b.transpose()).collect()).expect("same shape")
        })
        .expect("transpose preserves shape")
    }

    /// Conditional expectation onto the diagonal of each block.
    pub fn diagonal_expectation(shape: &AlgebraShape) -> Self {
        Self::from_fn(shape.clone(), shape.clone(), |x| {
            let blocks = x
                .blocks()
                .iter()
                .map(|b| CMat::from_fn(b.nrows(), b.ncols(), |i, j| if i == j { b[(i, j)] } else { linalg::ZERO }))
                .collect();
            Element::new(x.shape().clone(), blocks).expect("same shape")
        })
        .expect("expectation preserves shape")
    }

    /// `x ↦ a x a*` on a shape, blockwise.
    pub fn sandwich(a: &Element) -> Self {
        let terms = a
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, m)| KrausTerm {
                from: b,
                to: b,
                ops: vec![m.clone()],
            })
            .collect();
        CpMap {
            domain: a.shape().clone(),
            codomain: a.shape().clone(),
            repr: MapRepr::Kraus(terms),
        }
    }

    pub fn domain(&self) -> &AlgebraShape {
        &self.domain
    }

    pub fn codomain(&self) -> &AlgebraShape {
        &self.codomain
    }

    pub fn repr(&self) -> &MapRepr {
        &self.repr
    }

    pub fn is_kraus(&self) -> bool {
        matches!(self.repr, MapRepr::Kraus(_))
    }

    pub fn apply(&self, a: &Element) -> Result<Element> {
        if a.shape() != &self.domain {
            return Err(Error::shape(&self.domain, a.shape()));
        }
        Ok(match &self.repr {
            MapRepr::Matrix(action) => {
                let v = CMat::from_column_slice(self.domain.dim(), 1, &a.to_coords());
                let w = linalg::matmul(action, &v);
                Element::from_coords(&self.codomain, w.as_slice()).expect("dimensions checked at construction")
            }
            MapRepr::Kraus(terms) => {
                let mut out = Element::zeros(&self.codomain);
                for term in terms {
                    let x = a.block(term.from);
                    if linalg::is_zero(x) {
                        continue;
                    }
                    let acc = out.block_mut(term.to);
                    for k in &term.ops {
                        *acc += linalg::matmul(&linalg::matmul(k, x), &k.adjoint());
                    }
                }
                out
            }
        })
    }

    /// `f(1)`.
    pub fn unit_image(&self) -> Element {
        self.apply(&Element::unit(&self.domain)).expect("unit has domain shape")
    }

    /// Dense action matrix; materialized from the Kraus family when needed.
    pub fn action_matrix(&self) -> CMat {
        match &self.repr {
            MapRepr::Matrix(a) => a.clone(),
            MapRepr::Kraus(terms) => {
                let dom_off = self.domain.offsets();
                let cod_off = self.codomain.offsets();
                let mut action = CMat::zeros(self.codomain.dim(), self.domain.dim());
                for term in terms {
                    let (r0, c0) = (cod_off[term.to], dom_off[term.from]);
                    for k in &term.ops {
                        // vec(K X K*) = (conj(K) ⊗ K) vec(X) for column stacking
                        let block = linalg::kron(&k.map(|z| z.conj()), k);
                        let mut view = action.view_mut((r0, c0), (block.nrows(), block.ncols()));
                        view += &block;
                    }
                }
                action
            }
        }
    }

    /// Same map in matrix form.
    pub fn to_matrix_form(&self) -> CpMap {
        CpMap {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            repr: MapRepr::Matrix(self.action_matrix()),
        }
    }

    /// `f ∘ g`.
    pub fn compose(f: &CpMap, g: &CpMap) -> Result<CpMap> {
        if g.codomain != f.domain {
            return Err(Error::shape(&f.domain, &g.codomain));
        }
        let repr = match (&f.repr, &g.repr) {
            (MapRepr::Kraus(ft), MapRepr::Kraus(gt)) => {
                let mut terms: Vec<KrausTerm> = Vec::new();
                for gterm in gt {
                    for fterm in ft.iter().filter(|t| t.from == gterm.to) {
                        let ops: Vec<CMat> = fterm
                            .ops
                            .iter()
                            .flat_map(|a| gterm.ops.iter().map(move |b| linalg::matmul(a, b)))
                            .filter(|op| !linalg::is_zero(op))
                            .collect();
                        if ops.is_empty() {
                            continue;
                        }
                        match terms.iter_mut().find(|t| t.from == gterm.from && t.to == fterm.to) {
                            Some(t) => t.ops.extend(ops),
                            None => terms.push(KrausTerm {
                                from: gterm.from,
                                to: fterm.to,
                                ops,
                            }),
                        }
                    }
                }
                MapRepr::Kraus(terms)
            }
            _ => MapRepr::Matrix(linalg::matmul(&f.action_matrix(), &g.action_matrix())),
        };
        Ok(CpMap {
            domain: g.domain.clone(),
            codomain: f.codomain.clone(),
            repr,
        })
    }

    /// `f^{(r)}` on `M_r` over the domain, with `r × r` matrices over the
    /// algebra stored as `Σ x_ij ⊗ E_ij`.
    pub fn amplify(&self, r: usize) -> Result<CpMap> {
        let domain = self.domain.amplify(r)?;
        let codomain = self.codomain.amplify(r)?;
        if r == 1 {
            return Ok(self.clone());
        }
        let repr = match &self.repr {
            MapRepr::Kraus(terms) => {
                let id = CMat::identity(r, r);
                MapRepr::Kraus(
                    terms
                        .iter()
                        .map(|t| KrausTerm {
                            from: t.from,
                            to: t.to,
                            ops: t.ops.iter().map(|k| linalg::kron(k, &id)).collect(),
                        })
                        .collect(),
                )
            }
            MapRepr::Matrix(action) => {
                let coords_in = amplified_index_table(&self.domain, r);
                let coords_out = amplified_index_table(&self.codomain, r);
                let mut big = CMat::zeros(codomain.dim(), domain.dim());
                for i in 0..r {
                    for j in 0..r {
                        for (col, &src) in coords_in.iter().enumerate() {
                            for (row, &dst) in coords_out.iter().enumerate() {
                                let v = action[(row, col)];
                                if linalg::is_zero_scalar(v) {
                                    continue;
                                }
                                big[(dst.index(i, j), src.index(i, j))] = v;
                            }
                        }
                    }
                }
                MapRepr::Matrix(big)
            }
        };
        Ok(CpMap { domain, codomain, repr })
    }

    /// CP and contractivity verdicts.
    pub fn verdict(&self, tol: &Tolerances) -> MapVerdict {
        let (is_cp, choi_min_eigenvalue) = match &self.repr {
            MapRepr::Kraus(_) => (true, None),
            MapRepr::Matrix(_) => {
                let blocks = choi(self);
                let min = blocks.iter().map(|b| b.min_eigenvalue).fold(f64::INFINITY, f64::min);
                (choi::blocks_are_psd(&blocks, tol), Some(if blocks.is_empty() { 0.0 } else { min }))
            }
        };
        let unit_norm = self.unit_image().operator_norm();
        MapVerdict {
            is_cp,
            choi_min_eigenvalue,
            unit_norm,
            is_contractive: is_cp && unit_norm <= 1.0 + tol.eq_tol,
        }
    }

    /// Errors unless the map is completely positive and contractive.
    pub fn ensure_cpc(&self, tol: &Tolerances) -> Result<MapVerdict> {
        let v = self.verdict(tol);
        if !v.is_cp {
            return Err(Error::NotCompletelyPositive {
                min_eigenvalue: v.choi_min_eigenvalue.unwrap_or(f64::NAN),
            });
        }
        if !v.is_contractive {
            return Err(Error::NotContractive { norm: v.unit_norm });
        }
        Ok(v)
    }

    /// True iff `‖f(1) − 1‖ ≤ eq_tol` (domain and codomain may differ).
    pub fn is_unital(&self, tol: &Tolerances) -> bool {
        let one = Element::unit(&self.codomain);
        self.unit_image().distance(&one).map(|d| d <= tol.eq_tol).unwrap_or(false)
    }

    /// Largest entrywise difference of the action matrices.
    pub fn max_abs_diff(&self, other: &CpMap) -> f64 {
        if self.domain != other.domain || self.codomain != other.codomain {
            return f64::INFINITY;
        }
        if let (MapRepr::Kraus(a), MapRepr::Kraus(b)) = (&self.repr, &other.repr) {
            if a == b {
                return 0.0;
            }
        }
        let (a, b) = (self.action_matrix(), other.action_matrix());
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

/// Complete positivity is decided blockwise; this checks one map.
pub fn is_contractive_cp(f: &CpMap, tol: &Tolerances) -> Result<bool> {
    if !is_completely_positive(f, tol) {
        let min = choi(f).iter().map(|b| b.min_eigenvalue).fold(f64::INFINITY, f64::min);
        return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
    }
    Ok(f.unit_image().operator_norm() <= 1.0 + tol.eq_tol)
}

pub fn apply(f: &CpMap, a: &Element) -> Result<Element> {
    f.apply(a)
}

pub fn compose(f: &CpMap, g: &CpMap) -> Result<CpMap> {
    CpMap::compose(f, g)
}

pub fn amplify_map(f: &CpMap, r: usize) -> Result<CpMap> {
    f.amplify(r)
}

/// Position of each matrix-unit coordinate of a shape, used to place it
/// inside the `r`-fold amplification.
#[derive(Clone, Copy)]
struct AmpIndex {
    offset: usize,
    side: usize,
    p: usize,
    q: usize,
    r: usize,
}

impl AmpIndex {
    fn index(&self, i: usize, j: usize) -> usize {
        let big = self.side * self.r;
        self.offset + (self.q * self.r + j) * big + (self.p * self.r + i)
    }
}

fn amplified_index_table(shape: &AlgebraShape, r: usize) -> Vec<AmpIndex> {
    let mut out = Vec::with_capacity(shape.dim());
    let mut offset = 0;
    for &k in shape.blocks() {
        for q in 0..k {
            for p in 0..k {
                out.push(AmpIndex { offset, side: k, p, q, r });
            }
        }
        offset += k * k * r * r;
    }
    out
}

/// A map from `A` into `A ⊗ M_b` for single-block `b`-fold tensoring:
/// `x ↦ Σ_i c_i (x ⊗ E_ii)` with weights `c_i ≥ 0`. Unit weights give the
/// unital embedding `x ↦ x ⊗ 1_b`.
pub fn diagonal_tensor_embedding(shape: &AlgebraShape, weights: &[f64]) -> Result<CpMap> {
    let b = weights.len();
    if b == 0 {
        return Err(Error::InvalidParameter("tensor factor must have size >= 1".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight {w} must be finite and >= 0")));
    }
    let codomain = shape.amplify(b)?;
    let terms = shape
        .blocks()
        .iter()
        .enumerate()
        .map(|(blk, &k)| {
            let id = CMat::identity(k, k);
            let ops = weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(i, &w)| {
                    let mut e = CMat::zeros(b, 1);
                    e[(i, 0)] = ONE * w.sqrt();
                    linalg::kron(&id, &e)
                })
                .collect();
            KrausTerm { from: blk, to: blk, ops }
        })
        .collect();
    CpMap::from_kraus(shape.clone(), codomain, terms)
}
