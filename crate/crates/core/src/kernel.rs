//! Finite-dimensional C*-algebras `⊕ᵢ M_{kᵢ}` and their elements.
//!
//! An [`Element`] is stored block by block; a direct sum is never expanded
//! into one large matrix. Matrix amplification `M_r(⊕ M_k) ≅ ⊕ M_{rk}` uses
//! the Kronecker ordering `a ⊗ 1_r`: row index `p * r + i` where `p` indexes
//! the element and `i` the amplification.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ONE, ZERO};

/// Ordered list of matrix block sizes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraShape {
    blocks: Vec<usize>,
}

impl AlgebraShape {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidShape("shape needs at least one block".into()));
        }
        if let Some(pos) = blocks.iter().position(|&k| k == 0) {
            return Err(Error::InvalidShape(format!("block {pos} has size 0")));
        }
        Ok(AlgebraShape { blocks })
    }

    /// `M_k`.
    pub fn full(k: usize) -> Result<Self> {
        Self::new(vec![k])
    }

    /// `ℂ^n`, i.e. `n` blocks of size one.
    pub fn commutative(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Total coordinate count `Σ kᵢ²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|k| k * k).sum()
    }

    pub fn max_side(&self) -> usize {
        self.blocks.iter().copied().max().unwrap_or(0)
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&k| k == 1)
    }

    /// Offset of each block inside the stacked coordinate vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|k| {
                let o = acc;
                acc += k * k;
                o
            })
            .collect()
    }

    pub fn amplify(&self, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::ZeroAmplification);
        }
        Ok(AlgebraShape {
            blocks: self.blocks.iter().map(|k| k * r).collect(),
        })
    }

    /// Direct sum `self ⊕ other`.
    pub fn concat(&self, other: &AlgebraShape) -> AlgebraShape {
        let mut blocks = self.blocks.clone();
        blocks.extend_from_slice(&other.blocks);
        AlgebraShape { blocks }
    }

    /// Every matrix unit `E_{pq}` of every block, in coordinate order
    /// (block by block, column-stacked inside each block).
    pub fn matrix_units(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(self.dim());
        for (b, &k) in self.blocks.iter().enumerate() {
            for q in 0..k {
                for p in 0..k {
                    out.push(Element::matrix_unit(self, b, p, q).expect("in range"));
                }
            }
        }
        out
    }

    /// A real basis of the self-adjoint part: `E_pp`, `E_pq + E_qp` and
    /// `i(E_pq - E_qp)` for `p < q`.
    pub fn hermitian_units(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(self.dim());
        for (b, &k) in self.blocks.iter().enumerate() {
            for p in 0..k {
                for q in p..k {
                    if p == q {
                        out.push(Element::matrix_unit(self, b, p, p).expect("in range"));
                        continue;
                    }
                    let mut sym = Element::zeros(self);
                    sym.blocks[b][(p, q)] = ONE;
                    sym.blocks[b][(q, p)] = ONE;
                    out.push(sym);
                    let mut anti = Element::zeros(self);
                    anti.blocks[b][(p, q)] = Complex64::new(0.0, 1.0);
                    anti.blocks[b][(q, p)] = Complex64::new(0.0, -1.0);
                    out.push(anti);
                }
            }
        }
        out
    }
}

impl fmt::Display for AlgebraShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, k) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "]")
    }
}

/// Slack policy for floating-point positivity and equality checks.
///
/// With `relative` set, `herm_tol` and `psd_tol` are multiplied by
/// `(1 + ‖a‖) · side` where `side` is the largest block side of the element
/// under test.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub psd_tol: f64,
    pub eq_tol: f64,
    pub relative: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm_tol: 1e-9,
            psd_tol: 1e-9,
            eq_tol: 1e-9,
            relative: true,
        }
    }
}

impl Tolerances {
    /// Fixed thresholds, no size scaling.
    pub fn absolute(herm_tol: f64, psd_tol: f64, eq_tol: f64) -> Result<Self> {
        let t = Tolerances {
            herm_tol,
            psd_tol,
            eq_tol,
            relative: false,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("herm_tol", self.herm_tol), ("psd_tol", self.psd_tol), ("eq_tol", self.eq_tol)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn scale_for(&self, a: &Element) -> f64 {
        if self.relative {
            (1.0 + a.operator_norm()) * a.shape().max_side() as f64
        } else {
            1.0
        }
    }

    pub fn effective_herm(&self, a: &Element) -> f64 {
        self.herm_tol * self.scale_for(a)
    }

    pub fn effective_psd(&self, a: &Element) -> f64 {
        self.psd_tol * self.scale_for(a)
    }
}

/// Block-diagonal element of a shaped algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    shape: AlgebraShape,
    blocks: Vec<CMat>,
}

impl Element {
    pub fn new(shape: AlgebraShape, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != shape.num_blocks() {
            return Err(Error::shape(
                format!("{} blocks", shape.num_blocks()),
                format!("{} blocks", blocks.len()),
            ));
        }
        for (i, (b, &k)) in blocks.iter().zip(shape.blocks()).enumerate() {
            if b.nrows() != k || b.ncols() != k {
                return Err(Error::shape(
                    format!("block {i} of side {k}"),
                    format!("{}x{}", b.nrows(), b.ncols()),
                ));
            }
        }
        Ok(Element { shape, blocks })
    }

    /// Builds an element whose shape is read off the (square) blocks.
    pub fn from_blocks(blocks: Vec<CMat>) -> Result<Self> {
        let sides = blocks.iter().map(|b| b.nrows()).collect();
        Self::new(AlgebraShape::new(sides)?, blocks)
    }

    pub fn zeros(shape: &AlgebraShape) -> Self {
        Element {
            shape: shape.clone(),
            blocks: shape.blocks().iter().map(|&k| CMat::zeros(k, k)).collect(),
        }
    }

    /// The unit `1_F`: an identity matrix in each block.
    pub fn unit(shape: &AlgebraShape) -> Self {
        Element {
            shape: shape.clone(),
            blocks: shape.blocks().iter().map(|&k| CMat::identity(k, k)).collect(),
        }
    }

    pub fn matrix_unit(shape: &AlgebraShape, block: usize, p: usize, q: usize) -> Result<Self> {
        let k = *shape
            .blocks()
            .get(block)
            .ok_or_else(|| Error::Index(format!("block {block} out of range for shape {shape}")))?;
        if p >= k || q >= k {
            return Err(Error::Index(format!("entry ({p},{q}) outside block of side {k}")));
        }
        let mut e = Self::zeros(shape);
        e.blocks[block][(p, q)] = ONE;
        Ok(e)
    }

    /// Commutative element `(v_0, ..., v_{n-1}) ∈ ℂ^n`.
    pub fn diagonal(values: &[Complex64]) -> Result<Self> {
        let shape = AlgebraShape::commutative(values.len())?;
        let blocks = values.iter().map(|&v| CMat::from_element(1, 1, v)).collect();
        Ok(Element { shape, blocks })
    }

    pub fn from_real_values(values: &[f64]) -> Result<Self> {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(&v)
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut CMat {
        &mut self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    /// Column-stacked coordinates, blocks concatenated in shape order.
    pub fn to_coords(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.shape.dim());
        for b in &self.blocks {
            out.extend_from_slice(b.as_slice());
        }
        out
    }

    pub fn from_coords(shape: &AlgebraShape, coords: &[Complex64]) -> Result<Self> {
        if coords.len() != shape.dim() {
            return Err(Error::shape(
                format!("{} coordinates", shape.dim()),
                format!("{} coordinates", coords.len()),
            ));
        }
        let mut blocks = Vec::with_capacity(shape.num_blocks());
        let mut off = 0;
        for &k in shape.blocks() {
            blocks.push(CMat::from_column_slice(k, k, &coords[off..off + k * k]));
            off += k * k;
        }
        Ok(Element {
            shape: shape.clone(),
            blocks,
        })
    }

    fn check_same_shape(&self, other: &Element) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(&self.shape, &other.shape));
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Element, f: impl Fn(&CMat, &CMat) -> CMat) -> Element {
        Element {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Element {
        Element {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Element {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Blockwise matrix product.
    pub fn multiply(&self, other: &Element) -> Result<Element> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, linalg::matmul))
    }

    /// Blockwise conjugate transpose.
    pub fn adjoint(&self) -> Element {
        Element {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn operator_norm(&self) -> f64 {
        self.blocks.iter().map(linalg::spectral_norm).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(linalg::is_zero)
    }

    /// `‖a - a*‖`.
    pub fn hermitian_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                if linalg::hermitian_defect_max(b) == 0.0 {
                    0.0
                } else {
                    linalg::spectral_norm(&(b - b.adjoint()))
                }
            })
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part across all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| linalg::hermitian_eigenvalues(b).first().copied().unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_self_adjoint(&self, tol: &Tolerances) -> bool {
        self.hermitian_defect() <= tol.effective_herm(self)
    }

    pub fn is_positive(&self, tol: &Tolerances) -> bool {
        self.is_self_adjoint(tol) && self.min_eigenvalue() >= -tol.effective_psd(self)
    }

    /// Positive square root via the Hermitian spectral decomposition, with
    /// eigenvalues below zero clamped.
    pub fn positive_sqrt(&self, tol: &Tolerances) -> Result<Element> {
        if !self.is_positive(tol) {
            return Err(Error::NotPositive {
                min_eigenvalue: self.min_eigenvalue(),
                hermitian_defect: self.hermitian_defect(),
            });
        }
        Ok(self.map_hermitian(|x| x.max(0.0).sqrt()))
    }

    /// Applies `f` to the spectrum of the Hermitian part of each block.
    pub fn map_hermitian(&self, f: impl Fn(f64) -> f64 + Copy) -> Element {
        Element {
            shape: self.shape.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    if b.nrows() == 1 {
                        CMat::from_element(1, 1, Complex64::new(f(b[(0, 0)].re), 0.0))
                    } else {
                        linalg::hermitian_function(b, f)
                    }
                })
                .collect(),
        }
    }

    /// `a ⊗ 1_r` in every block.
    pub fn amplify(&self, r: usize) -> Result<Element> {
        let shape = self.shape.amplify(r)?;
        let id = CMat::identity(r, r);
        let blocks = self.blocks.iter().map(|b| linalg::kron(b, &id)).collect();
        Ok(Element { shape, blocks })
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Element) -> Element {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Element {
            shape: self.shape.concat(&other.shape),
            blocks,
        }
    }

    /// The summand occupying blocks `start..start + len`.
    pub fn sub_sum(&self, start: usize, len: usize) -> Result<Element> {
        if start + len > self.blocks.len() || len == 0 {
            return Err(Error::Index(format!(
                "blocks {start}..{} out of range for shape {}",
                start + len,
                self.shape
            )));
        }
        Element::new(
            AlgebraShape::new(self.shape.blocks()[start..start + len].to_vec())?,
            self.blocks[start..start + len].to_vec(),
        )
    }

    /// Frobenius-type distance used for exact-equality style assertions.
    pub fn max_abs_diff(&self, other: &Element) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// `‖self - other‖`.
    pub fn distance(&self, other: &Element) -> Result<f64> {
        Ok(self.sub(other)?.operator_norm())
    }
}

/// The element `1_F`.
pub fn unit(shape: &AlgebraShape) -> Element {
    Element::unit(shape)
}

/// Matrix with `value` at `(p, q)` and zeros elsewhere.
pub fn single_entry(k: usize, p: usize, q: usize, value: Complex64) -> CMat {
    let mut m = CMat::from_element(k, k, ZERO);
    m[(p, q)] = value;
    m
}
