//! JSON description files for inductive systems and CPAPs.
//!
//! Complex scalars are `[re, im]`, matrices are row-major nested arrays and
//! an element is a list of blocks in shape order. A map is either
//! `{"form": "matrix", "action": M}` (action on column-stacked block
//! coordinates) or `{"form": "kraus", "terms": [{"from", "to", "ops"}]}`
//! (`x ↦ Σ K x K*`, one term per domain block → codomain block pair).

mod builtin;

pub use builtin::Builtin;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constructions::CpapSystem;
use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element, Tolerances};
use crate::linalg::CMat;
use crate::maps::{CpMap, KrausTerm, MapRepr};
use crate::systems::InductiveSystem;

pub const FORMAT_VERSION: u32 = 1;

pub type MatrixLit = Vec<Vec<[f64; 2]>>;
pub type ElementLit = Vec<MatrixLit>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeLit {
    pub blocks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausLit {
    pub from: usize,
    pub to: usize,
    pub ops: Vec<MatrixLit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapLit {
    Matrix { action: MatrixLit },
    Kraus { terms: Vec<KrausLit> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    System,
    Cpap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<DocumentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<ShapeLit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unital: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ElementLit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<ShapeLit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<MapLit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub psi: Vec<MapLit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi: Vec<MapLit>,
}

/// The validated content of a description file.
#[derive(Clone, Debug)]
pub enum Loaded {
    System(InductiveSystem),
    Cpap(CpapSystem),
}

impl Loaded {
    pub fn name(&self) -> &str {
        match self {
            Loaded::System(s) => s.name(),
            Loaded::Cpap(c) => c.name(),
        }
    }

    pub fn kind(&self) -> DocumentKind {
        match self {
            Loaded::System(_) => DocumentKind::System,
            Loaded::Cpap(_) => DocumentKind::Cpap,
        }
    }

    /// The system itself, or the associated system of a CPAP.
    pub fn into_system(self) -> Result<InductiveSystem> {
        match self {
            Loaded::System(s) => Ok(s),
            Loaded::Cpap(c) => c.associated_system(),
        }
    }

    pub fn as_cpap(&self) -> Option<&CpapSystem> {
        match self {
            Loaded::Cpap(c) => Some(c),
            Loaded::System(_) => None,
        }
    }
}

fn matrix_to_lit(m: &CMat) -> MatrixLit {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn lit_to_matrix(lit: &MatrixLit, path: &str) -> Result<CMat> {
    let rows = lit.len();
    let cols = lit.first().map_or(0, Vec::len);
    if let Some(i) = lit.iter().position(|r| r.len() != cols) {
        return Err(Error::parse(
            format!("{path}[{i}]"),
            format!("row has {} entries, expected {cols}", lit[i].len()),
        ));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let [re, im] = lit[i][j];
        Complex64::new(re, im)
    }))
}

pub fn element_to_lit(x: &Element) -> ElementLit {
    x.blocks().iter().map(matrix_to_lit).collect()
}

pub fn lit_to_element(lit: &ElementLit, shape: &AlgebraShape, path: &str) -> Result<Element> {
    if lit.len() != shape.num_blocks() {
        return Err(Error::at(path, Error::shape(format!("{} blocks", shape.num_blocks()), lit.len())));
    }
    let blocks = lit
        .iter()
        .enumerate()
        .map(|(b, m)| {
            let p = format!("{path}[{b}]");
            let mat = lit_to_matrix(m, &p)?;
            let k = shape.blocks()[b];
            if mat.nrows() != k || mat.ncols() != k {
                return Err(Error::at(p, Error::shape(format!("{k}x{k}"), format!("{}x{}", mat.nrows(), mat.ncols()))));
            }
            Ok(mat)
        })
        .collect::<Result<Vec<_>>>()?;
    Element::new(shape.clone(), blocks)
}

pub fn map_to_lit(f: &CpMap) -> MapLit {
    match f.repr() {
        MapRepr::Matrix(a) => MapLit::Matrix { action: matrix_to_lit(a) },
        MapRepr::Kraus(terms) => MapLit::Kraus {
            terms: terms
                .iter()
                .map(|t| KrausLit {
                    from: t.from,
                    to: t.to,
                    ops: t.ops.iter().map(matrix_to_lit).collect(),
                })
                .collect(),
        },
    }
}

pub fn lit_to_map(lit: &MapLit, domain: &AlgebraShape, codomain: &AlgebraShape, path: &str) -> Result<CpMap> {
    match lit {
        MapLit::Matrix { action } => {
            let p = format!("{path}.action");
            let a = lit_to_matrix(action, &p)?;
            CpMap::from_matrix(domain.clone(), codomain.clone(), a).map_err(|e| Error::at(p, e))
        }
        MapLit::Kraus { terms } => {
            let terms = terms
                .iter()
                .enumerate()
                .map(|(t, term)| {
                    let ops = term
                        .ops
                        .iter()
                        .enumerate()
                        .map(|(i, op)| lit_to_matrix(op, &format!("{path}.terms[{t}].ops[{i}]")))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(KrausTerm {
                        from: term.from,
                        to: term.to,
                        ops,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            CpMap::from_kraus(domain.clone(), codomain.clone(), terms).map_err(|e| Error::at(format!("{path}.terms"), e))
        }
    }
}

fn shape_of(lit: &ShapeLit, path: &str) -> Result<AlgebraShape> {
    AlgebraShape::new(lit.blocks.clone()).map_err(|e| Error::at(format!("{path}.blocks"), e))
}

fn shapes(lits: &[ShapeLit], path: &str) -> Result<Vec<AlgebraShape>> {
    lits.iter()
        .enumerate()
        .map(|(i, s)| shape_of(s, &format!("{path}[{i}]")))
        .collect()
}

fn step_error(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidStep { step, source } => Error::at(format!("{field}[{step}]"), *source),
        other => other,
    }
}

impl Document {
    pub fn from_json(text: &str) -> Result<Document> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn from_system(sys: &InductiveSystem, builtin: Option<&Builtin>) -> Document {
        Document {
            version: FORMAT_VERSION,
            kind: Some(DocumentKind::System),
            name: Some(sys.name().to_string()),
            builtin: builtin.cloned(),
            tolerances: nondefault(sys.tolerances()),
            algebra: None,
            unital: None,
            probes: vec![],
            stages: sys.stages().iter().map(|s| ShapeLit { blocks: s.blocks().to_vec() }).collect(),
            steps: sys.steps().iter().map(map_to_lit).collect(),
            psi: vec![],
            phi: vec![],
        }
    }

    pub fn from_cpap(cpap: &CpapSystem, builtin: Option<&Builtin>) -> Document {
        Document {
            version: FORMAT_VERSION,
            kind: Some(DocumentKind::Cpap),
            name: Some(cpap.name().to_string()),
            builtin: builtin.cloned(),
            tolerances: nondefault(cpap.tolerances()),
            algebra: Some(ShapeLit {
                blocks: cpap.algebra().blocks().to_vec(),
            }),
            unital: Some(cpap.is_unital()),
            probes: cpap.probes().iter().map(element_to_lit).collect(),
            stages: cpap.stages().iter().map(|s| ShapeLit { blocks: s.blocks().to_vec() }).collect(),
            steps: vec![],
            psi: cpap.psi_maps().iter().map(map_to_lit).collect(),
            phi: cpap.phi_maps().iter().map(map_to_lit).collect(),
        }
    }

    pub fn from_loaded(obj: &Loaded, builtin: Option<&Builtin>) -> Document {
        match obj {
            Loaded::System(s) => Self::from_system(s, builtin),
            Loaded::Cpap(c) => Self::from_cpap(c, builtin),
        }
    }

    /// Validates the document and builds the object it describes. A document
    /// with a builtin reference and no stages is expanded from the builtin.
    pub fn load(&self) -> Result<Loaded> {
        if self.version != FORMAT_VERSION {
            return Err(Error::parse("version", format!("unsupported version {}", self.version)));
        }
        let tol = self.tolerances.unwrap_or_default();
        tol.validate().map_err(|e| Error::at("tolerances", e))?;
        if self.stages.is_empty() {
            let b = self
                .builtin
                .as_ref()
                .ok_or_else(|| Error::parse("stages", "missing (and no builtin reference)"))?;
            let obj = b.build().map_err(|e| Error::at("builtin", e))?;
            if let Some(kind) = self.kind {
                if kind != obj.kind() {
                    return Err(Error::parse("kind", format!("builtin {b} does not describe a {kind:?}")));
                }
            }
            return Ok(obj);
        }
        let kind = self.kind.unwrap_or(if self.algebra.is_some() {
            DocumentKind::Cpap
        } else {
            DocumentKind::System
        });
        let stages = shapes(&self.stages, "stages")?;
        let name = self.name.clone().unwrap_or_else(|| "unnamed".into());
        match kind {
            DocumentKind::System => {
                for field in ["algebra", "unital", "probes", "psi", "phi"] {
                    if self.has(field) {
                        return Err(Error::parse(field, "not allowed in a system document"));
                    }
                }
                if self.steps.len() + 1 != stages.len() {
                    return Err(Error::parse(
                        "steps",
                        format!("expected {} steps for {} stages, found {}", stages.len() - 1, stages.len(), self.steps.len()),
                    ));
                }
                let steps = self
                    .steps
                    .iter()
                    .enumerate()
                    .map(|(i, lit)| lit_to_map(lit, &stages[i], &stages[i + 1], &format!("steps[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let sys = InductiveSystem::new(name, stages, steps, tol).map_err(|e| step_error("steps", e))?;
                Ok(Loaded::System(sys))
            }
            DocumentKind::Cpap => {
                if !self.steps.is_empty() {
                    return Err(Error::parse("steps", "not allowed in a cpap document"));
                }
                let algebra = shape_of(
                    self.algebra.as_ref().ok_or_else(|| Error::parse("algebra", "missing"))?,
                    "algebra",
                )?;
                for (field, maps) in [("psi", &self.psi), ("phi", &self.phi)] {
                    if maps.len() != stages.len() {
                        return Err(Error::parse(
                            field,
                            format!("expected {} maps, found {}", stages.len(), maps.len()),
                        ));
                    }
                }
                let psi = self
                    .psi
                    .iter()
                    .enumerate()
                    .map(|(i, lit)| lit_to_map(lit, &algebra, &stages[i], &format!("psi[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let phi = self
                    .phi
                    .iter()
                    .enumerate()
                    .map(|(i, lit)| lit_to_map(lit, &stages[i], &algebra, &format!("phi[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let probes = self
                    .probes
                    .iter()
                    .enumerate()
                    .map(|(i, p)| lit_to_element(p, &algebra, &format!("probes[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let unital = self.unital.unwrap_or(false);
                let cpap = CpapSystem::new(name, algebra, probes, stages, psi, phi, unital, tol)
                    .map_err(|e| step_error("psi/phi", e))?;
                Ok(Loaded::Cpap(cpap))
            }
        }
    }

    fn has(&self, field: &str) -> bool {
        match field {
            "algebra" => self.algebra.is_some(),
            "unital" => self.unital.is_some(),
            "probes" => !self.probes.is_empty(),
            "psi" => !self.psi.is_empty(),
            "phi" => !self.phi.is_empty(),
            _ => false,
        }
    }
}

fn nondefault(t: &Tolerances) -> Option<Tolerances> {
    (*t != Tolerances::default()).then_some(*t)
}

/// Parses and validates a description file.
pub fn parse_system_file(text: &str) -> Result<Loaded> {
    Document::from_json(text)?.load()
}

/// A complete description file reproducing the builtin's output exactly.
pub fn emit_builtin_example(builtin: &Builtin) -> Result<String> {
    let obj = builtin.build()?;
    Ok(Document::from_loaded(&obj, Some(builtin)).to_json())
}

/// Emits a system as a description file.
pub fn emit_system(sys: &InductiveSystem) -> String {
    Document::from_system(sys, None).to_json()
}

pub fn emit_cpap(cpap: &CpapSystem) -> String {
    Document::from_cpap(cpap, None).to_json()
}

/// Structural equality of loaded objects, maps compared by action matrix.
pub fn loaded_eq(a: &Loaded, b: &Loaded, tol: f64) -> bool {
    match (a, b) {
        (Loaded::System(x), Loaded::System(y)) => x.name() == y.name() && x.structurally_eq(y, tol),
        (Loaded::Cpap(x), Loaded::Cpap(y)) => {
            let maps_eq = |f: &[CpMap], g: &[CpMap]| f.len() == g.len() && f.iter().zip(g).all(|(p, q)| p.max_abs_diff(q) <= tol);
            x.name() == y.name()
                && x.algebra() == y.algebra()
                && x.stages() == y.stages()
                && x.is_unital() == y.is_unital()
                && x.probes().len() == y.probes().len()
                && x.probes().iter().zip(y.probes()).all(|(p, q)| p.max_abs_diff(q) <= tol)
                && maps_eq(x.psi_maps(), y.psi_maps())
                && maps_eq(x.phi_maps(), y.phi_maps())
        }
        _ => false,
    }
}
