use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use super::report::{DefectEntry, DefectKind, DefectReport};
use super::InductiveSystem;
use crate::error::{Error, Result};
use crate::kernel::{AlgebraShape, Element};
use crate::linalg::CMat;
use crate::random;

/// Which elements of stage `k` the sweep pairs up.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorPolicy {
    /// All matrix units.
    Units,
    /// The self-adjoint basis `E_pp`, `E_pq + E_qp`, `i(E_pq − E_qp)`.
    Hermitian,
    /// Seeded random contractions.
    Random { count: usize },
    /// The unit and the diagonal "coordinate" element whose diagonal runs
    /// through `0, 1/(d−1), …, 1` across all `d` diagonal positions.
    Coordinate,
    Custom(Vec<Element>),
}

impl GeneratorPolicy {
    pub fn generators(&self, shape: &AlgebraShape, seed: u64) -> Result<Vec<Element>> {
        Ok(match self {
            GeneratorPolicy::Units => shape.matrix_units(),
            GeneratorPolicy::Hermitian => shape.hermitian_units(),
            GeneratorPolicy::Random { count } => {
                let mut rng = random::rng(seed);
                (0..*count).map(|_| random::contraction(shape, &mut rng)).collect()
            }
            GeneratorPolicy::Coordinate => vec![Element::unit(shape), coordinate_element(shape)],
            GeneratorPolicy::Custom(list) => {
                for g in list {
                    if g.shape() != shape {
                        return Err(Error::shape(shape, g.shape()));
                    }
                }
                list.clone()
            }
        })
    }
}

impl fmt::Display for GeneratorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorPolicy::Units => write!(f, "units"),
            GeneratorPolicy::Hermitian => write!(f, "hermitian"),
            GeneratorPolicy::Random { count } => write!(f, "random:{count}"),
            GeneratorPolicy::Coordinate => write!(f, "coordinate"),
            GeneratorPolicy::Custom(l) => write!(f, "custom:{}", l.len()),
        }
    }
}

impl FromStr for GeneratorPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "units" => Ok(GeneratorPolicy::Units),
            "hermitian" => Ok(GeneratorPolicy::Hermitian),
            "coordinate" => Ok(GeneratorPolicy::Coordinate),
            _ => match s.strip_prefix("random:") {
                Some(c) => c
                    .parse()
                    .map(|count| GeneratorPolicy::Random { count })
                    .map_err(|_| Error::InvalidParameter(format!("bad random probe count '{c}'"))),
                None => Err(Error::InvalidParameter(format!(
                    "unknown probe policy '{s}' (units|hermitian|coordinate|random:N)"
                ))),
            },
        }
    }
}

/// Diagonal element with entries evenly spaced in `[0, 1]`.
pub(crate) fn coordinate_element(shape: &AlgebraShape) -> Element {
    let total: usize = shape.blocks().iter().sum();
    let step = if total > 1 { 1.0 / (total - 1) as f64 } else { 0.0 };
    let mut pos = 0usize;
    let blocks = shape
        .blocks()
        .iter()
        .map(|&k| {
            let mut b = CMat::zeros(k, k);
            for i in 0..k {
                b[(i, i)] = Complex64::new(if total > 1 { pos as f64 * step } else { 1.0 }, 0.0);
                pos += 1;
            }
            b
        })
        .collect();
    Element::new(shape.clone(), blocks).expect("blocks follow the shape")
}

/// Inclusive index ranges for `m`, `n` and `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexGrid {
    pub m: (usize, usize),
    pub n: (usize, usize),
    pub l: (usize, usize),
}

impl IndexGrid {
    /// Every valid cell of a system with horizon `horizon`.
    pub fn full(horizon: usize) -> Self {
        IndexGrid {
            m: (0, horizon),
            n: (0, horizon),
            l: (0, horizon),
        }
    }

    /// Valid `(m, n, l)` with `k < n < m`, `k < l < m` and `m ≤ horizon`,
    /// sorted.
    pub fn cells(&self, k: usize, horizon: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for m in self.m.0..=self.m.1.min(horizon) {
            for n in self.n.0.max(k + 1)..=self.n.1.min(m.saturating_sub(1)) {
                for l in self.l.0.max(k + 1)..=self.l.1.min(m.saturating_sub(1)) {
                    if k < n && n < m && k < l && l < m {
                        out.push((m, n, l));
                    }
                }
            }
        }
        out
    }
}

impl FromStr for IndexGrid {
    type Err = Error;

    /// `m0:m1,n0:n1,l0:l1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid '{s}' is not of the form m0:m1,n0:n1,l0:l1"));
        let parts: Vec<(usize, usize)> = s
            .split(',')
            .map(|r| {
                let (a, b) = r.trim().split_once(':').ok_or_else(bad)?;
                let a = a.trim().parse().map_err(|_| bad())?;
                let b = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(IndexGrid {
            m: parts[0],
            n: parts[1],
            l: parts[2],
        })
    }
}

/// cpc and nf defects for every ordered generator pair over the grid.
///
/// Images are pushed forward one step at a time and shared across cells,
/// so each `ρ_{j,k}(g)`, `ρ_{m,l}(1)` and `ρ_{m,n}(ρ_{n,k}(x)ρ_{n,k}(y))` is
/// computed once.
pub fn defect_sweep(
    sys: &InductiveSystem,
    k: usize,
    policy: &GeneratorPolicy,
    grid: &IndexGrid,
    seed: u64,
) -> Result<DefectReport> {
    let shape = sys.stage(k)?.clone();
    let gens = policy.generators(&shape, seed)?;
    let mut report = DefectReport::new(sys.name(), policy.to_string(), *sys.tolerances());
    let cells = grid.cells(k, sys.horizon());
    if cells.is_empty() || gens.is_empty() {
        return Ok(report);
    }
    let m_max = cells.iter().map(|c| c.0).max().expect("non-empty");

    let images: Vec<Vec<Element>> = gens
        .par_iter()
        .map(|g| sys.trajectory(m_max, k, g))
        .collect::<Result<_>>()?;

    let l_set: BTreeSet<usize> = cells.iter().map(|c| c.2).collect();
    let units: BTreeMap<usize, Vec<Element>> = l_set
        .par_iter()
        .map(|&l| Ok((l, sys.trajectory(m_max, l, &Element::unit(sys.stage(l)?))?)))
        .collect::<Result<_>>()?;

    // cells grouped by n: n -> [(m, l)]
    let mut by_n: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &(m, n, l) in &cells {
        by_n.entry(n).or_default().push((m, l));
    }
    let m_set: BTreeSet<usize> = cells.iter().map(|c| c.0).collect();

    let pairs: Vec<(usize, usize)> = (0..gens.len()).flat_map(|i| (0..gens.len()).map(move |j| (i, j))).collect();

    // ambient products ρ_{m,k}(x)ρ_{m,k}(y) per pair and m
    let ambient: Vec<BTreeMap<usize, Element>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            m_set
                .iter()
                .map(|&m| (m, images[i][m - k].multiply(&images[j][m - k]).expect("same stage")))
                .collect()
        })
        .collect();

    let tasks: Vec<(usize, usize)> = (0..pairs.len()).flat_map(|p| by_n.keys().map(move |&n| (p, n))).collect();
    let chunks: Vec<Vec<DefectEntry>> = tasks
        .par_iter()
        .map(|&(p, n)| -> Result<Vec<DefectEntry>> {
            let (i, j) = pairs[p];
            let label = format!("{i}:{j}");
            let row = &by_n[&n];
            let top = row.iter().map(|c| c.0).max().expect("non-empty");
            let inner = images[i][n - k].multiply(&images[j][n - k])?;
            let pushed = sys.trajectory(top, n, &inner)?;
            let mut out = Vec::with_capacity(row.len() * 2);
            let mut seen_m = BTreeSet::new();
            for &(m, l) in row {
                let r = &pushed[m - n];
                let t = &ambient[p][&m];
                let u = &units[&l][m - l];
                out.push(DefectEntry {
                    kind: DefectKind::Cpc,
                    k,
                    m,
                    n,
                    l: Some(l),
                    pair: label.clone(),
                    value: u.multiply(r)?.distance(t)?,
                });
                if seen_m.insert(m) {
                    out.push(DefectEntry {
                        kind: DefectKind::Nf,
                        k,
                        m,
                        n,
                        l: None,
                        pair: label.clone(),
                        value: r.distance(t)?,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    report.entries = chunks.into_iter().flatten().collect();
    report.sort();
    Ok(report)
}
