use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DefectKind {
    Cpc,
    Nf,
    Commutator,
    Nondegeneracy,
    ApproxIdentity,
    LiftCoherence,
    MultId,
    Associativity,
    CstarIdentity,
    Theta,
}

impl DefectKind {
    pub const ALL: [DefectKind; 10] = [
        DefectKind::Cpc,
        DefectKind::Nf,
        DefectKind::Commutator,
        DefectKind::Nondegeneracy,
        DefectKind::ApproxIdentity,
        DefectKind::LiftCoherence,
        DefectKind::MultId,
        DefectKind::Associativity,
        DefectKind::CstarIdentity,
        DefectKind::Theta,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DefectKind::Cpc => "cpc",
            DefectKind::Nf => "nf",
            DefectKind::Commutator => "commutator",
            DefectKind::Nondegeneracy => "nondegeneracy",
            DefectKind::ApproxIdentity => "approx_identity",
            DefectKind::LiftCoherence => "lift_coherence",
            DefectKind::MultId => "mult_id",
            DefectKind::Associativity => "associativity",
            DefectKind::CstarIdentity => "cstar_identity",
            DefectKind::Theta => "theta",
        }
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DefectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DefectKind::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown defect kind '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectEntry {
    pub kind: DefectKind,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub l: Option<usize>,
    /// Generator pair label, `i:j`.
    pub pair: String,
    pub value: f64,
}

/// Indexed defect values with enough metadata to reproduce them.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectReport {
    pub system: String,
    pub probe_policy: String,
    pub tolerances: Tolerances,
    pub entries: Vec<DefectEntry>,
}

/// Windowed maxima of one defect kind, keyed by `w = min(n, l)` (or `n`
/// when the kind has no `l`).
#[derive(Clone, Debug, PartialEq)]
pub struct TrendSummary {
    pub kind: DefectKind,
    pub bands: Vec<(usize, f64)>,
    /// Band maxima never increase by more than `1e-12`.
    pub non_increasing: bool,
    /// Maximum over the last band.
    pub tail_max: f64,
}

impl fmt::Display for TrendSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.kind)?;
        for (i, (w, v)) in self.bands.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "w={w} max={v:.3e}")?;
        }
        write!(f, " (non-increasing: {})", self.non_increasing)
    }
}

pub const CSV_HEADER: &str = "kind,k,m,n,l,pair,value";

impl DefectReport {
    pub fn new(system: impl Into<String>, probe_policy: impl Into<String>, tolerances: Tolerances) -> Self {
        DefectReport {
            system: system.into(),
            probe_policy: probe_policy.into(),
            tolerances,
            entries: Vec::new(),
        }
    }

    /// Sorts by `(kind, k, n, l, m, pair)`.
    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            (a.kind, a.k, a.n, a.l, a.m)
                .cmp(&(b.kind, b.k, b.n, b.l, b.m))
                .then_with(|| pair_key(&a.pair).cmp(&pair_key(&b.pair)))
        });
    }

    pub fn of_kind(&self, kind: DefectKind) -> impl Iterator<Item = &DefectEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    pub fn max(&self, kind: DefectKind) -> f64 {
        self.of_kind(kind).map(|e| e.value).fold(0.0, f64::max)
    }

    /// Maximum over entries of `kind` accepted by `filter`.
    pub fn max_where(&self, kind: DefectKind, filter: impl Fn(&DefectEntry) -> bool) -> f64 {
        self.of_kind(kind).filter(|e| filter(e)).map(|e| e.value).fold(0.0, f64::max)
    }

    pub fn trend(&self, kind: DefectKind) -> TrendSummary {
        let mut bands: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for e in self.of_kind(kind) {
            let w = e.l.map_or(e.n, |l| l.min(e.n));
            let slot = bands.entry(w).or_insert(0.0);
            *slot = slot.max(e.value);
        }
        let bands: Vec<(usize, f64)> = bands.into_iter().collect();
        let non_increasing = bands.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
        let tail_max = bands.last().map_or(0.0, |b| b.1);
        TrendSummary {
            kind,
            bands,
            non_increasing,
            tail_max,
        }
    }

    /// Heuristic decision rule: every `kind` defect with `min(n, l) ≥ from`
    /// is below `eps`. Not a proof of anything about the infinite system.
    pub fn decide_below(&self, kind: DefectKind, from: usize, eps: f64) -> bool {
        self.of_kind(kind)
            .filter(|e| e.l.map_or(e.n, |l| l.min(e.n)) >= from)
            .all(|e| e.value < eps)
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for e in &self.entries {
            let l = e.l.map(|l| l.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{},{},{:.16e}", e.kind, e.k, e.m, e.n, l, e.pair, e.value)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the CSV emitted by [`DefectReport::write_csv`].
    pub fn parse_csv(text: &str) -> Result<Vec<DefectEntry>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => return Err(Error::parse("csv:1", format!("expected header, found {other:?}"))),
        }
        lines
            .enumerate()
            .map(|(i, line)| {
                let at = || format!("csv:{}", i + 2);
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 7 {
                    return Err(Error::parse(at(), format!("expected 7 fields, found {}", f.len())));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(at(), e.to_string()));
                Ok(DefectEntry {
                    kind: f[0].parse()?,
                    k: num(f[1])?,
                    m: num(f[2])?,
                    n: num(f[3])?,
                    l: if f[4].is_empty() { None } else { Some(num(f[4])?) },
                    pair: f[5].to_string(),
                    value: f[6].parse().map_err(|e: std::num::ParseFloatError| Error::parse(at(), e.to_string()))?,
                })
            })
            .collect()
    }
}

fn pair_key(p: &str) -> (usize, usize, &str) {
    let mut it = p.split(':').map(|s| s.parse::<usize>().unwrap_or(usize::MAX));
    (it.next().unwrap_or(usize::MAX), it.next().unwrap_or(usize::MAX), p)
}
