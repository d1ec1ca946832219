//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 validation failure (including invalid
//! parameters and failed invariant checks), 2 infeasible schedule, 3 I/O,
//! parse or command-line error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::constructions::{
    direct_sum_nf_lift, extract_cpcstar_subsystem, make_summable, verify_schedule, CpapSystem, ExtractOptions,
    SubsystemSchedule, SummableOptions,
};
use crate::error::{Error, Result};
use crate::io::{parse_system_file, Builtin, Document, Loaded};
use crate::kernel::Tolerances;
use crate::limit::{
    associativity_defect, cstar_identity_defect, default_inner, mult_id_defect, theta_order_zero_defect,
    LimitElement,
};
use crate::systems::{
    cpc_defect, defect_sweep, limit_norm_profile, order_unit_domination_margin, DefectEntry, DefectKind, DefectReport,
    GeneratorPolicy, IndexGrid, InductiveSystem,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Parse and validate a description, print map verdicts.
    Validate,
    /// cpc/nf defect sweep, CSV to --output.
    Defects,
    /// Check the structural invariants every c.p.c. system satisfies.
    Invariants,
    /// Limit-product defects at the horizon, CSV to --output.
    Product,
    /// Emit the direct-sum NF lift of the input system.
    NfLift,
    /// Inductive subsystem selection on a CPAP.
    Extract,
    /// Summable subsystem selection on a CPAP.
    Summable,
    /// Emit builtin example files.
    Examples,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "cpcstar", about = "Inductive systems of finite-dimensional C*-algebras with c.p.c. maps")]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub command: Command,
    /// Description file (JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Builtin example instead of an input file, e.g. `uhf{2,3}`.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stage of the generators.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Truncate the system at this stage.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Index ranges `m0:m1,n0:n1,l0:l1`.
    #[arg(long)]
    pub grid: Option<String>,
    /// units | hermitian | coordinate | random:COUNT
    #[arg(long, default_value = "units")]
    pub probes: String,
    /// Tolerance override `herm|psd|eq=VALUE` or `relative=true|false`.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    pub tol: Vec<String>,
    /// Comma-separated list or `geom:RATIO:COUNT`.
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Inner index of the limit product (default N-1).
    #[arg(long)]
    pub inner: Option<usize>,
    /// Unit index of the limit-product defects (default N-1).
    #[arg(long)]
    pub unit_index: Option<usize>,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Io(_) => EXIT_IO,
        Error::Infeasible { .. } | Error::OrderZeroThreshold { .. } => EXIT_INFEASIBLE,
        Error::Field { source, .. } | Error::InvalidStep { source, .. } => match exit_code(source) {
            EXIT_OK => EXIT_VALIDATION,
            c => c,
        },
        _ => EXIT_VALIDATION,
    }
}

/// Parses `args` (including the program name) and runs.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                EXIT_IO
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cfg, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    match cfg.command {
        Command::Validate => validate(cfg, out),
        Command::Defects => defects(cfg, out),
        Command::Invariants => invariants(cfg, out),
        Command::Product => product(cfg, out),
        Command::NfLift => nf_lift(cfg, out),
        Command::Extract | Command::Summable => schedule(cfg, out),
        Command::Examples => examples(cfg, out),
    }
}

pub fn parse_tolerances(overrides: &[String]) -> Result<Option<Tolerances>> {
    if overrides.is_empty() {
        return Ok(None);
    }
    let mut t = Tolerances::default();
    for o in overrides {
        let (key, val) = o
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("tolerance override '{o}' is not KEY=VAL")))?;
        let num = || {
            val.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad tolerance value '{val}'")))
        };
        match key {
            "herm" | "herm_tol" => t.herm_tol = num()?,
            "psd" | "psd_tol" => t.psd_tol = num()?,
            "eq" | "eq_tol" => t.eq_tol = num()?,
            "relative" => {
                t.relative = val
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad boolean '{val}'")))?
            }
            _ => return Err(Error::InvalidParameter(format!("unknown tolerance key '{key}'"))),
        }
    }
    t.validate()?;
    Ok(Some(t))
}

/// `a,b,c` or `geom:RATIO:COUNT` (`RATIO^0, …, RATIO^(COUNT−1)`).
pub fn parse_epsilons(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("epsilons '{s}' are not a list or geom:RATIO:COUNT"));
    if let Some(rest) = s.strip_prefix("geom:") {
        let (r, c) = rest.split_once(':').ok_or_else(bad)?;
        let r: f64 = r.parse().map_err(|_| bad())?;
        let c: usize = c.parse().map_err(|_| bad())?;
        return Ok((0..c).map(|i| r.powi(i as i32)).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn load(cfg: &RunConfig) -> Result<Loaded> {
    let obj = match (&cfg.input, &cfg.builtin) {
        (Some(_), Some(_)) => return Err(Error::InvalidParameter("give either --input or --builtin".into())),
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            parse_system_file(&text).map_err(|e| match e {
                Error::Parse { path: p, message } => Error::Parse {
                    path: format!("{}: {p}", path.display()),
                    message,
                },
                other => other,
            })?
        }
        (None, Some(b)) => b.parse::<Builtin>()?.build()?,
        (None, None) => return Err(Error::InvalidParameter("need --input or --builtin".into())),
    };
    match parse_tolerances(&cfg.tol)? {
        Some(t) => with_tolerances(obj, t),
        None => Ok(obj),
    }
}

fn with_tolerances(obj: Loaded, t: Tolerances) -> Result<Loaded> {
    Ok(match obj {
        Loaded::System(s) => {
            Loaded::System(InductiveSystem::new(s.name(), s.stages().to_vec(), s.steps().to_vec(), t)?)
        }
        Loaded::Cpap(c) => Loaded::Cpap(CpapSystem::new(
            c.name(),
            c.algebra().clone(),
            c.probes().to_vec(),
            c.stages().to_vec(),
            c.psi_maps().to_vec(),
            c.phi_maps().to_vec(),
            c.is_unital(),
            t,
        )?),
    })
}

fn load_system(cfg: &RunConfig) -> Result<InductiveSystem> {
    let sys = load(cfg)?.into_system()?;
    match cfg.horizon {
        Some(h) => sys.truncated(0, h),
        None => Ok(sys),
    }
}

fn load_cpap(cfg: &RunConfig) -> Result<CpapSystem> {
    match load(cfg)? {
        Loaded::Cpap(c) => Ok(c),
        Loaded::System(s) => Err(Error::InvalidParameter(format!("'{}' is a system, not a CPAP", s.name()))),
    }
}

fn write_output(cfg: &RunConfig, text: &str, out: &mut dyn Write) -> Result<()> {
    match &cfg.output {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_csv(cfg: &RunConfig, report: &DefectReport, out: &mut dyn Write) -> Result<()> {
    if let Some(p) = &cfg.output {
        let mut f = std::io::BufWriter::new(fs::File::create(p)?);
        report.write_csv(&mut f)?;
        f.flush()?;
        writeln!(out, "wrote {} rows to {}", report.entries.len(), p.display())?;
    }
    Ok(())
}

fn validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let obj = load(cfg)?;
    match &obj {
        Loaded::System(sys) => {
            writeln!(out, "system {}: {} stages", sys.name(), sys.num_stages())?;
            for (n, s) in sys.stages().iter().enumerate() {
                writeln!(out, "  stage {n}: {s}")?;
            }
            for (n, v) in sys.verdicts().iter().enumerate() {
                writeln!(
                    out,
                    "  step {n}: cp={} choi_min={} |f(1)|={:.6} contractive={}",
                    v.is_cp,
                    v.choi_min_eigenvalue.map_or("kraus".to_string(), |e| format!("{e:.6e}")),
                    v.unit_norm,
                    v.is_contractive
                )?;
            }
            writeln!(out, "  unital steps: {}", sys.has_unital_steps())?;
        }
        Loaded::Cpap(c) => {
            writeln!(
                out,
                "cpap {}: algebra {}, {} stages, {} probes, unital={}",
                c.name(),
                c.algebra(),
                c.num_stages(),
                c.probes().len(),
                c.is_unital()
            )?;
            for (n, row) in c.approximation_defects().iter().enumerate() {
                let worst = row.iter().copied().fold(0.0, f64::max);
                writeln!(out, "  stage {n}: {} max |phi(psi(a)) - a| = {worst:.6e}", c.stages()[n])?;
            }
        }
    }
    writeln!(out, "valid")?;
    Ok(EXIT_OK)
}

fn defects(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let sys = load_system(cfg)?;
    let policy: GeneratorPolicy = cfg.probes.parse()?;
    let grid = match &cfg.grid {
        Some(g) => g.parse()?,
        None => IndexGrid::full(sys.horizon()),
    };
    let report = defect_sweep(&sys, cfg.k, &policy, &grid, cfg.seed)?;
    writeln!(
        out,
        "{}: k={} probes={} seed={} rows={}",
        sys.name(),
        cfg.k,
        policy,
        cfg.seed,
        report.entries.len()
    )?;
    for kind in [DefectKind::Cpc, DefectKind::Nf] {
        writeln!(out, "  max {kind} = {:.6e}", report.max(kind))?;
        writeln!(out, "  {}", report.trend(kind))?;
    }
    write_csv(cfg, &report, out)?;
    Ok(EXIT_OK)
}

const INVARIANT_TOL: f64 = 1e-12;

fn invariants(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let sys = load_system(cfg)?;
    let tol = *sys.tolerances();
    let k = cfg.k;
    let horizon = sys.horizon();
    sys.stage(k)?;
    let policy: GeneratorPolicy = cfg.probes.parse()?;
    let gens = policy.generators(sys.stage(k)?, cfg.seed)?;
    let mut failed = 0usize;
    let mut line = |out: &mut dyn Write, name: &str, ok: bool, detail: String| -> Result<()> {
        if !ok {
            failed += 1;
        }
        writeln!(out, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" })?;
        Ok(())
    };

    // composite coherence on generator images
    let mut coherence = 0.0f64;
    for m in k..=horizon {
        let direct = sys.composite(m, k)?;
        for j in k..=m {
            let (outer, inner) = (sys.composite(m, j)?, sys.composite(j, k)?);
            for g in &gens {
                let d = direct.apply(g)?.distance(&outer.apply(&inner.apply(g)?)?)?;
                coherence = coherence.max(d);
            }
        }
    }
    line(out, "composite coherence", coherence <= INVARIANT_TOL, format!("max {coherence:.3e}"))?;

    let report = defect_sweep(&sys, k, &policy, &IndexGrid::full(horizon), cfg.seed)?;
    if sys.has_unital_steps() {
        let nf: std::collections::HashMap<(usize, usize, &str), f64> = report
            .of_kind(DefectKind::Nf)
            .map(|e| ((e.m, e.n, e.pair.as_str()), e.value))
            .collect();
        let gap = report
            .of_kind(DefectKind::Cpc)
            .map(|e: &DefectEntry| (e.value - nf[&(e.m, e.n, e.pair.as_str())]).abs())
            .fold(0.0, f64::max);
        line(out, "unital reduction", gap <= INVARIANT_TOL, format!("max |cpc - nf| {gap:.3e}"))?;
    }

    let herm = sys.stage(k)?.hermitian_units();
    let mut margin = f64::INFINITY;
    for x in &herm {
        for m in k..=horizon {
            for n in k..=m {
                margin = margin.min(order_unit_domination_margin(&sys, k, x, m, n, &tol)?);
            }
        }
    }
    line(out, "order unit domination", margin >= -1e-10, format!("min eigenvalue {margin:.3e}"))?;

    let mut symmetry = 0.0f64;
    if horizon >= k + 2 {
        let (m, n) = (horizon, horizon - 1);
        for x in &gens {
            for y in &gens {
                let a = cpc_defect(&sys, k, x, y, m, n, n)?;
                let b = cpc_defect(&sys, k, &y.adjoint(), &x.adjoint(), m, n, n)?;
                symmetry = symmetry.max((a - b).abs());
            }
        }
    }
    line(out, "defect symmetry", symmetry <= INVARIANT_TOL, format!("max gap {symmetry:.3e}"))?;

    let stages: Vec<usize> = (k..=horizon).collect();
    let mut monotone = true;
    for g in &gens {
        monotone &= limit_norm_profile(&sys, k, g, &stages, &tol)?.non_increasing;
    }
    line(out, "contractive monotonicity", monotone, format!("{} generators", gens.len()))?;

    Ok(if failed == 0 { EXIT_OK } else { EXIT_VALIDATION })
}

fn product(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let sys = Arc::new(load_system(cfg)?);
    let horizon = sys.horizon();
    let k = cfg.k;
    let n = cfg.inner.unwrap_or(default_inner(horizon));
    let unit_index = cfg.unit_index.unwrap_or(default_inner(horizon));
    let policy: GeneratorPolicy = cfg.probes.parse()?;
    let gens: Vec<LimitElement> = policy
        .generators(sys.stage(k)?, cfg.seed)?
        .into_iter()
        .map(|g| LimitElement::at(&sys, k, g))
        .collect::<Result<_>>()?;
    let mut report = DefectReport::new(sys.name(), policy.to_string(), *sys.tolerances());
    let entry = |kind, pair: String, value| DefectEntry {
        kind,
        k,
        m: horizon,
        n,
        l: matches!(kind, DefectKind::MultId | DefectKind::Theta).then_some(unit_index),
        pair,
        value,
    };
    for (i, a) in gens.iter().enumerate() {
        report.entries.push(entry(DefectKind::CstarIdentity, format!("{i}:{i}"), cstar_identity_defect(a, n)?));
        for (j, b) in gens.iter().enumerate() {
            let pair = format!("{i}:{j}");
            report.entries.push(entry(DefectKind::MultId, pair.clone(), mult_id_defect(a, b, n, unit_index)?));
            report.entries.push(entry(DefectKind::Theta, pair, theta_order_zero_defect(a, b, n, unit_index)?));
        }
    }
    if n < horizon {
        for (i, a) in gens.iter().enumerate() {
            for (j, b) in gens.iter().enumerate() {
                // worst case over the third factor
                let worst = gens
                    .iter()
                    .map(|c| associativity_defect(a, b, c, n, horizon))
                    .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
                let mut e = entry(DefectKind::Associativity, format!("{i}:{j}"), worst);
                e.l = Some(horizon);
                report.entries.push(e);
            }
        }
    }
    report.sort();
    writeln!(
        out,
        "{}: k={k} inner={n} unit_index={unit_index} horizon={horizon} probes={policy}",
        sys.name()
    )?;
    for kind in [DefectKind::MultId, DefectKind::Associativity, DefectKind::CstarIdentity, DefectKind::Theta] {
        writeln!(out, "  max {kind} = {:.6e}", report.max(kind))?;
    }
    write_csv(cfg, &report, out)?;
    Ok(EXIT_OK)
}

fn nf_lift(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let sys = load_system(cfg)?;
    let lift = direct_sum_nf_lift(&sys)?;
    let text = Document::from_system(&lift, None).to_json();
    if cfg.output.is_some() {
        writeln!(out, "{}: {} stages", lift.name(), lift.num_stages())?;
        for (n, s) in lift.stages().iter().enumerate() {
            writeln!(out, "  stage {n}: {s}")?;
        }
    }
    write_output(cfg, &text, out)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CertificateOut {
    position: usize,
    index: usize,
    inequality: String,
    value: f64,
    factor: f64,
    bound: f64,
    slack: f64,
}

#[derive(Serialize)]
struct ScheduleOut<'a> {
    system: &'a str,
    kind: &'a str,
    indices: &'a [usize],
    epsilons: &'a [f64],
    min_slack: Option<f64>,
    verified: bool,
    certificates: Vec<CertificateOut>,
    subsystem: Option<Document>,
}

fn schedule(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let cpap = load_cpap(cfg)?;
    let eps = match &cfg.epsilons {
        Some(s) => parse_epsilons(s)?,
        None => parse_epsilons(&format!("geom:0.5:{}", cpap.num_stages()))?,
    };
    let (sched, sub): (SubsystemSchedule, Option<InductiveSystem>) = if cfg.command == Command::Extract {
        let (s, sys) = extract_cpcstar_subsystem(&cpap, &eps, &ExtractOptions::default())?;
        (s, Some(sys))
    } else {
        let opts = SummableOptions {
            seed: cfg.seed,
            ..SummableOptions::default()
        };
        (make_summable(&cpap, &eps, &opts)?, None)
    };
    let check = verify_schedule(&cpap, &sched)?;
    let label = if cfg.command == Command::Extract { "extract" } else { "summable" };
    writeln!(out, "{label} on {}: indices {:?}", cpap.name(), sched.indices)?;
    for c in &sched.certificates {
        writeln!(
            out,
            "  [{}] n={} j={} {}: {:.6e} < {:.6e} (slack {:.3e})",
            if c.holds() { "ok" } else { "!!" },
            c.position,
            c.index,
            c.inequality,
            c.factor * c.value,
            c.bound,
            c.slack
        )?;
    }
    writeln!(out, "  verified {} certificates, failures {}", check.checked, check.failures.len())?;
    for f in &check.failures {
        writeln!(out, "  failure: {f}")?;
    }
    let doc = ScheduleOut {
        system: cpap.name(),
        kind: label,
        indices: &sched.indices,
        epsilons: &sched.epsilons,
        min_slack: Some(sched.min_slack()).filter(|s| s.is_finite()),
        verified: check.passed(),
        certificates: sched
            .certificates
            .iter()
            .map(|c| CertificateOut {
                position: c.position,
                index: c.index,
                inequality: c.inequality.to_string(),
                value: c.value,
                factor: c.factor,
                bound: c.bound,
                slack: c.slack,
            })
            .collect(),
        subsystem: sub.as_ref().map(|s| Document::from_system(s, None)),
    };
    if let Some(p) = &cfg.output {
        let mut text = serde_json::to_string_pretty(&doc).expect("schedule serializes");
        text.push('\n');
        fs::write(p, text)?;
        writeln!(out, "wrote schedule to {}", p.display())?;
    }
    Ok(if check.passed() { EXIT_OK } else { EXIT_VALIDATION })
}

/// File name for a builtin: its notation with non-alphanumerics folded.
pub fn example_file_name(b: &Builtin) -> String {
    let mut s: String = b
        .to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    while s.ends_with('_') {
        s.pop();
    }
    format!("{}.json", s.replace("__", "_"))
}

fn examples(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    if let Some(b) = &cfg.builtin {
        let b: Builtin = b.parse()?;
        write_output(cfg, &crate::io::emit_builtin_example(&b)?, out)?;
        return Ok(EXIT_OK);
    }
    let dir: &Path = cfg
        .output
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("examples needs --output DIR or --builtin NAME".into()))?;
    fs::create_dir_all(dir)?;
    for b in Builtin::examples() {
        let path = dir.join(example_file_name(&b));
        fs::write(&path, crate::io::emit_builtin_example(&b)?)?;
        writeln!(out, "{b} -> {}", path.display())?;
    }
    Ok(EXIT_OK)
}
