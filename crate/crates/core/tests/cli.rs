use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use cpcstar::constructions::{direct_sum_nf_lift, uhf_system, weighted_embedding_system};
use cpcstar::io::{parse_system_file, Document};
use cpcstar::systems::{defect_sweep, DefectKind, DefectReport, GeneratorPolicy, IndexGrid};

fn cpcstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpcstar")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Doubles every number under each `action` or `ops` key.
fn double_actions(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (key, child) in map.iter_mut() {
                if key == "action" || key == "ops" {
                    scale_numbers(child, 2.0);
                } else {
                    double_actions(child);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(double_actions),
        _ => {}
    }
}

fn scale_numbers(v: &mut Value, s: f64) {
    match v {
        Value::Number(n) => *v = Value::from(n.as_f64().unwrap() * s),
        Value::Array(items) => items.iter_mut().for_each(|x| scale_numbers(x, s)),
        Value::Object(map) => map.values_mut().for_each(|x| scale_numbers(x, s)),
        _ => {}
    }
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&cpcstar(&["--help"])), 0);
    assert_eq!(code(&cpcstar(&[])), 3);
    assert_eq!(code(&cpcstar(&["--command", "bogus"])), 3);
    assert_eq!(code(&cpcstar(&["--command", "validate", "--frobnicate"])), 3);
    let o = cpcstar(&["--command", "validate"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--input or --builtin"));
}

#[test]
fn validate_builtins_and_files() {
    let o = cpcstar(&["--command", "validate", "--builtin", "uhf{2,3}"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("4 stages"));
    assert!(stdout(&o).trim_end().ends_with("valid"));

    let o = cpcstar(&["--command", "validate", "--builtin", "interval_cpap{3,5,9}"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    assert_eq!(code(&cpcstar(&["--command", "validate", "--builtin", "uhf{2"])), 3);
    assert_eq!(code(&cpcstar(&["--command", "validate", "--input", "/nonexistent/file.json"])), 3);
}

#[test]
fn malformed_and_invalid_files_are_distinguished() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\n  \"version\": 1,\n  \"stages\": [ oops\n}\n").unwrap();
    let o = cpcstar(&["--command", "validate", "--input", p(&broken)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let good = dir.path().join("good.json");
    assert_eq!(code(&cpcstar(&["--command", "examples", "--builtin", "uhf{2,2}", "--output", p(&good)])), 0);
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&good).unwrap()).unwrap();
    double_actions(&mut doc);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let o = cpcstar(&["--command", "validate", "--input", p(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("steps[0]"), "{}", stderr(&o));

    let o = cpcstar(&["--command", "validate", "--input", p(&good), "--tol", "psd=-1"]);
    assert_eq!(code(&o), 1);
    let o = cpcstar(&["--command", "validate", "--input", p(&good), "--tol", "nonsense=1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn defect_csv_is_deterministic_and_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = cpcstar(&[
            "--command", "defects", "--builtin", "weighted{4,0.5}", "--k", "1", "--probes", "random:3", "--seed", "11",
            "--output", p(out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());

    let sys = weighted_embedding_system(4, &[0.5]).unwrap();
    let expected = defect_sweep(&sys, 1, &GeneratorPolicy::Random { count: 3 }, &IndexGrid::full(4), 11).unwrap();
    let parsed = DefectReport::parse_csv(&text).unwrap();
    assert_eq!(parsed.len(), expected.entries.len());
    let key = |e: &cpcstar::systems::DefectEntry| (e.kind, e.m, e.n, e.l, e.pair.clone());
    let mut want: Vec<_> = expected.entries.iter().map(|e| (key(e), e.value)).collect();
    let mut got: Vec<_> = parsed.iter().map(|e| (key(e), e.value)).collect();
    want.sort_by(|x, y| x.0.cmp(&y.0));
    got.sort_by(|x, y| x.0.cmp(&y.0));
    for ((kw, vw), (kg, vg)) in want.iter().zip(&got) {
        assert_eq!(kw, kg);
        assert!((vw - vg).abs() <= 1e-15 * (1.0 + vw));
    }

    let o = cpcstar(&["--command", "defects", "--builtin", "uhf{2,3}", "--grid", "bad"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn horizon_truncates_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = cpcstar(&["--command", "defects", "--builtin", "uhf{2,5}", "--horizon", "3", "--output", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = DefectReport::parse_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|e| e.m <= 3 && e.value == 0.0));
}

#[test]
fn invariants_pass_on_builtins() {
    for b in ["uhf{2,3}", "weighted{4,0.5}", "interval{3,5,9,17}", "scaled{2,0.5}", "nf_lift{uhf{2,2}}"] {
        let o = cpcstar(&["--command", "invariants", "--builtin", b]);
        assert_eq!(code(&o), 0, "{b}: {}{}", stdout(&o), stderr(&o));
        let text = stdout(&o);
        let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
        // the unital reduction line only appears for unital systems
        assert!(lines.len() >= 4, "{b}");
        assert!(lines.iter().all(|l| l.starts_with("PASS")), "{b}: {lines:?}");
    }
}

#[test]
fn product_csv_reports_limit_defects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prod.csv");
    let o = cpcstar(&["--command", "product", "--builtin", "uhf{2,4}", "--k", "1", "--output", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = DefectReport::parse_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    for kind in [DefectKind::MultId, DefectKind::Theta, DefectKind::CstarIdentity, DefectKind::Associativity] {
        assert!(rows.iter().any(|e| e.kind == kind), "{kind}");
    }
    assert!(rows.iter().all(|e| e.value <= 1e-12));

    let o = cpcstar(&["--command", "product", "--builtin", "uhf{2,4}", "--k", "1", "--inner", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn nf_lift_emits_the_lifted_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lift.json");
    let o = cpcstar(&["--command", "nf-lift", "--builtin", "uhf{2,3}", "--output", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let loaded = parse_system_file(&fs::read_to_string(&out).unwrap()).unwrap().into_system().unwrap();
    let direct = direct_sum_nf_lift(&uhf_system(2, 3).unwrap()).unwrap();
    assert!(loaded.structurally_eq(&direct, 1e-15));
    let o = cpcstar(&["--command", "validate", "--input", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn schedules_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sched.json");
    let o = cpcstar(&["--command", "extract", "--builtin", "interval_cpap{2,3,5,9,17}", "--output", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["verified"], Value::Bool(true));
    assert_eq!(doc["kind"], "extract");
    let indices: Vec<u64> = doc["indices"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert!(indices.windows(2).all(|w| w[0] < w[1]));
    assert!(doc["certificates"].as_array().unwrap().iter().all(|c| c["slack"].as_f64().unwrap() >= 0.0));
    assert!(doc["subsystem"].is_object());

    let o = cpcstar(&["--command", "summable", "--builtin", "interval_cpap{2,3,5,9}", "--epsilons", "geom:0.5:4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("failures 0"));

    // grids that never return to the kink at 1/2
    let o = cpcstar(&["--command", "summable", "--builtin", "interval_cpap{3,4,6}", "--epsilons", "0.001,0.001,0.001"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let o = cpcstar(&["--command", "extract", "--builtin", "uhf{2,3}"]);
    assert_eq!(code(&o), 1);
    let o = cpcstar(&["--command", "extract", "--builtin", "interval_cpap{3,5}", "--epsilons", "0.1,0.5"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn example_suite_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpcstar(&["--command", "examples", "--output", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut files: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), cpcstar::io::Builtin::examples().len());
    for f in &files {
        let o = cpcstar(&["--command", "validate", "--input", p(f)]);
        assert_eq!(code(&o), 0, "{}: {}", f.display(), stderr(&o));
        let text = fs::read_to_string(f).unwrap();
        let doc = Document::from_json(&text).unwrap();
        let again = Document::from_loaded(&doc.load().unwrap(), doc.builtin.as_ref()).to_json();
        assert_eq!(again, text, "{}", f.display());
    }
}
