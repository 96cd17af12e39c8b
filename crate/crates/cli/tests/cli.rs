use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ipf::{AdmittanceMatrix, C64};
use serde_json::Value;
use tempfile::TempDir;

fn case14() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/case14.m")
}

fn ipf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = ipf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(args: &[&str]) -> i32 {
    ipf(args).status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn matrix(path: &Path) -> AdmittanceMatrix {
    AdmittanceMatrix::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Noiseless 14-bus records in `dir/gen`.
fn gen14(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("gen");
    let case = case14();
    let mut args = vec!["gen", "--case", p(&case), "--out", p(&out), "--seed", "2024"];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn known_bus7(dir: &Path, truth: &AdmittanceMatrix) -> PathBuf {
    let k = truth.index_of("7").unwrap();
    let d = truth.get(k, k);
    let path = dir.join("known.csv");
    fs::write(&path, format!("bus,re,im\n7,{},{}\n", d.re, d.im)).unwrap();
    path
}

#[test]
fn gen_writes_one_row_per_slot_and_bus_deterministically() {
    let dir = TempDir::new().unwrap();
    let a = gen14(dir.path(), &[]);
    let table = fs::read_to_string(a.join("phasors.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 15 * 14);
    let b = dir.path().join("again");
    ok(&["gen", "--case", p(&case14()), "--out", p(&b), "--seed", "2024"]);
    for name in ["phasors.csv", "scenarios.csv", "truth.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn gen_rejects_zero_slots_and_loaded_hidden_buses() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    assert_eq!(code(&["gen", "--case", p(&case14()), "--out", p(&out), "--slots", "0"]), 2);
    assert_eq!(code(&["gen", "--case", p(&case14()), "--out", p(&out), "--hidden", "4"]), 2);
    assert_eq!(code(&["gen", "--case", p(&dir.path().join("missing.m")), "--out", p(&out)]), 2);
}

#[test]
fn noiseless_identification_and_eval() {
    let dir = TempDir::new().unwrap();
    let g = gen14(dir.path(), &[]);
    let truth = matrix(&g.join("truth.json"));
    let known = known_bus7(dir.path(), &truth);
    let ls = dir.path().join("ls");
    let meas = g.join("phasors.csv");
    ok(&["identify", "--meas", p(&meas), "--out", p(&ls), "--diagonal", "free", "--known-diag", p(&known)]);
    let ev = dir.path().join("eval");
    ok(&["eval", "--truth", p(&g.join("truth.json")), "--input", p(&ls.join("estimate.json")), "--out", p(&ev)]);
    let s = json(&ev.join("summary.json"));
    assert!(s["max_abs_err"].as_f64().unwrap() <= 1e-6, "{s}");
    assert_eq!(s["support_exact"], Value::Bool(true));
    let errors = fs::read_to_string(ev.join("errors.csv")).unwrap();
    assert!(errors.starts_with("i,j,abs_err\n"));
    assert_eq!(errors.lines().count(), 1 + 14 * 14);

    let nn = dir.path().join("nnls");
    ok(&["identify", "--meas", p(&meas), "--out", p(&nn), "--mode", "nnls", "--diagonal", "free", "--known-diag", p(&known)]);
    let diff = matrix(&nn.join("estimate.json")).max_abs_diff(&matrix(&ls.join("estimate.json")));
    assert!(diff <= 1e-9, "{diff}");
}

#[test]
fn zero_injection_bus_makes_the_estimate_non_unique() {
    let dir = TempDir::new().unwrap();
    let g = gen14(dir.path(), &[]);
    let out = dir.path().join("id");
    let meas = g.join("phasors.csv");
    let args = ["identify", "--meas", p(&meas), "--out", p(&out), "--diagonal", "free", "--require-exact"];
    assert_eq!(code(&args), 4);
    let d = json(&out.join("diagnostics.json"));
    assert_eq!(d["exact"], Value::Bool(false));
    assert_eq!(d["voltage_rank"], Value::from(13));
}

#[test]
fn table_without_currents_or_powers_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let meas = dir.path().join("v_only.csv");
    fs::write(&meas, "k,bus,v_re,v_im,i_re,i_im,s_re,s_im\n0,1,1,0,,,,\n0,2,1,0,,,,\n").unwrap();
    assert_eq!(code(&["identify", "--meas", p(&meas), "--out", p(&dir.path().join("o"))]), 2);
}

#[test]
fn eval_of_truth_against_itself_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let g = gen14(dir.path(), &["--slots", "2"]);
    let t = g.join("truth.json");
    let ev = dir.path().join("eval");
    ok(&["eval", "--truth", p(&t), "--input", p(&t), "--out", p(&ev)]);
    let errors = fs::read_to_string(ev.join("errors.csv")).unwrap();
    assert!(errors.lines().skip(1).all(|l| l.ends_with(",0")));
    assert_eq!(json(&ev.join("summary.json"))["max_abs_err"], Value::from(0.0));
}

#[test]
fn eval_rejects_mismatched_sizes() {
    let dir = TempDir::new().unwrap();
    let g = gen14(dir.path(), &["--slots", "2"]);
    let small = dir.path().join("small.json");
    fs::write(&small, AdmittanceMatrix::zeros_indexed(3).to_json()).unwrap();
    assert_eq!(code(&["eval", "--truth", p(&g.join("truth.json")), "--input", p(&small), "--out", p(dir.path())]), 2);
}

#[test]
fn star_recovery_end_to_end() {
    let dir = TempDir::new().unwrap();
    let mut y = AdmittanceMatrix::zeros_indexed(5);
    for (k, l) in [C64::new(1.0, -3.0), C64::new(2.0, -1.0), C64::new(0.5, -4.0), C64::new(1.5, -2.0)].iter().enumerate() {
        y.add(0, 0, *l);
        y.add(k + 1, k + 1, *l);
        y.add(0, k + 1, -*l);
    }
    let star = dir.path().join("star.json");
    fs::write(&star, y.to_json()).unwrap();
    let kr = dir.path().join("kron");
    ok(&["kron", "--input", p(&star), "--hidden", "0", "--out", p(&kr)]);
    let rec = dir.path().join("rec");
    ok(&["recover-radial", "--input", p(&kr.join("reduced.json")), "--out", p(&rec)]);
    let groups = fs::read_to_string(rec.join("groups.csv")).unwrap();
    assert_eq!(groups, "hidden_id,observed_member\nh0,1\nh0,2\nh0,3\nh0,4\n");
    let ev = dir.path().join("eval");
    ok(&["eval", "--truth", p(&star), "--input", p(&rec.join("recovered.json")), "--hidden", "0", "--out", p(&ev)]);
    let s = json(&ev.join("summary.json"));
    assert!(s["max_abs_err"].as_f64().unwrap() <= 1e-6, "{s}");
}

#[test]
fn hidden_bus7_decomposition_reports_errors() {
    let dir = TempDir::new().unwrap();
    let g = gen14(dir.path(), &["--hidden", "7"]);
    let table = fs::read_to_string(g.join("phasors.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 15 * 13);
    let est = dir.path().join("est");
    ok(&["identify", "--meas", p(&g.join("phasors.csv")), "--out", p(&est), "--mode", "reduced", "--diagonal", "free"]);
    let ev = dir.path().join("ev_reduced");
    let reduced = est.join("estimate.json");
    ok(&["eval", "--truth", p(&g.join("truth_reduced.json")), "--input", p(&reduced), "--out", p(&ev)]);
    assert!(json(&ev.join("summary.json"))["max_abs_err"].as_f64().unwrap() <= 1e-6);

    let dec = dir.path().join("dec");
    ok(&["decompose", "--input", p(&reduced), "--out", p(&dec)]);
    let d = json(&dec.join("decomposition.json"));
    assert_eq!(d["converged"], Value::Bool(true));
    let ev = dir.path().join("ev_sparse");
    ok(&["eval", "--truth", p(&g.join("truth.json")), "--input", p(&dec.join("sparse.json")), "--hidden", "7", "--out", p(&ev)]);
    assert!(json(&ev.join("summary.json"))["max_abs_err"].is_number());
}

#[test]
fn decomposition_without_convergence_exits_5() {
    let dir = TempDir::new().unwrap();
    let g = gen14(dir.path(), &["--slots", "2"]);
    let out = dir.path().join("dec");
    assert_eq!(code(&["decompose", "--input", p(&g.join("truth.json")), "--out", p(&out), "--max-iter", "1"]), 5);
    assert_eq!(json(&out.join("decomposition.json"))["converged"], Value::Bool(false));
}

#[test]
fn help_lists_defaults_and_unknown_flags_fail() {
    let help = String::from_utf8(ipf(&["gen", "--help"]).stdout).unwrap();
    for flag in ["--case", "--out", "--slots", "--scale", "--snr", "--seed", "--hidden"] {
        assert!(help.contains(flag), "{flag}");
    }
    assert!(help.contains("[default: 15]") && help.contains("[default: 0.8:1.2]"));
    let help = String::from_utf8(ipf(&["identify", "--help"]).stdout).unwrap();
    for flag in ["--mode", "--diagonal", "--known-diag", "--require-exact", "[default: ls]"] {
        assert!(help.contains(flag), "{flag}");
    }
    assert_eq!(code(&["gen", "--case", "x", "--out", "y", "--bogus"]), 2);
    assert_eq!(code(&["identify", "--meas", "x", "--out", "y", "--mode", "lasso"]), 2);
}
