use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn spd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spd"))
        .args(args)
        .current_dir(root())
        .env_remove("SPD_SIGNATURE")
        .output()
        .expect("spd runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

const LOWER_LEFT: &str = "lhd box rhd lhd lhd rhd v1 <= box rhd (box brhd blhd rhd v2 /\\ box brhd dia v2)";
const RUNNING: &str =
    "lhd (box rhd lhd lhd rhd v1 /\\ rhd dia rhd v1) <= box rhd (brhd v1 \\/ box brhd (blhd rhd v2 \\/ dia v2))";

#[test]
fn check_running_example_is_analytic() {
    let o = spd(&["check", RUNNING]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("analytic\n"), "{out}");
    assert!(out.contains("skeleton: lhd (box rhd lhd ?y1 /\\ rhd dia ?x1) <= box rhd (?x2 \\/ ?x3)"));
}

#[test]
fn check_biheyting_is_clopen_analytic() {
    let o = spd(&[
        "-s",
        "biheyting",
        "check",
        "lhd lhd ((v1 -< v2) \\/ rhd (v1 -> v2)) <= box ((v1 -> v2) /\\ box (v1 -< v2))",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("clopen-analytic\n"));
    assert!(out.contains("t1 := v1 -< v2") && out.contains("t2 := v1 -> v2"));
}

#[test]
fn check_golden_and_exit_codes() {
    let o = spd(&["check", "rhd v <= dia v"]);
    assert_eq!(stdout(&o), golden("check_rhd_dia.txt"));
    let o = spd(&["check", "box v <= "]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parse error at 1:10"));
    let o = spd(&["check", "box (v -> w) <= w"]);
    assert_eq!(o.status.code(), Some(2), "no -> in the distributive signature");
    let o = spd(&["-s", "heyting", "check", "box dia v <= dia box v"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("neither\n"));
}

#[test]
fn correspond_trace_has_six_steps() {
    let o = spd(&["correspond", "--trace", LOWER_LEFT]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out, golden("trace.txt"));
    for k in 1..=6 {
        assert!(out.contains(&format!("Step {k}")), "missing step {k}");
    }
}

#[test]
fn correspond_goldens() {
    assert_eq!(stdout(&spd(&["correspond", "box box v <= box v"])), golden("correspond_box_box.txt"));
    let o = spd(&["correspond", "bot <= v"]);
    assert_eq!(stdout(&o), "()\n");
}

#[test]
fn inverse_examples() {
    let o = spd(&["inverse", "-f", "corpus/inverse/06-act.fo"]);
    assert_eq!(stdout(&o), "box x /\\ (x -> box y) <= box (x /\\ y)\n");
    let o = spd(&["inverse", "-f", "corpus/inverse/07-cta-inv.fo"]);
    assert_eq!(stdout(&o), "box x <= brhd ~x\nrhd (a /\\ dia a) <= rhd a\n");
    let o = spd(&["inverse", "-f", "corpus/inverse/08-imp-restrictor.fo"]);
    assert_eq!(stdout(&o), "dia v -> box v <= box v\n");
}

#[test]
fn inverse_rejects_non_kracht() {
    let o = spd(&["inverse", "A x y. (x nD y => y nC x)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Kracht item"), "{}", stderr(&o));
}

#[test]
fn inverse_all_roles_and_simplify() {
    let o = spd(&[
        "-s",
        "heyting",
        "inverse",
        "--all-roles",
        "A z y x. (z \\/ y prec ~x & (z /\\ x) C y => z C (x /\\ y))",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("# A z:v y:v x:a."), "{out}");
    let o = spd(&["inverse", "--simplify", "-f", "corpus/inverse/03-or-down.fo"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "top <= top\n");
    assert!(stderr(&o).contains("heuristic"));
}

#[test]
fn stdin_and_structured_report() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_spd"))
        .args(["--report", "structured", "inverse", "-"])
        .current_dir(root())
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(b"A x. E y. (x nD y & y nC x)").unwrap();
    let o = child.wait_with_output().unwrap();
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.contains("\"output\":[\"blhd x <= brhd x\"]"), "{out}");
}

#[test]
fn roles_lists_readings() {
    let o = spd(&["roles", "A v a c. (a <= c & c prec v => a nC v)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().count() >= 1);
    let o = spd(&["roles", "A x y. (x nD y => y nC x)"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_bundled_suite() {
    let o = spd(&["verify", "box v <= brhd v", "--model-dir", "corpus/models"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("50 models, 0 disagreement(s)\n"));
    let o = spd(&["verify", "box box v <= box v", "--model-dir", "corpus/models"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_reports_mutant_disagreement() {
    let o = spd(&[
        "verify",
        "box box v <= box v",
        "--fo",
        "A v a c1. (a prec c1 & c1 prec v => v prec a)",
        "--model-dir",
        "corpus/models",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains(" disagree")).expect("a disagreement");
    assert!(line.split(' ').count() == 3, "witness printed: {line}");
}

#[test]
fn verify_empty_dir_fails() {
    let dir = std::env::temp_dir().join("spd-empty-models");
    std::fs::create_dir_all(&dir).unwrap();
    let o = spd(&["verify", "v <= v", "--model-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no models"));
}

#[test]
fn verify_rejects_invalid_model() {
    let dir = std::env::temp_dir().join("spd-bad-models");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        dir.join("bad.toml"),
        "elements = [\"0\", \"1\"]\nhasse = [[\"0\", \"1\"]]\n[rels]\nprec0 = [[\"1\", \"1\"]]\n",
    )
    .unwrap();
    let o = spd(&["verify", "v <= v", "--model-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid model bad"), "{}", stderr(&o));
}

#[test]
fn dual_golden() {
    let o = spd(&["dual", "corpus/models/m010.toml"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("dual_m010.txt"));
}

#[test]
fn deterministic_output() {
    let a = spd(&["verify", "dia v <= v", "--seed", "3", "--max-size", "3"]);
    let b = spd(&["verify", "dia v <= v", "--seed", "3", "--max-size", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn signature_from_env_and_header() {
    let o = Command::new(env!("CARGO_BIN_EXE_spd"))
        .args(["inverse", "A x y a. (a prec x & a /\\ x prec y => a prec x /\\ y)"])
        .env("SPD_SIGNATURE", "heyting")
        .output()
        .unwrap();
    assert_eq!(stdout(&o), "box x /\\ (x -> box y) <= box (x /\\ y)\n");
    let o = spd(&["inverse", "-f", "corpus/inverse/04-cta-down.fo"]);
    assert_eq!(stdout(&o), "~dia (z \\/ y) /\\ (y -> rhd z) <= z -> brhd y\n");
}
