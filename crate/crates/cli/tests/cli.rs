use std::fs;
use std::path::{Path, PathBuf};

use jetfactor::sysio::parse_document;
use jetfactor_cli::{run, CommandResult};
use tempfile::TempDir;

fn jf(args: &[&str]) -> CommandResult {
    run(std::iter::once("jetfactor").chain(args.iter().copied()))
}

fn exported() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let res = jf(&["fixtures", "--export", dir.path().to_str().unwrap()]);
    assert_eq!(res.code, 0, "{res:?}");
    dir
}

fn p(dir: &Path, file: &str) -> String {
    dir.join(file).to_str().unwrap().to_string()
}

fn write(dir: &Path, file: &str, body: &str) -> PathBuf {
    let path = dir.join(file);
    fs::write(&path, body).unwrap();
    path
}

fn pair_args(dir: &Path, name: &str) -> Vec<String> {
    vec![
        "--src".into(),
        p(dir, &format!("{name}.src.sys")),
        "--tgt".into(),
        p(dir, &format!("{name}.tgt.sys")),
        "--map".into(),
        p(dir, &format!("{name}.fwd.eqv")),
    ]
}

fn jf_with(head: &[&str], rest: &[String]) -> CommandResult {
    let mut args: Vec<&str> = head.to_vec();
    args.extend(rest.iter().map(String::as_str));
    jf(&args)
}

#[test]
fn verify_phi_from_files() {
    let dir = exported();
    let mut args = pair_args(dir.path(), "phi");
    args.extend(["--inv".into(), p(dir.path(), "phi.inv.eqv"), "-N".into(), "4".into()]);
    let res = jf_with(&["verify"], &args);
    assert_eq!(res.code, 0, "{res:?}");
    assert_eq!(res.report.lines().next(), Some("forward: 0 residuals; inverse: identity to order 4; J=K=0"));
    assert!(res.report.contains("assumptions: x2 != 0"));
}

#[test]
fn verify_forward_only() {
    let res = jf(&["verify", "--fixture", "prolongation"]);
    assert_eq!(res.code, 0);
    let dir = exported();
    let res = jf_with(&["verify"], &pair_args(dir.path(), "psi"));
    assert_eq!(res.report.lines().next(), Some("forward: 0 residuals; J=0"));
}

#[test]
fn corrupted_map_fails_verification() {
    let dir = exported();
    write(dir.path(), "bad.eqv", "map bad { y1 = x1*x2 - x3 y2 = u2 y3 = x2 v1 = x1*u2 + 1 v2 = u2' }");
    let mut args = pair_args(dir.path(), "phi");
    args[5] = p(dir.path(), "bad.eqv");
    let res = jf_with(&["verify"], &args);
    assert_eq!(res.code, 1);
    assert!(res.report.starts_with("forward: 1 residuals"), "{}", res.report);
    assert!(res.report.contains("residual y1"));

    let res = jf_with(&["crosscheck"], &args);
    assert_eq!(res.code, 1);
    assert!(res.report.contains("FAIL"), "{}", res.report);
}

#[test]
fn factor_phi_emits_the_three_factors() {
    let dir = exported();
    let res = jf_with(&["factor", "-N", "4"], &pair_args(dir.path(), "phi"));
    assert_eq!(res.code, 0, "{res:?}");
    assert!(res.report.contains("G = identity"));
    for name in ["matrix g {", "matrix S {", "matrix G {"] {
        assert!(res.report.contains(name), "{name}");
    }
}

#[test]
fn factor_reports_static_maps() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "a.sys", "system { states = 3 controls = 2 f1 = u1 f2 = u2 f3 = x2*u1 }");
    let m = write(dir.path(), "id.eqv", "map { y1 = x1 y2 = x2 y3 = x3 v1 = u1 v2 = u2 }");
    let s = sys.to_str().unwrap();
    let res = jf(&["factor", "--src", s, "--tgt", s, "--map", m.to_str().unwrap(), "-N", "3"]);
    assert_eq!(res.code, 1);
    assert!(res.diagnostics.iter().any(|d| d.contains("rank 0")), "{res:?}");
}

#[test]
fn classify_normal_form() {
    let dir = tempfile::tempdir().unwrap();
    let five = write(dir.path(), "five.sys", "system { states = 3 controls = 2 f1 = u1 f2 = u2 f3 = 1 + x2*u1 }");
    let res = jf(&["classify", "--sys", five.to_str().unwrap()]);
    assert_eq!(res.code, 0);
    assert_eq!(res.report, "static: 1+x2*u1 ; dynamic: Class1\n");
}

#[test]
fn classify_every_system_in_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let text = "system a { states = 3 controls = 2 f1 = u1 f2 = u2 f3 = 0 }\n\
                system b { states = 3 controls = 2 f1 = u1 f2 = u2 f3 = 1 }\n\
                system c { states = 2 controls = 1 f1 = u1 f2 = x1 }\n";
    let path = write(dir.path(), "many.sys", text);
    let res = jf(&["classify", "--sys", path.to_str().unwrap()]);
    assert_eq!(res.code, 0);
    let lines: Vec<&str> = res.report.lines().collect();
    assert_eq!(lines, ["a: static: 0 ; dynamic: Class2", "b: static: 1 ; dynamic: Class3", "c: static: (u1, x1) ; dynamic: out of table"]);
}

#[test]
fn classify_rejects_nonaffine() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "sq.sys", "system { states = 1 controls = 1 f1 = u1^2 }");
    let res = jf(&["classify", "--sys", path.to_str().unwrap()]);
    assert_eq!(res.code, 1);
    assert!(res.report.starts_with("unclassified"));
}

#[test]
fn structure_check_frames() {
    let dir = exported();
    let res = jf(&["structure-check", "--sys", &p(dir.path(), "phi.src.sys")]);
    assert_eq!(res.code, 0, "{res:?}");
    assert_eq!(res.report.lines().count(), 2);
    assert!(res.report.contains("adapted frame: structure equations hold on 9 slots to order 4"));

    let res = jf(&["structure-check", "--sys", &p(dir.path(), "prolongation.tgt.sys"), "--frame", "adapted"]);
    assert_eq!(res.code, 1);
    assert!(res.report.contains("normal form"));
}

#[test]
fn prolong_promotes_controls() {
    let dir = exported();
    let sys = p(dir.path(), "phi.src.sys");
    let res = jf(&["prolong", "--sys", &sys, "--controls", "2"]);
    assert_eq!(res.code, 0);
    assert!(res.report.contains("states = 4"), "{}", res.report);
    assert!(res.report.contains("f3 = x2*u1"));
    assert!(res.report.contains("f4 = u2"));
    let res = jf(&["prolong", "--sys", &sys, "--controls", "3"]);
    assert_eq!(res.code, 2);
}

#[test]
fn crosscheck_fixtures() {
    let res = jf(&["crosscheck", "--fixture", "phi", "--time", "1", "--tol", "1e-6"]);
    assert_eq!(res.code, 0, "{res:?}");
    assert!(res.report.ends_with("pass\n"));
    let res = jf(&["crosscheck", "--fixture", "theta", "--pin", "u2"]);
    assert_eq!(res.code, 1);
    assert!(res.report.contains("singular set"), "{}", res.report);
    assert!(res.report.contains("u2"));
    let res = jf(&["crosscheck", "--fixture", "phi", "--time", "0"]);
    assert_eq!(res.code, 2);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jf(&[]).code, 2);
    assert_eq!(jf(&["classify"]).code, 2);
    assert_eq!(jf(&["classify", "--sys", "/nonexistent/x.sys"]).code, 2);
    let bad = write(dir.path(), "bad.sys", "system {\n  states = 1\n  f1 = ?\n}");
    let res = jf(&["classify", "--sys", bad.to_str().unwrap()]);
    assert_eq!(res.code, 2);
    assert!(res.diagnostics[0].contains("3:"), "{:?}", res.diagnostics);
    assert_eq!(jf(&["verify", "--fixture", "nosuch"]).code, 2);
    assert_eq!(jf(&["verify"]).code, 2);
}

#[test]
fn unknown_keys_warn_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "k.sys", "system { states = 3 controls = 2 f1 = u1 f2 = u2 f3 = x2 colour = 1 }");
    let res = jf(&["classify", "--sys", path.to_str().unwrap()]);
    assert_eq!(res.code, 0);
    assert!(res.diagnostics.iter().any(|d| d.starts_with("warning") && d.contains("colour")));
    let res = jf(&["classify", "--strict", "--sys", path.to_str().unwrap()]);
    assert_eq!(res.code, 2);
}

#[test]
fn machine_reports_are_keyed_sections() {
    let res = jf(&["verify", "--fixture", "phi", "--format", "machine"]);
    let text = res.machine.expect("machine report");
    let doc = parse_document(&text).unwrap();
    let kinds: Vec<&str> = doc.sections.iter().map(|s| s.kind.as_str()).collect();
    assert_eq!(kinds, ["report", "verification", "map", "map"]);
    assert!(text.starts_with("report verify {\n  passed = true\n  exit = 0\n"), "{text}");

    let res = jf(&["classify", "--sys", "/nonexistent", "--format", "machine"]);
    let doc = parse_document(&res.machine.unwrap()).unwrap();
    assert_eq!(doc.sections.len(), 1);
    assert!(jf(&["fixtures"]).machine.is_none());
}

#[test]
fn reports_are_reproducible() {
    for args in [
        &["crosscheck", "--fixture", "psi", "--seed", "3", "--format", "machine"][..],
        &["fixtures", "--all", "--quick", "--seed", "2"][..],
    ] {
        let a = jf(args);
        let b = jf(args);
        assert_eq!(a, b);
        assert_eq!(a.code, 0, "{a:?}");
    }
}

#[test]
fn pullback_report_round_trips() {
    let res = jf(&["pullback", "--fixture", "phi", "-N", "3", "--frame", "contact"]);
    assert_eq!(res.code, 0);
    let body = res.report.split_once('\n').unwrap().1;
    let a = jetfactor::sysio::parse_matrix(body).unwrap();
    assert_eq!(a.rows.levels, 3);
    assert_eq!(a.band, Some(0));
}

#[test]
fn help_is_not_an_error() {
    let res = jf(&["--help"]);
    assert_eq!(res.code, 0);
    assert!(res.report.contains("crosscheck"));
}
