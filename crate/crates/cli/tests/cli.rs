use std::path::PathBuf;
use std::process::{Command, Output};

fn experiments() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn exp(n: usize) -> String {
    experiments().join(format!("exp{n}.deladas")).display().to_string()
}

fn deladas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deladas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn count_reports_the_table_columns() {
    let o = deladas(&["count", &exp(7)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("variables=80 solutions=104 exhausted=true"));
    assert!(lines.next().unwrap().starts_with("first-solution-ms="));

    let o = deladas(&["count", &exp(5)]);
    assert_eq!(stdout(&o).lines().next(), Some("variables=16 solutions=65536 exhausted=true"));
}

#[test]
fn count_json_and_limits() {
    let o = deladas(&["count", &exp(11), "--limit", "10", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["variables"], 230);
    assert_eq!(v["solutions"], 10);
    assert_eq!(v["exhausted"], false);
    assert!(v["first_solution_ms"].is_number());
}

#[test]
fn max_count_overrides_the_description() {
    let o = deladas(&["count", &exp(7), "--max-count", "1"]);
    // Four hosts by two types, plus four client slots by four server slots.
    assert!(stdout(&o).starts_with("variables=24 solutions=104 exhausted=true"), "{}", stdout(&o));
}

#[test]
fn infeasible_description_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(exp(11))
        .unwrap()
        .replace(">= 3\n)", ">= 6\n)");
    assert!(src.contains(">= 6"));
    let p = dir.path().join("tight.deladas");
    std::fs::write(&p, src).unwrap();
    let o = deladas(&["count", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("variables=230 solutions=0 exhausted=true"));
    let o = deladas(&["solve", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_reports_diagnostics_with_exit_1() {
    let o = deladas(&["check", &exp(11)]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("ok: 3 interface(s), 3 component type(s), 10 host(s)"));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.deladas");
    std::fs::write(&p, "component type X ( provides interface Missing )\n").unwrap();
    let o = deladas(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error"), "{}", stderr(&o));

    let o = deladas(&["check", "/nonexistent/file.deladas"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_writes_cdd_files_and_validate_accepts_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cdds");
    let o = deladas(&["solve", &exp(7), "--limit", "104", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 104);
    assert!(files[0].ends_with("exp7-0001.cdd"));
    for f in files.iter().step_by(13) {
        let o = deladas(&["validate", f.to_str().unwrap(), "--dsd", &exp(7)]);
        assert!(o.status.success(), "{}", stdout(&o));
        assert!(stdout(&o).ends_with("compliant\n"));
    }
}

#[test]
fn validate_names_the_violated_conjunct() {
    let dir = tempfile::tempdir().unwrap();
    let o = deladas(&["solve", &exp(11), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let good = dir.path().join("exp11-0001.cdd");
    let text = std::fs::read_to_string(&good).unwrap();
    let maths_host = text
        .lines()
        .find(|l| l.contains("<instance") && l.contains("MathsService"))
        .and_then(|l| l.split('"').nth(1))
        .unwrap()
        .to_string();
    let mutated: String = text
        .lines()
        .filter(|l| !l.contains(&format!("host=\"{maths_host}\" type=\"MathsService\"")))
        .filter(|l| !l.contains(&format!("client-host=\"{maths_host}\"")))
        .map(|l| format!("{l}\n"))
        .collect();
    let bad = dir.path().join("bad.cdd");
    std::fs::write(&bad, mutated).unwrap();
    let o = deladas(&["validate", bad.to_str().unwrap(), "--dsd", &exp(11)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL mathsServiceCons[4] card(instancesOf(MathsService in deployment)) >= 3"), "{out}");
    assert!(out.ends_with("not compliant\n"));

    let o = deladas(&["validate", bad.to_str().unwrap(), "--dsd", &exp(11), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["mathsServiceCons[4]"]);
}

#[test]
fn pick_prefers_the_current_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let o = deladas(&["solve", &exp(11), "--limit", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let third = dir.path().join("exp11-0003.cdd");
    let o = deladas(&["pick", &exp(11), "--current", third.to_str().unwrap(), "--limit", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), std::fs::read_to_string(&third).unwrap());
    assert!(stderr(&o).contains("candidate 3 of 5"));
    assert!(stderr(&o).contains("cost 0"));

    let o = deladas(&["pick", &exp(11), "--policy", "first", "--limit", "5"]);
    let first = std::fs::read_to_string(dir.path().join("exp11-0001.cdd")).unwrap();
    assert_eq!(stdout(&o), first);

    let o = deladas(&["pick", &exp(11), "--weights", "1,0,1"]);
    assert_eq!(o.status.code(), Some(2), "clap usage errors exit 2");
}

#[test]
fn simulate_is_deterministic_and_reports_unresolvable_states() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("faults.txt");
    std::fs::write(&script, "at 15 host-crash h4\n").unwrap();
    let args = ["simulate", &exp(11), "--script", script.to_str().unwrap(), "--seed", "3", "--until", "40"];
    let a = deladas(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&deladas(&args)));
    let log = stdout(&a);
    assert!(log.lines().all(|l| l.split(' ').count() >= 3));
    assert!(log.contains("15 fault h4 host-crash"));
    assert!(log.contains("evolve realm hosts=9 removed=[h4]"));

    std::fs::write(&script, "at 15 host-crash h1\nat 15 host-crash h2\nat 15 host-crash h3\n").unwrap();
    let o = deladas(&["simulate", &exp(11), "--script", script.to_str().unwrap(), "--until", "30"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("unresolvable-violation"));

    std::fs::write(&script, "at 1 meteor-strike h1\n").unwrap();
    let o = deladas(&["simulate", &exp(11), "--script", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn bench_prints_one_row_per_experiment() {
    let o = deladas(&["bench", "--only", "exp1,exp5,exp7", "--time-budget", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().map(|l| l.split(' ').collect()).collect();
    assert_eq!(rows[0], ["name", "variables", "solutions", "exhausted", "first-ms", "thousand-ms", "elapsed-ms"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[1][..4], ["exp1", "1", "2", "true"]);
    assert_eq!(&rows[2][..4], ["exp5", "16", "65536", "true"]);
    assert_eq!(&rows[3][..4], ["exp7", "80", "104", "true"]);
    assert_eq!(rows[1][5], "-");
}
