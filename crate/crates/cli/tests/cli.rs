use std::fs;
use std::path::Path;
use std::process::Command;

use fracsym_cli::{emit_report, parse_config_str, run, RunReport};
use serde_json::Value;

const BASE: &str = r#"
seed = 3

[domain]
label = "ball"
radius = 1.0

[grid]
h = 0.125
extents = [20, 20]

[kernel]
s = 0.5
"#;

fn config(tasks: &str) -> String {
    format!("{BASE}\n{tasks}")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracsym"))
}

fn run_to(text: &str, dir: &Path) -> RunReport {
    let cfg = parse_config_str(text).unwrap();
    let mut report = run(&cfg, None).unwrap();
    emit_report(&mut report, dir).unwrap();
    report
}

#[test]
fn verify_all_on_disk_passes_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_to(&config("[[tasks]]\nkind = \"verify-all\"\np = 2.0\n"), dir.path());
    assert!(report.passed());
    let checks: Vec<&str> = report.tasks[0].reports.iter().map(|r| r.check.as_str()).collect();
    for name in ["symmetry", "sign", "monotonicity", "moving-plane", "polarization", "lemma2.2"] {
        assert!(checks.contains(&name), "{name} missing from {checks:?}");
    }
    assert!(report.tasks[0].reports.iter().all(|r| r.passed));
}

#[test]
fn kernel_sweep_task_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_to(&config("[[tasks]]\nkind = \"kernel-sweep\"\nsamples = 5000\npoints = 30\n"), dir.path());
    assert!(report.passed());
    assert_eq!(report.tasks[0].values["violations"], 0.0);
}

#[test]
fn empty_task_list_echoes_config_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, BASE).unwrap();
    let out = dir.path().join("out");
    let status = bin().arg("run").arg(&path).arg("--out").arg(&out).arg("--no-cache").status().unwrap();
    assert!(status.success());
    let json: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["tasks"].as_array().unwrap().len(), 0);
    assert_eq!(json["config"]["kernel"]["s"], 0.5);
    assert_eq!(json["config"]["domain"]["label"], "ball");
    assert_eq!(json["status"]["passed"], true);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let text = config("[[tasks]]\nkind = \"eig\"\ncount = 2\n\n[[tasks]]\nkind = \"minimize-p\"\np = 3.0\n");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_to(&text, a.path());
    run_to(&text, b.path());
    for name in ["report.json", "summary.csv", "summary.txt", "task01-minimizer.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    // Timestamps differ, so the metadata file is outside the contract.
    assert!(fs::read(a.path().join("metadata.json")).is_ok());
}

#[test]
fn manifest_lists_every_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_to(&config("[[tasks]]\nkind = \"eig\"\ncount = 2\n\n[[tasks]]\nkind = \"torsion\"\n"), dir.path());
    let mut listed: Vec<String> = report.manifest.iter().map(|m| m.path.clone()).collect();
    listed.push("report.json".into());
    listed.sort();
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    for m in &report.manifest {
        if let Some(bytes) = m.bytes {
            assert_eq!(fs::metadata(dir.path().join(&m.path)).unwrap().len(), bytes);
        }
    }
}

#[test]
fn summary_csv_header_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    run_to(&config("[[tasks]]\nkind = \"antisym-eig\"\n"), dir.path());
    let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "task,kind,check,passed,margin,tolerance,note");
    assert_eq!(text.lines().nth(1).unwrap(), "0,antisym-eig,converged,true,,,");
}

#[test]
fn failing_check_sets_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    // A one-iteration budget cannot converge.
    let text = config("[solver]\nmax_iterations = 1\n\n[[tasks]]\nkind = \"eig\"\n");
    let path = dir.path().join("c.toml");
    fs::write(&path, text).unwrap();
    let out = dir.path().join("out");
    let status = bin().arg("run").arg(&path).arg("--out").arg(&out).arg("--no-cache").status().unwrap();
    assert_eq!(status.code(), Some(1));
    let json: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["status"]["passed"], false);
    assert_eq!(json["status"]["failed_tasks"][0], 0);
    assert_eq!(json["tasks"][0]["converged"], false);
}

#[test]
fn check_subcommand_reports_all_problems() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, config("[[tasks]]\nkind = \"eigen\"\n").replace("s = 0.5", "s = 1.2")).unwrap();
    let out = bin().arg("check").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kernel.s"), "{err}");
    assert!(err.contains("tasks[0].kind"), "{err}");
    assert!(err.contains("verify-all"), "{err}");

    fs::write(&path, BASE).unwrap();
    assert!(bin().arg("check").arg(&path).status().unwrap().success());
}

#[test]
fn weight_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let path = dir.path().join("c.toml");
    fs::write(&path, config("[[tasks]]\nkind = \"eig\"\n")).unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let status = bin()
            .arg("run")
            .arg(&path)
            .arg("--out")
            .arg(&out)
            .env("FRACSYM_CACHE_DIR", &cache)
            .status()
            .unwrap();
        assert!(status.success());
        let meta: Value = serde_json::from_slice(&fs::read(out.join("metadata.json")).unwrap()).unwrap();
        assert_eq!(meta["cache"], if k == 0 { "built" } else { "hit" });
        reports.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    // Output directories differ only through --out, which is not echoed twice.
    let strip = |b: &[u8]| String::from_utf8_lossy(b).replace("out0", "outX").replace("out1", "outX");
    assert_eq!(strip(&reports[0]), strip(&reports[1]));
}

#[test]
fn kernel_sweep_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--threads", "2", "kernel-sweep", "--s", "0.25,0.75", "--points", "20", "--pairs", "2000", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 6, "{stdout}");
    let json: Value = serde_json::from_slice(&fs::read(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 6);
}
