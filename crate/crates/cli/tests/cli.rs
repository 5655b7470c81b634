//! End-to-end runs of the `egt` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn egt(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_egt"));
    cmd.args(args).env_remove("EGT_THREADS");
    if let Some(t) = threads {
        cmd.env("EGT_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn run_to(file: &str, out: &Path, extra: &[&str], threads: Option<&str>) -> Output {
    let out_s = out.display().to_string();
    let mut args = vec!["run", file, "--out", &out_s, "--quiet"];
    args.extend_from_slice(extra);
    egt(&args, threads)
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn hawk_dove_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to(&scenario("hawk-dove.toml"), dir.path(), &[], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "pop", "strategy", "share"]);
    let last_hawk = rows.iter().rev().find(|r| r[2] == "hawk").unwrap();
    assert!((last_hawk[3].parse::<f64>().unwrap() - 0.5).abs() < 1e-6);
    let summary = read_json(dir.path().join("summary.json"));
    assert_eq!(summary["converged"], true);
    let manifest = read_json(dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    for a in manifest["artifacts"].as_array().unwrap() {
        assert!(dir.path().join(a.as_str().unwrap()).exists());
    }
}

#[test]
fn neutral_moran_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to(&scenario("moran-neutral.toml"), dir.path(), &[], None);
    assert!(out.status.success());
    let s = read_json(dir.path().join("summary.json"));
    let est = s["fixation"]["estimate"].as_f64().unwrap();
    let se = s["fixation"]["std_error"].as_f64().unwrap();
    assert!((est - 0.1).abs() < 3.0 * se, "{est} ± {se}");
}

#[test]
fn round_robin_scenario() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_to(&scenario("ipd-round-robin.toml"), dir.path(), &[], None).status.success());
    let (header, rows) = csv_rows(dir.path().join("scores.csv"));
    assert_eq!(header, ["strategy", "total", "mean_per_round"]);
    let totals: Vec<(String, f64)> = rows.iter().map(|r| (r[0].clone(), r[1].parse().unwrap())).collect();
    assert_eq!(totals, [("tft".to_string(), 39.0), ("alld".into(), 64.0), ("allc".into(), 30.0)]);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(egt(&["validate", &scenario("hawk-dove.toml")], None).status.code(), Some(0));

    let no_game = write(dir.path(), "a.toml", "schema_version = 1\nkind = \"replicator\"\n");
    let out = egt(&["validate", &no_game], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 problem)"));

    let hd = std::fs::read_to_string(scenario("hawk-dove.toml")).unwrap();
    let neg = write(dir.path(), "b.toml", &hd.replace("v = 2.0", "v = -1.0"));
    let out = egt(&["validate", &neg], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("v > 0"));

    let missing = dir.path().join("missing.toml").display().to_string();
    assert_eq!(egt(&["validate", &missing], None).status.code(), Some(3));

    let garbled = write(dir.path(), "c.toml", "schema_version = = 1");
    assert_eq!(egt(&["validate", &garbled], None).status.code(), Some(2));
}

#[test]
fn runtime_failure_leaves_only_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "d.toml",
        "schema_version = 1\nkind = \"replicator\"\n[game]\ntype = \"matrix\"\na = [[0, 1e6], [1e6, 0]]\n[dynamics]\ndt = 1.0\nt_end = 10\nx0 = [0.9, 0.1]\n",
    );
    let out_dir = dir.path().join("out");
    assert!(run_to(&scenario("hawk-dove.toml"), &out_dir, &[], None).status.success());
    let out = run_to(&bad, &out_dir, &[], None);
    assert_eq!(out.status.code(), Some(1));
    let names: Vec<String> = std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(names, ["manifest.json"]);
    let m = read_json(out_dir.join("manifest.json"));
    assert_eq!(m["status"], "error");
    assert!(m["error"].as_str().unwrap().contains("diverged"));
}

fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn manifest_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert!(run_to(&scenario("ipd-round-robin.toml"), &first, &["--seed", "17"], None).status.success());
    let echo = read_json(first.join("manifest.json"))["scenario"].clone();
    assert_eq!(echo["seed"], 17);
    let echo_path = write(dir.path(), "echo.json", &echo.to_string());
    assert_eq!(egt(&["validate", &echo_path], None).status.code(), Some(0));
    let second = dir.path().join("second");
    assert!(run_to(&echo_path, &second, &[], None).status.success());
    assert_eq!(artifact_bytes(&first), artifact_bytes(&second));
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let noisy = write(
        dir.path(),
        "noisy.toml",
        "schema_version = 1\nkind = \"ipd-tournament\"\nseed = 5\n[tournament]\nroster = [\"tft\", \"wsls\", \"random:p=0.5\", \"zd:chi=2,phi=0.1\"]\nrounds = 200\nnoise = 0.05\necological = true\n",
    );
    let contests = write(
        dir.path(),
        "contests.toml",
        "schema_version = 1\nkind = \"attrition\"\nseed = 3\n[game]\ntype = \"attrition\"\nv = 2.0\nc = 1.0\n[contest]\ntrials = 2000\nstrategy_a = \"ess\"\nstrategy_b = \"pure:1.5\"\n",
    );
    for file in [noisy, contests, scenario("moran-neutral.toml")] {
        let (one, many) = (dir.path().join("one"), dir.path().join("many"));
        assert!(run_to(&file, &one, &[], Some("1")).status.success());
        assert!(run_to(&file, &many, &[], Some("4")).status.success());
        assert_eq!(artifact_bytes(&one), artifact_bytes(&many), "{file}");
        std::fs::remove_dir_all(&one).unwrap();
        std::fs::remove_dir_all(&many).unwrap();
    }
}

#[test]
fn attrition_contests_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "a.json",
        r#"{"schema_version": 1, "kind": "attrition", "seed": 1,
            "game": {"type": "attrition", "v": 2.0, "c": 1.0},
            "contest": {"trials": 500, "strategy_a": "exp:0.5", "strategy_b": "pure:1.0"}}"#,
    );
    let out = dir.path().join("out");
    assert!(run_to(&file, &out, &[], None).status.success());
    let (header, rows) = csv_rows(out.join("contests.csv"));
    assert_eq!(header, ["trial", "winner", "duration", "payoff_a", "payoff_b"]);
    assert_eq!(rows.len(), 500);
    for r in &rows {
        assert!(r[1] == "a" || r[1] == "b");
        let d: f64 = r[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&d));
    }
}

#[test]
fn presets_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let listed = egt(&["list-presets"], None);
    let text = String::from_utf8(listed.stdout).unwrap();
    for name in ["hawk-dove-mixed", "ipd-coevolution", "attrition-convention"] {
        assert!(text.contains(name));
    }
    let out = dir.path().display().to_string();
    let run = egt(&["preset", "hawk-dove-mixed", "--set", "v=1", "--set", "c=3", "--out", &out, "--quiet"], None);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let s = read_json(dir.path().join("summary.json"));
    assert!((s["summary"]["single_final_hawk"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert_eq!(s["summary"]["two_population_regime"], "asymmetric-convention");
    let (_, rows) = csv_rows(dir.path().join("trajectory.csv"));
    let pops: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(pops.into_iter().collect::<Vec<_>>(), ["ai", "human", "single"]);

    assert_eq!(egt(&["preset", "no-such-preset"], None).status.code(), Some(2));
    assert_eq!(egt(&["preset", "hawk-dove-mixed", "--set", "bogus=1", "--out", &out], None).status.code(), Some(2));
}

#[test]
fn plot_and_bimatrix() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "bm.toml",
        "schema_version = 1\nkind = \"bimatrix\"\nplot = true\n[game]\ntype = \"hawk-dove\"\nv = 2.0\nc = 4.0\n[dynamics]\nt_end = 100.0\nx0 = [0.6, 0.4]\ny0 = [0.4, 0.6]\n",
    );
    let out = dir.path().join("out");
    assert!(run_to(&file, &out, &[], None).status.success());
    let svg = std::fs::read_to_string(out.join("trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let s = read_json(out.join("summary.json"));
    assert!(s["final_row"][0].as_f64().unwrap() > 0.999);
    assert!(s["final_col"][0].as_f64().unwrap() < 0.001);
    assert_eq!(s["equilibria"]["profiles"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_thread_variable_is_rejected() {
    assert_eq!(egt(&["list-presets"], Some("zero")).status.code(), Some(2));
}
