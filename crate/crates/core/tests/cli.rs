//! End-to-end runs of the `autobid` binary.

use std::path::Path;
use std::process::Command;

fn autobid(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_autobid"))
        .args(args)
        .current_dir(dir)
        .env("AUTOBID_THREADS", "1")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn fixture(dir: &Path) {
    std::fs::write(dir.join("fixture.csv"), "bidder,good,value\n0,0,1\n0,1,1\n1,1,3\n").unwrap();
}

#[test]
fn help_and_version_exit_zero_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(autobid(dir.path(), &["--help"]).0, 0);
    assert_eq!(autobid(dir.path(), &["--version"]).0, 0);
    assert_eq!(autobid(dir.path(), &["solve", "--bogus"]).0, 1);
    assert_eq!(autobid(dir.path(), &[]).0, 1);
    let (code, out, _) = autobid(dir.path(), &["help"]);
    assert_eq!(code, 0);
    for sub in [
        "gen",
        "solve",
        "check",
        "oracle",
        "export-miblp",
        "verify-solution",
        "exp-instability",
        "exp-sensitivity",
        "exp-reserve",
        "exp-user-ab",
        "exp-ad-ab",
    ] {
        assert!(out.contains(sub), "missing {sub}");
    }
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["gen", "--family", "correlated", "--n", "10", "--m", "14", "--sigma", "0.3", "--seed", "5", "--out", out]
    };
    assert_eq!(autobid(dir.path(), &args("a")).0, 0);
    assert_eq!(autobid(dir.path(), &args("b")).0, 0);
    let a = read(dir.path().join("a/instance.csv"));
    assert_eq!(a, read(dir.path().join("b/instance.csv")));
    assert!(a.starts_with("bidder,good,value\n"));
}

#[test]
fn solve_then_check_the_candidate() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let before = read(dir.path().join("fixture.csv"));
    let (code, _, err) = autobid(dir.path(), &["solve", "--instance", "fixture.csv"]);
    assert_eq!(code, 0, "{err}");
    let result: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/solve/result.json"))).unwrap();
    assert_eq!(result["status"], "CONVERGED");
    let alpha = result["candidate"]["alpha"][0].as_f64().unwrap();
    assert!((2.9..=3.1).contains(&alpha), "{alpha}");
    assert!(read(dir.path().join("out/solve/metrics.csv")).starts_with("scope,id,value,spend,roas,revenue,welfare\n"));
    assert!(!read(dir.path().join("out/solve/trace.jsonl")).is_empty());

    let (code, out, _) = autobid(dir.path(), &["check", "--instance", "fixture.csv", "--candidate", "out/solve/candidate.json"]);
    assert_eq!(code, 0);
    assert!(out.contains("pass"));
    assert_eq!(before, read(dir.path().join("fixture.csv")), "inputs are never modified");

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"alpha":[2,1],"allocation":[{"bidder":0,"good":0,"share":1},{"bidder":1,"good":1,"share":1}]}"#,
    )
    .unwrap();
    let (code, out, _) = autobid(dir.path(), &["check", "--instance", "fixture.csv", "--candidate", "bad.json"]);
    assert_eq!(code, 1);
    assert!(out.contains("maximal-pacing"), "{out}");
}

#[test]
fn unconverged_solve_exits_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let (code, _, _) = autobid(dir.path(), &["solve", "--instance", "fixture.csv", "--max-iters", "5", "--out", "short"]);
    assert_eq!(code, 2);
    let result: serde_json::Value = serde_json::from_str(&read(dir.path().join("short/result.json"))).unwrap();
    assert_eq!(result["status"], "NON_CONVERGED");
    assert!(dir.path().join("short/manifest.json").exists());
}

#[test]
fn config_errors_name_the_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), "{\n  \"seed\": 1,\n  \"iter\": {\"window\": \"x\"}\n}\n").unwrap();
    let (code, _, err) = autobid(dir.path(), &["solve", "--config", "cfg.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("cfg.json") && err.contains("line 3"), "{err}");
    let (code, _, err) = autobid(dir.path(), &["solve", "--config", "missing.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.json"), "{err}");
}

#[test]
fn flags_override_the_config_and_the_manifest_records_the_merge() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"generator": {"n": 3, "m": 4}, "seed": 9}"#).unwrap();
    let (code, _, _) = autobid(dir.path(), &["gen", "--config", "cfg.json", "--m", "5", "--seed", "2"]);
    assert_eq!(code, 0);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/gen/manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "gen");
    assert_eq!(manifest["seed"], 2);
    assert_eq!(manifest["config"]["generator"]["n"], 3);
    assert_eq!(manifest["config"]["generator"]["m"], 5);
    assert_eq!(manifest["outputs"], serde_json::json!(["instance.csv"]));
}

#[test]
fn oracle_export_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let (code, _, err) = autobid(dir.path(), &["oracle", "--instance", "fixture.csv"]);
    assert_eq!(code, 0, "{err}");
    let eq: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/oracle/equilibria.json"))).unwrap();
    let classes = eq["equilibria"].as_array().unwrap();
    assert_eq!(classes.len(), 1);
    assert_eq!(classes[0]["alpha_exact"], serde_json::json!(["3", "1"]));

    std::fs::write(
        dir.path().join("eq.json"),
        r#"{"alpha":[3,1],"allocation":[{"bidder":0,"good":0,"share":1},{"bidder":0,"good":1,"share":0.5},{"bidder":1,"good":1,"share":0.5}]}"#,
    )
    .unwrap();
    let (code, _, err) = autobid(dir.path(), &["export-miblp", "--instance", "fixture.csv", "--candidate", "eq.json"]);
    assert_eq!(code, 0, "{err}");
    assert!(read(dir.path().join("out/export-miblp/model.lp")).contains("End"));
    let (code, out, err) = autobid(
        dir.path(),
        &["verify-solution", "--instance", "fixture.csv", "--solution", "out/export-miblp/solution.json"],
    );
    assert_eq!(code, 0, "{out}{err}");

    std::fs::write(dir.path().join("lone.csv"), "bidder,good,value\n0,0,1\n1,1,2\n").unwrap();
    let (code, out, _) = autobid(dir.path(), &["export-miblp", "--instance", "lone.csv", "--out", "lone"]);
    assert_eq!(code, 1);
    assert!(out.contains("refused"), "{out}");
}

#[test]
fn experiments_write_long_records_and_one_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ad.json"), r#"{"spec": {"n": 6, "episodes": 5, "auctions_per_episode": 20, "runs": 3}}"#).unwrap();
    std::fs::write(dir.path().join("res.json"), r#"{"generator": {"n": 3, "m": 4}, "levels": [0.2, 0.5]}"#).unwrap();
    std::fs::write(dir.path().join("user.json"), r#"{"generator": {"n": 3, "m": 6}, "ab": {"replicates": 3}}"#).unwrap();
    std::fs::write(dir.path().join("inst.json"), r#"{"count": 1, "n": 3, "m": 4}"#).unwrap();
    std::fs::write(dir.path().join("sens.json"), r#"{"generator": {"n": 3, "m": 4}, "bidders": [0]}"#).unwrap();
    for (sub, cfg) in [
        ("exp-ad-ab", "ad.json"),
        ("exp-reserve", "res.json"),
        ("exp-user-ab", "user.json"),
        ("exp-instability", "inst.json"),
        ("exp-sensitivity", "sens.json"),
    ] {
        let (code, _, err) = autobid(dir.path(), &[sub, "--config", cfg]);
        assert_eq!(code, 0, "{sub}: {err}");
        let out = dir.path().join("out").join(sub);
        let mut names: Vec<String> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        assert_eq!(names, ["manifest.json", "records.csv", "summary.json"], "{sub}");
        assert!(read(out.join("records.csv")).starts_with("experiment,seed,arm,metric,value\n"));
    }
}
