use std::{
    fs,
    path::{Path, PathBuf},
    process::{Command, Output},
};

use serde_json::Value;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn argwin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_argwin"))
        .args(args)
        .env_remove("ARGWIN_SEED")
        .output()
        .expect("argwin runs")
}

fn ok(args: &[&str]) -> Output {
    let out = argwin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_of(out: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).expect("stderr is one JSON object")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_writes_states_and_winners() {
    let dir = tempfile::tempdir().unwrap();
    let tree = corpus().join("mixed-five.json");
    let out = ok(&["solve", "--tree", s(&tree), "--out", s(dir.path())]);
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, serde_json::json!(["c", "d", "e"]));
    let states = json(&dir.path().join("states.json"));
    assert_eq!(states["rule"], "grounded");
    assert_eq!(states["states"]["a"], -1);
    assert_eq!(states["states"]["d"], 1);
    assert_eq!(json(&dir.path().join("winners.json")), printed);
    let manifest = json(&dir.path().join("run_manifest.json"));
    assert_eq!(manifest["command"], "solve");
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|o| o == "states.json"));
}

#[test]
fn solve_with_other_rules() {
    let dir = tempfile::tempdir().unwrap();
    let tree = corpus().join("attack-chain.json");
    let grounded = ok(&["solve", "--tree", s(&tree), "--out", s(dir.path())]);
    assert_eq!(serde_json::from_slice::<Value>(&grounded.stdout).unwrap(), serde_json::json!(["a", "d", "e"]));
    ok(&["solve", "--tree", s(&tree), "--rule", "gen-majority", "--beta", "2", "--out", s(dir.path())]);
    assert_eq!(json(&dir.path().join("states.json"))["rule"], "gen-majority(beta=2)");
    ok(&["solve", "--tree", s(&tree), "--rule", "leaves-exception", "--out", s(dir.path())]);
    assert_eq!(json(&dir.path().join("states.json"))["rule"], "leaves-exception");
}

#[test]
fn simulate_outputs_and_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["simulate", "--gen", "pa", "--nodes", "30", "--trees", "50", "--seed", "5", "--out", s(&a)]);
    let out = Command::new(env!("CARGO_BIN_EXE_argwin"))
        .args(["simulate", "--gen", "pa", "--nodes", "30", "--trees", "50", "--out", s(&b)])
        .env("ARGWIN_SEED", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(a.join("stats.csv")).unwrap(), fs::read(b.join("stats.csv")).unwrap());
    let stats = json(&a.join("stats.json"));
    assert_eq!(stats["levels"][0]["distance_from_max"], 0);
    assert_eq!(json(&a.join("run_manifest.json"))["seed"], 5);
}

#[test]
fn simulate_generators() {
    let dir = tempfile::tempdir().unwrap();
    for (name, extra) in [
        ("poisson", vec!["--lambda", "1.5"]),
        ("powerlaw", vec!["--alpha", "2.5", "--k-min", "1", "--depth", "4"]),
        ("empirical", vec!["--histogram", "0:0.4,1:0.3,2:0.3", "--depth", "5"]),
    ] {
        let out = dir.path().join(name);
        let mut args = vec!["simulate", "--gen", name, "--trees", "40", "--out", s(&out)];
        args.extend(extra);
        ok(&args);
        assert!(fs::read_to_string(out.join("stats.csv")).unwrap().lines().count() > 1, "{name}");
    }
}

#[test]
fn signed_mean_column_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--trees", "20", "--signed-mean", "--out", s(dir.path())]);
    let header = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert!(header.lines().next().unwrap().ends_with(",signed_mean"));
}

#[test]
fn export_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("trees");
    ok(&["simulate", "--gen", "pa", "--nodes", "25", "--trees", "12", "--out", s(&dir.path().join("o")), "--export-dir", s(&export)]);
    let files: Vec<_> = fs::read_dir(&export).unwrap().collect();
    assert_eq!(files.len(), 12);
    ok(&["solve", "--tree", s(&export.join("tree_07.json")), "--out", s(&dir.path().join("s"))]);
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"gen": "pa", "nodes": 20, "trees": 15, "q": 0.3, "seed": 9}"#).unwrap();
    let out = dir.path().join("o");
    ok(&["simulate", "--config", s(&config), "--trees", "25", "--out", s(&out)]);
    let params = &json(&out.join("run_manifest.json"))["params"];
    assert_eq!(params["trees"], 25);
    assert_eq!(params["q"], 0.3);
    assert_eq!(params["gen"], "pa");
    assert_eq!(params["seed"], 9);

    // A manifest replays its own run.
    let replay = dir.path().join("replay");
    ok(&["simulate", "--config", s(&out.join("run_manifest.json")), "--out", s(&replay)]);
    assert_eq!(fs::read(out.join("stats.csv")).unwrap(), fs::read(replay.join("stats.csv")).unwrap());
}

#[test]
fn recurrence_variants() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    ok(&["recurrence", "--lambda", "2", "--depth", "8", "--q", "0.5", "--out", s(&full)]);
    let profile = json(&full.join("profile.json"));
    let p = profile["profiles"][0]["points"][3]["p"].as_f64().unwrap();
    assert!((p - (-1f64).exp()).abs() < 1e-6);
    assert_eq!(profile["regime"]["regime"], "flat");

    let nl = dir.path().join("nl");
    ok(&["recurrence", "--q", "0.1", "--variant", "no-leaves", "--out", s(&nl)]);
    let csv = fs::read_to_string(nl.join("profile.csv")).unwrap();
    assert!(csv.contains("leaf-removed") && csv.contains("full"));

    let b = dir.path().join("b");
    ok(&["recurrence", "--q", "0.1", "--variant", "bounds", "--p0", "0.1", "--out", s(&b)]);
    assert!(fs::read_to_string(b.join("cobweb.csv")).unwrap().starts_with("step,x,y"));
    let csv = fs::read_to_string(b.join("profile.csv")).unwrap();
    assert!(csv.contains("upper-bound") && csv.contains("lower-bound"));

    let pl = dir.path().join("pl");
    ok(&["recurrence", "--model", "powerlaw", "--alpha", "2.2", "--q", "0.3", "--out", s(&pl)]);
    assert!(json(&pl.join("profile.json"))["profiles"][0]["truncation_terms"].as_u64().unwrap() > 0);
}

#[test]
fn recommend_from_profile_and_from_q() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r");
    ok(&["recurrence", "--q", "0.1", "--depth", "6", "--out", s(&r)]);
    let rec = dir.path().join("rec");
    ok(&["recommend", "--profile", s(&r.join("profile.json")), "--q-hat", "0.1", "--out", s(&rec)]);
    let report = json(&rec.join("recommendation.json"));
    assert_eq!(report["recommended_order"], serde_json::json!([6, 4, 2, 0, 5, 3, 1]));

    let rec2 = dir.path().join("rec2");
    ok(&["recommend", "--depth", "4", "--q-hat", "0.9", "--out", s(&rec2)]);
    let report = json(&rec2.join("recommendation.json"));
    assert_eq!(report["regime"], "monotone-decay");
    assert_eq!(report["recommended_order"], serde_json::json!([4, 3, 2, 1, 0]));
}

#[test]
fn analyze_example_corpus() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["analyze", "--corpus", s(&corpus()), "--out", s(dir.path())]);
    let report = json(&dir.path().join("cleaning_report.json"));
    assert_eq!(report["trees_in"], 64);
    assert_eq!(report["removed_small"], 3);
    assert_eq!(report["trees_out"], 61);
    let bins = json(&dir.path().join("bins.json"));
    for class in ["low", "balanced", "high", "unclassified"] {
        assert!(bins["members"][class].is_array(), "{class}");
        assert!(dir.path().join(class).join("recommendation.json").is_file(), "{class}");
        assert!(dir.path().join(class).join("stats.csv").is_file(), "{class}");
    }
    for class in ["low", "balanced", "high"] {
        assert!(dir.path().join(class).join("profiles.csv").is_file(), "{class}");
    }
    let fit = json(&dir.path().join("powerlaw_fit.json"));
    assert!(fit["alpha"].as_f64().unwrap() > 1.0);
    assert!(json(&dir.path().join("run_manifest.json"))["outputs"].as_array().unwrap().len() > 10);
}

#[test]
fn analyze_poisson_exports_reads_low_class_by_parity() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("trees");
    ok(&[
        "simulate", "--gen", "poisson", "--lambda", "2", "--depth", "6", "--q", "0.1", "--trees", "150",
        "--require-full-depth", "--seed", "3", "--out", s(&dir.path().join("sim")), "--export-dir", s(&trees),
    ]);
    let out = dir.path().join("an");
    ok(&["analyze", "--corpus", s(&trees), "--out", s(&out)]);
    let rec = json(&out.join("low/recommendation.json"));
    assert_eq!(rec["structure"], "homogeneous");
    assert_eq!(rec["report"]["regime"], "oscillatory");
    assert_eq!(rec["report"]["recommended_order"], serde_json::json!([6, 4, 2, 0, 5, 3, 1]));
}

#[test]
fn analyze_pa_exports_balanced_profile_decreases_toward_root() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("trees");
    ok(&[
        "simulate", "--gen", "pa", "--nodes", "50", "--q", "0.5", "--trees", "400", "--seed", "4", "--out",
        s(&dir.path().join("sim")), "--export-dir", s(&trees),
    ]);
    let out = dir.path().join("an");
    ok(&["analyze", "--corpus", s(&trees), "--out", s(&out)]);
    let stats = json(&out.join("balanced/stats.json"));
    let p: Vec<f64> = stats["levels"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|l| l["n_trees"].as_u64().unwrap() >= 100)
        .map(|l| l["p_win"].as_f64().unwrap())
        .collect();
    assert!(p.len() >= 4, "{p:?}");
    assert!(p.windows(2).all(|w| w[1] < w[0]), "{p:?}");
}

#[test]
fn fit_powerlaw_from_degrees_file() {
    let dir = tempfile::tempdir().unwrap();
    let degrees: Vec<String> = (1..=400u64).map(|i| (1 + 1000 / (i * i)).to_string()).collect();
    let file = dir.path().join("deg.txt");
    fs::write(&file, degrees.join("\n")).unwrap();
    let out = ok(&["fit-powerlaw", "--degrees", s(&file), "--out", s(&dir.path().join("o"))]);
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(printed["alpha"].as_f64().unwrap() > 1.0);
    assert_eq!(json(&dir.path().join("o/powerlaw_fit.json")), printed);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    for args in [
        vec!["solve", "--tree", "/nonexistent/tree.json", "--out", s(&o)],
        vec!["simulate", "--q", "1.5", "--out", s(&o)],
        vec!["simulate", "--bogus"],
        vec!["--jobs", "0", "simulate", "--trees", "3", "--out", s(&o)],
        vec!["recurrence", "--lambda", "-1", "--out", s(&o)],
        vec!["analyze", "--corpus", "/nonexistent/corpus", "--out", s(&o)],
    ] {
        let out = argwin(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let e = error_of(&out);
        assert!(e["error"].is_string() && e["message"].is_string(), "{args:?}");
    }
}

#[test]
fn empty_results_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = argwin(&["analyze", "--corpus", s(&empty), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("o/cleaning_report.json").is_file());

    let few = dir.path().join("few.txt");
    fs::write(&few, "1 2 3 4 5").unwrap();
    let out = argwin(&["fit-powerlaw", "--degrees", s(&few), "--out", s(&dir.path().join("f"))]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["error"], "InsufficientSamples");

    let out = argwin(&["simulate", "--trees", "5", "--min-trees", "10", "--out", s(&dir.path().join("s"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_and_version_succeed() {
    assert!(argwin(&["--help"]).status.success());
    assert!(argwin(&["--version"]).status.success());
    assert!(argwin(&["simulate", "--help"]).status.success());
}
