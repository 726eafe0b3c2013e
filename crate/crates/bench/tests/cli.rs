use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bosonic_bench::config::{ExperimentConfig, Graph, Params, Preset};
use bosonic_bench::output::without_timing;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_bosonic-bench");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("BOSONIC_BENCH_OUT").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> String {
    let p = dir.join(name);
    fs::write(&p, cfg.to_toml()).unwrap();
    p.to_string_lossy().into_owned()
}

fn small(preset: Preset, trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(preset);
    cfg.campaign.trials = trials;
    cfg
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn presets_round_trip_exactly() {
    for p in [Preset::Single, Preset::Pair, Preset::Chain, Preset::Grid] {
        let cfg = ExperimentConfig::preset(p);
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);
        assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn awkward_floats_round_trip_bit_exactly() {
    let mut cfg = ExperimentConfig::preset(Preset::Pair);
    let omega = vec![0.1 + 0.2, -1.0 / 3.0];
    cfg.model.params = Params::Explicit { omega: omega.clone(), xi: vec![1e-300, 0.7], hopping: vec![[2f64.sqrt() / 7.0, -0.0]] };
    cfg.protocol.epsilon = 0.013_000_000_000_000_001;
    let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
    let Params::Explicit { omega: o, xi, hopping } = &back.model.params else { panic!("params changed kind") };
    assert_eq!(o.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), omega.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(xi[0].to_bits(), 1e-300f64.to_bits());
    assert_eq!(hopping[0][1].to_bits(), (-0.0f64).to_bits());
    assert_eq!(back.protocol.epsilon.to_bits(), cfg.protocol.epsilon.to_bits());
}

#[test]
fn gen_config_output_loads() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen-config", "--preset", "chain"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.model.graph, Graph::Chain { modes: 4 });
    let file = dir.path().join("grid.toml");
    assert!(run(&["gen-config", "--preset", "grid", "-o", file.to_str().unwrap()]).status.success());
    assert_eq!(ExperimentConfig::load(&file).unwrap(), ExperimentConfig::preset(Preset::Grid));
}

#[test]
fn single_mode_report_has_two_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &small(Preset::Single, 2));
    let out_dir = dir.path().join("out");
    let out = run(&["learn", &cfg, "--epsilon", "0.05", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["version"], bosonic_learn::VERSION);
    assert_eq!(report["trials"].as_array().unwrap().len(), 2);
    for t in report["trials"].as_array().unwrap() {
        let params = t["report"]["parameters"].as_array().unwrap();
        let names: Vec<&str> = params.iter().map(|p| p["name"].as_str().unwrap()).collect();
        assert_eq!(names, ["omega[0]", "xi[0]"]);
    }
    // Timing is the last key so the body above it is reproducible.
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    assert_eq!(keys.last().unwrap().as_str(), "timing");
    let csv = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config_hash,version,epsilon,trial,seed,parameter,kind,truth,estimate,error,total_evolution_time,total_shots,total_experiments"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn chain_of_four_reports_every_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &small(Preset::Chain, 1));
    let out_dir = dir.path().join("out");
    let out = run(&["learn", &cfg, "--epsilon", "0.1", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("report.json"));
    let params = report["trials"][0]["report"]["parameters"].as_array().unwrap();
    // 4 ω, 4 ξ and Re/Im of 3 couplings.
    assert_eq!(params.len(), 14);
    let count = |k: &str| params.iter().filter(|p| p["kind"] == k).count();
    assert_eq!((count("omega"), count("xi"), count("re_hopping"), count("im_hopping")), (4, 4, 3, 3));
}

#[test]
fn same_seed_gives_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &small(Preset::Pair, 2));
    let mut bodies = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = run(&["learn", &cfg, "--epsilon", "0.1", "--seed", "17", "--threads", "2", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        let mut report = without_timing(json(&out_dir.join("report.json")));
        // The output directory is part of the config and differs by design.
        report["config"]["output"]["dir"] = Value::Null;
        report["config_hash"] = Value::Null;
        let csv = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
        let csv: Vec<String> = csv.lines().map(|l| l.split_once(',').unwrap().1.to_string()).collect();
        bodies.push((serde_json::to_string(&report).unwrap(), csv));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn determinism_ignores_thread_count() {
    let cfg = small(Preset::Single, 4);
    let strip = |v: Value| serde_json::to_string(&without_timing(v)).unwrap();
    let run_with = |threads| {
        let mut c = cfg.clone();
        c.campaign.threads = threads;
        let set = bosonic_bench::trials::run_trials(&c, 0.1).unwrap();
        c.campaign.threads = 0;
        strip(bosonic_bench::output::learn_json(&c, &set, 0.0))
    };
    assert_eq!(run_with(1), run_with(3));
}

#[test]
fn single_epsilon_sweep_marks_fit_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Preset::Single, 2);
    cfg.sweep.baseline_trials = 10;
    let cfg = write_config(dir.path(), "c.toml", &cfg);
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", &cfg, "--epsilons", "0.1", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("scaling.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("config_hash,version,row,epsilon,trials,rmse_omega"));
    assert_eq!(rows.len(), 4);
    let kind = |r: &str| r.split(',').nth(2).unwrap().to_string();
    assert_eq!(rows[1..].iter().map(|r| kind(r)).collect::<Vec<_>>(), ["point", "fit_time", "fit_baseline"]);
    assert!(rows[2].ends_with("unavailable: needs at least 3 epsilon values"));
    assert!(rows[3].ends_with("unavailable: needs at least 3 epsilon values"));
    let report = json(&out_dir.join("report.json"));
    assert!(report["time_fit"]["unavailable"].is_string());
}

#[test]
fn sweep_over_three_epsilons_reports_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Preset::Single, 4);
    cfg.sweep.baseline_trials = 20;
    let cfg = write_config(dir.path(), "c.toml", &cfg);
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", &cfg, "--epsilons", "0.1,0.05,0.02", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("report.json"));
    assert_eq!(report["points"].as_array().unwrap().len(), 3);
    assert!(report["time_fit"]["slope"].as_f64().unwrap() > 0.0);
    assert!(report["baseline_fit"]["slope"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4 * 2);
}

#[test]
fn verify_bounds_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Preset::Single, 1);
    cfg.bounds.hoeffding_reps = 50;
    cfg.bounds.trajectories = 40;
    cfg.bounds.selection_models = 3;
    let cfg = write_config(dir.path(), "c.toml", &cfg);
    let out_dir = dir.path().join("out");
    let out = run(&["verify-bounds", &cfg, "--out", out_dir.to_str().unwrap()]);
    let report = json(&out_dir.join("bounds.json"));
    let suites: Vec<&str> = report["suites"].as_array().unwrap().iter().map(|s| s["suite"].as_str().unwrap()).collect();
    assert_eq!(suites, ["truncation", "r_slope", "hoeffding", "selection_rule"]);
    let code = if report["passed"].as_bool().unwrap() { 0 } else { 1 };
    assert_eq!(out.status.code(), Some(code));
    let csv = fs::read_to_string(out_dir.join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "config_hash,version,suite,check,value,limit,passed");
}

#[test]
fn env_var_sets_output_dir_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &small(Preset::Single, 1));
    let env_dir = dir.path().join("env");
    let status = Command::new(BIN)
        .args(["learn", &cfg, "--epsilon", "0.1"])
        .env("BOSONIC_BENCH_OUT", &env_dir)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(env_dir.join("report.json").exists());
    let flag_dir = dir.path().join("flag");
    let status = Command::new(BIN)
        .args(["learn", &cfg, "--epsilon", "0.1", "--out", flag_dir.to_str().unwrap()])
        .env("BOSONIC_BENCH_OUT", dir.path().join("unused"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(flag_dir.join("report.json").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", &small(Preset::Single, 1));
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };
    let text = fs::read_to_string(&good).unwrap();
    let cases = [
        write("syntax.toml", "schema_version = ["),
        write("unknown.toml", &format!("{text}\n[extra]\nx = 1\n")),
        write("schema.toml", &text.replace("schema_version = 1", "schema_version = 2")),
        write("omega.toml", "schema_version = 1\n[model.graph]\nkind = \"single\"\n[model.params]\nkind = \"explicit\"\nomega = [1.5]\nxi = [0.1]\nhopping = []\n"),
    ];
    for c in &cases {
        let out = run(&["learn", c]);
        assert_eq!(out.status.code(), Some(2), "{c}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("invalid configuration"));
    }
    assert_eq!(run(&["learn", &good, "--cutoff", "1"]).status.code(), Some(2));
    assert_eq!(run(&["learn", &good, "--trials", "0"]).status.code(), Some(2));
    assert_eq!(run(&["learn", &good, "--epsilon", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["learn", dir.path().join("missing.toml").to_str().unwrap()]).status.code(), Some(3));
    // A file where the output directory should go.
    let blocker = write("blocker", "");
    assert_eq!(run(&["learn", &good, "--epsilon", "0.1", "--out", &blocker]).status.code(), Some(3));
}
