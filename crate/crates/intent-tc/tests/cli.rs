//! End-to-end checks of the `intent-tc` binary: every subcommand, exit
//! codes, and artifact layout.

use std::path::Path;
use std::process::{Command, Output};

use intent_tc::queue_twin::SemanticModel;

const RAW_SUBS: &str = include_str!("../assets/case_study/raw_subintents.txt");
const RAW_CONFIG: &str = include_str!("../assets/case_study/raw_config.tc");
const CORRECTED_CONFIG: &str = include_str!("../assets/case_study/corrected_config.tc");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intent-tc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_prints_and_writes_a_valid_model() {
    let tmp = tempfile::tempdir().unwrap();
    let model_path = tmp.path().join("model.json");
    let out = run(&[
        "simulate",
        "--horizon",
        "600",
        "--seed",
        "9",
        "--out",
        model_path.to_str().unwrap(),
    ]);
    let stdout = stdout_of(&out);
    let model = SemanticModel::from_json_str(&stdout).unwrap();
    assert_eq!(model.params.seed, 9);
    assert_eq!(model.params.horizon, 600.0);
    assert_eq!(model.thresholds.len(), 4);
    let on_disk = SemanticModel::from_path(&model_path).unwrap();
    assert_eq!(model, on_disk);
}

#[test]
fn profile_matches_and_reports_no_match() {
    let out = run(&["profile", "--intent", "Prioritize voice calls during the evening shift"]);
    let stdout = stdout_of(&out);
    assert!(stdout.contains("voice"), "{stdout}");
    assert!(stdout.contains("udp"), "{stdout}");

    let json_out = run(&["profile", "--intent", "voice calls matter", "--json"]);
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&json_out)).unwrap();
    assert_eq!(parsed["entries"].as_array().unwrap().len(), 1);

    let none = run(&["profile", "--intent", "reticulate the splines"]);
    assert!(stdout_of(&none).contains("no traffic classes matched"));
}

#[test]
fn translate_writes_artifacts_and_repeats_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    let intent_one = "Give industrial robot control absolute priority on eth0.";
    let intent_two = "Keep video streaming smooth between 18:00 and 23:00.";
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "translate",
            "--intent",
            intent_one,
            "--intent",
            intent_two,
            "--out",
            dir.to_str().unwrap(),
        ]);
        let stdout = stdout_of(&out);
        assert!(stdout.contains("ok   intent-001"), "{stdout}");
        assert!(stdout.contains("ok   intent-002"), "{stdout}");
        assert!(stdout.contains("2 intents, 0 errors"), "{stdout}");
    }
    for id in ["intent-001", "intent-002"] {
        for file in
            ["raw_subintents.txt", "subintents.json", "raw_config.tc", "config.tc", "report.json"]
        {
            let path_a = dir_a.join(id).join(file);
            assert!(path_a.exists(), "{} missing", path_a.display());
            assert_eq!(
                std::fs::read(&path_a).unwrap(),
                std::fs::read(dir_b.join(id).join(file)).unwrap(),
                "{id}/{file} differs between invocations"
            );
        }
    }
    let script = std::fs::read_to_string(dir_a.join("intent-002").join("config.tc")).unwrap();
    assert!(script.contains("# enforce from 18:00 to 23:00"), "{script}");
}

#[test]
fn translate_isolates_failures_and_signals_them() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "translate",
        "--intent",
        "Protect sensor telemetry uploads.",
        "--intent",
        "",
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stdout.contains("ok   intent-001"), "{stdout}");
    assert!(stderr.contains("fail intent-002"), "{stderr}");

    let missing = run(&["translate", "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no intents"));
}

#[test]
fn critique_repairs_the_case_study_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let subs_path = tmp.path().join("raw_subintents.txt");
    let config_path = tmp.path().join("raw_config.tc");
    std::fs::write(&subs_path, RAW_SUBS).unwrap();
    std::fs::write(&config_path, RAW_CONFIG).unwrap();
    let out_dir = tmp.path().join("repaired");
    let out = run(&[
        "critique",
        "--subintents",
        subs_path.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["subintent_report"]["corrections"], 2);
    assert_eq!(doc["config_report"]["corrections"], 6);
    assert_eq!(doc["config"].as_str().unwrap(), CORRECTED_CONFIG);
    assert_eq!(std::fs::read_to_string(out_dir.join("config.tc")).unwrap(), CORRECTED_CONFIG);
    assert!(out_dir.join("subintents.txt").exists());
    assert!(out_dir.join("report.json").exists());

    let bad = run(&["critique", "--subintents", "/nonexistent/subs.txt"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}

fn load_cases(path: &Path) -> Vec<serde_json::Value> {
    let text = std::fs::read_to_string(path).unwrap();
    serde_json::from_str::<Vec<serde_json::Value>>(&text).unwrap()
}

#[test]
fn benchmark_emits_mini_and_generated_sets() {
    let tmp = tempfile::tempdir().unwrap();
    let mini_path = tmp.path().join("mini.json");
    let out = run(&["benchmark", "--mini", "--out", mini_path.to_str().unwrap()]);
    assert!(stdout_of(&out).contains("wrote 20 cases"));
    let mini = load_cases(&mini_path);
    assert_eq!(mini.len(), 20);
    assert_eq!(mini[0]["id"], "mini-001");
    assert!(mini[0]["ref_config"].as_str().unwrap().starts_with("tc qdisc add"));

    let gen_path = tmp.path().join("gen.json");
    let gen_out =
        run(&["benchmark", "--count", "50", "--seed", "3", "--out", gen_path.to_str().unwrap()]);
    assert!(stdout_of(&gen_out).contains("wrote 50 cases"));
    assert_eq!(load_cases(&gen_path).len(), 50);
}

#[test]
fn evaluate_scores_the_mini_benchmark_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let mini_path = tmp.path().join("mini.json");
    run(&["benchmark", "--mini", "--out", mini_path.to_str().unwrap()]);
    let out_dir = tmp.path().join("eval");
    let out = run(&[
        "evaluate",
        "--benchmark",
        mini_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--runs",
        "2",
    ]);
    let table = stdout_of(&out);
    assert!(table.contains("strategy two-shot-aqm | model mock"), "{table}");
    assert!(table.contains("runs 2 | cases 20"), "{table}");
    for row in ["config unit coverage", "config token f1", "sub-intent rouge-l f1"] {
        let line = table.lines().find(|l| l.starts_with(row)).unwrap();
        assert!(line.contains("1.000"), "{line}");
    }
    let ned_line = table.lines().find(|l| l.starts_with("config ned")).unwrap();
    assert!(ned_line.contains("0.000"), "{ned_line}");

    assert_eq!(std::fs::read_to_string(out_dir.join("eval_report.txt")).unwrap(), table);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("eval_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["runs"], 2);
    assert_eq!(report["stage2"]["coverage"]["mean"], 1.0);
    assert_eq!(report["stage2"]["coverage"]["sd"], 0.0);
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(&["--help"]);
    let stdout = stdout_of(&out);
    for cmd in ["simulate", "profile", "translate", "critique", "benchmark", "evaluate"] {
        assert!(stdout.contains(cmd), "help is missing {cmd}:\n{stdout}");
    }
}
