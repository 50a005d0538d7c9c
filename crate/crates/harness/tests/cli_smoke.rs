//! End-to-end run of the CLI binary through every subcommand.

use std::path::Path;
use std::process::Command;

use iso3d_harness::parse_curve_csv;

fn iso3d(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_iso3d"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "iso3d {args:?} failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

#[test]
fn full_pipeline_on_a_tiny_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let model = dir.path().join("model.w3dr");

    let out = iso3d(&[
        "gen-data", "--out", &p(&data), "--per-class-train", "5", "--per-class-test", "3",
        "--points", "16", "--seed", "4",
    ]);
    assert!(out.contains("25 train / 15 test"), "{out}");
    assert!(data.join("manifest.json").exists());

    let out = iso3d(&[
        "train", "--data", &p(&data), "--out", &p(&model), "--epochs", "5", "--batch", "5",
        "--lr", "0.08", "--seed", "4",
    ]);
    assert!(out.contains("test accuracy"), "{out}");
    assert!(model.exists());

    let eval_dir = dir.path().join("eval");
    iso3d(&[
        "eval", "--model", &p(&model), "--data", &p(&data), "--out", &p(&eval_dir),
        "--sample", "6", "--query-budget", "200", "--seed", "5", "--format", "both",
    ]);
    let curve_text = std::fs::read_to_string(eval_dir.join("curve.csv")).unwrap();
    let records = parse_curve_csv(&curve_text).unwrap();
    assert_eq!(records.len(), 5, "default checkpoints");
    assert!(records.iter().all(|r| r.method == "iso"));
    assert!(eval_dir.join("inputs.csv").exists());
    let manifest = std::fs::read_to_string(eval_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 5"), "{manifest}");

    let attack_dir = dir.path().join("attack");
    let out = iso3d(&[
        "attack", "--model", &p(&model), "--data", &p(&data), "--index", "2",
        "--out", &p(&attack_dir), "--query-budget", "300", "--mode", "blackbox",
    ]);
    assert!(out.contains("goal"), "{out}");
    let log = std::fs::read_to_string(attack_dir.join("attack_log.csv")).unwrap();
    assert!(log.starts_with("step,action,element_index,"), "{log}");
    assert!(attack_dir.join("survivor.pc3d").exists());

    let cmp_dir = dir.path().join("cmp");
    let out = iso3d(&[
        "compare", "--model", &p(&model), "--data", &p(&data), "--out", &p(&cmp_dir),
        "--method-a", "iso", "--method-b", "random", "--sample", "6",
        "--query-budget", "200", "--seed", "5",
    ]);
    assert!(out.contains("mean accuracy gap"), "{out}");
    let report = std::fs::read_to_string(cmp_dir.join("report.csv")).unwrap();
    assert!(report.starts_with("checkpoint_pct,accuracy_iso,accuracy_random,delta"), "{report}");

    let survey_dir = dir.path().join("survey");
    let out = iso3d(&[
        "survey", "--model", &p(&model), "--data", &p(&data), "--out", &p(&survey_dir),
        "--sample", "8", "--seed", "1",
    ]);
    assert!(out.contains("quartiles"), "{out}");
    let hist = std::fs::read_to_string(survey_dir.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("cardinality,count"), "{hist}");

    let verify_dir = dir.path().join("verify");
    let out = iso3d(&[
        "verify", "--model", &p(&model), "--data", &p(&data), "--index", "0",
        "--mode", "brute", "--out", &p(&verify_dir),
    ]);
    assert!(
        out.contains("minimal flip-inducing removal") || out.contains("no proper removal"),
        "{out}"
    );

    let salience = dir.path().join("salience.csv");
    iso3d(&[
        "export-salience", "--model", &p(&model), "--data", &p(&data), "--index", "0",
        "--out", &p(&salience),
    ]);
    let text = std::fs::read_to_string(&salience).unwrap();
    assert!(text.starts_with("index,x,y,z,saliency,is_member"), "{text}");
    assert_eq!(text.lines().count(), 17, "header plus one row per point");
}

#[test]
fn identical_eval_commands_produce_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let model = dir.path().join("model.w3dr");
    iso3d(&[
        "gen-data", "--out", &p(&data), "--per-class-train", "4", "--per-class-test", "2",
        "--points", "12", "--seed", "8",
    ]);
    iso3d(&[
        "train", "--data", &p(&data), "--out", &p(&model), "--epochs", "3", "--batch", "4",
        "--seed", "8",
    ]);

    let mut curves = Vec::new();
    for name in ["run1", "run2"] {
        let out_dir = dir.path().join(name);
        iso3d(&[
            "eval", "--model", &p(&model), "--data", &p(&data), "--out", &p(&out_dir),
            "--sample", "5", "--query-budget", "150", "--seed", "12", "--method", "iso-blackbox",
        ]);
        let curve = std::fs::read_to_string(out_dir.join("curve.csv")).unwrap();
        let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
        curves.push((iso3d_harness::drop_csv_column(&curve, "mean_seconds"), manifest));
    }
    assert_eq!(curves[0], curves[1]);
}

#[test]
fn bad_invocations_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_iso3d"))
        .args(["eval", "--model", "missing.w3dr", "--data", "missing", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = Command::new(env!("CARGO_BIN_EXE_iso3d")).arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unrecognized"));
}
