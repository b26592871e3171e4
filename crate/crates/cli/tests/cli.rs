use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use stepwise_cli::run_command;

fn run(args: &[&str]) -> i32 {
    run_command(std::iter::once("stepwise").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn gen_is_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    assert_eq!(
        run(&[
            "gen",
            "--depths",
            "0..5",
            "--theories",
            "12",
            "--seed",
            "9",
            "--out",
            p(&a)
        ]),
        0
    );
    assert_eq!(
        run(&[
            "gen",
            "--depths",
            "0..5",
            "--theories",
            "12",
            "--seed",
            "9",
            "--out",
            p(&b),
            "--jobs",
            "1"
        ]),
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let recs = lines(&a);
    assert_eq!(recs.len(), 12);
    assert_eq!(recs[0]["id"], "t00000");
    assert!(recs[0]["sentences"]["sent1"].is_string());
}

#[test]
fn solve_then_eval_reaches_full_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let pred = dir.path().join("p.jsonl");
    let report = dir.path().join("r.json");
    assert_eq!(
        run(&[
            "gen",
            "--depths",
            "0..5,N/A",
            "--theories",
            "14",
            "--seed",
            "3",
            "--out",
            p(&data)
        ]),
        0
    );
    for strategy in ["goal", "exhaustive"] {
        let traces = dir.path().join("t.jsonl");
        assert_eq!(
            run(&[
                "solve",
                "--strategy",
                strategy,
                "--in",
                p(&data),
                "--out",
                p(&pred),
                "--traces",
                p(&traces)
            ]),
            0
        );
        let (t, preds) = (lines(&traces), lines(&pred));
        assert_eq!(t.len(), preds.len());
        assert_eq!(t[0]["question_id"], preds[0]["question_id"]);
        assert_eq!(t[0]["composer_calls"], preds[0]["composer_calls"]);
        assert_eq!(
            run(&[
                "eval",
                "--pred",
                p(&pred),
                "--gold",
                p(&data),
                "--report",
                p(&report),
                "--budgets",
                "1,3"
            ]),
            0
        );
        let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(r["entailment_accuracy"], 1.0, "{strategy}");
        assert_eq!(r["proof_accuracy"], 1.0, "{strategy}");
        assert!(r["budget_curve"]["3"].is_object());
    }
}

#[test]
fn perturbed_sets_solve_consistently() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let equiv = dir.path().join("e.jsonl");
    let base_pred = dir.path().join("bp.jsonl");
    let var_pred = dir.path().join("vp.jsonl");
    let report = dir.path().join("r.json");
    assert_eq!(run(&["gen", "--theories", "6", "--seed", "1", "--out", p(&data)]), 0);
    assert_eq!(
        run(&[
            "perturb",
            "--mode",
            "both",
            "--n",
            "3",
            "--seed",
            "2",
            "--in",
            p(&data),
            "--out",
            p(&equiv)
        ]),
        0
    );
    let variants = lines(&equiv);
    assert_eq!(variants.len(), 18);
    assert_eq!(variants[0]["base_id"], "t00000");
    assert_eq!(variants[0]["variant_index"], 1);
    assert_eq!(run(&["solve", "--in", p(&data), "--out", p(&base_pred)]), 0);
    assert_eq!(run(&["solve", "--in", p(&equiv), "--out", p(&var_pred)]), 0);
    assert_eq!(
        run(&[
            "eval",
            "--pred",
            p(&base_pred),
            "--pred",
            p(&var_pred),
            "--gold",
            p(&data),
            "--equiv",
            p(&equiv),
            "--report",
            p(&report),
        ]),
        0
    );
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["consistency"]["entailment"], 1.0);
    assert_eq!(r["consistency"]["proof"], 1.0);
}

#[test]
fn emit_training_and_bench_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let out = dir.path().join("train");
    let report = dir.path().join("bench.json");
    assert_eq!(
        run(&["gen", "--depths", "2,4", "--theories", "4", "--out", p(&data)]),
        0
    );
    assert_eq!(run(&["emit-training", "--in", p(&data), "--out-dir", p(&out)]), 0);
    let (rs, fs_, kc) = (
        lines(&out.join("rs.jsonl")),
        lines(&out.join("fs.jsonl")),
        lines(&out.join("kc.jsonl")),
    );
    assert_eq!(fs_.len(), kc.len());
    assert!(rs.len() > kc.len());
    assert!(rs.iter().any(|r| r["output"] == "STOP"));
    assert_eq!(
        run(&["bench", "--in", p(&data), "--budgets", "1,5", "--report", p(&report)]),
        0
    );
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["strategies"].as_array().unwrap().len(), 2);
    assert!(r["composer_call_ratio"].as_f64().unwrap() < 1.0);
}

#[test]
fn exit_codes_separate_validation_from_io() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let bad = dir.path().join("bad.jsonl");
    let out = dir.path().join("o.jsonl");
    fs::write(
        &bad,
        "{\"id\": \"x\", \"sentences\": {\"sent1\": \"Blue Chris is.\"}, \"questions\": []}\n",
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_stepwise");
    let code = |args: &[&str]| Command::new(exe).args(args).output().unwrap().status.code();
    assert_eq!(code(&["solve", "--in", p(&missing), "--out", p(&out)]), Some(2));
    assert_eq!(code(&["solve", "--in", p(&bad), "--out", p(&out)]), Some(1));
    assert_eq!(code(&["gen", "--depths", "9..2", "--out", p(&out)]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    let version = Command::new(exe).arg("--version").output().unwrap();
    assert_eq!(version.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&version.stdout).contains("dataset schema 1"));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let exe = env!("CARGO_BIN_EXE_stepwise");
    let gen = |out: &Path| {
        Command::new(exe)
            .args(["gen", "--theories", "3", "--out", p(out)])
            .env("STEPWISE_SEED", "41")
            .status()
            .unwrap()
    };
    assert!(gen(&a).success());
    assert_eq!(run(&["gen", "--theories", "3", "--seed", "41", "--out", p(&b)]), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
