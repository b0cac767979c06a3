//! End-to-end tests against the built binary: artifact layout, exit codes,
//! and byte-level reproducibility of every output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hybridrec::synthetic::write_ml100k_shaped;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridrec"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let output = run(args);
    assert!(
        output.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn fixture(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    fs::create_dir_all(&data).unwrap();
    write_ml100k_shaped(&data, 25, 30, 250).unwrap();
    data
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pipeline_artifacts_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let ingest_dir = tmp.path().join("ingest");

    run_ok(&[
        "ingest",
        "--path",
        path_str(&data),
        "--format",
        "ml100k",
        "--out",
        path_str(&ingest_dir),
    ]);
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ingest_dir.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n_users"], 25);
    assert_eq!(stats["n_items"], 30);
    assert_eq!(stats["n_ratings"], 250);
    let echoed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ingest_dir.join("run_config.json")).unwrap())
            .unwrap();
    assert_eq!(echoed["tool"], "hybridrec");
    assert_eq!(echoed["command"], "ingest");
    assert!(echoed["version"].is_string());

    let corpus = ingest_dir.join("corpus.json");
    let corpus_arg = path_str(&corpus);

    // Training twice with one config gives byte-identical model files.
    let train = |out: &Path| {
        run_ok(&[
            "train",
            "--model",
            "mf-bpr",
            "--corpus",
            corpus_arg,
            "--epochs",
            "5",
            "--seed",
            "11",
            "--out",
            path_str(out),
        ]);
    };
    let mf_a = tmp.path().join("mf-a");
    let mf_b = tmp.path().join("mf-b");
    train(&mf_a);
    train(&mf_b);
    let model_a = fs::read(mf_a.join("model.json")).unwrap();
    let model_b = fs::read(mf_b.join("model.json")).unwrap();
    assert_eq!(model_a, model_b);

    // Evaluating twice with one config gives byte-identical reports,
    // fingerprint included.
    let evaluate = |out: &Path| {
        run_ok(&[
            "evaluate",
            "--task",
            "topk",
            "--corpus",
            corpus_arg,
            "--model",
            path_str(&mf_a.join("model.json")),
            "--mock",
            "--alpha1",
            "0.5",
            "--alpha2",
            "0.3",
            "--k-prime",
            "8",
            "--out",
            path_str(out),
        ]);
    };
    let eval_a = tmp.path().join("eval-a");
    let eval_b = tmp.path().join("eval-b");
    evaluate(&eval_a);
    evaluate(&eval_b);
    let report_a = fs::read(eval_a.join("report.json")).unwrap();
    let report_b = fs::read(eval_b.join("report.json")).unwrap();
    assert_eq!(report_a, report_b);
    let report: serde_json::Value = serde_json::from_slice(&report_a).unwrap();
    assert_eq!(report["n_evaluated"], 25);
    assert_eq!(report["llm_fallbacks"], 0);
}

#[test]
fn alpha1_zero_matches_the_pure_conventional_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let ingest_dir = tmp.path().join("ingest");
    run_ok(&[
        "ingest",
        "--path",
        path_str(&data),
        "--format",
        "ml100k",
        "--out",
        path_str(&ingest_dir),
    ]);
    let corpus = ingest_dir.join("corpus.json");
    let mf = tmp.path().join("mf");
    run_ok(&[
        "train",
        "--model",
        "mf-bpr",
        "--corpus",
        path_str(&corpus),
        "--epochs",
        "5",
        "--out",
        path_str(&mf),
    ]);
    let model = mf.join("model.json");

    let eval = |out: &Path, extra: &[&str]| {
        let mut args = vec![
            "evaluate",
            "--task",
            "topk",
            "--corpus",
            path_str(&corpus),
            "--model",
            path_str(&model),
            "--mock",
            "--out",
            path_str(out),
        ];
        args.extend_from_slice(extra);
        run_ok(&args);
        let text = fs::read_to_string(out.join("report.json")).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap()
    };

    let zero_alpha1 = eval(
        &tmp.path().join("e1"),
        &["--alpha1", "0", "--alpha2", "0.3"],
    );
    let zero_override = eval(&tmp.path().join("e2"), &["--alpha-override", "0"]);
    assert_eq!(zero_alpha1["hr"], zero_override["hr"]);
    assert_eq!(zero_alpha1["ndcg"], zero_override["ndcg"]);
}

#[test]
fn augment_with_zero_pairs_copies_the_corpus_unchanged() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let ingest_dir = tmp.path().join("ingest");
    run_ok(&[
        "ingest",
        "--path",
        path_str(&data),
        "--format",
        "ml100k",
        "--out",
        path_str(&ingest_dir),
    ]);
    let corpus = ingest_dir.join("corpus.json");
    let out = tmp.path().join("aug");
    run_ok(&[
        "augment",
        "--kind",
        "direct",
        "--corpus",
        path_str(&corpus),
        "--mock",
        "--pairs-per-user",
        "0",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        fs::read(&corpus).unwrap(),
        fs::read(out.join("corpus.json")).unwrap()
    );
    assert_eq!(fs::read_to_string(out.join("triples.jsonl")).unwrap(), "");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("skip_report.json")).unwrap()).unwrap();
    assert_eq!(report["emitted"], 0);
}

#[test]
fn augmentation_is_reproducible_under_a_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let ingest_dir = tmp.path().join("ingest");
    run_ok(&[
        "ingest",
        "--path",
        path_str(&data),
        "--format",
        "ml100k",
        "--out",
        path_str(&ingest_dir),
    ]);
    let corpus = ingest_dir.join("corpus.json");
    let augment = |out: &Path| {
        run_ok(&[
            "augment",
            "--kind",
            "direct",
            "--corpus",
            path_str(&corpus),
            "--mock",
            "--pairs-per-user",
            "2",
            "--seed",
            "9",
            "--out",
            path_str(out),
        ]);
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    augment(&a);
    augment(&b);
    assert_eq!(
        fs::read(a.join("triples.jsonl")).unwrap(),
        fs::read(b.join("triples.jsonl")).unwrap()
    );
}

#[test]
fn instructions_command_writes_valid_jsonl() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let ingest_dir = tmp.path().join("ingest");
    run_ok(&[
        "ingest",
        "--path",
        path_str(&data),
        "--format",
        "ml100k",
        "--out",
        path_str(&ingest_dir),
    ]);
    let out = tmp.path().join("instr");
    run_ok(&[
        "instructions",
        "--corpus",
        path_str(&ingest_dir.join("corpus.json")),
        "--tasks",
        "listwise,pointwise,rating",
        "--per-task",
        "10",
        "--seed",
        "4",
        "--out",
        path_str(&out),
    ]);
    let text = fs::read_to_string(out.join("instructions.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty());
    assert!(lines.len() <= 30);
    for line in lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["instruction"].is_string());
        assert!(v["input"].is_string());
        assert!(v["output"].is_string());
    }
}

#[test]
fn sweep_writes_25_reports_and_picks_the_earliest_best_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let ingest_dir = tmp.path().join("ingest");
    run_ok(&[
        "ingest",
        "--path",
        path_str(&data),
        "--format",
        "ml100k",
        "--out",
        path_str(&ingest_dir),
    ]);
    let corpus = ingest_dir.join("corpus.json");
    let mf = tmp.path().join("mf");
    run_ok(&[
        "train",
        "--model",
        "mf-bpr",
        "--corpus",
        path_str(&corpus),
        "--epochs",
        "3",
        "--out",
        path_str(&mf),
    ]);
    let out = tmp.path().join("sweep");
    run_ok(&[
        "sweep",
        "--task",
        "topk",
        "--corpus",
        path_str(&corpus),
        "--model",
        path_str(&mf.join("model.json")),
        "--mock",
        "--k-prime",
        "8",
        "--cutoffs",
        "3",
        "--out",
        path_str(&out),
    ]);

    let reports_dir = out.join("reports");
    let mut cells: Vec<(f64, f64, f64)> = Vec::new();
    let grid = ["0.1", "0.3", "0.5", "0.7", "0.9"];
    for a1 in grid {
        for a2 in grid {
            let file = reports_dir.join(format!("report_a1_{a1}_a2_{a2}.json"));
            let report: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
            cells.push((
                a1.parse().unwrap(),
                a2.parse().unwrap(),
                report["hr"]["3"].as_f64().unwrap(),
            ));
        }
    }
    assert_eq!(cells.len(), 25);

    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("best.json")).unwrap()).unwrap();
    let best_value = best["hr@3"]["value"].as_f64().unwrap();
    let max_value = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best_value, max_value);
    // Ties resolve to the smallest alpha1, then alpha2 (grid iteration order).
    let earliest = cells
        .iter()
        .find(|c| c.2 == max_value)
        .expect("a best cell exists");
    assert_eq!(best["hr@3"]["alpha1"].as_f64().unwrap(), earliest.0);
    assert_eq!(best["hr@3"]["alpha2"].as_f64().unwrap(), earliest.1);
}

#[test]
fn exit_codes_follow_the_documented_policy() {
    let tmp = tempfile::tempdir().unwrap();

    // Usage error: missing required arguments.
    let out = run(&["evaluate", "--task", "topk"]);
    assert_eq!(out.status.code(), Some(2));

    // Data error: unreadable dataset path.
    let out = run(&[
        "ingest",
        "--path",
        "/definitely/not/here",
        "--format",
        "ml100k",
        "--out",
        path_str(&tmp.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Data error: stats over a corpus with no interactions.
    let empty = tmp.path().join("empty-corpus.json");
    fs::write(
        &empty,
        r#"{"interactions":[],"catalog":{"item_attributes":[],"user_attributes":[]},"rating_scale":[1.0,5.0],"raw_users":[],"raw_items":[],"user_offsets":[0]}"#,
    )
    .unwrap();
    let out = run(&["stats", "--corpus", path_str(&empty)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    // Data error: corrupt (non-model) file where a model is expected.
    let data = fixture(tmp.path());
    let ingest_dir = tmp.path().join("ingest");
    run_ok(&[
        "ingest",
        "--path",
        path_str(&data),
        "--format",
        "ml100k",
        "--out",
        path_str(&ingest_dir),
    ]);
    let corpus = ingest_dir.join("corpus.json");
    let bogus = tmp.path().join("bogus-model.json");
    fs::write(
        &bogus,
        "{\"format\":\"hybridrec-model\",\"version\":9,\"kind\":\"mf_bpr\",\"model\":{}}",
    )
    .unwrap();
    let out = run(&[
        "evaluate",
        "--task",
        "topk",
        "--corpus",
        path_str(&corpus),
        "--model",
        path_str(&bogus),
        "--mock",
        "--out",
        path_str(&tmp.path().join("y")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("version"), "stderr: {stderr}");

    // Transport error: augmentation against a dead endpoint.
    let out = run(&[
        "augment",
        "--kind",
        "direct",
        "--corpus",
        path_str(&corpus),
        "--endpoint",
        "http://127.0.0.1:1/v1/completions",
        "--max-retries",
        "0",
        "--pairs-per-user",
        "1",
        "--out",
        path_str(&tmp.path().join("z")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let config = tmp.path().join("run.json");
    let out_a = tmp.path().join("out-a");
    fs::write(
        &config,
        serde_json::json!({
            "dataset": {"path": data, "format": "ml100k"},
            "out": out_a,
        })
        .to_string(),
    )
    .unwrap();
    run_ok(&["--config", path_str(&config), "ingest"]);
    assert!(out_a.join("stats.json").exists());

    // The --out flag wins over the config key.
    let out_b = tmp.path().join("out-b");
    run_ok(&[
        "--config",
        path_str(&config),
        "ingest",
        "--out",
        path_str(&out_b),
    ]);
    assert!(out_b.join("stats.json").exists());
}
