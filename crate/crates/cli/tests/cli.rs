use std::path::Path;
use std::process::{Command, Output};

use hopscatter_cli::{pipeline_smoke, SmokeOptions, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn hopscatter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopscatter"))
        .args(args)
        .env_remove("HOPSCATTER_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(
        code(&hopscatter(&["gen", "--n", "1", "--out", "x", "--bogus"])),
        EXIT_USAGE
    );
    assert_eq!(code(&hopscatter(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(&hopscatter(&["gen", "--out", "x"])), EXIT_USAGE);
    assert_eq!(code(&hopscatter(&[])), EXIT_USAGE);
}

#[test]
fn help_lists_every_flag() {
    let o = hopscatter(&["train", "--help"]);
    assert_eq!(code(&o), EXIT_OK);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in [
        "--input",
        "--out",
        "--config",
        "--hparams",
        "--desk-scale",
        "--epochs",
        "--seed",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = hopscatter(&[
            "gen",
            "--preset",
            "dataset1",
            "--n",
            "3",
            "--seed",
            "7",
            "--out",
            p(out),
        ]);
        assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    }
    assert_eq!(read_tree(&a), read_tree(&b));
    let c = dir.path().join("c");
    hopscatter(&[
        "gen",
        "--preset",
        "dataset1",
        "--n",
        "3",
        "--seed",
        "8",
        "--out",
        p(&c),
    ]);
    assert_ne!(read_tree(&a), read_tree(&c));
}

#[test]
fn data_errors_exit_two_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.ckpt");
    let ds = dir.path().join("ds");
    assert_eq!(
        code(&hopscatter(&["gen", "--n", "1", "--out", p(&ds)])),
        EXIT_OK
    );
    let o = hopscatter(&[
        "track",
        "--model",
        p(&missing),
        "--input",
        p(&ds),
        "--out",
        "traj.csv",
    ]);
    assert_eq!(code(&o), EXIT_DATA);
    assert!(stderr(&o).contains(p(&missing)), "{}", stderr(&o));
    assert!(!Path::new("traj.csv").exists());

    let o = hopscatter(&[
        "gen",
        "--preset",
        "dataset9",
        "--n",
        "1",
        "--out",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(code(&o), EXIT_DATA);

    let bad_cfg = dir.path().join("cfg.json");
    std::fs::write(&bad_cfg, r#"{"f_reff": 915e6}"#).unwrap();
    let o = hopscatter(&[
        "gen",
        "--n",
        "1",
        "--config",
        p(&bad_cfg),
        "--out",
        p(&dir.path().join("y")),
    ]);
    assert_eq!(code(&o), EXIT_DATA);
    assert!(stderr(&o).contains("cfg.json"), "{}", stderr(&o));

    let o = hopscatter(&[
        "train",
        "--input",
        p(&dir.path().join("nowhere")),
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(code(&o), EXIT_DATA);
    assert!(stderr(&o).contains("nowhere"));

    let o = Command::new(env!("CARGO_BIN_EXE_hopscatter"))
        .args(["gradcheck", "--per-param", "1"])
        .env("HOPSCATTER_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), EXIT_DATA);
}

#[test]
fn recovered_tracking_requires_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    hopscatter(&["gen", "--n", "1", "--out", p(&ds)]);
    let o = hopscatter(&[
        "track",
        "--input",
        p(&ds),
        "--out",
        p(&dir.path().join("t.csv")),
    ]);
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn train_track_eval_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s);
    assert_eq!(
        code(&hopscatter(&[
            "gen",
            "--n",
            "2",
            "--seed",
            "1",
            "--out",
            p(&d("train"))
        ])),
        EXIT_OK
    );
    assert_eq!(
        code(&hopscatter(&[
            "gen",
            "--n",
            "1",
            "--seed",
            "2",
            "--out",
            p(&d("test"))
        ])),
        EXIT_OK
    );
    for run in ["run1", "run2"] {
        let o = hopscatter(&[
            "train",
            "--input",
            p(&d("train")),
            "--out",
            p(&d(run)),
            "--desk-scale",
            "--epochs",
            "2",
        ]);
        assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    }
    assert_eq!(read_tree(&d("run1")), read_tree(&d("run2")));
    let curve = std::fs::read_to_string(d("run1").join("loss_curve.csv")).unwrap();
    assert!(curve.starts_with("epoch,train_loss,val_loss,phase_term,aux_term\n"));
    assert_eq!(curve.lines().count(), 3);

    let model = d("run1").join("model.ckpt");
    let o = hopscatter(&[
        "track",
        "--model",
        p(&model),
        "--input",
        p(&d("test")),
        "--out",
        p(&d("tr.csv")),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let csv = std::fs::read_to_string(d("tr.csv")).unwrap();
    assert!(csv.starts_with("trajectory_id,t,x,y\n"));
    assert_eq!(csv.lines().count(), 1 + 400);

    let o = hopscatter(&[
        "eval",
        "--model",
        p(&model),
        "--input",
        p(&d("test")),
        "--out",
        p(&d("eval")),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let o = hopscatter(&["report", "--input", p(&d("eval")), "--out", p(&d("again"))]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    assert_eq!(read_tree(&d("eval")), read_tree(&d("again")));
    let comparison: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d("eval").join("comparison.json")).unwrap()).unwrap();
    for m in ["Ours", "analytic", "eavesdropper"] {
        assert!(comparison[m]["dataset1"]["mae"].is_number(), "{m}");
    }
}

#[test]
fn checkpoint_for_another_array_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s);
    hopscatter(&["gen", "--n", "1", "--out", p(&d("four"))]);
    hopscatter(&[
        "train",
        "--input",
        p(&d("four")),
        "--out",
        p(&d("run")),
        "--desk-scale",
        "--epochs",
        "1",
    ]);
    let cfg = d("three.json");
    std::fs::write(
        &cfg,
        r#"{"antennas": [[0.3, 0.0], [0.5, 0.0], [0.7, 0.0]]}"#,
    )
    .unwrap();
    let o = hopscatter(&[
        "gen",
        "--n",
        "1",
        "--config",
        p(&cfg),
        "--out",
        p(&d("three")),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let o = hopscatter(&[
        "track",
        "--model",
        p(&d("run").join("model.ckpt")),
        "--input",
        p(&d("three")),
        "--out",
        p(&d("t.csv")),
    ]);
    assert_eq!(code(&o), EXIT_DATA);
    assert!(stderr(&o).contains("head.phase.w"), "{}", stderr(&o));
}

#[test]
fn gradcheck_verb_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopscatter(&[
        "gradcheck",
        "--config",
        "default",
        "--per-param",
        "2",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("max relative error"));
    assert!(!text.contains("FAIL"));
    assert!(dir.path().join("gradcheck.json").exists());
    assert_eq!(
        code(&hopscatter(&["gradcheck", "--config", "bogus"])),
        EXIT_DATA
    );
}

#[test]
fn small_ablation_emits_table_shaped_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopscatter(&[
        "ablate",
        "--out",
        p(dir.path()),
        "--windows",
        "25",
        "--test-trajectories",
        "1",
        "--epochs",
        "1",
        "--models",
        "Ours,no_cnn",
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let rows = hopscatter::evalx::parse_table_csv(&csv).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(),
        ["Ours", "no CNN"]
    );
    assert!(rows.iter().all(|r| r.1.len() == 6));
    assert!(dir.path().join("paper_reference.csv").exists());
}

#[test]
fn smoke_pipeline_is_deterministic() {
    let a = pipeline_smoke(3, &SmokeOptions::tiny()).unwrap();
    let b = pipeline_smoke(3, &SmokeOptions::tiny()).unwrap();
    assert_eq!(a, b);
    assert!(a.legitimate.metrics.n > 0 && a.eavesdropper.metrics.n > 0);
    assert_eq!(a.epochs_run, 2);
}
