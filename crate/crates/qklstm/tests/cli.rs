use std::path::Path;
use std::process::{Command, Output};

use qklstm::commands::{self, build_model, evaluate_checkpoint};
use qklstm::error::exit;
use qklstm::gram::parallel_gram;
use qklstm::{Checkpoint, ExperimentConfig, ModelChoice};
use qklstm_core::kernel::FeatureMapParams;
use qklstm_core::pos::builtin_corpus;
use qklstm_core::rng::seeded;
use rand::Rng;

fn qklstm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qklstm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_code_two() {
    assert_eq!(code(&qklstm(&["train", "--epochs", "0"])), exit::USAGE);
    assert_eq!(code(&qklstm(&["train", "--model", "rnn"])), exit::USAGE);
    assert_eq!(code(&qklstm(&["train", "--lr", "-0.5"])), exit::USAGE);
    assert_eq!(code(&qklstm(&["frobnicate"])), exit::USAGE);
    assert_eq!(code(&qklstm(&["params", "--corpus", "/no/such/file"])), exit::USAGE);
    let o = qklstm(&["train", "--epochs", "0"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("epochs"));
    assert_eq!(code(&qklstm(&["--help"])), exit::OK);
}

#[test]
fn train_writes_metrics_and_checkpoint_for_both_models() {
    let dir = tempfile::tempdir().unwrap();
    for model in ["qk", "classical"] {
        let out = dir.path().join(model);
        let o = qklstm(&["train", "--model", model, "--epochs", "100", "--lr", "0.1", "--out", path_str(&out)]);
        assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
        let expected = if model == "qk" { 278 } else { 445 };
        assert!(stdout(&o).contains(&format!("{expected} trainable parameters")));
        let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("epoch,loss,accuracy"));
        assert_eq!(lines.count(), 100);
        let ckpt = Checkpoint::load(&out.join("checkpoint.txt")).unwrap();
        assert_eq!(ckpt.model.kind().label(), model);

        let o = qklstm(&["eval", "--checkpoint", path_str(&out.join("checkpoint.txt"))]);
        assert_eq!(code(&o), exit::OK);
        let text = stdout(&o);
        assert!(text.contains("accuracy 1 (9/9)"), "{text}");
        assert!(text.contains("Everybody\tNN\tNN"));
    }
}

#[test]
fn config_file_drives_training_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "model = \"classical\"\nepochs = 4\noptimizer = \"sgd\"\nout = \"run\"\n").unwrap();
    let o = qklstm(&["train", "--config", path_str(&cfg), "--epochs", "6"]);
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let ckpt = Checkpoint::load(&dir.path().join("run/checkpoint.txt")).unwrap();
    assert_eq!(ckpt.model.kind(), ModelChoice::Classical);

    std::fs::write(&cfg, "epochs = \"many\"\n").unwrap();
    assert_eq!(code(&qklstm(&["train", "--config", path_str(&cfg)])), exit::PARSE);
}

#[test]
fn training_on_a_corpus_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    std::fs::write(&corpus, "a/X b/Y\nb/Y a/X c/Z\n").unwrap();
    let out = dir.path().join("run");
    let o = qklstm(&["train", "--corpus", path_str(&corpus), "--epochs", "3", "--out", path_str(&out)]);
    assert_eq!(code(&o), exit::OK);
    let ckpt = Checkpoint::load(&out.join("checkpoint.txt")).unwrap();
    assert_eq!(ckpt.vocab.items(), ["a", "b", "c"]);
    assert_eq!(ckpt.tags.items(), ["X", "Y", "Z"]);

    std::fs::write(&corpus, "a/X b\n").unwrap();
    let o = qklstm(&["train", "--corpus", path_str(&corpus), "--out", path_str(&out)]);
    assert_eq!(code(&o), exit::PARSE);
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1:"));
}

#[test]
fn eval_rejects_incompatible_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(code(&qklstm(&["train", "--epochs", "1", "--out", path_str(&out)])), exit::OK);
    let ck = out.join("checkpoint.txt");

    let extra_tag = dir.path().join("tags.txt");
    std::fs::write(&extra_tag, "the/DET dog/NN eat/V the/DET ice/ADJ\n").unwrap();
    let o = qklstm(&["eval", "--checkpoint", path_str(&ck), "--corpus", path_str(&extra_tag)]);
    assert_eq!(code(&o), exit::USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("4 tags"));

    let unknown_word = dir.path().join("words.txt");
    std::fs::write(&unknown_word, "the/DET cat/NN\n").unwrap();
    assert_eq!(code(&qklstm(&["eval", "--checkpoint", path_str(&ck), "--corpus", path_str(&unknown_word)])), exit::USAGE);

    std::fs::write(&ck, "not a checkpoint\n").unwrap();
    assert_eq!(code(&qklstm(&["eval", "--checkpoint", path_str(&ck)])), exit::PARSE);
}

#[test]
fn untrained_models_tag_near_chance() {
    let corpus = builtin_corpus();
    for model in [ModelChoice::Qk, ModelChoice::Classical] {
        let mean = (0..20u64)
            .map(|seed| {
                let cfg = ExperimentConfig { model, seed, ..Default::default() };
                let m = build_model(&cfg, corpus.vocab().len(), corpus.tag_map().len()).unwrap();
                let ck = Checkpoint::new(m, corpus.vocab().clone(), corpus.tag_map().clone()).unwrap();
                evaluate_checkpoint(&ck, &corpus, &mut std::io::sink()).unwrap().accuracy()
            })
            .sum::<f64>()
            / 20.0;
        assert!((mean - 1.0 / 3.0).abs() < 0.15, "{model:?}: {mean}");
    }
}

fn write_vectors(dir: &Path, name: &str, rows: &[Vec<f64>]) -> std::path::PathBuf {
    let p = dir.join(name);
    let text: String = rows
        .iter()
        .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn gram_command_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_vectors(dir.path(), "one.csv", &[vec![0.3, -0.2, 0.9]]);
    let o = qklstm(&["gram", "--vectors", path_str(&one)]);
    assert_eq!(code(&o), exit::OK);
    assert_eq!(stdout(&o), "1\n");

    let mut rng = seeded(3);
    let mut rows: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    rows.push(rows[1].clone());
    let many = write_vectors(dir.path(), "many.csv", &rows);
    let out = dir.path().join("gram.csv");
    let o = qklstm(&["gram", "--vectors", path_str(&many), "--qubits", "3", "--out", path_str(&out)]);
    assert_eq!(code(&o), exit::OK);
    let g = qklstm::csv::parse_matrix(&std::fs::read_to_string(&out).unwrap(), &out).unwrap();
    assert_eq!(g.shape(), (7, 7));
    for i in 0..7 {
        assert!((g.get(i, i) - 1.0).abs() < 1e-10);
        for j in 0..7 {
            assert!((g.get(i, j) - g.get(j, i)).abs() < 1e-12);
        }
        assert!((g.get(1, i) - g.get(6, i)).abs() < 1e-12);
    }
    assert!((g.get(1, 6) - 1.0).abs() < 1e-12);

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2,3\n4,5\n").unwrap();
    let o = qklstm(&["gram", "--vectors", path_str(&ragged)]);
    assert_eq!(code(&o), exit::PARSE);
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));
}

#[test]
fn gram_thread_count_does_not_change_values() {
    let mut rng = seeded(8);
    let params = FeatureMapParams::random(4, 6, &mut rng).unwrap();
    let vs: Vec<Vec<f64>> = (0..12).map(|_| (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
    let serial = params.gram_matrix(&vs).unwrap();
    for threads in [0, 1, 3] {
        assert_eq!(parallel_gram(&params, &vs, threads).unwrap(), serial);
    }

    let dir = tempfile::tempdir().unwrap();
    let p = write_vectors(dir.path(), "v.csv", &vs);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qklstm"))
            .args(["gram", "--vectors", path_str(&p)])
            .env("QKLSTM_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("1").stdout, run("4").stdout);
    assert_eq!(code(&run("lots")), exit::USAGE);
}

#[test]
fn gram_can_use_a_trained_feature_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(code(&qklstm(&["train", "--epochs", "1", "--out", path_str(&out)])), exit::OK);
    let ck = out.join("checkpoint.txt");
    let vs = write_vectors(dir.path(), "v.csv", &[vec![0.1; 14], vec![-0.4; 14]]);
    let o = qklstm(&["gram", "--vectors", path_str(&vs), "--checkpoint", path_str(&ck)]);
    assert_eq!(code(&o), exit::OK);
    let short = write_vectors(dir.path(), "s.csv", &[vec![0.1; 3]]);
    assert_eq!(code(&qklstm(&["gram", "--vectors", path_str(&short), "--checkpoint", path_str(&ck)])), exit::USAGE);
}

#[test]
fn gradcheck_passes_and_corruption_fails() {
    let o = qklstm(&["gradcheck"]);
    assert_eq!(code(&o), exit::OK);
    let text = stdout(&o);
    assert!(text.ends_with("result=PASS\n"));
    assert!(text.contains("model=qk instance=per-gate-seed0 group=cell.proj_c"));
    assert!(text.contains("model=classical instance=seed2 group=cell.w_o"));

    let o = qklstm(&["gradcheck", "--model", "qk", "--corrupt-gradient"]);
    assert_eq!(code(&o), exit::AUDIT_FAILED);
    assert!(stdout(&o).ends_with("result=FAIL\n"));

    let report = commands::cmd_gradcheck(&[ModelChoice::Classical], false, &mut std::io::sink()).unwrap();
    assert!(report.passed());
    assert!(report.cases.iter().all(|c| c.report.worst_relative_error() < 1e-6));
}

#[test]
fn params_reports_counts_for_any_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    std::fs::write(&corpus, "a/X b/Y c/X d/Y e/X\n").unwrap();
    let cfg = ExperimentConfig { corpus: Some(corpus), ..Default::default() };
    let r = commands::cmd_params(&cfg, &mut std::io::sink()).unwrap();
    assert_eq!(r.classical.component("embedding"), 40);
    assert_eq!(r.classical.component("cell"), 360);
    assert_eq!(r.classical.component("head"), 2 * 6 + 2);
    assert_eq!(r.qk.component("embedding"), 40);
}
