use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use colenc::analogy::EncodingTable;
use colenc::model::{EncoderModel, TrainHistory};
use colenc::partition::PartitionSet;

fn colenc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colenc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn colenc")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = colenc(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// synth -> partition -> train -> encode -> simulate -> eval, all in `dir`.
fn pipeline(dir: &Path) {
    ok(dir, &["--seed", "7", "synth", "--out-dir", ".", "--num-drugs", "48"]);
    ok(dir, &["--seed", "7", "partition", "pairwise", "--drugs", "drugs.tsv", "--ddi", "ddi.tsv", "--out", "part.txt"]);
    ok(
        dir,
        &[
            "--seed", "7", "train", "--drugs", "drugs.tsv", "--partition", "part.txt", "--column", "description",
            "--out-dir", "model", "--embed-dim", "6", "--hidden", "6", "--max-len", "6", "--batch-size", "128",
            "--epochs", "4", "--learning-rate", "0.01",
        ],
    );
    ok(dir, &["encode", "--drugs", "drugs.tsv", "--model", "model/model.ckpt", "--vocab", "model/vocab.tsv", "--out", "enc.tsv"]);
    ok(dir, &["simulate", "--table", "enc.tsv", "--partition", "part.txt", "--out", "sim.tsv", "--log", "log.tsv"]);
    ok(dir, &["--seed", "7", "eval", "random", "--partition", "part.txt", "--out", "random.txt"]);
    ok(
        dir,
        &[
            "--seed", "7", "eval", "knn", "--partition", "part.txt", "--drugs", "drugs.tsv", "--column", "description",
            "--max-train", "400", "--max-eval", "100", "--out", "knn.txt",
        ],
    );
    ok(
        dir,
        &["eval", "dnn", "--partition", "part.txt", "--drugs", "drugs.tsv", "--model", "model/model.ckpt", "--vocab", "model/vocab.tsv", "--out", "dnn.txt"],
    );
}

const ARTIFACTS: [&str; 12] = [
    "drugs.tsv",
    "ddi.tsv",
    "part.txt",
    "model/model.ckpt",
    "model/vocab.tsv",
    "model/history.tsv",
    "enc.tsv",
    "sim.tsv",
    "log.tsv",
    "random.txt",
    "knn.txt",
    "dnn.txt",
];

#[test]
fn pipeline_artifacts_reload_and_rerun_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    for name in ARTIFACTS {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty(), "{name} empty");
        assert_eq!(x, y, "{name} differs between runs");
    }
    let p = a.path();
    PartitionSet::load(&p.join("part.txt")).unwrap();
    let model = EncoderModel::load(&p.join("model/model.ckpt")).unwrap();
    TrainHistory::load(&p.join("model/history.tsv")).unwrap();
    let table = EncodingTable::load(&p.join("enc.tsv")).unwrap();
    assert_eq!(table.len(), 48);
    assert_eq!(table.dim(), 2 * model.config().hidden);
    let sim = fs::read_to_string(p.join("sim.tsv")).unwrap();
    assert_eq!(sim.lines().count(), 6);
    assert!(fs::read_to_string(p.join("dnn.txt")).unwrap().starts_with("accuracy="));

    let out = ok(p, &["query", "--table", "enc.tsv", "--a", "DB00001", "--b", "DB00002", "--k", "3"]);
    assert_eq!(out.lines().next(), Some("rank\tdrug_id\tscore"));
    assert!(out.lines().count() <= 4);
}

#[test]
fn query_rejects_identical_drugs() {
    let dir = tempfile::tempdir().unwrap();
    let out = colenc(dir.path(), &["query", "--table", "enc.tsv", "--a", "DB1", "--b", "DB1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn errors_are_single_line_and_leave_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["synth", "--out-dir", ".", "--num-drugs", "20"]);
    ok(p, &["partition", "pairwise", "--drugs", "drugs.tsv", "--ddi", "ddi.tsv", "--out", "part.txt"]);
    let out = colenc(
        p,
        &["train", "--drugs", "drugs.tsv", "--partition", "part.txt", "--column", "description", "--out-dir", "m", "--max-len", "1"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("colenc: error: "));
    assert!(!p.join("m/model.ckpt").exists());

    let out = colenc(p, &["encode", "--drugs", "missing.tsv", "--model", "x", "--vocab", "y", "--out", "enc.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!p.join("enc.tsv").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("run.toml"), "seed = 3\nnum_drugs = 24\nnum_labels = 4\nout_dir = \"a\"\n").unwrap();
    ok(p, &["--config", "run.toml", "synth"]);
    ok(p, &["--config", "run.toml", "synth", "--num-drugs", "30", "--out-dir", "b"]);
    ok(p, &["--seed", "3", "synth", "--num-drugs", "24", "--num-labels", "4", "--out-dir", "c"]);
    let count = |d: &str| fs::read_to_string(p.join(d).join("drugs.tsv")).unwrap().lines().count() - 1;
    assert_eq!(count("a"), 24);
    assert_eq!(count("b"), 30);
    assert_eq!(fs::read(p.join("a/ddi.tsv")).unwrap(), fs::read(p.join("c/ddi.tsv")).unwrap());

    fs::write(p.join("bad.toml"), "num_drugz = 5\n").unwrap();
    let out = colenc(p, &["--config", "bad.toml", "synth", "--out-dir", "d"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("num_drugz"));
}

#[test]
fn heldoff_partition_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["--seed", "1", "synth", "--out-dir", ".", "--num-drugs", "40"]);
    ok(p, &["--seed", "1", "partition", "heldoff", "--drugs", "drugs.tsv", "--ddi", "ddi.tsv", "--x-pct", "10", "--out", "h.txt"]);
    let set = PartitionSet::load(&p.join("h.txt")).unwrap();
    assert_eq!(set.heldoff_drugs.len(), 4);
    assert!(colenc(p, &["partition", "heldoff", "--drugs", "drugs.tsv", "--ddi", "ddi.tsv", "--out", "x.txt"])
        .status
        .code()
        == Some(1));

    let out = ok(
        p,
        &[
            "grid", "--drugs", "drugs.tsv", "--partition", "h.txt", "--column", "description", "--out-dir", "g",
            "--embed-dims", "4", "--hiddens", "4,6", "--max-lens", "6", "--epochs", "2", "--batch-size", "256",
        ],
    );
    assert!(out.starts_with("best "));
    assert_eq!(fs::read_to_string(p.join("g/grid.tsv")).unwrap().lines().count(), 3);
    EncoderModel::load(&p.join("g/model.ckpt")).unwrap();
}
