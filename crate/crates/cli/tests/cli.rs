//! End-to-end tests of the `brownkit` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TOY: &str = "the dog chased the cats .\n\
                   the dog scared the cats .\n\
                   the cats ran away .\n\
                   Alice likes cats .\n\
                   Alice likes sports .\n";

fn brownkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brownkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("BROWNKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn ingest(dir: &Path, corpus: &str, dataset: &str) {
    let out = brownkit(dir, &["ingest", corpus, "-o", dataset]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn ingest_reports_counts() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    let out = brownkit(dir.path(), &["ingest", "toy.txt", "-o", "toy.ds"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("tokens 25"), "{text}");
    assert!(text.contains("vocabulary 11"), "{text}");
    assert!(text.contains("bigrams 24"), "{text}");
}

#[test]
fn ingest_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "a.ds");
    ingest(dir.path(), "toy.txt", "b.ds");
    assert_eq!(
        fs::read(dir.path().join("a.ds")).unwrap(),
        fs::read(dir.path().join("b.ds")).unwrap()
    );
}

#[test]
fn ingest_empty_corpus_exits_2() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "empty.txt", "");
    let out = brownkit(dir.path(), &["ingest", "empty.txt", "-o", "x.ds"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty corpus"));
}

#[test]
fn ingest_missing_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = brownkit(dir.path(), &["ingest", "nope.txt", "-o", "x.ds"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cluster_prints_ami_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "toy.ds");
    let args = |tsv: &'static str, csv: &'static str| {
        vec![
            "cluster", "toy.ds", "--algo", "allsame", "-C", "3", "-o", tsv, "--progression", csv,
        ]
    };
    let first = brownkit(dir.path(), &args("a.tsv", "a.csv"));
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("AMI 1.1373"), "{}", stdout(&first));
    let second = brownkit(dir.path(), &args("b.tsv", "b.csv"));
    assert!(second.status.success());
    assert_eq!(
        fs::read(dir.path().join("a.tsv")).unwrap(),
        fs::read(dir.path().join("b.tsv")).unwrap()
    );
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn progression_csv_shape() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "toy.ds");
    let out = brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "brown", "-C", "3", "-o", "c.tsv", "--progression",
            "c.csv",
        ],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,pos_i,pos_j,loss_bits,ami_bits,window_size");
    // one merge row per step from |V| = 11 down to C = 3
    assert_eq!(lines.len() - 1, 8);
}

#[test]
fn resort_with_huge_interval_equals_brown() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "toy.ds");
    let out = brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "brown", "-C", "3", "-o", "brown.tsv",
            "--progression", "brown.csv",
        ],
    );
    assert!(out.status.success());
    let out = brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "resort", "-C", "3", "-R", "1000000", "-o",
            "resort.tsv", "--progression", "resort.csv",
        ],
    );
    assert!(out.status.success());
    assert_eq!(
        fs::read(dir.path().join("brown.tsv")).unwrap(),
        fs::read(dir.path().join("resort.tsv")).unwrap()
    );
}

#[test]
fn cluster_config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "toy.ds");
    // more clusters than words
    let out = brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "brown", "-C", "99", "-o", "x.tsv", "--progression",
            "x.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("vocabulary smaller than C"));
    // unknown algorithm
    let out = brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "kmeans", "-C", "3", "-o", "x.tsv", "--progression",
            "x.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    // resort without interval
    let out = brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "resort", "-C", "3", "-o", "x.tsv", "--progression",
            "x.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alternating_corpus_end_to_end() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "ab.txt", "a b a b a b a b a b a b\n");
    write(dir.path(), "test.txt", "a b a b a b\n");
    ingest(dir.path(), "ab.txt", "ab.ds");
    let out = brownkit(
        dir.path(),
        &[
            "cluster", "ab.ds", "--algo", "brown", "-C", "2", "-o", "ab.tsv", "--progression",
            "ab.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = brownkit(dir.path(), &["train-lm", "ab.tsv", "ab.ds", "-o", "ab.model"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = brownkit(dir.path(), &["eval", "ab.model", "test.txt"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("cpa_percent=100.00"), "{text}");
    assert!(text.contains("log2_perplexity_n=0"), "{text}");
    assert!(text.contains("perplexity_n=1"), "{text}");
}

#[test]
fn eval_all_oov_exits_2() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "ab.txt", "a b a b a b\n");
    write(dir.path(), "oov.txt", "x y z\n");
    ingest(dir.path(), "ab.txt", "ab.ds");
    brownkit(
        dir.path(),
        &[
            "cluster", "ab.ds", "--algo", "brown", "-C", "2", "-o", "ab.tsv", "--progression",
            "ab.csv",
        ],
    );
    brownkit(dir.path(), &["train-lm", "ab.tsv", "ab.ds", "-o", "ab.model"]);
    let out = brownkit(dir.path(), &["eval", "ab.model", "oov.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no in-vocabulary bigrams"));
}

#[test]
fn eval_is_deterministic() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "toy.ds");
    brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "brown", "-C", "3", "-o", "toy.tsv", "--progression",
            "toy.csv",
        ],
    );
    brownkit(dir.path(), &["train-lm", "toy.tsv", "toy.ds", "-o", "toy.model"]);
    let a = brownkit(dir.path(), &["eval", "toy.model", "toy.txt"]);
    let b = brownkit(dir.path(), &["eval", "toy.model", "toy.txt"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_env_override_keeps_output_identical() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "toy.ds");
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let tsv = format!("t{threads}.tsv");
        let csv = format!("t{threads}.csv");
        let out = Command::new(env!("CARGO_BIN_EXE_brownkit"))
            .args([
                "cluster", "toy.ds", "--algo", "brown-nw", "-C", "3", "--threads", "4", "-o",
                &tsv, "--progression", &csv,
            ])
            .current_dir(dir.path())
            .env("BROWNKIT_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        outputs.push((
            out.stdout,
            fs::read(dir.path().join(&tsv)).unwrap(),
            fs::read(dir.path().join(&csv)).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_thread_env_exits_2() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    ingest(dir.path(), "toy.txt", "toy.ds");
    let out = Command::new(env!("CARGO_BIN_EXE_brownkit"))
        .args([
            "cluster", "toy.ds", "--algo", "brown", "-C", "3", "-o", "x.tsv", "--progression",
            "x.csv",
        ])
        .current_dir(dir.path())
        .env("BROWNKIT_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_lm_rejects_mismatched_clusters() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "toy.txt", TOY);
    write(dir.path(), "other.txt", "a b c a b c\n");
    ingest(dir.path(), "toy.txt", "toy.ds");
    ingest(dir.path(), "other.txt", "other.ds");
    brownkit(
        dir.path(),
        &[
            "cluster", "toy.ds", "--algo", "brown", "-C", "3", "-o", "toy.tsv", "--progression",
            "toy.csv",
        ],
    );
    let out = brownkit(dir.path(), &["train-lm", "toy.tsv", "other.ds", "-o", "x.model"]);
    assert_eq!(out.status.code(), Some(2));
}
