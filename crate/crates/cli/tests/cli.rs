use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seq2tree"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["factor-curve", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["factor-curve", "--tmax", "0"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(
        run(&["grammar", "check", "/nonexistent/g.asdl"])
            .status
            .code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.asdl");
    fs::write(&bad, "expr = Foo(undefined_type x)\n").unwrap();
    assert_eq!(
        run(&["grammar", "check", path(&bad)]).status.code(),
        Some(1)
    );

    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "no_such_key = 3\n").unwrap();
    let o = run(&[
        "train",
        "--data",
        path(dir.path()),
        "--out",
        path(dir.path()),
        "--config",
        path(&cfg),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grammar_check_prints_table() {
    let out = stdout(&run(&["grammar", "check", path(&fixture("fig3.asdl"))]));
    assert!(out.contains("Triple(identifier a, identifier b, pairtok c)"));
    assert!(out.contains("root: top"));
}

#[test]
fn vectorize_figure_tree() {
    let o = run(&[
        "vectorize",
        path(&fixture("fig3.actions")),
        "--grammar",
        path(&fixture("fig3.asdl")),
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 11);
    let node = |k: &str| rows.iter().find(|r| r[1] == k).unwrap().clone();
    assert_eq!(&node("8")[3..5], ["3", "3"]);
    assert_eq!(&node("9")[3..5], ["4", "3"]);
    assert_eq!(node("9")[5], "5");
}

#[test]
fn weights_follow_norms() {
    let o = run(&[
        "weights",
        path(&fixture("fig3.actions")),
        "--grammar",
        path(&fixture("fig3.asdl")),
        "--gamma",
        "1",
        "--alpha",
        "1",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][1..], ["1", "1"]);
    assert_eq!(rows[9][1..], ["5", "0.2"]);
    let simple = run(&[
        "weights",
        path(&fixture("fig3.actions")),
        "--grammar",
        path(&fixture("fig3.asdl")),
        "--factor",
        "simple",
        "--gamma",
        "0",
    ]);
    for r in csv_rows(&stdout(&simple)) {
        assert_eq!(r[2], "2");
    }
}

#[test]
fn factor_curve_last_row() {
    let rows = csv_rows(&stdout(&run(&[
        "factor-curve",
        "--gammas",
        "2",
        "--tmax",
        "10",
    ])));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.last().unwrap(), &["2", "10", "0.01"]);
    let flat = csv_rows(&stdout(&run(&[
        "factor-curve",
        "--gammas",
        "0",
        "--tmax",
        "5",
    ])));
    assert!(flat.iter().all(|r| r[2] == "1"));
}

#[test]
fn transduce_round_trip() {
    let g = fixture("fig3.asdl");
    let code = "( Top ( Pair ( Wrap ( Leaf n ) ) ( Triple a b ( Two p q ) ) ) )";
    for traversal in ["preorder", "bfs"] {
        let args = [
            "transduce",
            "--to-actions",
            "--traversal",
            traversal,
            "--grammar",
            path(&g),
        ];
        let actions = stdout(&run_stdin(&args, code));
        let args = [
            "transduce",
            "--to-code",
            "--traversal",
            traversal,
            "--grammar",
            path(&g),
        ];
        let back = stdout(&run_stdin(&args, &actions));
        assert_eq!(back.trim(), code);
    }
    let preorder = fs::read_to_string(fixture("fig3.actions")).unwrap();
    let args = ["transduce", "--to-actions", "--grammar", path(&g)];
    assert_eq!(stdout(&run_stdin(&args, code)), preorder);

    let toy = "( argmax c0 ( place:t c0 ) ( elevation:i c0 ) )";
    let actions = stdout(&run_stdin(&["transduce", "--to-actions"], toy));
    assert!(actions.starts_with("APPLY[Argmax]\n"));
    assert_eq!(
        stdout(&run_stdin(&["transduce", "--to-code", "-"], &actions)).trim(),
        toy
    );
}

#[test]
fn gen_corpus_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |out: &Path| {
        stdout(&run(&[
            "gen-corpus",
            "--n",
            "50",
            "--seed",
            "11",
            "--out",
            path(out),
        ]));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    gen(&a);
    gen(&b);
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        fs::read_to_string(a.join("train.jsonl"))
            .unwrap()
            .lines()
            .count(),
        40
    );
}

#[test]
fn evaluate_pred_against_gold() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c");
    stdout(&run(&[
        "gen-corpus",
        "--n",
        "40",
        "--seed",
        "5",
        "--out",
        path(&data),
    ]));
    let gold = data.join("test.jsonl");
    let pred = dir.path().join("pred.txt");
    let codes: Vec<String> = fs::read_to_string(&gold)
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["code"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    fs::write(&pred, codes.join("\n") + "\n").unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout(&run(&[
        "evaluate",
        "--pred",
        path(&pred),
        "--gold",
        path(&gold),
    ])))
    .unwrap();
    assert_eq!(report["em"], 1.0);
    assert_eq!(report["bleu4"], 1.0);

    let short = dir.path().join("short.txt");
    fs::write(&short, "( len:i r0 )\n").unwrap();
    assert_eq!(
        run(&["evaluate", "--pred", path(&short), "--gold", path(&gold)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn train_and_evaluate_small_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c");
    stdout(&run(&[
        "gen-corpus",
        "--n",
        "30",
        "--seed",
        "2",
        "--out",
        path(&data),
    ]));
    let cfg = dir.path().join("tiny.cfg");
    fs::write(
        &cfg,
        "# tiny model\nhidden = 8\nword_dim = 8\naction-dim = 8\nepochs = 2\n",
    )
    .unwrap();
    let train = |out: &Path| {
        let o = run(&[
            "train",
            "--data",
            path(&data),
            "--out",
            path(out),
            "--config",
            path(&cfg),
            "--epochs",
            "9",
            "--schedule",
            "ed:0.9",
            "--precision",
            "f64",
        ]);
        stdout(&o);
    };
    let (r1, r2) = (dir.path().join("r1"), dir.path().join("r2"));
    train(&r1);
    train(&r2);
    for f in ["checkpoint.json", "train_log.csv", "manifest.json"] {
        assert_eq!(
            fs::read(r1.join(f)).unwrap(),
            fs::read(r2.join(f)).unwrap(),
            "{f}"
        );
    }
    let log = fs::read_to_string(r1.join("train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3, "config epochs override the flag");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r1.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["hidden"], "8");
    assert_eq!(manifest["config"]["schedule"], "ed:0.9");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["dataset_sha256"].as_str().unwrap().len(), 64);

    let eval = dir.path().join("e");
    let o = run(&[
        "evaluate",
        "--checkpoint",
        path(&r1.join("checkpoint.json")),
        "--data",
        path(&data.join("test.jsonl")),
        "--beam",
        "2",
        "--out",
        path(&eval),
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["examples"], 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("BLEU-4"));
    assert_eq!(
        fs::read_to_string(eval.join("predictions.jsonl"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}

#[test]
fn train_fans_out_over_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c");
    stdout(&run(&[
        "gen-corpus",
        "--n",
        "20",
        "--seed",
        "4",
        "--out",
        path(&data),
    ]));
    let out = dir.path().join("runs");
    stdout(&run(&[
        "train",
        "--data",
        path(&data),
        "--out",
        path(&out),
        "--seeds",
        "3,4",
        "--epochs",
        "1",
        "--hidden",
        "4",
        "--word-dim",
        "4",
        "--action-dim",
        "4",
    ]));
    for s in [3, 4] {
        let m: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(out.join(format!("seed-{s}/manifest.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(m["seed"], s);
    }
}
