use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blowchoc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("failed to spawn binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn write_keys(dir: &TempDir, name: &str, keys: impl IntoIterator<Item = u64>) -> PathBuf {
    let path = dir.path().join(name);
    let bytes: Vec<u8> = keys.into_iter().flat_map(u64::to_le_bytes).collect();
    fs::write(&path, bytes).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build(keys: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["build", "--keys", s(keys), "--out", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn built_keys_are_all_found() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(&dir, "keys.bin", (0..1000).map(|i| i * 2));
    for kind in [
        &["--kind", "standard"][..],
        &["--kind", "blocked"],
        &[
            "--kind",
            "blowchoc",
            "--choices",
            "3",
            "--strategy",
            "distinct",
        ],
    ] {
        let filter = dir.path().join("f.bwch");
        let mut extra = vec!["--k", "10", "--n", "1000", "--threads", "2"];
        extra.extend_from_slice(kind);
        let out = build(&keys, &filter, &extra);
        assert_ok(&out);
        let stats = String::from_utf8(out.stderr).unwrap();
        assert!(
            stats.starts_with("keys\tbits\tload\tseconds\n1000\t"),
            "{stats}"
        );

        let out = run(&["query", "--filter", s(&filter), "--keys", s(&keys)]);
        assert_ok(&out);
        let text = stdout(&out);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1000);
        for (i, line) in lines.iter().enumerate() {
            assert_eq!(*line, format!("{}\t1", i * 2));
        }
    }
}

#[test]
fn builds_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(&dir, "keys.bin", (0..5000).map(|i| i * 7919));
    let a = dir.path().join("a.bwch");
    let b = dir.path().join("b.bwch");
    let c = dir.path().join("c.bwch");
    assert_ok(&build(
        &keys,
        &a,
        &["--k", "14", "--n", "5000", "--seed", "9"],
    ));
    assert_ok(&build(
        &keys,
        &b,
        &["--k", "14", "--n", "5000", "--seed", "9"],
    ));
    assert_ok(&build(
        &keys,
        &c,
        &[
            "--k",
            "14",
            "--n",
            "5000",
            "--seed",
            "9",
            "--threads",
            "3",
            "--shards",
            "1",
        ],
    ));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn text_keys_match_binary_keys() {
    let dir = TempDir::new().unwrap();
    let keys: Vec<u64> = (0..300).map(|i| i * 1_000_003).collect();
    let bin_keys = write_keys(&dir, "keys.bin", keys.iter().copied());
    let text_keys = dir.path().join("keys.txt");
    fs::write(
        &text_keys,
        keys.iter().map(|k| format!("{k}\n")).collect::<String>(),
    )
    .unwrap();
    let a = dir.path().join("a.bwch");
    let b = dir.path().join("b.bwch");
    assert_ok(&build(&bin_keys, &a, &["--k", "8", "--n", "300"]));
    assert_ok(&build(
        &text_keys,
        &b,
        &["--k", "8", "--n", "300", "--format", "text"],
    ));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invalid_configurations_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(&dir, "keys.bin", 0..10);
    let out_path = dir.path().join("f.bwch");
    for extra in [
        &["--k", "600", "--n", "10"][..],
        &[
            "--kind",
            "standard",
            "--strategy",
            "distinct",
            "--k",
            "6",
            "--n",
            "10",
        ],
        &[
            "--kind",
            "blocked",
            "--choices",
            "2",
            "--k",
            "6",
            "--n",
            "10",
        ],
        &[
            "--kind",
            "blowchoc",
            "--choices",
            "1",
            "--k",
            "6",
            "--n",
            "10",
        ],
        &["--k", "6"],
        &["--k", "6", "--n", "10", "--size-bits", "4096"],
        &["--k", "6", "--n", "10", "--format", "fasta"],
    ] {
        let out = build(&keys, &out_path, extra);
        assert_eq!(out.status.code(), Some(1), "{extra:?}");
        assert!(!out_path.exists());
    }
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = build(
        &dir.path().join("nope.bin"),
        &dir.path().join("f"),
        &["--k", "6", "--n", "10"],
    );
    assert_eq!(out.status.code(), Some(2));
    let keys = write_keys(&dir, "keys.bin", 0..10);
    let out = run(&[
        "query",
        "--filter",
        s(&dir.path().join("nope")),
        "--keys",
        s(&keys),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn damaged_filter_files_are_rejected_without_output() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(&dir, "keys.bin", 0..2000);
    let good = dir.path().join("good.bwch");
    assert_ok(&build(&keys, &good, &["--k", "12", "--n", "2000"]));
    let bytes = fs::read(&good).unwrap();

    let bad = dir.path().join("bad.bwch");
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    let mut bad_version = bytes.clone();
    bad_version[4] = 99;
    for damaged in [
        &bytes[..bytes.len() - 8],
        &bytes[..40],
        &[][..],
        &bad_magic,
        &bad_version,
    ] {
        fs::write(&bad, damaged).unwrap();
        for cmd in ["query", "fpr", "hist"] {
            let mut args = vec![cmd, "--filter", s(&bad)];
            if cmd == "query" {
                args.extend(["--keys", s(&keys)]);
            }
            let out = run(&args);
            assert_eq!(out.status.code(), Some(3), "{cmd}");
            assert!(out.stdout.is_empty());
        }
    }
}

#[test]
fn fpr_of_empty_filter_is_zero() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(&dir, "empty.bin", []);
    let filter = dir.path().join("f.bwch");
    assert_ok(&build(&keys, &filter, &["--k", "10", "--n", "1000"]));
    let out = run(&["fpr", "--filter", s(&filter), "--queries", "100000"]);
    assert_ok(&out);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "kind\tk\tc\tstrategy\trel_size\tN\tW\tfpr\tlog2_fpr\tstderr"
    );
    let row: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(
        row[..7],
        ["blowchoc", "10", "2", "random", "NA", "100000", "0"]
    );
    assert_eq!(row[7].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[8], "NA");
}

#[test]
fn fpr_reports_explicit_negatives() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(&dir, "keys.bin", (0..20_000).map(|i| i * 2));
    let negatives = write_keys(&dir, "neg.bin", (0..50_000).map(|i| i * 2 + 1));
    let filter = dir.path().join("f.bwch");
    assert_ok(&build(
        &keys,
        &filter,
        &["--kind", "blocked", "--k", "4", "--n", "20000"],
    ));
    let out = run(&[
        "fpr",
        "--filter",
        s(&filter),
        "--negatives",
        s(&negatives),
        "--threads",
        "2",
    ]);
    assert_ok(&out);
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[..4], ["blocked", "4", "1", "random"]);
    assert_eq!(row[5], "50000");
    let w: u64 = row[6].parse().unwrap();
    let fpr: f64 = row[7].parse().unwrap();
    assert!(w > 0 && fpr < 0.2, "{text}");
    assert!((row[4].parse::<f64>().unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn histogram_covers_every_load() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(&dir, "keys.bin", 0..3000);
    let filter = dir.path().join("f.bwch");
    assert_ok(&build(
        &keys,
        &filter,
        &["--k", "7", "--n", "3000", "--choices", "3"],
    ));
    let out = run(&["hist", "--filter", s(&filter)]);
    assert_ok(&out);
    let text = stdout(&out);
    let rows: Vec<(u32, u64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (j, c) = l.split_once('\t').unwrap();
            (j.parse().unwrap(), c.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 513);
    assert!(rows.iter().enumerate().all(|(i, &(j, _))| j as usize == i));
    let blocks: u64 = rows.iter().map(|r| r.1).sum();
    let header = fs::read(&filter).unwrap();
    let num_blocks = u64::from_le_bytes(header[40..48].try_into().unwrap());
    assert_eq!(blocks, num_blocks);
}

#[test]
fn bounds_tables() {
    let out = run(&["bounds", "--max-load", "--k", "7", "--choices", "2"]);
    assert_ok(&out);
    assert_eq!(stdout(&out), "k\tc\tB\tmax_load\n7\t2\t512\t232\n");

    let out = run(&["bounds", "--overload", "--gamma", "1.1", "--k", "10"]);
    assert_eq!(
        stdout(&out),
        "gamma\tk\tfpr\tratio\n1.1\t10\t1.867e-3\t1.912\n"
    );

    let out = run(&["bounds", "--collision", "--k", "2"]);
    let text = stdout(&out);
    let p: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split('\t')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((p - 1.0 / 512.0).abs() < 1e-8);

    let out = run(&["bounds", "--size", "--n", "1000000", "--k", "10"]);
    assert_eq!(
        stdout(&out),
        "n\tk\trel_size\tB\tM\tT\tm\n1000000\t10\t1\t512\t28178\t1\t14427136\n"
    );

    let out = run(&["bounds", "--max-load"]);
    let text = stdout(&out);
    assert!(text.contains("\n14\t2\t512\t244\n") && text.contains("\n7\t3\t512\t219\n"));
    assert!(text.contains("\n14\t3\t512\t237\n"));

    assert_eq!(run(&["bounds"]).status.code(), Some(1));
    assert_eq!(
        run(&["bounds", "--size", "--k", "3"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["bounds", "--max-load", "--overload"]).status.code(),
        Some(1)
    );
}

#[test]
fn fasta_build_ignores_line_wrapping() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.bwch");
    let b = dir.path().join("b.bwch");
    let args = ["--format", "fasta", "--q", "21", "--k", "10", "--n", "700"];
    let out = build(&fixture("reads.fa"), &a, &args);
    assert_ok(&out);
    assert_ok(&build(&fixture("reads_unwrapped.fa"), &b, &args));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let stats = String::from_utf8(out.stderr).unwrap();
    let read: u64 = stats
        .lines()
        .nth(1)
        .unwrap()
        .split('\t')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(read > 500 && read < 630, "{read}");

    let out = run(&[
        "query",
        "--filter",
        s(&a),
        "--keys",
        s(&fixture("reads.fa")),
        "--format",
        "fasta",
        "--q",
        "21",
    ]);
    assert_ok(&out);
    assert!(stdout(&out).lines().all(|l| l.ends_with("\t1")));
}

#[test]
fn sweep_is_reproducible() {
    let args = [
        "sweep",
        "--k",
        "6",
        "--n",
        "5000",
        "--queries",
        "20000",
        "--rel-sizes",
        "0.9,1.0,1.2",
        "--seed",
        "5",
    ];
    let a = run(&args);
    assert_ok(&a);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 4);
    let rels: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(4).unwrap())
        .collect();
    assert_eq!(rels, ["0.9", "1", "1.2"]);
}
