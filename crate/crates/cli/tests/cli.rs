use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phaseprior::bench::read_csv;
use phaseprior::bounds::BoundReport;
use phaseprior::formats::{read_signal, Measurements};
use phaseprior::generative::GenerativeModel;
use phaseprior::measurement::ProbeSet;

fn digits() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/digits.csv")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phaseprior"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn train_simulate_reconstruct_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = digits();
    let summary = ok(
        d,
        &[
            "train",
            "--dataset",
            data.to_str().unwrap(),
            "--k",
            "30",
            "--out",
            "model.txt",
        ],
    );
    assert!(summary.contains("n_train 1438"));
    let model = GenerativeModel::read(d.join("model.txt")).unwrap();
    assert_eq!((model.n(), model.k()), (64, 30));

    ok(
        d,
        &[
            "probes",
            "--count",
            "100",
            "--n",
            "64",
            "--seed",
            "5",
            "--out",
            "probes.txt",
        ],
    );
    assert_eq!(ProbeSet::read(d.join("probes.txt")).unwrap().len(), 100);

    ok(
        d,
        &[
            "simulate",
            "--probes",
            "probes.txt",
            "--model",
            "model.txt",
            "--n-train",
            "1438",
            "--sigma",
            "0",
            "--seed",
            "2",
            "--out",
            "meas.txt",
            "--truth-out",
            "f0.txt",
        ],
    );
    let meas = Measurements::read(d.join("meas.txt")).unwrap();
    assert_eq!((meas.values.len(), meas.noise_norm), (6400, 0.0));

    let report = ok(
        d,
        &[
            "reconstruct",
            "--probes",
            "probes.txt",
            "--measurements",
            "meas.txt",
            "--method",
            "generative",
            "--model",
            "model.txt",
            "--out",
            "rec.txt",
            "--report",
            "report.txt",
            "--n-train",
            "1438",
            "--truth",
            "f0.txt",
            "--pairs",
            "200",
        ],
    );
    let err: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("relative_error "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-4, "{report}");
    assert_eq!(read_signal(d.join("rec.txt")).unwrap().len(), 64);
    let rep = BoundReport::read(d.join("report.txt")).unwrap();
    assert_eq!(rep.num_pairs, 200);
    assert_eq!(rep.lemma1, 0.0);
    assert!(rep.bias_lo <= rep.bias_hi && rep.bias_hi < 1e-2, "{rep:?}");

    let text = ok(
        d,
        &[
            "bounds",
            "--probes",
            "probes.txt",
            "--model",
            "model.txt",
            "--measurements",
            "meas.txt",
            "--signal",
            "rec.txt",
            "--n-train",
            "1438",
            "--pairs",
            "200",
        ],
    );
    assert_eq!(BoundReport::from_text(&text).unwrap().alpha, rep.alpha);
}

#[test]
fn simulate_from_dataset_row_and_conventional_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = digits();
    ok(
        d,
        &["probes", "--count", "20", "--n", "64", "--out", "p.txt"],
    );
    ok(
        d,
        &[
            "simulate",
            "--probes",
            "p.txt",
            "--dataset",
            data.to_str().unwrap(),
            "--index",
            "7",
            "--sigma",
            "0.001",
            "--out",
            "m.txt",
            "--truth-out",
            "f0.txt",
        ],
    );
    let out = ok(
        d,
        &[
            "reconstruct",
            "--probes",
            "p.txt",
            "--measurements",
            "m.txt",
            "--method",
            "conventional",
            "--out",
            "r.txt",
            "--truth",
            "f0.txt",
        ],
    );
    assert!(out.contains("method conventional"));
    assert!(out.contains("lambda 1e-6"));
}

const SMALL_SWEEP: &str = "dataset = DIGITS\ncsv = out.csv\nplot = out.svg\n\
sigma_grid = 0.001, 0.1\ntrials = 2\nrestarts = 2\nmethods = conventional, combined\n";

#[test]
fn sweep_twice_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let conf = SMALL_SWEEP.replace("DIGITS", digits().to_str().unwrap());
    std::fs::write(d.join("a.conf"), &conf).unwrap();
    std::fs::write(d.join("b.conf"), conf.replace("out.csv", "again.csv")).unwrap();
    let table = ok(d, &["sweep", "--quiet", "a.conf"]);
    ok(d, &["sweep", "--quiet", "b.conf"]);
    let (a, b) = (
        std::fs::read(d.join("out.csv")).unwrap(),
        std::fs::read(d.join("again.csv")).unwrap(),
    );
    assert_eq!(a, b);
    assert_eq!(read_csv(d.join("out.csv")).unwrap().records.len(), 16);
    assert!(table.starts_with("sigma,scenario,method,mean_snr_db,mean_relative_error\n"));
    assert_eq!(table.lines().count(), 1 + 8);
    assert!(std::fs::read_to_string(d.join("out.svg"))
        .unwrap()
        .contains("<polyline"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Usage errors.
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(d, &["probes"]).status.code(), Some(1));
    assert_eq!(
        run(d, &["probes", "--count", "0", "--out", "p.txt"])
            .status
            .code(),
        Some(1)
    );
    // Configuration errors.
    std::fs::write(
        d.join("bad.conf"),
        "dataset = x.csv\ncsv = y.csv\nspeed = 11\n",
    )
    .unwrap();
    let out = run(d, &["sweep", "bad.conf"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `speed`"));
    // Data errors.
    assert_eq!(run(d, &["sweep", "missing.conf"]).status.code(), Some(2));
    std::fs::write(d.join("p.txt"), "2 1 0\n1 0\n").unwrap();
    assert_eq!(
        run(
            d,
            &["simulate", "--probes", "p.txt", "--signal", "nope.txt", "--out", "m.txt"]
        )
        .status
        .code(),
        Some(2)
    );
    std::fs::write(d.join("short.csv"), "1,2,3\n").unwrap();
    assert_eq!(
        run(d, &["train", "--dataset", "short.csv", "--out", "m.txt"])
            .status
            .code(),
        Some(2)
    );
    // Help is not an error.
    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
}
