use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tailsampler::cli::run_with;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("tailsampler").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn long_tail_csv(dir: &Path) -> PathBuf {
    let mut body = String::from("id,class,prob\n");
    for (c, n) in [(0, 100), (1, 50), (2, 5)] {
        for i in 0..n {
            let p = ((i * 37 + c * 11) % 97) as f64 / 97.0 + 0.005;
            body.push_str(&format!("c{c}-{i},{c},{p}\n"));
        }
    }
    let path = dir.join("lt.csv");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn sample_balances_classes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = long_tail_csv(dir.path());
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    for out in [&first, &second] {
        let o = run(&[
            "sample",
            "--input",
            path_str(&input),
            "--k",
            "10",
            "--seed",
            "42",
            "--out",
            path_str(out),
        ]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert_eq!(o.stdout, "class,available,selected\n0,100,10\n1,50,10\n2,5,5\n");
    }
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("id,class\n"));
    assert_eq!(text.lines().count(), 1 + 25);
}

#[test]
fn sample_reports_missing_input_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = dir.path().join("s.csv");
    let o = run(&["sample", "--input", path_str(&missing), "--out", path_str(&out)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("absent.csv"), "{}", o.stderr);
    assert_eq!(o.stderr.lines().count(), 1);
}

#[test]
fn malformed_manifest_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,class,prob\na,0,1.5\n").unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&["sample", "--input", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(o.code, 2, "{}", o.stderr);
}

#[test]
fn unknown_flags_are_rejected() {
    let o = run(&["verify", "--suite", "matrix", "--colour"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("--colour"));
    let o = run(&["verify", "--suite", "everything"]);
    assert_eq!(o.code, 2);
}

#[test]
fn verify_suites_pass() {
    let o = run(&["verify", "--suite", "matrix", "--trials", "200"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert!(o.stdout.starts_with("suite,check,trials,failures,worst,status\n"));
    let o = run(&["verify", "--suite", "info", "--trials", "500"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    let o = run(&["verify", "--suite", "bns", "--trials", "100"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    let o = run(&["verify", "--suite", "dpp", "--trials", "50", "--mc-draws", "20000"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
}

#[test]
fn injected_fault_fails_with_replay_seed() {
    let o = run(&[
        "verify",
        "--suite",
        "matrix",
        "--trials",
        "3",
        "--inject-fault",
        "corrupt-matrix",
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stdout.contains("FAIL"));
    assert!(o.stdout.contains("# replay matrix/psd-and-unit-eigenvalues: seed="));
}

#[test]
fn verify_matrix_prints_lemma_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = long_tail_csv(dir.path());
    let o = run(&["verify", "--matrix", path_str(&input)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let report: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    for key in ["symmetric", "row_sums_ok", "psd", "eigs_in_unit"] {
        assert_eq!(report[key], serde_json::Value::Bool(true), "{key}");
    }
    assert!(report["min_eig"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn bns_toy_trace_shrinks_intra_class_distance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = run(&["bns-toy", "--out", path_str(&out)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "step,loss,intra_dist");
    assert_eq!(rows.len(), 1 + 201);
    let dist = |row: &str| row.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!(dist(rows[rows.len() - 1]) < dist(rows[1]));
}

#[test]
fn bns_toy_edge_cases() {
    let o = run(&["bns-toy", "--steps", "0"]);
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout.lines().count(), 2);
    let o = run(&["bns-toy", "--m", "50"]);
    assert_eq!(o.code, 3, "{}", o.stderr);
}

#[test]
fn experiment_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "experiment",
        "--classes",
        "4",
        "--n1",
        "80",
        "--if",
        "10",
        "--seeds",
        "2",
        "--test-per-class",
        "20",
        "--stage1-epochs",
        "50",
        "--stage2-epochs",
        "20",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 6);
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("seed,method,many,medium,few,overall\n"));
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn experiment_rejects_degenerate_config() {
    let o = run(&["experiment", "--classes", "2", "--n1", "1"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("degenerate"));
}

#[test]
fn dpp_commands_run_on_a_class() {
    let dir = tempfile::tempdir().unwrap();
    let input = long_tail_csv(dir.path());
    let o = run(&["dpp-sample", "--input", path_str(&input), "--class", "1", "--k", "4"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.lines().count(), 1 + 4);
    assert!(o.stdout.lines().skip(1).all(|l| l.ends_with(",1")));

    let out = dir.path().join("mc.csv");
    let o = run(&[
        "dpp-verify",
        "--input",
        path_str(&input),
        "--class",
        "2",
        "--draws",
        "50000",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.code, 0, "{}\n{}", o.stdout, o.stderr);
    let mc = fs::read_to_string(&out).unwrap();
    assert!(mc.starts_with("item,empirical_marginal,kernel_marginal,z_score\n"));
    assert_eq!(mc.lines().count(), 1 + 5);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tailsampler"))
}

#[test]
fn binary_exit_codes_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let input = long_tail_csv(dir.path());
    let outputs: Vec<Vec<u8>> = ["0", "2"]
        .iter()
        .map(|threads| {
            let out = dir.path().join(format!("s{threads}.csv"));
            let status = binary()
                .env("TAILSAMPLER_THREADS", threads)
                .args([
                    "sample",
                    "--input",
                    path_str(&input),
                    "--k",
                    "7",
                    "--out",
                    path_str(&out),
                ])
                .output()
                .unwrap();
            assert_eq!(status.status.code(), Some(0));
            fs::read(&out).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);

    let status = binary()
        .args([
            "verify",
            "--suite",
            "matrix",
            "--trials",
            "2",
            "--inject-fault",
            "corrupt-matrix",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    let status = binary()
        .args(["sample", "--input", "/nonexistent/m.csv", "--out", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    let status = binary().args(["bns-toy", "--m", "50"]).output().unwrap();
    assert_eq!(status.status.code(), Some(3));
}
