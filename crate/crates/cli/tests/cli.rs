use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_xispec"));
    c.env_remove("XISPEC_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn xispec")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Drops leading `#` lines.
fn body(text: &str) -> String {
    text.lines()
        .skip_while(|l| l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

fn results(text: &str) -> Vec<Value> {
    let v: Value = serde_json::from_str(&body(text)).unwrap();
    v["results"].as_array().unwrap().clone()
}

fn write_csv(dir: &Path, name: &str, rows: &[Vec<f64>], header: bool) -> PathBuf {
    let path = dir.join(name);
    let mut s = String::new();
    if header {
        let names: Vec<String> = (0..rows[0].len()).map(|j| format!("c{j}")).collect();
        s.push_str(&names.join(","));
        s.push('\n');
    }
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(&path, s).unwrap();
    path
}

#[test]
fn missing_file_exits_2() {
    let o = run(&["test", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b\n1,2\n3,oops\n5,6\n").unwrap();
    let o = run(&["test", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ties_exit_3_unless_randomized() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 5) as f64, i as f64 * 0.37]).collect();
    let path = write_csv(dir.path(), "ties.csv", &rows, false);
    let p = path.to_str().unwrap();
    let o = run(&["test", p, "--stats", "q_xi2"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["test", p, "--stats", "q_xi2", "--ties", "random", "--reps", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"ties\": \"random("));
}

#[test]
fn duplicated_column_rejects_xi2() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|i| {
            let x = ((i * 37) % 61) as f64 + 0.5;
            vec![x, x, ((i * 11) % 61) as f64 * 1.3, ((i * 23) % 61) as f64 - 7.0]
        })
        .collect();
    let path = write_csv(dir.path(), "dup.csv", &rows, true);
    let o = run(&["test", path.to_str().unwrap(), "--stats", "q_xi2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let r = results(&text);
    assert_eq!(r[0]["name"], "q_xi2");
    assert_eq!(r[0]["reject"], true);
    let v: Value = serde_json::from_str(&body(&text)).unwrap();
    assert_eq!(v["n"], 60);
    assert_eq!(v["p"], 4);
    assert_eq!(v["ties"], "error");
}

#[test]
fn normal_fixture_is_not_rejected_by_rank_tests() {
    let path = fixture("normal_200x100.csv");
    let o = run(&["test", path.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# xispec "));
    assert!(text.lines().next().unwrap().ends_with("seed: 11"));
    let r = results(&text);
    assert_eq!(r.len(), 9);
    for t in r.iter().filter(|t| t["name"] != "q_r2") {
        assert_eq!(t["reject"], false, "{t}");
    }
}

#[test]
fn env_seed_is_echoed() {
    let o = bin()
        .env("XISPEC_SEED", "4242")
        .args(["esd", "--kind", "psi", "--n", "40", "--p", "20"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).lines().next().unwrap().ends_with("seed: 4242"));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let args = [
        "simulate", "size", "--model", "a", "--n", "50", "--p", "50", "--reps", "500", "--seed", "7",
        "--stats", "q_xi2,q_xi4",
    ];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "2"]);
    let b = run(&with_threads);
    let (a, b) = (stdout(&a), stdout(&b));
    assert_eq!(body(&a), body(&b));
    assert!(body(&a).starts_with("model,n,p,stat,reps,rejection_rate"));
    assert_eq!(a, stdout(&run(&args)));
}

#[test]
fn simulate_rejects_bad_config_with_exit_4() {
    let o = run(&["simulate", "power", "--model", "e", "--n", "20", "--p", "21", "--reps", "100"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["simulate", "size", "--model", "c", "--n", "20", "--p", "20", "--reps", "100"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["clt", "--n", "20", "--p", "10", "--reps", "10"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn esd_histogram_integrates_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("esd.csv");
    let o = run(&[
        "esd", "--kind", "phi", "--n", "200", "--p", "100", "--seed", "1", "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# xispec "));
    assert!(text.contains("\n# clipped: 0\n"));
    let ks: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# ks: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..0.1).contains(&ks));
    let csv = body(&text);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bin_lo,bin_hi,density"));
    let mut mass = 0.0;
    let mut bins = 0;
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        mass += (v[1] - v[0]) * v[2];
        bins += 1;
    }
    assert_eq!(bins, 50);
    assert!((mass - 1.0).abs() < 1e-12, "{mass}");
}

#[test]
fn clt_prints_variance_lines_and_draws() {
    let o = run(&["clt", "--k", "1,2", "--n", "30", "--p", "10", "--reps", "200", "--seed", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let variance_lines = text.lines().filter(|l| l.starts_with("# k: ")).count();
    assert_eq!(variance_lines, 2);
    assert!(text.contains("limit_variance: "));
    let draws = body(&text);
    assert_eq!(draws.lines().count(), 1 + 2 * 200);
}

#[test]
fn verify_lines_have_report_format() {
    let o = run(&["verify", "--suite", "trpsi"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert!(!lines.is_empty());
    for l in lines {
        assert!(l.ends_with(", MATCH"), "{l}");
        assert_eq!(l.rsplitn(4, ", ").count(), 4);
    }
}

#[test]
fn verify_exits_5_on_mismatch() {
    // The Var(Xi^2) closed form disagrees with enumeration at n = 3.
    let o = run(&["verify", "--suite", "moments"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn round_trip_floats_in_csv() {
    let o = run(&["simulate", "size", "--model", "b", "--n", "20", "--p", "10", "--reps", "100", "--stats", "q_xi2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = body(&text).lines().nth(1).unwrap().to_string();
    let rate: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(rate.to_string(), row.rsplit(',').next().unwrap());
}
