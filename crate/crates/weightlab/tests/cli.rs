use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weightlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn two_cell_weight_characteristic() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.txt", "2 1\n");
    let o = run(&["weight-char", &w, "--p", "2", "--family", "dyadic"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1.125");
}

#[test]
fn bht_range_examples() {
    let o = run(&["bht-range", "--q1", "4", "--q2", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1.6 8 1.6 8");

    let o = run(&["bht-range", "--q1", "2", "--q2", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["frobnicate"],
        vec![],
        vec!["weight-char", "/nonexistent/weight.txt", "--p", "2"],
        vec!["norm", "-", "--space", "L(", "--points", "2"],
        vec!["bht-range", "--q1", "four", "--q2", "4"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn failed_verification_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let u = write(dir.path(), "u.txt", "1 2 3 4 5 6 7 8");
    let v = write(dir.path(), "v.txt", "0 0 0 0 0 0 0 0");
    let w = write(dir.path(), "w.txt", "1 1 1 1");
    let o = run(&[
        "rdf-verify", "--u", &u, "--v", &v, "--points", "2", "--weight", &w, "--r", "2", "--r-plus", "4", "--k-used", "2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stdout.is_empty());
}

#[test]
fn formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let xi = write(dir.path(), "xi.txt", "1 2 3 0.5");
    let base = ["norm", xi.as_str(), "--space", "Orl(2, 1)", "--points", "4"];
    let text: f64 = stdout(&run(&base)).trim().parse().unwrap();

    let csv = stdout(&run(&[&base[..], &["--format", "csv"]].concat()));
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "value").unwrap();
    assert_eq!(row[col].parse::<f64>().unwrap(), text);

    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&[&base[..], &["--format", "json"]].concat()))).unwrap();
    assert_eq!(json["rows"][0]["value"].as_f64().unwrap(), text);
}

#[test]
fn printed_values_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let xi = write(dir.path(), "xi.txt", "1 1");
    let o = run(&["norm", &xi, "--space", "prod(L(2), L(2))", "--points", "2"]);
    assert_eq!(stdout(&o).trim(), "2");

    let f: Vec<String> = (0..16).map(|i| format!("{}", ((i * 37 % 11) as f64 - 5.0) / 3.0)).collect();
    let f_path = write(dir.path(), "f.txt", &f.join(" "));
    let h1 = stdout(&run(&["hilbert", &f_path]));
    let h_path = write(dir.path(), "h.txt", &h1);
    let hh = stdout(&run(&["hilbert", &h_path]));
    let mean = f.iter().map(|s| s.parse::<f64>().unwrap()).sum::<f64>() / 16.0;
    let nyq = f.iter().enumerate().map(|(i, s)| s.parse::<f64>().unwrap() * if i % 2 == 0 { 1.0 } else { -1.0 }).sum::<f64>() / 16.0;
    for (i, (a, b)) in hh.split_whitespace().zip(&f).enumerate() {
        let a: f64 = a.parse().unwrap();
        let b: f64 = b.parse::<f64>().unwrap() - mean - if i % 2 == 0 { nyq } else { -nyq };
        assert!((a + b).abs() <= 1e-11 * (1.0 + b.abs()), "{a} vs {}", -b);
    }
}

#[test]
fn out_flag_writes_file_and_nothing_on_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let out_s = out.to_str().unwrap();
    let o = run(&["bht-range", "--q1", "3", "--q2", "3", "--format", "csv", "--out", out_s]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "p1_minus,p1_plus,p2_minus,p2_plus\n1.5,6,1.5,6\n");

    let bad = dir.path().join("bad.csv");
    let o = run(&["bht-range", "--q1", "1.5", "--q2", "2", "--out", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!bad.exists());
}

#[test]
fn seeds_drive_results() {
    let args = |seed: &'static str| {
        vec!["weight-lemmas", "--weight-gen", "log-uniform:1", "--grid-log2", "5", "--p", "2", "--r", "3", "--s", "1.5", "--seed", seed]
    };
    let a = stdout(&run(&args("1")));
    assert_eq!(a, stdout(&run(&args("1"))));
    assert_ne!(a, stdout(&run(&args("2"))));
}

#[test]
fn thread_count_does_not_change_tables() {
    let args = [
        "extrapolate", "--op", "hilbert", "--range", "1,inf", "--exponents", "2", "--weight-gen", "martingale:0.3", "--grid-log2", "4",
        "--probes", "3", "--format", "csv",
    ];
    let with = |n: &str| Command::new(env!("CARGO_BIN_EXE_weightlab")).args(args).env("WEIGHTLAB_THREADS", n).output().unwrap();
    let one = with("1");
    assert_eq!(one.status.code(), Some(0));
    assert!(stdout(&one).starts_with("p1,p2,ap1,rh1,ap2,rh2,norm,probes,seed\n"));
    assert_eq!(one.stdout, with("3").stdout);
    assert_eq!(with("zero").status.code(), Some(2));
}
