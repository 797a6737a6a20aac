use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use interbank::ingest::{generate_synthetic, save_balance_sheets};
use interbank::output::{load_report, load_series, SERIES_HEADER};
use interbank::SyntheticSpec;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_interbank"));
    c.env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn write_csv(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const HEADER: &str = "id,external_assets,external_liabilities,interbank_assets,interbank_liabilities\n";

#[test]
fn run_twice_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let outs: Vec<PathBuf> = ["a", "b"].iter().map(|n| tmp.path().join(n)).collect();
    for o in &outs {
        let r = run(&[
            "run",
            "--synthetic",
            "n=10",
            "--realizations",
            "1",
            "--seed",
            "7",
            "--out",
            o.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = files(&outs[0]);
    let b = files(&outs[1]);
    assert_eq!(a.len(), 2);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.strip_prefix(&outs[0]).unwrap(), y.strip_prefix(&outs[1]).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn unit_threshold_freezes_every_run_at_first_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let r = run(&[
        "run",
        "--synthetic",
        "n=10",
        "--set",
        "eps_c=1.0",
        "--realizations",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report = load_report(&out.join("random/report.json")).unwrap();
    assert_eq!(report.n_converged, 3);
    assert_eq!(report.metrics.t_c.min, 1.0);
    assert_eq!(report.metrics.t_c.max, 1.0);
    assert_eq!(report.parameters.eps_c, 1.0);
    for k in 0..3 {
        let series = load_series(&out.join(format!("random/series_{k:04}.csv"))).unwrap();
        assert_eq!(series.last().unwrap().t, 2);
    }
}

#[test]
fn sweep_emits_six_series_sets_and_four_charts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let r = run(&[
        "sweep",
        "--synthetic",
        "n=30,seed=3",
        "--policies",
        "A_max,A_min,B_max,B_min,K_max,K_min",
        "--realizations",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for policy in ["A_max", "A_min", "B_max", "B_min", "K_max", "K_min"] {
        let dir = out.join(policy);
        for k in 0..2 {
            let path = dir.join(format!("series_{k:04}.csv"));
            let text = fs::read_to_string(&path).unwrap();
            assert_eq!(text.lines().next().unwrap(), SERIES_HEADER.join(","));
            let rows = load_series(&path).unwrap();
            assert_eq!(rows[0].t, 0);
            assert_eq!(rows[0].rel_equity, 1.0);
            assert!(rows.windows(2).all(|w| w[1].t == w[0].t + 1));
        }
        let report = load_report(&dir.join("report.json")).unwrap();
        assert_eq!(report.policy, policy);
        assert!(report.fixed_network);
    }
    let mut charts: Vec<String> = fs::read_dir(out.join("charts"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    charts.sort();
    assert_eq!(
        charts,
        ["defaulted_frac.svg", "gamma.svg", "rate.svg", "rel_equity.svg"]
    );
    for c in &charts {
        let svg = fs::read_to_string(out.join("charts").join(c)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 6, "{c}");
    }
}

#[test]
fn validate_prints_one_row_per_bank() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_csv(tmp.path(), "two.csv", &format!("{HEADER}a,10,6,2,3\nb,8,5,3,2\n"));
    let r = run(&["validate", p.to_str().unwrap()]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("a "));
    assert!(rows[1].starts_with("b "));
}

#[test]
fn validate_names_an_insolvent_bank() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_csv(tmp.path(), "bad.csv", &format!("{HEADER}a,10,6,2,3\nbroke,1,5,3,2\n"));
    let r = run(&["validate", p.to_str().unwrap()]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("broke"));
}

#[test]
fn validate_reports_a_malformed_row() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_csv(tmp.path(), "neg.csv", &format!("{HEADER}a,10,6,2,3\nb,-8,5,3,2\n"));
    let r = run(&["validate", p.to_str().unwrap()]);
    assert!(!r.status.success());
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("row 3") && err.contains("external_assets"), "{err}");
}

#[test]
fn validate_leverage_column_matches_recomputation() {
    let tmp = tempfile::tempdir().unwrap();
    let records = generate_synthetic(&SyntheticSpec {
        n_banks: 183,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    let p = tmp.path().join("banks.csv");
    save_balance_sheets(&p, &records).unwrap();
    let r = run(&["validate", p.to_str().unwrap()]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 183);
    for (row, rec) in rows.iter().zip(&records) {
        assert_eq!(row[0], rec.id);
        let a = rec.external_assets + rec.interbank_assets;
        let e = a - rec.external_liabilities - rec.interbank_liabilities;
        let leverage: f64 = row[3].parse().unwrap();
        assert_eq!(leverage, a / e, "{}", rec.id);
        assert_eq!(row[4], "yes");
    }
}

#[test]
fn missing_input_fails_with_diagnostic() {
    let r = run(&["run", "--input", "/nonexistent/banks.csv"]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("/nonexistent/banks.csv"));
}

#[test]
fn unknown_parameter_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(&[
        "run",
        "--synthetic",
        "n=5",
        "--set",
        "beta=2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("beta"));
}

#[test]
fn both_input_sources_are_rejected() {
    let r = run(&["run", "--synthetic", "n=5", "--input", "x.csv"]);
    assert!(!r.status.success());
}

#[test]
fn iteration_cap_gives_exit_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let r = run(&[
        "run",
        "--synthetic",
        "n=10",
        "--set",
        "max_iterations=2",
        "--set",
        "eps_c=1e-9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    let report = load_report(&out.join("random/report.json")).unwrap();
    assert_eq!(report.n_nonconverged, 1);
}

#[test]
fn sample_network_writes_a_square_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("m.csv");
    let r = run(&[
        "sample-network",
        "--synthetic",
        "n=20",
        "--seed",
        "4",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let (n, m) = interbank::reconstruction::read_matrix(std::io::BufReader::new(fs::File::open(&p).unwrap())).unwrap();
    assert_eq!(n, 20);
    assert!((0..n).all(|i| m[i * n + i] == 0.0));
    let again = run(&["sample-network", "--synthetic", "n=20", "--seed", "4"]);
    assert_eq!(again.stdout, fs::read(&p).unwrap());
}

#[test]
fn matrix_dump_matches_sampled_marginals() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let r = run(&[
        "run",
        "--synthetic",
        "n=15,seed=2",
        "--dump-matrix",
        "--no-series",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let records = generate_synthetic(&"n=15,seed=2".parse().unwrap()).unwrap();
    let f = fs::File::open(out.join("network_0000.csv")).unwrap();
    let (n, m) = interbank::reconstruction::read_matrix(std::io::BufReader::new(f)).unwrap();
    for (i, rec) in records.iter().enumerate().take(n) {
        let row: f64 = m[i * n..(i + 1) * n].iter().sum();
        assert!((row - rec.interbank_assets).abs() <= 0.01 * rec.interbank_assets);
    }
    assert!(!out.join("random/series_0000.csv").exists());
}
