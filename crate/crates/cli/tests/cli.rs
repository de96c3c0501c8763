//! End-to-end tests of the command-line interface.

use std::io::Write;
use std::process::{Command, Output};

fn qsdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsdc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

const SWEEP_HEADER: &str = "alpha_bab_db,distance_km,mu,mode,protocol,cs,cs_x2,cs_x3,\
iab_x2,iab_x3,iae_x2,iae_x3,y1_l,y2_l,e1_u,e2_u,q_bab_x2,e_bab_x2,q_bab_x3,e_bab_x3";

#[test]
fn dist_reproduces_reference_fractions() {
    let out = qsdc(&["dist"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(header.join(","), "n,q_x2_norm,q_x3_norm,q_x4_norm,poisson");
    let first: Vec<f64> = rows[0][1..].iter().map(|v| v.parse().unwrap()).collect();
    assert!((first[0] - 0.193).abs() < 0.005);
    assert!((first[1] - 0.191).abs() < 0.005);
    assert!(first[2] < 0.05);
    assert!((first[3] - 0.904).abs() < 0.005);
    // each normalized column sums to one up to the truncation tail
    for c in 1..=4 {
        let sum: f64 = rows.iter().map(|r| r[c].parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "column {c} sums to {sum}");
    }
}

#[test]
fn dist_zero_intensity_degenerates_gracefully() {
    // with dark counts the herald events keep a vacuum-only conditional
    let out = qsdc(&["dist", "--mu", "0"]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0");
    assert!(rows[0][4].parse::<f64>().unwrap() == 1.0);

    // without dark counts the herald events are empty and get flagged
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    writeln!(cfg, "[source]\nmu = 0.0\nd_1 = 0.0\nd_2 = 0.0").unwrap();
    let out = qsdc(&["dist", "--config", cfg.path().to_str().unwrap()]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][1].parse::<f64>().unwrap().is_nan());
    assert!(stderr(&out).contains("zero probability"));
}

#[test]
fn sweep_emits_exact_header_and_is_deterministic() {
    let args = [
        "sweep",
        "--mu",
        "0.1",
        "--alpha-min",
        "3.5",
        "--alpha-max",
        "4.5",
        "--step",
        "0.25",
    ];
    let a = qsdc(&args);
    let b = qsdc(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with(SWEEP_HEADER));
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 5);
    // numeric output carries at least 15 significant digits
    assert!(rows[0][5].contains('e'));
    assert!(
        rows[0][5]
            .split('e')
            .next()
            .unwrap()
            .trim_start_matches('-')
            .len()
            >= 16
    );
}

#[test]
fn sweep_finite_never_exceeds_infinite() {
    let base = [
        "sweep",
        "--mu",
        "0.01",
        "--alpha-min",
        "0",
        "--alpha-max",
        "6",
        "--step",
        "0.5",
    ];
    let fin = qsdc(&[&base[..], &["--mode", "finite"]].concat());
    let inf = qsdc(&[&base[..], &["--mode", "infinite"]].concat());
    let (hf, rf) = parse_csv(&stdout(&fin));
    let (_, ri) = parse_csv(&stdout(&inf));
    let cs = col(&hf, "cs");
    for (f, i) in rf.iter().zip(&ri) {
        let (cf, ci): (f64, f64) = (f[cs].parse().unwrap(), i[cs].parse().unwrap());
        assert!(cf <= ci, "finite {cf} above infinite {ci}");
    }
}

#[test]
fn sweep_orders_rows_by_alpha_then_mu() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    writeln!(
        cfg,
        "[sweep]\nalpha_min_db = 1.0\nalpha_max_db = 2.0\nstep_db = 1.0\nmu_values = [0.01, 0.1]"
    )
    .unwrap();
    let out = qsdc(&["sweep", "--config", cfg.path().to_str().unwrap()]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    let (a, m) = (col(&header, "alpha_bab_db"), col(&header, "mu"));
    let seq: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[a].parse().unwrap(), r[m].parse().unwrap()))
        .collect();
    assert_eq!(seq.len(), 4);
    assert!(seq[0].0 == 1.0 && seq[1].0 == 1.0 && seq[2].0 == 2.0);
    assert!(seq[0].1 < seq[1].1 && seq[2].1 < seq[3].1);
}

#[test]
fn sweep_one_way_flag_relabels_axis() {
    let out = qsdc(&[
        "sweep",
        "--one-way",
        "--alpha-min",
        "2",
        "--alpha-max",
        "2",
        "--step",
        "1",
    ]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(header[0], "alpha_ba_db");
    let d: f64 = rows[0][1].parse().unwrap();
    assert!((d - 2.0 / 0.2).abs() < 1e-12);
}

#[test]
fn empty_sweep_grid_is_a_validation_error() {
    let out = qsdc(&["sweep", "--alpha-min", "5", "--alpha-max", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty sweep grid"));
}

#[test]
fn unknown_config_key_is_rejected_with_its_path() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    writeln!(cfg, "[source]\nmu = 0.1\nbogus_knob = 3").unwrap();
    let out = qsdc(&["dist", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus_knob"));
}

#[test]
fn out_of_range_parameter_names_the_field() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    writeln!(cfg, "[source]\neta_x = 1.5").unwrap();
    let out = qsdc(&["dist", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("eta_x"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = qsdc(&["dist", "--config", "/nonexistent/qsdc.toml"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn explicit_default_config_matches_builtin_defaults() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    write!(
        cfg,
        r#"
mode = "finite"
protocol = "hsps"
eve_ratio = 1.0
n_max = 20

[source]
mu = 0.1
eta_x = 0.8
eta_h = 0.9
eta_1 = 0.6
eta_2 = 0.8
t = 0.4
d_1 = 8e-8
d_2 = 8e-8

[link]
alpha_db = 4.0
eta_opt_ba = 0.21
eta_opt_bab = 0.088
eta_d_a = 0.7
eta_d_b = 0.7
y0_a = 8e-8
y0_b = 8e-8
e_d_a = 0.0131
e_d_b = 0.0026

[sweep]
alpha_min_db = 0.0
alpha_max_db = 8.0
step_db = 0.01

[mc]
shots = 10000000
seed = 42
leg = "ba"
"#
    )
    .unwrap();
    let args = [
        "sweep",
        "--alpha-min",
        "4",
        "--alpha-max",
        "4.1",
        "--step",
        "0.05",
    ];
    let with_file = qsdc(&[&args[..], &["--config", cfg.path().to_str().unwrap()]].concat());
    let without = qsdc(&args);
    assert!(with_file.status.success());
    assert_eq!(with_file.stdout, without.stdout);
}

#[test]
fn maxdist_reference_distance() {
    let out = qsdc(&["maxdist", "--mu", "0.01"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    let d: f64 = rows[0][col(&header, "distance_km")].parse().unwrap();
    assert!((d - 17.975).abs() < 0.25, "distance {d} km");
}

#[test]
fn maxdist_with_unreachable_floor_is_numeric_failure() {
    let out = qsdc(&["maxdist", "--floor", "1.0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mc_report_is_reproducible() {
    let args = ["mc", "--shots", "200000", "--seed", "7"];
    let a = qsdc(&args);
    let b = qsdc(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# rng: chacha8, seed: 7, shots: 200000"));
    let (header, rows) = parse_csv(&text);
    assert_eq!(header.join(","), "quantity,model,mc,sigma,z");
    assert!(rows.len() >= 10);
    let other = qsdc(&["mc", "--shots", "200000", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn optimize_at_fixed_attenuation_finds_positive_capacity() {
    let out = qsdc(&["optimize", "--alpha-bab", "7.0"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    let mu: f64 = rows[0][col(&header, "mu_star")].parse().unwrap();
    let cs: f64 = rows[0][col(&header, "cs_star")].parse().unwrap();
    assert!((1e-4..=1.0).contains(&mu));
    assert!(cs > 0.0);
}
