use std::path::Path;
use std::process::{Command, Output};

use rzl_core::params::theorem_bound_at;
use serde_json::Value;

fn rzl(args: &[&str]) -> Output {
    rzl_env(args, &[])
}

fn rzl_env(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rzl"));
    cmd.args(args).env_remove("RZL_ZERO_DB");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn bounds_reports_theorem_bound() {
    let v = json_of(&rzl(&["bounds", "--sigma", "0.75", "--kappa", "0.2", "--T", "1e8"]));
    let expect = theorem_bound_at(0.75, 0.2, 1e8).unwrap();
    let tb = &v["theorem_bound"];
    assert_eq!(tb["value"].as_f64().unwrap(), expect.value);
    assert_eq!(tb["growth_factor"].as_f64().unwrap(), expect.growth_factor);
    assert_eq!(tb["constant"].as_f64().unwrap(), 1.0);
    assert!((v["sigma_star"].as_f64().unwrap() - 0.880766).abs() < 1e-5);
}

#[test]
fn sets_counts_fourteen_primes_at_one_thousand() {
    let v = json_of(&rzl(&["sets", "--N", "1000", "--sigma", "0.75", "--a", "1.5"]));
    assert_eq!(v["n_primes"], 14);
    assert_eq!(v["windows"]["p"].as_array().unwrap().len(), 14);
    assert!(v["table_checksum"].as_str().unwrap().len() == 16);
    assert!(v["tail_ratio_m"].as_f64().unwrap() >= 0.0);
}

#[test]
fn unknown_command_prints_usage_and_exits_one() {
    let out = rzl(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());
}

#[test]
fn refusals_exit_two() {
    let out = rzl(&["verify-convolution", "--sigma", "0.8", "--t", "10"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("zeros.txt");
    std::fs::write(&db, "verified_height 5000\n14.134725\n0.85 1001.0\n").unwrap();
    let out = rzl_env(&["verify-convolution", "--sigma", "0.8", "--t", "1000"], &[("RZL_ZERO_DB", &db)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("zero indicator vanishes"), "{err}");
    assert!(err.contains("env:"), "provenance names the database source: {err}");
}

#[test]
fn internal_errors_exit_one() {
    let out = rzl(&["moments", "--mode", "nope", "--sigma", "0.8", "--beta", "0.36", "--kappa", "0.25", "--T", "1e3", "--N", "16"]);
    assert_eq!(out.status.code(), Some(1));
    let out = rzl(&["bounds", "--config", "/nonexistent/rzl.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let json = dir.path().join(format!("r{threads}.json"));
        let csv = dir.path().join(format!("r{threads}.csv"));
        let out = rzl(&[
            "search",
            "--sigma",
            "0.6",
            "--beta",
            "0.36",
            "--T",
            "1e3",
            "--grid",
            "3000",
            "--threads",
            threads,
            "--out",
            json.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty(), "primary output went to --out");
        let prov: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(prov["command"], "search");
        assert_eq!(prov["threads"].as_u64().unwrap().to_string(), threads);
        outputs.push((std::fs::read(&json).unwrap(), std::fs::read(&csv).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(!text.contains("started_unix"));
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "sigma = 0.6\nN = 1000\na = 1.5\nkappa = 0.05\n").unwrap();
    let v = json_of(&rzl(&["sets", "--config", cfg.to_str().unwrap(), "--sigma", "0.75"]));
    assert_eq!(v["params"]["sigma"], 0.75);
    assert_eq!(v["params"]["N"], 1000);
    assert_eq!(v["params"]["kappa"], 0.05);

    std::fs::write(&cfg, "sigma = 0.6\nbogus = 1\n").unwrap();
    assert_eq!(rzl(&["bounds", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn resonator_csv_is_rfc4180() {
    let out = rzl(&[
        "resonator", "--N", "100", "--sigma", "0.7", "--kappa", "0.1", "--a", "2", "--T", "1000", "--t-grid", "0:10:21",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,re,im,abs2\r\n"));
    assert!(text.lines().skip(1).all(|l| !l.contains('e')), "no exponent notation");
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for r in &rows {
        assert!((r[3] - (r[1] * r[1] + r[2] * r[2])).abs() <= 1e-9 * r[3].max(1.0));
    }
    assert_eq!(rows[0][2], 0.0, "R(0) is real");
}

#[test]
fn zeta_single_point_and_grid() {
    let v = json_of(&rzl(&["zeta", "--sigma", "0.5", "--t", "14.134725"]));
    let z = v["zeta"].as_array().unwrap();
    assert!(z[0].as_f64().unwrap().hypot(z[1].as_f64().unwrap()) < 1e-4);

    let v = json_of(&rzl(&["zeta", "--sigma", "0.7", "--t", "100", "--log"]));
    assert!(v["path_steps"].as_u64().unwrap() > 0);

    let out = rzl(&["zeta", "--sigma", "0.7", "--grid", "100:110:11", "--log"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,re,im,err_est,log_re,log_im");
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn convolution_sweep_and_combined() {
    let out = rzl(&["verify-convolution", "--sigma", "0.8", "--sweep-t", "1000:1200:3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("ok")));

    let v = json_of(&rzl(&["verify-convolution", "--sigma", "0.8", "--t", "1000", "--x", "10", "--theta", "1"]));
    assert_eq!(v["x"], 10.0);
    assert!(v["residual"].as_f64().unwrap() < v["budget"].as_f64().unwrap());
}

#[test]
fn moments_modes_agree_on_shared_fields() {
    let base = ["--sigma", "0.8", "--beta", "0.5", "--kappa", "0.1", "--T", "200", "--N", "16", "--thetas", "0,1.5"];
    let run = |mode: &str| {
        let mut args = vec!["moments", "--mode", mode];
        args.extend(base);
        json_of(&rzl(&args))
    };
    let quad = run("quad");
    let analytic = run("analytic");
    for i in 0..2 {
        let (q, a) = (&quad[i], &analytic[i]);
        assert_eq!(q["mode"], "quad");
        assert_eq!(q["M2_main"], a["M2_main"]);
        assert_eq!(q["triple_sum_lhs"], a["triple_sum_lhs"]);
        assert!(q["M1"].as_f64().unwrap() <= a["M1"].as_f64().unwrap() * (1.0 + 1e-6));
        assert!(q["ratio"].as_f64().unwrap() <= q["grid_max"].as_f64().unwrap());
    }
}

#[test]
fn search_ladder_and_theta_list() {
    let v = json_of(&rzl(&["search", "--sigma", "0.6", "--beta", "0.36", "--grid", "2000", "--sweep", "1e3,1e4"]));
    let rungs = v.as_array().unwrap();
    assert_eq!(rungs.len(), 2);
    assert!(rungs[1]["result"]["value"].as_f64() >= rungs[0]["result"]["value"].as_f64());
    assert!(rungs[0]["comparison"]["ratio"].as_f64().unwrap() > 0.0);

    let v = json_of(&rzl(&["search", "--sigma", "0.6", "--beta", "0.36", "--T", "1e3", "--grid", "2000", "--thetas", "0,3.141592653589793"]));
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn ratios_deficit_shrinks() {
    let v = json_of(&rzl(&["ratios", "--sigma", "0.6", "--a", "1.5", "--gamma", "0.5", "--kappa", "0.05"]));
    let d: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["deficit"].as_f64().unwrap()).collect();
    assert_eq!(d.len(), 4);
    assert!(d.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn windows_from_budget_or_height() {
    let v = json_of(&rzl(&["windows", "--N", "1e6"]));
    assert_eq!(v["p"].as_array().unwrap().len(), 31);
    let v = json_of(&rzl(&["windows", "--T", "1e10", "--kappa", "0.3"]));
    assert_eq!(v["N"], 1000);
}
