use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use longmem_cli::args::{Common, Format, Manifest};
use longmem_cli::commands::{emit_table, TABLE_HEADER};
use longmem_core::harness::{estimate_rosenblatt, rosenblatt_table, run_sweep, simulate_rosenblatt_paths};
use longmem_core::{ExperimentConfig, GridSpec, Model, QuadratureSpec, RunOptions};

fn longmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longmem"))
        .args(args)
        .env_remove("LONGMEM_CACHE_DIR")
        .output()
        .expect("run longmem")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let o = longmem(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    o
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn six_cell_sweep_writes_header_manifest_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    ok(&[
        "reproduce-tables",
        "--model",
        "rosenblatt",
        "--hurst",
        "0.55",
        "--hurst",
        "0.75",
        "--hurst",
        "0.9",
        "--drift",
        "2",
        "--drift",
        "20",
        "--n",
        "6",
        "--reps",
        "4",
        "--seed",
        "42",
        "--out",
        p(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], TABLE_HEADER);
    assert_eq!(rows.len(), 7);
    assert!(rows[1].starts_with("rosenblatt,0.55,2,6,2,4,42,"));
    assert!(rows[6].starts_with("rosenblatt,0.9,20,6,2,4,42,"));
    // runtime_s stays empty unless --timings is given.
    assert!(rows.iter().skip(1).all(|r| r.ends_with(',')));
    assert!(text.contains("# seed=42"));
    assert!(text.contains("# rerun: longmem reproduce-tables --model rosenblatt --hurst 0.55 --hurst 0.75 --hurst 0.9"));
    for r in &rows[1..] {
        let mean = r.split(',').nth(7).unwrap();
        let digits = mean.trim_start_matches('-').replace('.', "");
        assert!(digits.trim_start_matches('0').len() <= 6, "{mean}");
    }
}

#[test]
fn timings_fill_the_runtime_column() {
    let o = ok(&["reproduce-tables", "--model", "wiener", "--n", "5", "--reps", "3", "--seed", "1", "--timings"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let row = data_lines(&text)[1].to_string();
    assert!(!row.ends_with(','), "{row}");
}

#[test]
fn low_alpha_is_accepted_with_warning() {
    let o = ok(&[
        "reproduce-tables",
        "--model",
        "fbm",
        "--hurst",
        "0.7",
        "--n",
        "20",
        "--alpha",
        "0.9",
        "--reps",
        "5",
        "--seed",
        "3",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# warning:") && l.contains("alpha = 0.9")), "{text}");
}

#[test]
fn hurst_outside_range_names_the_flag() {
    let o = longmem(&["reproduce-tables", "--model", "fbm", "--hurst", "1.2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--hurst"), "{}", stderr(&o));
    let o = longmem(&["simulate", "--model", "rosenblatt", "--hurst", "0.4", "--n", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--hurst"));
}

#[test]
fn missing_seed_is_a_usage_error() {
    for args in [
        &["reproduce-tables", "--model", "wiener", "--n", "5"][..],
        &["simulate", "--model", "wiener", "--n", "5"][..],
        &["diagnostics", "--n", "5"][..],
    ] {
        let o = longmem(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
    }
}

#[test]
fn unknown_flag_is_rejected() {
    let o = longmem(&["reproduce-tables", "--seed", "1", "--bogus", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--bogus"));
    let o = longmem(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let o = longmem(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("reproduce-tables"));
}

#[test]
fn large_walk_needs_full() {
    let o = longmem(&["reproduce-tables", "--n", "200", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--full"));
}

#[test]
fn io_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("t.csv");
    let o =
        longmem(&["reproduce-tables", "--model", "wiener", "--n", "5", "--reps", "2", "--seed", "1", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t.csv"));
}

#[test]
fn corrupt_cache_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let quad = QuadratureSpec::default();
    let grid = GridSpec::new(4, 2.0).unwrap();
    let file = longmem_core::table::cache_path(dir.path(), 0.75, grid.m(), &quad);
    std::fs::write(&file, b"LMKT garbage").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_longmem"))
        .args(["simulate", "--hurst", "0.75", "--n", "4", "--seed", "1"])
        .env("LONGMEM_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("cache"));
}

#[test]
fn cache_dir_is_populated_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_longmem"))
            .args(["simulate", "--hurst", "0.7", "--n", "5", "--seed", "9"])
            .env("LONGMEM_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let second = run();
    assert_eq!(first.stdout, second.stdout);
    let uncached = ok(&["simulate", "--hurst", "0.7", "--n", "5", "--seed", "9"]);
    assert_eq!(first.stdout, uncached.stdout);
}

#[test]
fn json_matches_in_process_results_bit_for_bit() {
    let o = ok(&[
        "reproduce-tables",
        "--hurst",
        "0.8",
        "--drift",
        "1.5",
        "--n",
        "7",
        "--reps",
        "6",
        "--seed",
        "11",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let cell = &v["cells"][0];
    let cfg = ExperimentConfig {
        model: Model::Rosenblatt,
        h: 0.8,
        a: 1.5,
        n: 7,
        alpha: 2.0,
        replications: 6,
        seed: 11,
        quadrature: QuadratureSpec::default(),
    };
    let s = run_sweep(&[cfg], &RunOptions::default()).unwrap().pop().unwrap();
    assert_eq!(cell["mean"].as_f64().unwrap().to_bits(), s.mean.to_bits());
    assert_eq!(cell["std"].as_f64().unwrap().to_bits(), s.std.to_bits());
    assert_eq!(cell["mse"].as_f64().unwrap().to_bits(), s.mse.to_bits());
    let a_hat: Vec<f64> = cell["a_hat"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(a_hat, s.per_replication);
    assert!(cell["runtime_s"].is_null());
    assert_eq!(v["manifest"]["seed"].as_u64(), Some(11));
    assert_eq!(cell["quadrature"]["nodes_per_panel"].as_u64(), Some(8));
}

#[test]
fn empty_summary_collection_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.csv");
    let common = Common { out: None, format: Format::Csv, quad_nodes: 8, quad_depth: 12, batch: None, timings: false };
    let manifest = Manifest::new("reproduce-tables", &common);
    emit_table(&[], &manifest, false, &Some(out.clone())).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&text), vec![TABLE_HEADER]);
}

#[test]
fn simulate_then_estimate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("walk.csv");
    ok(&["simulate", "--hurst", "0.75", "--n", "5", "--reps", "3", "--seed", "5", "--out", p(&dump)]);
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(data_lines(&text)[0], "rep,step,t,xi,f,g,Z");
    let est = ok(&["estimate", "--input", p(&dump), "--hurst", "0.75", "--n", "5", "--drift", "2", "--drift", "-1"]);
    let est = String::from_utf8(est.stdout).unwrap();
    let rows = data_lines(&est);
    assert_eq!(rows[0], "model,H,N,alpha,M,rep,a,a_hat,envelope");
    assert_eq!(rows.len(), 1 + 3 * 2);

    // Same paths in-process: estimates agree exactly.
    let grid = GridSpec::new(5, 2.0).unwrap();
    let table = rosenblatt_table(0.75, &grid, &QuadratureSpec::default(), &RunOptions::default()).unwrap();
    let paths = simulate_rosenblatt_paths(&table, 3, 5, &RunOptions::default()).unwrap();
    let mut k = 1;
    for (r, path) in paths.iter().enumerate() {
        for a in [2.0, -1.0] {
            let (a_hat, checks) = estimate_rosenblatt(&grid, a, path).unwrap();
            assert!(checks.all_pass());
            let cols: Vec<&str> = rows[k].split(',').collect();
            assert_eq!(cols[5], r.to_string());
            assert_eq!(cols[7].parse::<f64>().unwrap(), a_hat, "rep {r} a {a}");
            let bound: f64 = cols[8].parse().unwrap();
            assert!((a_hat - a).abs() <= bound);
            k += 1;
        }
    }
}

#[test]
fn single_walk_dump_has_the_documented_columns() {
    let o = ok(&["simulate", "--hurst", "0.6", "--n", "3", "--seed", "2"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "step,t,xi,f,g,Z");
    assert_eq!(rows.len(), 1 + 9 + 1);
    assert!(rows[1].starts_with("0,0e0,,"));
    assert!(rows[10].split(',').nth(3).unwrap().is_empty());
}

#[test]
fn fbm_dump_estimates_like_the_harness() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("fbm.csv");
    ok(&["simulate", "--model", "fbm", "--hurst", "0.7", "--n", "4", "--reps", "5", "--seed", "8", "--out", p(&dump)]);
    let est = ok(&[
        "estimate",
        "--model",
        "fbm",
        "--input",
        p(&dump),
        "--hurst",
        "0.7",
        "--n",
        "4",
        "--drift",
        "3",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&est.stdout).unwrap();
    let from_file: Vec<f64> = v["estimates"].as_array().unwrap().iter().map(|e| e["a_hat"].as_f64().unwrap()).collect();
    let cfg = ExperimentConfig {
        model: Model::Fbm,
        h: 0.7,
        a: 3.0,
        n: 4,
        alpha: 2.0,
        replications: 5,
        seed: 8,
        quadrature: QuadratureSpec::default(),
    };
    let s = run_sweep(&[cfg], &RunOptions::default()).unwrap().pop().unwrap();
    assert_eq!(from_file, s.per_replication);
}

#[test]
fn estimate_from_observations() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    // Noiseless drift 1.25 on the 1/4 grid.
    let mut text = String::from("t,Y\n");
    for j in 0..=8 {
        let t = j as f64 / 4.0;
        text.push_str(&format!("{t},{}\n", 1.25 * t));
    }
    std::fs::write(&obs, text).unwrap();
    for model in ["wiener", "fbm"] {
        let o = ok(&["estimate", "--model", model, "--hurst", "0.6", "--input", p(&obs), "--n", "4"]);
        let out = String::from_utf8(o.stdout).unwrap();
        let a_hat: f64 = data_lines(&out)[1].split(',').nth(7).unwrap().parse().unwrap();
        assert!((a_hat - 1.25).abs() < 1e-12, "{model}: {a_hat}");
    }
    let o = longmem(&["estimate", "--input", p(&obs), "--hurst", "0.6", "--n", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("xi, f and g"));
    let o = longmem(&["estimate", "--model", "wiener", "--input", p(&obs), "--n", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn scaling_study_output() {
    let o = ok(&[
        "scaling-study",
        "--alpha",
        "1.5",
        "--n",
        "10",
        "--n",
        "20",
        "--gershgorin-m",
        "10",
        "--gershgorin-m",
        "20",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "H,N,alpha,M,mse,bound");
    assert_eq!(rows.len(), 3);
    assert!(text.contains("# fit H=0.75 alpha=1.5: slope="));
    assert!(text.contains("# gershgorin H=0.75: C="));
}

#[test]
fn diagnostics_output() {
    let o = ok(&["diagnostics", "--n", "6", "--n", "9", "--reps", "50", "--seed", "4"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "H,N,alpha,M,reps,seed,gamma,martingale_pass_fraction,median_T,median_U,max_B_sum_ratio");
    assert_eq!(rows.len(), 3);
    assert!(text.contains("# gamma=0.5"));
    let o = longmem(&["diagnostics", "--n", "6", "--reps", "5", "--seed", "4", "--gamma", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--gamma"));
}

#[test]
fn embedded_rerun_line_reproduces_the_output() {
    for args in [
        &[
            "reproduce-tables",
            "--model",
            "fbm",
            "--hurst",
            "0.6",
            "--drift",
            "-2",
            "--n",
            "5",
            "--reps",
            "7",
            "--seed",
            "13",
        ][..],
        &["simulate", "--model", "wiener", "--n", "4", "--alpha", "1.5", "--seed", "2"][..],
        &["diagnostics", "--n", "5", "--reps", "20", "--seed", "6", "--gamma", "0.3"][..],
        &["scaling-study", "--n", "10", "--n", "12", "--gershgorin-m", "8", "--quad-depth", "10"][..],
    ] {
        let first = String::from_utf8(ok(args).stdout).unwrap();
        let line = first.lines().find_map(|l| l.strip_prefix("# rerun: longmem ")).expect("rerun line");
        let again = ok(&line.split(' ').collect::<Vec<_>>());
        assert_eq!(first, String::from_utf8(again.stdout).unwrap(), "{line}");
    }
}
