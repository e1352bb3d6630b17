use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{name}.json"))
}

fn naeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_naeq"))
        .args(args)
        .env("NAEQ_LOG", "error")
        .output()
        .expect("binary runs")
}

fn run_to(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    naeq(&args)
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let p = dir.path().join("config.json");
    fs::write(&p, body).unwrap();
    p
}

/// Header plus rows of a CSV without quoted fields.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn alpha_grid_matches_reference_values() {
    let dir = TempDir::new().unwrap();
    let out = run_to(&preset("alpha-grid"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("alpha_equilibria.csv"));
    // (alpha_1, alpha_2) -> prices, demands, profits as printed, rounded.
    let table = [
        ((1.0, 1.0), [17.0, 17.0], [17.0, 17.0], [277.0, 277.0]),
        ((1.0, 0.6), [19.0, 22.0], [19.0, 13.0], [351.0, 287.0]),
        ((0.6, 1.0), [22.0, 19.0], [13.0, 19.0], [287.0, 351.0]),
        ((0.6, 0.6), [25.0, 25.0], [15.0, 15.0], [375.0, 375.0]),
    ];
    assert_eq!(rows.len(), 4);
    for ((a1, a2), x, q, pi) in table {
        let row = rows
            .iter()
            .find(|r| num(&r[col(&h, "alpha_1")]) == a1 && num(&r[col(&h, "alpha_2")]) == a2)
            .expect("profile present");
        for i in 0..2 {
            for (name, want) in [("x", x[i]), ("demand", q[i]), ("profit", pi[i])] {
                let got = num(&row[col(&h, &format!("{name}_{}", i + 1))]).round();
                assert!((got - want).abs() <= 1.0, "{name}_{} at ({a1}, {a2}): {got} vs {want}", i + 1);
            }
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["task"], "solve-alpha-eq");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn oligopoly_sweep_writes_bias_and_price_datasets() {
    let dir = TempDir::new().unwrap();
    let out = naeq(&[
        "sweep",
        preset("oligopoly-bias-sweep").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--workers",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("alpha_star.csv"));
    let (ph, prows) = read_csv(&dir.path().join("prices.csv"));
    assert_eq!(rows.len(), 2 * (1..=10).sum::<usize>());
    assert_eq!(prows.len(), rows.len());
    for c in [0.7, 0.9] {
        let mut last = 0.0;
        for n in 1..=10 {
            let pick = |r: &&Vec<String>| num(&r[col(&h, "c")]) == c && num(&r[col(&h, "n")]) == n as f64;
            let a = num(&rows.iter().find(pick).unwrap()[col(&h, "alpha_star")]);
            if n == 1 {
                assert_eq!(a, 1.0);
            } else {
                assert!(a < 1.0 && (n == 2 || a > last), "c={c} n={n}: {a} after {last}");
            }
            last = a;
            let pr = prows
                .iter()
                .find(|r| num(&r[col(&ph, "c")]) == c && num(&r[col(&ph, "n")]) == n as f64)
                .unwrap();
            let xn = num(&pr[col(&ph, "x_nash")]);
            let xs = num(&pr[col(&ph, "x_star")]);
            // Monopoly price a/(2(b-c)) with own slope b - c: 20 / (2 (1 - c)).
            if n == 1 {
                assert!((xn - 20.0 / (2.0 * (1.0 - c))).abs() < 1e-9);
            } else {
                assert!(xs > xn);
            }
        }
    }
}

#[test]
fn two_dimensional_grid_is_monotone_in_each_column() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{
          "name": "grid2",
          "game": { "kind": "symmetric-price", "n": 2, "a": 10, "b": 2, "c": 1 },
          "task": "sweep",
          "nae": { "certify": false },
          "sweep": { "task": "solve-nae", "grid": [
            { "param": "n", "values": [2, 3, 4, 5] },
            { "param": "c", "values": [0.2, 0.8, 1.4, 1.9] } ] }
        }"#,
    );
    let out = naeq(&["sweep", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("o/alpha_star.csv"));
    let get = |n: f64, c: f64| {
        let r = rows
            .iter()
            .find(|r| num(&r[col(&h, "n")]) == n && num(&r[col(&h, "c")]) == c && r[col(&h, "player")] == "0")
            .unwrap();
        num(&r[col(&h, "alpha_star")])
    };
    for c in [0.2, 0.8, 1.4, 1.9] {
        for n in [2.0, 3.0, 4.0] {
            assert!(get(n, c) < get(n + 1.0, c), "n={n} c={c}");
        }
    }
    // r = n b / c - 1 falls as c rises, so the bias moves away from one.
    for n in [2.0, 3.0, 4.0, 5.0] {
        for (c0, c1) in [(0.2, 0.8), (0.8, 1.4), (1.4, 1.9)] {
            assert!(get(n, c0) > get(n, c1), "n={n} c={c0}..{c1}");
        }
    }
}

#[test]
fn merger_sweep_emits_four_panels() {
    let dir = TempDir::new().unwrap();
    let out = run_to(&preset("merger-sweep"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["mc", "alpha", "firm1_prices", "merged_prices", "ordering", "points"] {
        let (_, rows) = read_csv(&dir.path().join(format!("{f}.csv")));
        assert_eq!(rows.len(), 19, "{f}");
    }
    let (h, rows) = read_csv(&dir.path().join("ordering.csv"));
    assert!(rows.iter().all(|r| r[col(&h, "ordering_holds")] == "true"));
}

#[test]
fn empty_grid_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{ "name": "bad", "game": { "kind": "merger", "a": 20, "b": 1, "c": 0.5 },
             "task": "sweep", "sweep": { "task": "merger", "grid": [ { "param": "c", "values": [] } ] } }"#,
    );
    let out = run_to(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.grid[0].values"));
    assert!(!dir.path().join("o").exists(), "nothing is written on validation failure");
}

#[test]
fn invalid_point_is_rejected_before_solving() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{ "name": "bad", "game": { "kind": "merger", "a": 20, "b": 1, "c": 0.5 },
             "task": "sweep", "sweep": { "task": "merger", "grid": [ { "param": "c", "values": [0.5, 1.5] } ] } }"#,
    );
    let out = run_to(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep point 1"));
}

#[test]
fn syntax_errors_report_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "{\n  \"name\": \"x\",\n  \"task\": \"audit\",,\n}");
    let out = run_to(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json:3:"));
}

#[test]
fn stochastic_tasks_need_a_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{ "name": "c2", "game": { "kind": "ad-targeting", "x_low": 0, "x_high": 1, "horizon": 10000 },
             "task": "simulate-microfound", "replications": 2 }"#,
    );
    let out = run_to(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_to(&cfg, &dir.path().join("o"), &["--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("o/replications.csv"));
    assert_eq!(rows[0][col(&h, "seed")], "7");
    assert_eq!(rows[1][col(&h, "seed")], "8");
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{ "name": "stuck", "game": { "kind": "team-production", "n": 3, "theta": 10, "gamma": 0.2 },
             "task": "solve-alpha-eq", "alphas": { "profiles": [[1, 1, 1]] },
             "solver": { "max_iterations": 1, "multi_starts": 1, "newton_polish": false, "initial": [0.1, 5, 0.1] } }"#,
    );
    let out = run_to(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

fn bodies(dir: &Path) -> Vec<(String, String)> {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["file"].as_str().unwrap().to_string(), o["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{ "name": "dyn", "game": { "kind": "motivating-example" }, "task": "simulate-dynamics",
             "dynamics": { "replacement": { "horizon": 500 }, "trajectories": true },
             "replications": 4, "seed": 3 }"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_to(&cfg, &a, &["--workers", "1"]).status.success());
    assert!(run_to(&cfg, &b, &["--workers", "4"]).status.success());
    assert_eq!(bodies(&a), bodies(&b));
    let c = dir.path().join("c");
    assert!(run_to(&cfg, &c, &["--seed", "4"]).status.success());
    assert_ne!(bodies(&a), bodies(&c));
}

#[test]
fn single_point_sweep_equals_run() {
    let dir = TempDir::new().unwrap();
    let run = write_config(
        &dir,
        r#"{ "name": "one", "game": { "kind": "symmetric-price", "n": 3, "a": 20, "b": 1, "c": 0.7 }, "task": "solve-nae",
             "nae": { "certify": false } }"#,
    );
    assert!(run_to(&run, &dir.path().join("r"), &[]).status.success());
    let sweep = dir.path().join("sweep.json");
    fs::write(
        &sweep,
        r#"{ "name": "one", "game": { "kind": "symmetric-price", "n": 2, "a": 20, "b": 1, "c": 0.7 }, "task": "sweep",
             "nae": { "certify": false },
             "sweep": { "task": "solve-nae", "grid": [ { "param": "n", "values": [3] } ] } }"#,
    )
    .unwrap();
    assert!(run_to(&sweep, &dir.path().join("s"), &[]).status.success());
    let (_, r) = read_csv(&dir.path().join("r/alpha_star.csv"));
    let (_, s) = read_csv(&dir.path().join("s/alpha_star.csv"));
    let stripped: Vec<Vec<String>> = s.into_iter().map(|row| row[2..].to_vec()).collect();
    assert_eq!(r, stripped);
}

#[test]
fn sweep_command_needs_a_sweep_config() {
    let dir = TempDir::new().unwrap();
    let out = naeq(&["sweep", preset("alpha-grid").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn circle_game_reports_failed_audit_and_witness() {
    let dir = TempDir::new().unwrap();
    let out = run_to(&preset("circle-audit"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("directions.csv"));
    let reply = rows.iter().find(|r| r[0] == "reply-direction").unwrap();
    assert_eq!(reply[col(&h, "holds")], "false");
    let w = fs::read_to_string(dir.path().join("witnesses.csv")).unwrap();
    assert!(w.lines().skip(1).any(|l| l.starts_with("A6,")));
    let m = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(m.contains("A6 failed"));
}
