use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn klx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klx"))
        .args(args)
        .env_remove("KLX_SEED")
        .output()
        .expect("klx runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn lambdas(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn bridge_critical_rows_split_into_two_branches() {
    let out = stdout(&klx(&[
        "spectrum",
        "--process",
        "bridge",
        "--alpha",
        "12",
        "--count",
        "4",
    ]));
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(
        out.lines().next().unwrap(),
        "k,branch,omega_or_tau,lambda,multiplicity"
    );
    // surviving sine modes sit at omega = k pi with lambda = (2 omega)^-2
    assert_eq!((rows[0][1], rows[2][1]), ("1", "1"));
    for (row, k) in [(0, 1.0), (2, 2.0)] {
        let omega: f64 = rows[row][2].parse().unwrap();
        let lambda: f64 = rows[row][3].parse().unwrap();
        assert!((omega - k * PI).abs() < 1e-12);
        assert!((lambda - (2.0 * k * PI).powi(-2)).abs() < 1e-15);
    }
    // first positive root of tan x = x
    assert_eq!(rows[1][1], "2");
    let tau: f64 = rows[1][2].parse().unwrap();
    let lambda: f64 = rows[1][3].parse().unwrap();
    assert!((tau - 4.493_409_457_909_064).abs() < 1e-9);
    assert!((lambda - (2.0 * tau).powi(-2)).abs() < 1e-15);
    assert!((tau.sin() - tau * tau.cos()).abs() < 1e-10);
}

#[test]
fn untransformed_bridge_has_the_classical_spectrum() {
    let out = stdout(&klx(&["spectrum", "--process", "bridge", "--count", "6"]));
    for (k, l) in lambdas(&out).into_iter().enumerate() {
        let exact = (((k + 1) as f64) * PI).powi(-2);
        assert!((l - exact).abs() < 1e-14 * exact.max(1.0), "k={k}");
    }
}

#[test]
fn nystrom_agrees_with_the_analytic_table() {
    let args = [
        "spectrum",
        "--process",
        "wiener",
        "--alpha",
        "1.5",
        "--count",
        "8",
    ];
    let analytic = lambdas(&stdout(&klx(&args)));
    let mut with = args.to_vec();
    with.extend(["--method", "nystrom", "--grid", "1000"]);
    let nystrom = lambdas(&stdout(&klx(&with)));
    for (a, n) in analytic.iter().zip(&nystrom) {
        assert!((a - n).abs() / a < 1e-3, "{a} vs {n}");
    }
}

#[test]
fn json_documents_carry_the_schema() {
    for args in [
        vec!["spectrum", "--process", "bridge", "--out", "json"],
        vec![
            "smallball",
            "--process",
            "wiener",
            "--alpha",
            "0.5",
            "--eps",
            "0.1",
        ],
        vec![
            "simulate",
            "--process",
            "bridge",
            "--paths",
            "500",
            "--eps",
            "0.3",
        ],
    ] {
        assert_eq!(json(&klx(&args))["schema"], 1, "{args:?}");
    }
}

#[test]
fn user_errors_exit_with_two() {
    for args in [
        vec!["spectrum"],
        vec!["spectrum", "--process", "brownian"],
        vec!["spectrum", "--process", "bridge", "--count", "0"],
        vec!["spectrum", "--process", "bridge", "--weight", "cubic"],
        vec![
            "smallball",
            "--process",
            "bridge",
            "--alpha",
            "5",
            "--form",
            "theorem3",
        ],
        vec![
            "smallball",
            "--process",
            "bridge",
            "--weight",
            "normquant",
            "--alpha",
            "1",
        ],
        vec!["simulate", "--process", "bridge", "--eps", "-0.1"],
        vec!["validate", "--suite", "everything"],
        vec!["spectrum", "--process", "csv:/nonexistent/table.csv"],
        vec!["frobnicate"],
    ] {
        let o = klx(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(klx(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let args = [
        "simulate",
        "--process",
        "wiener",
        "--alpha",
        "2",
        "--paths",
        "3000",
        "--eps",
        "0.2,0.4",
        "--seed",
        "9",
    ];
    let a = stdout(&klx(&args));
    assert_eq!(a, stdout(&klx(&args)));
    let mut other = args.to_vec();
    *other.last_mut().unwrap() = "10";
    assert_ne!(a, stdout(&klx(&other)));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# shared settings\nprocess = bridge\nalpha = 3\npaths = 800\nseed = 5\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_klx"));
        c.args(["simulate", "--config", cfg])
            .args(extra)
            .env_remove("KLX_SEED");
        if let Some(s) = env {
            c.env("KLX_SEED", s);
        }
        let v: Value = serde_json::from_slice(&c.output().unwrap().stdout).unwrap();
        (
            v["seed"].as_u64().unwrap(),
            v["paths"].as_u64().unwrap(),
            v["alpha"].as_f64().unwrap(),
        )
    };
    assert_eq!(run(&[], None), (5, 800, 3.0));
    assert_eq!(run(&[], Some("77")), (5, 800, 3.0));
    assert_eq!(
        run(&["--seed", "6", "--alpha", "4"], Some("77")),
        (6, 800, 4.0)
    );

    let bare = dir.path().join("bare.conf");
    std::fs::write(&bare, "process = bridge\npaths = 100\n").unwrap();
    let env_seed = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_klx"));
        c.args(["simulate", "--config", bare.to_str().unwrap()])
            .env_remove("KLX_SEED");
        if let Some(s) = env {
            c.env("KLX_SEED", s);
        }
        let o = c.output().unwrap();
        serde_json::from_slice::<Value>(&o.stdout)
            .map(|v| v["seed"].as_u64().unwrap())
            .ok()
    };
    assert_eq!(env_seed(Some("77")), Some(77));
    assert_eq!(env_seed(None), Some(0));
    assert_eq!(env_seed(Some("seven")), None);
}

#[test]
fn bad_config_files_are_user_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.conf");
    std::fs::write(&p, "process = bridge\ncolour = red\n").unwrap();
    let o = klx(&["spectrum", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = klx(&["spectrum", "--config", "/nonexistent/klx.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_destinations() {
    let args = ["spectrum", "--process", "wiener", "--count", "3"];
    let plain = stdout(&klx(&args));
    let mut dash = args.to_vec();
    dash.extend(["--out", "-"]);
    assert_eq!(stdout(&klx(&dash)), plain);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("spec.json");
    let mut to_file = args.to_vec();
    to_file.extend(["--out", file.to_str().unwrap()]);
    assert!(stdout(&klx(&to_file)).is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn custom_kernel_tables_load_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bridge.csv");
    let n = 41;
    let mut s = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| {
                let (a, b) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
                (a.min(b) - a * b).to_string()
            })
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    std::fs::write(&p, s).unwrap();
    let spec = format!("csv:{}", p.display());
    let o = klx(&[
        "spectrum",
        "--process",
        &spec,
        "--method",
        "nystrom",
        "--grid",
        "200",
        "--count",
        "2",
    ]);
    let l = lambdas(&stdout(&o));
    assert!((l[0] - PI.powi(-2)).abs() / PI.powi(-2) < 1e-2, "{l:?}");
}

#[test]
fn table_writes_csv_rows() {
    let out = stdout(&klx(&[
        "table",
        "--process",
        "wiener",
        "--paths",
        "2000",
        "--eps",
        "0.3,0.4",
        "--seed",
        "1",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "eps,predicted,empirical,lower,upper,hits,moderate"
    );
    assert_eq!(lines.len(), 3);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').take(5).map(|x| x.parse().unwrap()).collect();
        assert!(f[3] <= f[2] && f[2] <= f[4]);
    }
}

#[test]
fn failing_suite_is_reported_but_algebra_passes() {
    let o = klx(&["validate", "--suite", "lemma", "--seed", "3"]);
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["suite"], "lemma");
}
