use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const LN_HALF: f64 = -std::f64::consts::LN_2;

fn eval(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qi-cd-eval"));
    cmd.args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .env_remove("QI_CD_SELFTEST_CORRUPT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

struct Table {
    header: Vec<String>,
    comments: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Table {
        let body = std::fs::read_to_string(path).unwrap();
        let mut lines = body.lines();
        let mut comments = Vec::new();
        let header = loop {
            let l = lines.next().expect("header row");
            match l.strip_prefix("# ") {
                Some(c) => comments.push(c.to_string()),
                None => break l.split(',').map(String::from).collect::<Vec<_>>(),
            }
        };
        let rows: Vec<Vec<String>> = lines
            .filter(|l| {
                if let Some(c) = l.strip_prefix("# ") {
                    comments.push(c.to_string());
                    false
                } else {
                    true
                }
            })
            .map(|l| l.split(',').map(String::from).collect())
            .collect();
        for r in &rows {
            assert_eq!(r.len(), header.len(), "ragged row in {}", path.display());
        }
        Table {
            header,
            comments,
            rows,
        }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }

    fn comment(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .find_map(|c| c.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
    }
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let path = dir.path().join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn sweep_config(dir: &TempDir, scenario: &str, grid: &str, quantities: &str) -> String {
    let out = dir.path().join("sweep.csv");
    write_config(
        dir,
        &format!(
            r#"{{"scenario": {scenario}, "m_grid": {grid}, "quantities": {quantities}, "output": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
}

#[test]
fn selftest_passes_with_timing() {
    let out = eval(&["selftest"], &[]);
    let stdout = text(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    for suite in [
        "numerics",
        "photon_stats",
        "discrimination",
        "cd_module",
        "baselines",
        "fading",
    ] {
        let line = stdout
            .lines()
            .find(|l| l.contains(suite))
            .unwrap_or_else(|| panic!("{suite} missing"));
        assert!(line.starts_with("PASS") && line.ends_with("ms"), "{line}");
    }
}

#[test]
fn selftest_corruption_names_the_check() {
    let out = eval(
        &["selftest"],
        &[("QI_CD_SELFTEST_CORRUPT", "cd_module/kennedy_closed_form")],
    );
    let stdout = text(&out.stdout);
    assert_eq!(code(&out), 1);
    assert!(stdout.contains("FAIL cd_module"), "{stdout}");
    assert!(stdout.contains("kennedy_closed_form"), "{stdout}");
    assert!(stdout.contains("PASS fading"), "{stdout}");
}

#[test]
fn unknown_figure_lists_valid_ids() {
    let dir = TempDir::new().unwrap();
    let out = eval(
        &["figure", "fig3", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 1);
    let err = text(&out.stderr);
    assert!(
        err.contains("fig1, fig2a, fig2b, fig2c, fig5, fig7, fig8"),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&eval(&["sweep"], &[])), 1);
    assert_eq!(code(&eval(&["--version"], &[])), 0);
}

#[test]
fn empty_quantities_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_config(&dir, "{}", r#"{"explicit": [1, 2]}"#, "[]");
    let out = eval(&["sweep", "--config", &cfg], &[]);
    assert_eq!(code(&out), 1);
    assert!(text(&out.stderr).contains("empty"));
}

#[test]
fn incompatible_quantities_named_per_quantity() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_config(
        &dir,
        r#"{"model": "rayleigh"}"#,
        r#"{"explicit": [10]}"#,
        r#"["ng", "qcb", "ci_roc"]"#,
    );
    let out = eval(&["sweep", "--config", &cfg], &[]);
    assert_eq!(code(&out), 1);
    let err = text(&out.stderr);
    assert!(
        err.contains("ng: requires the fixed model")
            && err.contains("qcb: requires the fixed model"),
        "{err}"
    );
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn decreasing_grid_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_config(&dir, "{}", r#"{"explicit": [10, 5]}"#, r#"["ng"]"#);
    assert_eq!(code(&eval(&["sweep", "--config", &cfg], &[])), 1);
}

#[test]
fn no_reflection_sweep_is_chance_everywhere() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_config(
        &dir,
        r#"{"kappa": 0.0}"#,
        r#"{"geometric": {"start": 10, "stop": 1e7, "points": 4}}"#,
        r#"["pcd_exact", "pcd_largeM", "pcd_asy", "qcb", "ci_helstrom", "ci_roc"]"#,
    );
    let out = eval(&["sweep", "--config", &cfg], &[]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let t = Table::read(&dir.path().join("sweep.csv"));
    let logs: Vec<&String> = t.header.iter().filter(|h| h.starts_with("log_")).collect();
    assert_eq!(logs.len(), 6);
    for name in logs {
        for v in t.col(name) {
            assert!((v - LN_HALF).abs() < 1e-12, "{name} = {v}");
        }
    }
}

#[test]
fn sweep_columns_are_ordered_and_finite() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_config(
        &dir,
        "{}",
        r#"{"geometric": {"start": 1e5, "stop": 1e9, "points": 9}}"#,
        r#"["pcd_largeM", "ng", "qcb", "threshold", "exponents"]"#,
    );
    let out = eval(&["sweep", "--config", &cfg, "--linear"], &[]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let t = Table::read(&dir.path().join("sweep.csv"));
    let (ng, pcd, qcb) = (t.col("log_ng"), t.col("log_pcd_large_m"), t.col("log_qcb"));
    for i in 0..t.rows.len() {
        assert!(ng[i] <= pcd[i] && pcd[i] <= qcb[i], "row {i}");
        assert!(pcd[i] <= 0.0);
    }
    let ms = t.col("m");
    assert!(ms.windows(2).all(|w| w[1] > w[0]));
    let thresholds = t.col("threshold");
    assert!(thresholds.windows(2).all(|w| w[1] >= w[0]));
    for row in &t.rows {
        for cell in row {
            assert!(!cell.contains("NaN") && !cell.is_empty(), "{row:?}");
        }
    }
    assert!(t.comment("params").unwrap().contains(r#""n_s":0.001"#));
    assert!(t.comment("numerics").unwrap().contains("quad_rel_tol"));
    assert!(t.comment("generator").unwrap().starts_with("qi-cd-eval "));
}

#[test]
fn output_independent_of_worker_count_and_rerun() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str, name: &str| {
        let out = eval(
            &[
                "figure",
                "fig8",
                "--out",
                dir.path().join(name).to_str().unwrap(),
                "--set",
                r#"m_grid={"geometric": {"start": 1e6, "stop": 6e7, "points": 6}}"#,
            ],
            &[("QI_CD_THREADS", threads)],
        );
        assert_eq!(code(&out), 0, "{}", text(&out.stderr));
        std::fs::read(dir.path().join(name).join("fig8.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("4", "b");
    let c = run("4", "c");
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn source_date_epoch_sets_timestamp() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_config(&dir, "{}", r#"{"explicit": [100]}"#, r#"["ng"]"#);
    let out = eval(
        &["sweep", "--config", &cfg],
        &[("SOURCE_DATE_EPOCH", "1700000000")],
    );
    assert_eq!(code(&out), 0);
    let t = Table::read(&dir.path().join("sweep.csv"));
    assert_eq!(t.comment("timestamp"), Some("2023-11-14T22:13:20Z"));
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_config(
        &dir,
        r#"{"n_s": 0.002}"#,
        r#"{"explicit": [100]}"#,
        r#"["ng"]"#,
    );
    let out = eval(&["sweep", "--config", &cfg, "--set", "n_e=5"], &[]);
    assert_eq!(code(&out), 0);
    let params = Table::read(&dir.path().join("sweep.csv"))
        .comment("params")
        .unwrap()
        .to_string();
    assert!(
        params.contains(r#""n_s":0.002"#) && params.contains(r#""n_e":5.0"#),
        "{params}"
    );
}

#[test]
fn non_convergence_exits_two() {
    let dir = TempDir::new().unwrap();
    let out = eval(
        &[
            "figure",
            "fig8",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            r#"m_grid={"explicit": [1000000]}"#,
            "--set",
            "numerics.quad_max_nodes=64",
        ],
        &[],
    );
    assert_eq!(code(&out), 2, "{}", text(&out.stderr));
    let t = Table::read(&dir.path().join("fig8.csv"));
    assert_eq!(t.rows[0][5], "false");
}

#[test]
fn fig1_staircase_and_curves() {
    let dir = TempDir::new().unwrap();
    let out = eval(
        &[
            "figure",
            "fig1",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            r#"m_grid={"linear": {"start": 1e6, "stop": 6e7, "points": 60}}"#,
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let stdout = text(&out.stdout);
    assert!(
        stdout.contains("fig1_threshold.csv") && stdout.contains("fig1_error.csv"),
        "{stdout}"
    );
    let stairs = Table::read(&dir.path().join("fig1_threshold.csv")).col("threshold");
    assert!(stairs.windows(2).all(|w| w[1] >= w[0]));
    assert!(stairs[0] < *stairs.last().unwrap());
    let curves = Table::read(&dir.path().join("fig1_error.csv"));
    let hel = curves.col("log_pcd_large_m");
    let n = curves.col("threshold");
    let per: Vec<Vec<f64>> = (0..4)
        .map(|k| curves.col(&format!("log_threshold_n{k}")))
        .collect();
    for i in 0..hel.len() {
        assert!((per[n[i] as usize][i] - hel[i]).abs() < 1e-9, "row {i}");
    }
}

#[test]
fn fig8_reports_max_deviation() {
    let dir = TempDir::new().unwrap();
    let out = eval(
        &[
            "figure",
            "fig8",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            r#"m_grid={"geometric": {"start": 1e6, "stop": 6e7, "points": 8}}"#,
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    assert!(text(&out.stdout).contains("max relative deviation"));
    let t = Table::read(&dir.path().join("fig8.csv"));
    let dev = t.col("rel_deviation");
    let summary = t.comment("summary").unwrap();
    let reported: f64 = summary
        .split_whitespace()
        .next()
        .unwrap()
        .strip_prefix("max_rel_deviation=")
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(reported, dev.iter().cloned().fold(0.0, f64::max));
    assert!(reported < 5e-3);
}

#[test]
fn fig2c_ratio_table_with_reference_row() {
    let dir = TempDir::new().unwrap();
    let out = eval(
        &[
            "figure",
            "fig2c",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            "n_s_grid=[1e-3, 1e-2, 1e-1, 1]",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let t = Table::read(&dir.path().join("fig2c.csv"));
    assert_eq!(t.rows.len(), 5);
    let last = t.rows.last().unwrap();
    assert_eq!(last[0], "reference_6db");
    assert_eq!(last[6].parse::<f64>().unwrap(), 4.0);
    // The asymptote is undefined at n_s = 1.
    assert_eq!(t.rows[3][3], "");
    let ratios: Vec<f64> = t.rows[..3].iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(ratios.iter().all(|&r| r > 1.0 && r <= 4.0));
    assert!(
        ratios.windows(2).all(|w| w[1] < w[0]),
        "ratio should grow as n_s falls: {ratios:?}"
    );
}

#[test]
fn fig5_with_overlay() {
    let dir = TempDir::new().unwrap();
    let sfg = dir.path().join("sfg.csv");
    std::fs::write(&sfg, "m,p\n1e6,0.2\n1e7,0.05\n").unwrap();
    let out = eval(
        &[
            "figure",
            "fig5",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            r#"m_grid={"geometric": {"start": 1e6, "stop": 1e8, "points": 3}}"#,
            "--set",
            &format!("sfg_overlay={}", sfg.display()),
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let t = Table::read(&dir.path().join("fig5.csv"));
    let (lb, ach, ci) = (
        t.col("log_rayleigh_lb"),
        t.col("log_rayleigh_achievable"),
        t.col("log_ci_helstrom"),
    );
    for i in 0..lb.len() {
        assert!(lb[i] <= ach[i] && ach[i] < ci[i]);
    }
    let overlay = Table::read(&dir.path().join("fig5_sfg.csv"));
    assert_eq!(overlay.col("log_sfg"), vec![0.2f64.ln(), 0.05f64.ln()]);
}

#[test]
fn fig5_rejects_fixed_model() {
    let dir = TempDir::new().unwrap();
    let out = eval(
        &[
            "figure",
            "fig5",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            "model=fixed",
        ],
        &[],
    );
    assert_eq!(code(&out), 1);
}
