use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gbcal_cli::{Config, Model};

fn gbcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbcal"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn data_rows(file: &Path, role: &str) -> usize {
    let text = std::fs::read_to_string(file).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| l.ends_with(&format!(",{role}")))
        .count()
}

#[test]
fn default_config_round_trips_through_toml() {
    let cfg = Config::default();
    assert_eq!(Config::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
}

#[test]
fn partial_tables_keep_defaults() {
    let cfg = Config::from_toml(
        "model = \"ssm\"\n[mixture]\nn1 = 5\n[calibrate]\nprior = \"exp(1/3)\"\n",
    )
    .unwrap();
    assert_eq!(cfg.model, Model::Ssm);
    assert_eq!(cfg.mixture.n1, 5);
    assert_eq!(cfg.mixture.n2, 60);
    assert_eq!(cfg.calibrate.grid_points, 41);
}

#[test]
fn inconsistent_settings_are_config_errors() {
    for text in [
        "[calibrate]\nfamily = \"eta_beta\"\n",
        "model = \"ssm\"\n[calibrate]\nfamily = \"gamma\"\n",
        "[calibrate]\nprior = \"cauchy(0,1)\"\n",
        "[ssm]\ntrain_fraction = 1.5\n",
        "[mixture.truth]\nlambda_star = 2.0\n",
    ] {
        let e = Config::from_toml(text).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}: {e}");
    }
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mixture]\nn3 = 4\n");
    let o = gbcal(&[
        "simulate",
        "--config",
        path(&cfg),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n3"));
}

#[test]
fn dry_run_echoes_the_resolved_config_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = gbcal(&[
        "study",
        "--dry-run",
        "--seed",
        "7",
        "--model",
        "ssm",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0);
    let cfg = Config::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.study.ssm.seed, 7);
    assert_eq!(cfg.model, Model::Ssm);
    assert!(!out.exists());
}

#[test]
fn simulate_writes_configured_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m");
    assert_eq!(code(&gbcal(&["simulate", "--out", path(&m)])), 0);
    let f = m.join("data.csv");
    assert_eq!(
        (
            data_rows(&f, "x1"),
            data_rows(&f, "x2"),
            data_rows(&f, "calib")
        ),
        (30, 60, 100)
    );
    assert!(m.join("config.resolved.toml").exists());

    let s = dir.path().join("s");
    let o = gbcal(&["simulate", "--model", "ssm", "--out", path(&s)]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(
        stdout.contains("n_train=10") && stdout.contains("n_calib=50"),
        "{stdout}"
    );
    assert_eq!(data_rows(&s.join("train_anchors.csv"), "anchor"), 20);
    assert_eq!(
        std::fs::read_to_string(s.join("calib_emissions.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 50 * 6
    );
}

#[test]
fn calibrate_without_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gbcal(&["calibrate", "--out", path(dir.path())])), 2);
}

#[test]
fn calibration_and_risk_ratio_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        assert_eq!(
            code(&gbcal(&["simulate", "--seed", "3", "--out", path(&out)])),
            0
        );
        assert_eq!(
            code(&gbcal(&["calibrate", "--seed", "3", "--out", path(&out)])),
            0
        );
        assert_eq!(
            code(&gbcal(&["risk-ratio", "--seed", "3", "--out", path(&out)])),
            0
        );
        let est: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("estimators.json")).unwrap())
                .unwrap();
        let rr: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("risk_ratio.json")).unwrap())
                .unwrap();
        let eta = est["mean"]["eta"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&eta));
        assert!(rr["value"].as_f64().unwrap() > 0.0);
        seen.push((
            est,
            rr,
            std::fs::read_to_string(out.join("posterior.csv")).unwrap(),
        ));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn nested_mixture_calibration_matches_the_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(code(&gbcal(&["simulate", "--out", out])), 0);
    let o = gbcal(&["calibrate", "--method", "nested", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("nested.json")).unwrap())
            .unwrap();
    assert!(r["ks"][0].as_f64().unwrap() < 0.1);
    assert!(dir.path().join("nested_draws.csv").exists());
}

#[test]
fn ssm_eta_beta_nested_run_writes_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "model = \"ssm\"\n[ssm]\nn_blocks = 12\ntrain_fraction = 0.5\n[calibrate]\nfamily = \"eta_beta\"\nmethod = \"nested\"\n\
         grid_points = 3\nb_points = 3\nouter_steps = 100\n[calibrate.chain]\nburn_in = 50\ndraws = 100\nthin = 1\n",
    );
    let out = dir.path().join("o");
    assert_eq!(
        code(&gbcal(&[
            "simulate",
            "--config",
            path(&cfg),
            "--out",
            path(&out)
        ])),
        0
    );
    let o = gbcal(&["calibrate", "--config", path(&cfg), "--out", path(&out)]);
    assert!(
        matches!(code(&o), 0 | 1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "posterior.csv",
        "estimators.json",
        "lattice_mc_se.csv",
        "nested.json",
        "nested_draws.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn small_ssm_study_writes_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "model = \"ssm\"\n[study]\nphi_m_levels = [1.0]\n[study.ssm]\nreplicates = 2\nn_test_sets = 2\ntest_blocks = 10\n\
         reference_blocks = 40\ngrid_points = 9\nwaic = false\n",
    );
    let out = dir.path().join("o");
    assert_eq!(
        code(&gbcal(&[
            "study",
            "--fast",
            "--config",
            path(&cfg),
            "--out",
            path(&out)
        ])),
        0
    );
    let sub = out.join("ssm_phi_m_1");
    assert_eq!(
        std::fs::read_to_string(sub.join("replicates.jsonl"))
            .unwrap()
            .lines()
            .count(),
        2
    );
    assert!(sub.join("summary.csv").exists());
}

#[test]
fn oracle_suites_pass_at_their_fast_budgets() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["conjugate", "laplace-aghq", "mixture"] {
        let o = gbcal(&["oracle-check", suite, "--fast", "--out", path(dir.path())]);
        assert_eq!(
            code(&o),
            0,
            "{suite}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
        assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    }
    assert!(dir.path().join("oracle_laplace_aghq.json").exists());
}
