use std::path::PathBuf;
use std::process::Command;

use nnoid::cli::{self, json, RunConfig, EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_OK};
use nnoid::error::Error;
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nnoid"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nnoid-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig {
        lambda_samples: 128,
        ..RunConfig::default()
    };
    cfg.grid.radial = 8;
    cfg.grid.angular = 16;
    cfg
}

#[test]
fn default_config_is_the_cyclic_anchor() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.group, "cyclic");
    assert_eq!(cfg.n, Some(3));
    assert_eq!(cfg.weights, [0.0, 0.0, 0.4]);
    cfg.validate().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn config_round_trip(
        w in prop::array::uniform3(-2.0f64..2.0),
        seed in any::<u64>(),
        radial in 3usize..64,
        tol in 1e-13f64..1e-6,
        unscaled in any::<bool>(),
    ) {
        let mut cfg = RunConfig {
            weights: w,
            seed,
            ode_tol: tol,
            ..RunConfig::default()
        };
        cfg.grid.radial = radial;
        cfg.out.mesh = Some("out/mesh.obj".into());
        if unscaled {
            cfg.convention = nnoid::potentials::ResidueConvention::PaperW16;
        }
        let text = json::to_string(&cfg).unwrap();
        prop_assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }
}

#[test]
fn config_keys_are_exactly_the_documented_ones() {
    let v = serde_json::to_value(RunConfig::default()).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "convention",
            "epsilon_theta",
            "grid",
            "group",
            "iwasawa_N",
            "lambda_samples",
            "n",
            "ode_tol",
            "out",
            "seed",
            "weights"
        ]
    );
    let mut grid: Vec<&str> = v["grid"].as_object().unwrap().keys().map(String::as_str).collect();
    grid.sort();
    assert_eq!(grid, ["angular", "r_cut", "radial"]);
}

#[test]
fn bad_configs_are_config_errors() {
    let good = json::to_string(&RunConfig::default()).unwrap();
    let cases = [
        good.replace("\"seed\"", "\"sed\""),
        good.replace("\"cyclic\"", "\"heptagonal\""),
        good.replace("1.0000000000000000e-10", "-1.0e-10"),
        good.replace("\"radial\": 24", "\"radial\": 2"),
        "{".to_string(),
    ];
    for text in cases {
        match RunConfig::parse(&text) {
            Err(e @ Error::Config(_)) => assert_eq!(cli::exit_code(&e), EXIT_CONFIG),
            other => panic!("expected a config error, got {other:?}"),
        }
    }
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let text = json::to_string(&serde_json::json!({"x": 0.1, "y": [1.0, -2.5e-300]})).unwrap();
    assert!(text.contains("1.0000000000000001e-1"), "{text}");
    assert!(text.contains("1.0000000000000000e0"), "{text}");
    assert!(text.contains("-2.5000000000000000e-300"), "{text}");
}

#[test]
fn zero_weights_are_flagged_degenerate_without_mesh() {
    let mut cfg = small_config();
    cfg.weights = [0.0, 0.0, 0.0];
    let mesh = scratch("degenerate.obj");
    cfg.out.mesh = Some(mesh.clone());
    let outcome = cli::run(&cfg);
    assert_eq!(outcome.exit_code(), EXIT_OK);
    assert_eq!(outcome.report["status"], "degenerate");
    assert!(outcome.report["degenerate"].as_str().unwrap().contains("sphere"));
    assert!(!mesh.exists());
}

#[test]
fn inadmissible_weights_report_failing_samples() {
    let mut cfg = small_config();
    cfg.weights = [0.0, 0.0, 2.0];
    let outcome = cli::run(&cfg);
    assert_eq!(outcome.exit_code(), EXIT_INADMISSIBLE);
    assert_eq!(outcome.report["status"], "NOT_UNITARIZABLE");
    let failing = outcome.report["failing_lambda_samples"].as_array().unwrap();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|j| j.as_u64().unwrap() < cfg.lambda_samples as u64));
}

#[test]
fn full_run_is_deterministic() {
    let mut outputs = Vec::new();
    for k in 0..2 {
        let mut cfg = small_config();
        cfg.out.mesh = Some(scratch(&format!("det{k}.obj")));
        cfg.out.report = Some(scratch(&format!("det{k}.json")));
        let outcome = cli::run(&cfg);
        assert_eq!(outcome.exit_code(), EXIT_OK, "{:?}", outcome.error);
        assert_eq!(outcome.report["status"], "ok");
        let obj = std::fs::read(cfg.out.mesh.as_ref().unwrap()).unwrap();
        let mut report: serde_json::Value = serde_json::from_slice(&std::fs::read(cfg.out.report.as_ref().unwrap()).unwrap()).unwrap();
        // Only the output paths differ between the two runs.
        report["config"]["out"] = serde_json::Value::Null;
        assert!(obj.starts_with(b"v "));
        outputs.push((obj, json::to_string(&report).unwrap()));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn binary_exit_codes() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(EXIT_OK));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(EXIT_CONFIG));
    assert_eq!(
        bin().args(["invariant", "--group", "dodecagonal"]).output().unwrap().status.code(),
        Some(EXIT_CONFIG)
    );

    let out = bin().args(["groups", "--n-max", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("A5") && l.contains("5,3,2")), "{text}");

    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"group\": \"cyclic\"}").unwrap();
    let out = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let missing = scratch("missing.json");
    let out = bin().args(["run", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let mut cfg = small_config();
    cfg.weights = [0.0, 0.0, 2.0];
    let path = scratch("inadmissible.json");
    std::fs::write(&path, json::to_string(&cfg).unwrap()).unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_INADMISSIBLE));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "NOT_UNITARIZABLE");
}

#[test]
fn check_subcommand_passes() {
    let out = bin().args(["check", "--seed", "7"]).output().unwrap();
    let results: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<_> = results.as_array().unwrap().iter().filter(|r| r["passed"] != true).collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert_eq!(out.status.code(), Some(EXIT_OK));
}
