//! End-to-end checks of the scenario runner: deterministic artifacts, cache
//! reuse, exit codes and CSV schema.

use kinetic_fredholm_cli::{run_scenario, RunConfig};
use std::path::PathBuf;
use std::process::Command;

fn tiny_config(out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.velocity_grid.radial_order = 16;
    cfg.velocity_grid.n_mu = 2;
    cfg.velocity_grid.n_phi = 4;
    cfg.spatial_grid.shells = 4;
    cfg.spatial_grid.n_mu = 2;
    cfg.spatial_grid.n_phi = 4;
    cfg.refine = false;
    cfg.samples = 1000;
    cfg.output_dir = out.display().to_string();
    cfg
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kf-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn solve_linear_artifacts_are_deterministic_and_cache_is_reused() {
    let out = temp_dir("det");
    let mut cfg = tiny_config(&out);
    cfg.scenario = "solve-linear".into();
    cfg.seed = 42;

    run_scenario(&cfg, &out).unwrap();
    let field1 = std::fs::read(out.join("field.csv")).unwrap();
    let report1 = std::fs::read_to_string(out.join("solve-linear_report.json")).unwrap();
    assert!(report1.contains("\"cache\": \"miss_assembled\""), "{report1}");

    run_scenario(&cfg, &out).unwrap();
    let field2 = std::fs::read(out.join("field.csv")).unwrap();
    let report2 = std::fs::read_to_string(out.join("solve-linear_report.json")).unwrap();
    assert_eq!(field1, field2, "field.csv must be bit-identical across runs");
    assert!(report2.contains("\"cache\": \"hit\""), "{report2}");

    // Schema of the emitted CSVs.
    let text = String::from_utf8(field1).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# kinetic-fredholm v1");
    assert_eq!(lines.next().unwrap(), "x1,x2,x3,z1,z2,z3,value");
    let iterations = std::fs::read_to_string(out.join("iterations.csv")).unwrap();
    assert!(iterations.starts_with("# kinetic-fredholm v1\n# seed=42\nstep,residual\n"));

    // Import path: the exported field reads back row for row.
    let rows = kinetic_fredholm_cli::report::read_field_csv(&out.join("field.csv")).unwrap();
    assert_eq!(rows.len(), text.lines().count() - 3);
    assert!(rows.iter().all(|r| r.iter().all(|v| v.is_finite())));

    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn regularity_scenario_writes_report_with_threshold_checks() {
    let out = temp_dir("reg");
    let mut cfg = tiny_config(&out);
    cfg.scenario = "regularity-report".into();
    cfg.p = 2.5;
    let ok = run_scenario(&cfg, &out).unwrap();
    assert!(ok, "regularity checks should pass on the tiny config");
    let report = std::fs::read_to_string(out.join("regularity-report_report.json")).unwrap();
    assert!(report.contains("inverse-weight-integrability-p-3"));
    assert!(report.contains("weighted-norm-ordering"));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn binary_exit_codes_and_cache_subcommand() {
    let bin = env!("CARGO_BIN_EXE_kinetic-fredholm");
    let out = temp_dir("bin");

    // Usage error: unknown scenario.
    let status = Command::new(bin)
        .args(["run", "--scenario", "nonsense", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Usage error: invalid config value through an override.
    let status = Command::new(bin)
        .args(["run", "--scenario", "verify-geometry", "--set", "alpha=0.7", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Successful run.
    let status = Command::new(bin)
        .args([
            "run",
            "--scenario",
            "verify-geometry",
            "--seed",
            "7",
            "--set",
            "samples=1500",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("verify-geometry_report.json").exists());

    // Kernel cache subcommand.
    let status = Command::new(bin)
        .args([
            "cache-kernel",
            "--set",
            "velocity_grid.n_mu=2",
            "--set",
            "velocity_grid.n_phi=4",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let cache = out.join("kernel-cache");
    assert!(cache.read_dir().unwrap().next().is_some(), "cache file written");

    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn kf_cache_dir_env_overrides_location() {
    let out = temp_dir("envout");
    let cache = temp_dir("envcache");
    let dir = kinetic_fredholm_cli::cache::cache_dir(&out);
    assert_eq!(dir, out.join("kernel-cache"));
    std::env::set_var("KF_CACHE_DIR", &cache);
    let dir = kinetic_fredholm_cli::cache::cache_dir(&out);
    std::env::remove_var("KF_CACHE_DIR");
    assert_eq!(dir, cache);
    let _ = std::fs::remove_dir_all(&out);
    let _ = std::fs::remove_dir_all(&cache);
}
