//! Report and CSV emission.
//!
//! `field.csv` and the numeric content of the JSON report are deterministic
//! for a fixed config and seed; `iterations.csv` carries wall-clock timings
//! and is excluded from the bit-identical guarantee.

use anyhow::{Context, Result};
use kinetic_fredholm::field::PhaseSpaceField;
use kinetic_fredholm::verify::CheckOutcome;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER_COMMENT: &str = "# kinetic-fredholm v1";

#[derive(Debug, Serialize)]
pub struct ScenarioReport<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: &'a str,
    pub seed: u64,
    pub all_passed: bool,
    pub checks: &'a [CheckOutcome],
    pub extra: serde_json::Value,
    pub config: &'a crate::config::RunConfig,
}

pub fn write_report(
    out_dir: &Path,
    scenario: &str,
    config: &crate::config::RunConfig,
    checks: &[CheckOutcome],
    extra: serde_json::Value,
) -> Result<bool> {
    std::fs::create_dir_all(out_dir)?;
    let all_passed = kinetic_fredholm::verify::all_passed(checks);
    let report = ScenarioReport {
        tool: "kinetic-fredholm",
        version: env!("CARGO_PKG_VERSION"),
        scenario,
        seed: config.seed,
        all_passed,
        checks,
        extra,
        config,
    };
    let path = out_dir.join(format!("{scenario}_report.json"));
    let file = std::fs::File::create(&path)
        .with_context(|| format!("creating report {}", path.display()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &report)?;
    Ok(all_passed)
}

/// Phase-space field as CSV: one row per (spatial node, velocity node).
pub fn write_field_csv(out_dir: &Path, name: &str, f: &PhaseSpaceField, seed: u64) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(w, "{CSV_HEADER_COMMENT}")?;
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "x1,x2,x3,z1,z2,z3,value")?;
    for (ix, x) in f.spatial.nodes.iter().enumerate() {
        for (iv, z) in f.velocity.nodes.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                x[0],
                x[1],
                x[2],
                z[0],
                z[1],
                z[2],
                f.value(ix, iv)
            )?;
        }
    }
    Ok(())
}

/// Reads a field CSV back into its rows (x1..x3, z1..z3, value).
pub fn read_field_csv(path: &Path) -> Result<Vec<[f64; 7]>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("x1,") || line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("parsing row `{line}`"))?;
        anyhow::ensure!(fields.len() == 7, "expected 7 columns, got {}", fields.len());
        rows.push([
            fields[0], fields[1], fields[2], fields[3], fields[4], fields[5], fields[6],
        ]);
    }
    Ok(rows)
}

/// Per-iteration diagnostics (linear residual history).
pub fn write_linear_iterations_csv(out_dir: &Path, residuals: &[f64], seed: u64) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(out_dir.join("iterations.csv"))?);
    writeln!(w, "{CSV_HEADER_COMMENT}")?;
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "step,residual")?;
    for (i, r) in residuals.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, r)?;
    }
    Ok(())
}

/// Per-step diagnostics of the Picard iteration.
pub fn write_picard_iterations_csv(
    out_dir: &Path,
    steps: &[kinetic_fredholm::solver::PicardStep],
    seed: u64,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(out_dir.join("iterations.csv"))?);
    writeln!(w, "{CSV_HEADER_COMMENT}")?;
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "step,norm,increment,ratio,wall_secs")?;
    for s in steps {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.step,
            s.norm,
            s.increment,
            s.ratio.map(|r| r.to_string()).unwrap_or_default(),
            s.wall_secs
        )?;
    }
    Ok(())
}
