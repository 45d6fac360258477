//! Result artifacts: plain CSV tables and a JSON run manifest.
//!
//! Every float is printed with Rust's shortest round-trip formatting, so
//! reruns with identical inputs produce byte-identical CSVs.

use anyhow::{Context, Result};
use cranloc_core::{DcState, EvalReport};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Quotes a CSV field only when it needs it (comma, quote, newline).
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// One unit's quantization noise PSD over the frequency grid.
pub fn write_psd_csv(path: &Path, freqs: &[f64], quant_psd: &[f64]) -> Result<()> {
    let mut s = String::from("f_hz,sq_mw_per_hz\n");
    for (f, q) in freqs.iter().zip(quant_psd) {
        writeln!(s, "{f},{q:e}").unwrap();
    }
    write_file(path, &s)
}

/// Flat baseline levels, one row per unit.
pub fn write_baseline_csv(path: &Path, levels: &[f64]) -> Result<()> {
    let mut s = String::from("unit,sq_mw_per_hz\n");
    for (j, q) in levels.iter().enumerate() {
        writeln!(s, "{j},{q:e}").unwrap();
    }
    write_file(path, &s)
}

/// Outer-loop trace: the objective after each iteration and the aggregate
/// relative change in the transformed design. Row 0 is the starting point,
/// which has no change yet.
pub fn write_trace_csv(path: &Path, state: &DcState) -> Result<()> {
    let mut s = String::from("iteration,t,aggregate_m_change\n");
    for (i, t) in state.objective_history.iter().enumerate() {
        if i == 0 {
            writeln!(s, "0,{t},").unwrap();
        } else {
            writeln!(s, "{i},{t},{}", state.change_history[i - 1]).unwrap();
        }
    }
    write_file(path, &s)
}

/// Sweep results, one row per capacity point; failed points keep their row
/// with empty value columns and the reason in `status`.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut s = String::from(
        "c_bits_s_hz,sqrt_worst_avg_spe_m_proposed,sqrt_worst_avg_spe_m_baseline,\
         se_proposed_m,se_baseline_m,seed,status\n",
    );
    for pt in &report.points {
        match &pt.result {
            Ok(r) => writeln!(
                s,
                "{},{},{},{},{},{},ok",
                pt.capacity,
                r.sqrt_worst_avg_crb_proposed,
                r.sqrt_worst_avg_crb_baseline,
                r.se_proposed,
                r.se_baseline,
                report.seed
            )
            .unwrap(),
            Err(e) => writeln!(
                s,
                "{},,,,,{},{}",
                pt.capacity,
                report.seed,
                csv_field(&format!("failed: {e}"))
            )
            .unwrap(),
        }
    }
    write_file(path, &s)
}

/// Metadata written alongside every command's outputs, including failures.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// The invocation, argv joined by spaces.
    pub command: String,
    pub scenario_path: String,
    /// SHA-256 of the scenario file bytes; absent if it could not be read.
    pub scenario_sha256: Option<String>,
    /// Structural hash of the parsed scenario, hexadecimal.
    pub scenario_content_hash: Option<String>,
    /// Solver and evaluation knobs in effect.
    pub options: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub duration_seconds: f64,
    /// "ok" or "failed: reason".
    pub status: String,
    /// Files produced, relative to the output directory.
    pub outputs: Vec<String>,
    /// Command-specific summaries (solver iterations, per-point results).
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        text.push('\n');
        write_file(path, &text)
    }
}
