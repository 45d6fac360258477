//! Subcommand drivers: optimize one design, sweep capacities, or check a
//! scenario. Optimize and sweep always leave a manifest in the output
//! directory, recording failure if they could not finish.

use crate::config::{self, LoadedScenario};
use crate::output::{self, RunManifest};
use anyhow::{anyhow, bail, Context, Result};
use cranloc_core::{
    ar1_noise_psd, baseline_white_design, crb_trace, derive_circle_geometry, flat_signal_esd,
    information_integral, make_grid, recover_sq, sample_positions, solve_robust, sweep_capacity,
    worst_case_q_matrix, EvalConfig, EvalReport, Scenario, SolverOptions, SweepPoint,
};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct OptimizeArgs {
    pub scenario: PathBuf,
    pub capacity: Option<f64>,
    pub out: PathBuf,
    pub max_iters: usize,
    pub delta_th: f64,
}

pub struct SweepArgs {
    pub scenario: PathBuf,
    pub capacities: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub positions: usize,
    pub fading_draws: usize,
    pub max_iters: usize,
    pub delta_th: f64,
}

pub struct CheckArgs {
    pub scenario: PathBuf,
    pub seed: u64,
}

/// Samples drawn for the covering check.
const COVERING_SAMPLES: usize = 100_000;

fn argv_string() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn solver_options(max_iters: usize, delta_th: f64) -> SolverOptions {
    SolverOptions { delta_th, max_outer_iterations: max_iters, ..SolverOptions::default() }
}

fn load_and_override(path: &Path, capacity: Option<f64>) -> Result<LoadedScenario> {
    let mut loaded = config::load_scenario(path)?;
    if let Some(c) = capacity {
        loaded.scenario.fronthaul_capacity = vec![c; loaded.scenario.n_ru()];
        loaded.scenario.validate().context("capacity override")?;
    }
    Ok(loaded)
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<()> {
    let started = Instant::now();
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let opts = solver_options(args.max_iters, args.delta_th);

    let mut outputs: Vec<String> = Vec::new();
    let mut loaded: Option<LoadedScenario> = None;
    let mut details = serde_json::Value::Null;
    let run = (|| -> Result<()> {
        loaded = Some(load_and_override(&args.scenario, args.capacity)?);
        let scenario = &loaded.as_ref().unwrap().scenario;
        let state = solve_robust(scenario, &opts)?;
        let grid = make_grid(scenario.bandwidth, scenario.grid_points);
        for j in 0..scenario.n_ru() {
            let sq = recover_sq(&state.m[j], &state.n[j])?;
            let name = format!("psd_ru{j:02}.csv");
            output::write_psd_csv(&args.out.join(&name), &grid.freqs, &sq)?;
            outputs.push(name);
        }
        output::write_trace_csv(&args.out.join("trace.csv"), &state)?;
        outputs.push("trace.csv".into());
        details = serde_json::json!({
            "objective": state.t,
            "outer_iterations": state.iteration,
            "newton_steps": state.newton_steps,
            "converged": state.converged,
        });
        log::info!(
            "optimized {} units: bound {:.6} m^2 in {} outer iterations",
            scenario.n_ru(),
            state.t,
            state.iteration
        );
        Ok(())
    })();

    let manifest = RunManifest {
        command: argv_string(),
        scenario_path: args.scenario.display().to_string(),
        scenario_sha256: loaded.as_ref().map(|l| l.sha256_hex.clone()),
        scenario_content_hash: loaded
            .as_ref()
            .map(|l| format!("{:016x}", l.scenario.content_hash())),
        options: serde_json::json!({
            "capacity_override": args.capacity,
            "max_outer_iterations": opts.max_outer_iterations,
            "delta_th": opts.delta_th,
            "kkt_tolerance": opts.kkt_tolerance,
            "barrier_initial_weight": opts.barrier_initial_weight,
            "barrier_reduction": opts.barrier_reduction,
            "feasibility_slack": opts.feasibility_slack,
        }),
        seed: None,
        tool_version: env!("CARGO_PKG_VERSION"),
        duration_seconds: started.elapsed().as_secs_f64(),
        status: match &run {
            Ok(()) => "ok".into(),
            Err(e) => format!("failed: {e:#}"),
        },
        outputs: outputs.clone(),
        details,
    };
    manifest.write(&args.out.join("manifest.json"))?;
    run
}

/// Runs the capacity points of a sweep in parallel, one thread per point.
/// Position and fading streams depend only on the seed and indices, so the
/// merged report is identical to a sequential sweep over the full list.
fn parallel_sweep(
    scenario: &Scenario,
    eval: &EvalConfig,
    opts: &SolverOptions,
) -> Result<EvalReport> {
    let mut reports: Vec<Option<EvalReport>> = Vec::new();
    reports.resize_with(eval.capacities.len(), || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (i, &cap) in eval.capacities.iter().enumerate() {
            let cfg = EvalConfig { capacities: vec![cap], ..eval.clone() };
            handles.push((i, scope.spawn(move || sweep_capacity(scenario, &cfg, opts))));
        }
        for (i, h) in handles {
            let report = h.join().map_err(|_| anyhow!("sweep worker panicked"))??;
            reports[i] = Some(report);
        }
        Ok::<(), anyhow::Error>(())
    })?;
    let mut merged: Option<EvalReport> = None;
    for r in reports.into_iter().flatten() {
        match &mut merged {
            None => merged = Some(r),
            Some(m) => m.points.extend(r.points),
        }
    }
    merged.ok_or_else(|| anyhow!("no capacity points requested"))
}

fn point_summary(pt: &SweepPoint) -> serde_json::Value {
    match &pt.result {
        Ok(r) => serde_json::json!({
            "capacity": pt.capacity,
            "status": "ok",
            "outer_iterations": r.outer_iterations,
            "newton_steps": r.newton_steps,
            "converged": r.solver_converged,
            "rejected_proposed": r.rejected_proposed,
            "rejected_baseline": r.rejected_baseline,
        }),
        Err(e) => serde_json::json!({
            "capacity": pt.capacity,
            "status": format!("failed: {e}"),
        }),
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let started = Instant::now();
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let opts = solver_options(args.max_iters, args.delta_th);
    let eval = EvalConfig {
        n_positions: args.positions,
        n_fading_draws: args.fading_draws,
        seed: args.seed,
        capacities: args.capacities.clone(),
    };

    let mut outputs: Vec<String> = Vec::new();
    let mut loaded: Option<LoadedScenario> = None;
    let mut details = serde_json::Value::Null;
    let run = (|| -> Result<()> {
        loaded = Some(config::load_scenario(&args.scenario)?);
        let scenario = &loaded.as_ref().unwrap().scenario;
        let report = parallel_sweep(scenario, &eval, &opts)?;
        output::write_report_csv(&args.out.join("report.csv"), &report)?;
        outputs.push("report.csv".into());
        let grid = make_grid(scenario.bandwidth, scenario.grid_points);
        let mut failures = 0usize;
        for (i, pt) in report.points.iter().enumerate() {
            let r = match &pt.result {
                Ok(r) => r,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            let dir_name = format!("c{i:02}_{}", pt.capacity);
            let dir = args.out.join(&dir_name);
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            for (j, sq) in r.proposed_quant_psd.iter().enumerate() {
                let name = format!("psd_ru{j:02}.csv");
                output::write_psd_csv(&dir.join(&name), &grid.freqs, sq)?;
                outputs.push(format!("{dir_name}/{name}"));
            }
            output::write_baseline_csv(&dir.join("baseline_white.csv"), &r.baseline_quant_level)?;
            outputs.push(format!("{dir_name}/baseline_white.csv"));
        }
        details = serde_json::json!({
            "points": report.points.iter().map(point_summary).collect::<Vec<_>>(),
        });
        if failures > 0 {
            bail!("{failures} of {} capacity points failed", report.points.len());
        }
        Ok(())
    })();

    let manifest = RunManifest {
        command: argv_string(),
        scenario_path: args.scenario.display().to_string(),
        scenario_sha256: loaded.as_ref().map(|l| l.sha256_hex.clone()),
        scenario_content_hash: loaded
            .as_ref()
            .map(|l| format!("{:016x}", l.scenario.content_hash())),
        options: serde_json::json!({
            "capacities": args.capacities,
            "n_positions": eval.n_positions,
            "n_fading_draws": eval.n_fading_draws,
            "max_outer_iterations": opts.max_outer_iterations,
            "delta_th": opts.delta_th,
            "kkt_tolerance": opts.kkt_tolerance,
            "barrier_initial_weight": opts.barrier_initial_weight,
            "barrier_reduction": opts.barrier_reduction,
            "feasibility_slack": opts.feasibility_slack,
        }),
        seed: Some(args.seed),
        tool_version: env!("CARGO_PKG_VERSION"),
        duration_seconds: started.elapsed().as_secs_f64(),
        status: match &run {
            Ok(()) => "ok".into(),
            Err(e) => format!("failed: {e:#}"),
        },
        outputs: outputs.clone(),
        details,
    };
    manifest.write(&args.out.join("manifest.json"))?;
    run
}

struct CheckTally {
    all_passed: bool,
}

impl CheckTally {
    fn report(&mut self, name: &str, outcome: Result<String, String>) {
        match outcome {
            Ok(note) if note.is_empty() => println!("check {name}: pass"),
            Ok(note) => println!("check {name}: pass ({note})"),
            Err(reason) => {
                println!("check {name}: FAIL ({reason})");
                self.all_passed = false;
            }
        }
    }
}

/// Runs scenario diagnostics and prints one line per check. Returns whether
/// every check passed; I/O trouble reading the file is an error instead.
pub fn cmd_check(args: &CheckArgs) -> Result<bool> {
    let bytes = config::read_scenario_bytes(&args.scenario)?;
    let mut tally = CheckTally { all_passed: true };

    let scenario = match config::parse_scenario(&bytes) {
        Ok(s) => {
            tally.report("scenario parse", Ok(String::new()));
            s
        }
        Err(e) => {
            tally.report("scenario parse", Err(format!("{e:#}")));
            return Ok(false);
        }
    };

    match scenario.validate() {
        Ok(()) => tally.report("scenario validation", Ok(String::new())),
        Err(e) => {
            tally.report("scenario validation", Err(e.to_string()));
            return Ok(tally.all_passed);
        }
    }

    // Covering: every sampled position must fall in at least one circle,
    // otherwise the worst-case bound does not apply to the whole region.
    let samples = sample_positions(&scenario, COVERING_SAMPLES, args.seed);
    let uncovered = samples
        .iter()
        .filter(|p| {
            !scenario.circles.iter().any(|c| {
                let d = ((p[0] - c.center[0]).powi(2) + (p[1] - c.center[1]).powi(2)).sqrt();
                d <= c.radius * (1.0 + 1e-12)
            })
        })
        .count();
    if uncovered == 0 {
        tally.report("circle covering", Ok(format!("{COVERING_SAMPLES} samples inside")));
    } else {
        tally.report(
            "circle covering",
            Err(format!("{uncovered} of {COVERING_SAMPLES} samples outside every circle")),
        );
    }

    // Worst-case information with the baseline design: each circle's bound
    // matrix must be invertible as a sanity floor for the optimizer.
    match baseline_white_design(&scenario) {
        Ok(white) => {
            let grid = make_grid(scenario.bandwidth, scenario.grid_points);
            let sx = flat_signal_esd(scenario.signal_esd_dbm_per_hz, &grid);
            let geometry = derive_circle_geometry(&scenario);
            let mut worst_bound = f64::NEG_INFINITY;
            let mut failure: Option<String> = None;
            for geo in &geometry {
                let ints: Vec<f64> = (0..scenario.n_ru())
                    .map(|j| {
                        let sz = ar1_noise_psd(&scenario.noise_model[j], &grid);
                        let sq = vec![white[j]; grid.len()];
                        information_integral(&grid, &sx, &sz, &sq, scenario.propagation_speed)
                    })
                    .collect();
                let q = worst_case_q_matrix(geo, &ints);
                match crb_trace(&q) {
                    Ok(b) => worst_bound = worst_bound.max(b),
                    Err(e) => {
                        failure = Some(format!("circle {}: {e}", geo.circle_index));
                        break;
                    }
                }
            }
            match failure {
                None => tally.report(
                    "worst-case bound with baseline design",
                    Ok(format!("max tr(Q^-1) = {worst_bound:.6} m^2")),
                ),
                Some(msg) => tally.report("worst-case bound with baseline design", Err(msg)),
            }
        }
        Err(e) => tally.report("worst-case bound with baseline design", Err(e.to_string())),
    }

    Ok(tally.all_passed)
}
