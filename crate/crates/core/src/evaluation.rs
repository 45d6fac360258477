//! Monte Carlo accuracy evaluation and the capacity sweep.
//!
//! Positions are sampled from the scenario's uncertainty square; at each one
//! the position-error bound is averaged over fading draws, and a design is
//! scored by the worst such average over all positions. Designs evaluated
//! under the same seed see identical fading streams, so comparisons between
//! them are paired.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::metrics::{self, MetricsError};
use crate::rng;
use crate::scenario::Scenario;
use crate::solver::{
    baseline_white_design, recover_sq, solve_robust, DcState, SolverError, SolverOptions,
};
use crate::spectra::{ar1_noise_psd, flat_signal_esd, make_grid, Grid};

/// Fading realizations whose information matrix has a condition number above
/// this are discarded and redrawn: their bound is numerically meaningless.
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    Solver(SolverError),
    Metrics(MetricsError),
    /// The sampled position coincides with a radio unit, where the ranging
    /// model degenerates.
    PositionAtUnit(usize),
    /// The rejection loop made no progress; the geometry is degenerate for
    /// nearly every fading draw.
    TooManyRejections,
    Config(String),
}

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Solver(e) => write!(f, "{e}"),
            Self::Metrics(e) => write!(f, "{e}"),
            Self::PositionAtUnit(j) => {
                write!(f, "evaluation position coincides with radio unit {j}")
            }
            Self::TooManyRejections => {
                write!(f, "fading rejection loop made no progress")
            }
            Self::Config(m) => write!(f, "{m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

impl From<SolverError> for EvalError {
    fn from(e: SolverError) -> Self {
        EvalError::Solver(e)
    }
}

impl From<MetricsError> for EvalError {
    fn from(e: MetricsError) -> Self {
        EvalError::Metrics(e)
    }
}

/// Monte Carlo evaluation parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub n_positions: usize,
    pub n_fading_draws: usize,
    pub seed: u64,
    /// Common per-unit budgets to sweep; each replaces every unit's
    /// fronthaul capacity in turn.
    pub capacities: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { n_positions: 400, n_fading_draws: 2000, seed: 0, capacities: Vec::new() }
    }
}

/// Fading-averaged position-error bound at one position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AvgCrb {
    pub mean: f64,
    /// Sampling variance of `mean` itself (sample variance over draws
    /// divided by the number of draws).
    pub variance_of_mean: f64,
    pub rejected: u64,
}

/// Everything measured for one capacity point. PSDs are in mW/Hz; accuracy
/// figures are in meters (square root of the worst average squared-error
/// bound).
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub sqrt_worst_avg_crb_proposed: f64,
    pub se_proposed: f64,
    pub sqrt_worst_avg_crb_baseline: f64,
    pub se_baseline: f64,
    /// Shaped quantization PSD per unit and grid node.
    pub proposed_quant_psd: Vec<Vec<f64>>,
    /// Flat quantization level per unit.
    pub baseline_quant_level: Vec<f64>,
    pub rejected_proposed: u64,
    pub rejected_baseline: u64,
    pub outer_iterations: usize,
    pub newton_steps: usize,
    pub solver_converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub capacity: f64,
    pub result: Result<PointResult, EvalError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub points: Vec<SweepPoint>,
    pub seed: u64,
    pub n_positions: usize,
    pub n_fading_draws: usize,
    pub scenario_hash: u64,
}

/// Uniform positions over the scenario's uncertainty square. The stream is
/// decoupled from the fading streams, so changing the position count leaves
/// fading draws untouched.
pub fn sample_positions(scenario: &Scenario, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut r = rng::rng_from_seed(rng::derive_seed(seed, 0x706f736974696f6e));
    let half = scenario.uncertainty_side / 2.0;
    let [cx, cy] = scenario.uncertainty_center;
    (0..n)
        .map(|_| {
            let x = cx + (2.0 * rng::next_f64(&mut r) - 1.0) * half;
            let y = cy + (2.0 * rng::next_f64(&mut r) - 1.0) * half;
            [x, y]
        })
        .collect()
}

/// Per-unit delay-information integrals for a design, the gain-independent
/// part of the information matrix.
fn design_integrals(scenario: &Scenario, grid: &Grid, quant_psd: &[Vec<f64>]) -> Vec<f64> {
    let sx = flat_signal_esd(scenario.signal_esd_dbm_per_hz, grid);
    scenario
        .noise_model
        .iter()
        .zip(quant_psd)
        .map(|(nm, sq)| {
            let sz = ar1_noise_psd(nm, grid);
            metrics::information_integral(grid, &sx, &sz, sq, scenario.propagation_speed)
        })
        .collect()
}

fn position_stats(
    scenario: &Scenario,
    integrals: &[f64],
    position: [f64; 2],
    n_draws: usize,
    seed: u64,
) -> Result<AvgCrb, EvalError> {
    let n_ru = scenario.n_ru();
    let mut angles = vec![0.0; n_ru];
    let mut inv_dmu = vec![0.0; n_ru];
    for (j, ru) in scenario.ru_positions.iter().enumerate() {
        let dx = ru[0] - position[0];
        let dy = ru[1] - position[1];
        let d = math::hypot(dx, dy);
        if d < 1e-9 {
            return Err(EvalError::PositionAtUnit(j));
        }
        angles[j] = math::atan2(dy, dx);
        inv_dmu[j] = 1.0 / math::powf(d, scenario.path_loss_exponent);
    }
    let mut r = rng::rng_from_seed(seed);
    let mut gains = vec![0.0; n_ru];
    let mut accepted = 0usize;
    let mut rejected = 0u64;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let reject_limit = 100 * n_draws as u64 + 1000;
    while accepted < n_draws {
        for j in 0..n_ru {
            // |alpha|^2 is exponential with mean equal to the fading power.
            let a2 = rng::next_exponential(&mut r, scenario.fading_power[j]);
            gains[j] = math::sqrt(a2) * inv_dmu[j];
        }
        let jm = metrics::efim(&angles, &gains, integrals);
        let tr = jm[0][0] + jm[1][1];
        let det = jm[0][0] * jm[1][1] - jm[0][1] * jm[1][0];
        let half_gap = math::hypot(0.5 * (jm[0][0] - jm[1][1]), jm[0][1]);
        let lo = 0.5 * tr - half_gap;
        let hi = 0.5 * tr + half_gap;
        if !(lo > 0.0) || hi > CONDITION_LIMIT * lo {
            rejected += 1;
            if rejected > reject_limit {
                return Err(EvalError::TooManyRejections);
            }
            continue;
        }
        accepted += 1;
        let crb = tr / det;
        let delta = crb - mean;
        mean += delta / accepted as f64;
        m2 += delta * (crb - mean);
    }
    let variance_of_mean = if n_draws > 1 {
        m2 / ((n_draws - 1) as f64 * n_draws as f64)
    } else {
        0.0
    };
    Ok(AvgCrb { mean, variance_of_mean, rejected })
}

/// Fading-averaged position-error bound for a design at one position, from
/// `n_draws` accepted realizations of the fading stream under `seed`.
pub fn avg_crb_at(
    scenario: &Scenario,
    quant_psd: &[Vec<f64>],
    position: [f64; 2],
    n_draws: usize,
    seed: u64,
) -> Result<AvgCrb, EvalError> {
    let grid = make_grid(scenario.bandwidth, scenario.grid_points);
    let integrals = design_integrals(scenario, &grid, quant_psd);
    position_stats(scenario, &integrals, position, n_draws, seed)
}

struct WorstTracker {
    mean: f64,
    variance_of_mean: f64,
    rejected: u64,
}

impl WorstTracker {
    fn new() -> Self {
        WorstTracker { mean: f64::NEG_INFINITY, variance_of_mean: 0.0, rejected: 0 }
    }

    fn update(&mut self, s: &AvgCrb) {
        self.rejected += s.rejected;
        if s.mean > self.mean {
            self.mean = s.mean;
            self.variance_of_mean = s.variance_of_mean;
        }
    }

    /// sqrt of the worst mean plus its standard error by the delta method.
    fn finish(&self) -> (f64, f64) {
        let root = math::sqrt(self.mean);
        let se = if root > 0.0 { math::sqrt(self.variance_of_mean) / (2.0 * root) } else { 0.0 };
        (root, se)
    }
}

fn eval_capacity_point(
    scenario: &Scenario,
    grid: &Grid,
    positions: &[[f64; 2]],
    eval: &EvalConfig,
    solver: &SolverOptions,
) -> Result<PointResult, EvalError> {
    let state: DcState = solve_robust(scenario, solver)?;
    let mut proposed = Vec::with_capacity(scenario.n_ru());
    for j in 0..scenario.n_ru() {
        proposed.push(recover_sq(&state.m[j], &state.n[j])?);
    }
    let white = baseline_white_design(scenario)?;
    let baseline: Vec<Vec<f64>> = white.iter().map(|&q| vec![q; grid.len()]).collect();
    let ints_prop = design_integrals(scenario, grid, &proposed);
    let ints_base = design_integrals(scenario, grid, &baseline);
    let mut worst_prop = WorstTracker::new();
    let mut worst_base = WorstTracker::new();
    for (idx, &pos) in positions.iter().enumerate() {
        let seed = rng::derive_seed(eval.seed, idx as u64);
        let sp = position_stats(scenario, &ints_prop, pos, eval.n_fading_draws, seed)?;
        let sb = position_stats(scenario, &ints_base, pos, eval.n_fading_draws, seed)?;
        worst_prop.update(&sp);
        worst_base.update(&sb);
    }
    let (rp, sep) = worst_prop.finish();
    let (rb, seb) = worst_base.finish();
    Ok(PointResult {
        sqrt_worst_avg_crb_proposed: rp,
        se_proposed: sep,
        sqrt_worst_avg_crb_baseline: rb,
        se_baseline: seb,
        proposed_quant_psd: proposed,
        baseline_quant_level: white,
        rejected_proposed: worst_prop.rejected,
        rejected_baseline: worst_base.rejected,
        outer_iterations: state.iteration,
        newton_steps: state.newton_steps,
        solver_converged: state.converged,
    })
}

/// Designs and evaluates both the shaped and the white quantization noise at
/// every capacity in the config. A failure at one capacity is recorded in
/// that point and the sweep continues; positions and fading streams are
/// shared across capacities and designs.
pub fn sweep_capacity(
    scenario: &Scenario,
    eval: &EvalConfig,
    solver: &SolverOptions,
) -> Result<EvalReport, EvalError> {
    scenario.validate().map_err(|e| EvalError::Solver(SolverError::InvalidScenario(e)))?;
    if eval.n_positions == 0 || eval.n_fading_draws == 0 {
        return Err(EvalError::Config("need at least one position and one fading draw".into()));
    }
    let grid = make_grid(scenario.bandwidth, scenario.grid_points);
    let positions = sample_positions(scenario, eval.n_positions, eval.seed);
    let mut points = Vec::with_capacity(eval.capacities.len());
    for &cap in &eval.capacities {
        let mut sc = scenario.clone();
        sc.fronthaul_capacity = vec![cap; scenario.n_ru()];
        // Invalid budgets (negative, NaN, zero) surface through the solver's
        // own validation so the recorded error names the cause.
        let result = if sc.validate().is_ok() {
            eval_capacity_point(&sc, &grid, &positions, eval, solver)
        } else {
            Err(EvalError::Solver(SolverError::InvalidScenario(
                crate::scenario::ScenarioError::NonPositive("fronthaul_capacity"),
            )))
        };
        match &result {
            Ok(p) => log::info!(
                "capacity {cap}: proposed {:.3} m, baseline {:.3} m",
                p.sqrt_worst_avg_crb_proposed,
                p.sqrt_worst_avg_crb_baseline
            ),
            Err(e) => log::warn!("capacity {cap}: {e}"),
        }
        points.push(SweepPoint { capacity: cap, result });
    }
    Ok(EvalReport {
        points,
        seed: eval.seed,
        n_positions: eval.n_positions,
        n_fading_draws: eval.n_fading_draws,
        scenario_hash: scenario.content_hash(),
    })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        // Average rank over the tie group, 1-based.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation between a quantization PSD and the front-end
/// noise PSD across grid nodes: a shaped design tracks the noise coloring,
/// a flat one does not. `None` when either input is constant, where rank
/// correlation is undefined.
pub fn psd_shape_diagnostic(quant_psd: &[f64], noise_psd: &[f64]) -> Option<f64> {
    if quant_psd.len() != noise_psd.len() || quant_psd.len() < 2 {
        return None;
    }
    let rx = ranks(quant_psd);
    let ry = ranks(noise_psd);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..rx.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / math::sqrt(sxx * syy))
}
