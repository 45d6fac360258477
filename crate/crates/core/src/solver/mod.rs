//! Quantization-noise PSD design by successive convex inner problems.
//!
//! The design minimizes the worst position-error bound over all uncertainty
//! circles subject to per-unit fronthaul rate budgets. A fractional
//! transform makes the bound convex in the working variables; the rate
//! constraints keep a concave term that is linearized at the current anchor
//! and re-linearized until the iterates settle, so the exact objective never
//! increases from one outer iteration to the next.

mod newton;
mod problem;

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::scenario::{derive_circle_geometry, Scenario, ScenarioError};
use crate::spectra::{ar1_noise_psd, flat_signal_esd, make_grid};

use problem::{center_t, AnchorData, Problem, Workspace};

const LN2: f64 = core::f64::consts::LN_2;

#[derive(Clone, Debug, PartialEq)]
pub enum SolverError {
    InvalidScenario(ScenarioError),
    InvalidOptions(&'static str),
    /// The white baseline cannot meet a zero rate budget with any finite
    /// noise level.
    ZeroCapacity(usize),
    /// A quantization weight of zero means the unit's band is discarded and
    /// no finite noise PSD reproduces it.
    ChannelDiscarded,
    /// The worst-case information matrix is not positive semidefinite, so
    /// its inverse does not bound any error covariance.
    BoundInapplicable,
    AnchorOutOfRange,
    Numerical(&'static str),
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::InvalidScenario(e) => write!(f, "invalid scenario: {e}"),
            Self::InvalidOptions(m) => write!(f, "invalid solver options: {m}"),
            Self::ZeroCapacity(j) => {
                write!(f, "fronthaul capacity of unit {j} must be positive")
            }
            Self::ChannelDiscarded => write!(f, "channel discarded entirely"),
            Self::BoundInapplicable => write!(f, "relaxation bound inapplicable"),
            Self::AnchorOutOfRange => {
                write!(f, "linearization anchor outside the open feasible box")
            }
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolverError {}

/// Tunables for the outer linearization loop and the inner barrier solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Outer stop: aggregate relative change of the fractional weights.
    pub delta_th: f64,
    pub max_outer_iterations: usize,
    /// Inner stop: the barrier weight must fall to this fraction of the
    /// objective scale before an inner solve is considered converged.
    pub kkt_tolerance: f64,
    pub barrier_initial_weight: f64,
    /// Multiplicative weight reduction per barrier stage, in (0, 1).
    pub barrier_reduction: f64,
    /// Fraction of each rate budget kept free when restarting an inner
    /// solve, in (0, 1).
    pub feasibility_slack: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            delta_th: 1e-5,
            max_outer_iterations: 100,
            kkt_tolerance: 1e-9,
            barrier_initial_weight: 1.0,
            barrier_reduction: 0.2,
            feasibility_slack: 0.25,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.delta_th > 0.0) {
            return Err(SolverError::InvalidOptions("delta_th must be positive"));
        }
        if self.max_outer_iterations == 0 {
            return Err(SolverError::InvalidOptions("max_outer_iterations must be positive"));
        }
        if !(self.kkt_tolerance > 0.0) {
            return Err(SolverError::InvalidOptions("kkt_tolerance must be positive"));
        }
        if !(self.barrier_initial_weight > 0.0) {
            return Err(SolverError::InvalidOptions("barrier_initial_weight must be positive"));
        }
        if !(self.barrier_reduction > 0.0 && self.barrier_reduction < 1.0) {
            return Err(SolverError::InvalidOptions("barrier_reduction must lie in (0, 1)"));
        }
        if !(self.feasibility_slack > 0.0 && self.feasibility_slack < 1.0) {
            return Err(SolverError::InvalidOptions("feasibility_slack must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Outer-loop state after a robust design run. `m` and `n` are the
/// fractional-transform weights per unit and grid node, coupled through
/// S_z m + n = 1 with 0 < m < 1/S_z; the quantization PSD is n / m.
#[derive(Clone, Debug, PartialEq)]
pub struct DcState {
    /// Outer iterations performed.
    pub iteration: usize,
    pub m: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
    /// Final epigraph level: the converged worst-case bound.
    pub t: f64,
    /// Exact worst-case objective after each outer iteration, preceded by
    /// its value at the initial point; never increasing.
    pub objective_history: Vec<f64>,
    /// Aggregate relative change of `m` per outer iteration.
    pub change_history: Vec<f64>,
    /// Total Newton steps across all inner solves.
    pub newton_steps: usize,
    pub converged: bool,
}

/// One inner solve: the convexified design at a fixed linearization anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolution {
    pub m: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
    pub t: f64,
    pub newton_steps: usize,
    /// Set when any barrier stage gave up early; the result is still the
    /// best feasible iterate found.
    pub capped: bool,
}

/// Fractional transform of a quantization PSD against a noise PSD, per grid
/// node: m = 1 / (S_q + S_z) and n = S_q / (S_q + S_z), so that S_z m + n = 1.
pub fn charnes_cooper_forward(quant_psd: &[f64], noise_psd: &[f64]) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(quant_psd.len(), noise_psd.len());
    let mut m = Vec::with_capacity(quant_psd.len());
    let mut n = Vec::with_capacity(quant_psd.len());
    for (&sq, &sz) in quant_psd.iter().zip(noise_psd) {
        let denom = sq + sz;
        m.push(1.0 / denom);
        n.push(sq / denom);
    }
    (m, n)
}

/// Inverts the fractional transform: S_q = n / m per node. A zero weight
/// has no finite preimage, meaning that node's channel was discarded.
pub fn recover_sq(m: &[f64], n: &[f64]) -> Result<Vec<f64>, SolverError> {
    debug_assert_eq!(m.len(), n.len());
    let mut sq = Vec::with_capacity(m.len());
    for (&mi, &ni) in m.iter().zip(n) {
        if !(mi > 0.0) {
            return Err(SolverError::ChannelDiscarded);
        }
        sq.push(ni / mi);
    }
    Ok(sq)
}

/// Tangent of the concave per-node rate part log2(1 + a m) at `m_anchor`,
/// evaluated at `m_new`; `snr_slope` is a = gain_power * S_x. Sits on or
/// above the true value everywhere, which keeps linearized-feasible points
/// truly feasible.
pub fn linearized_rate_term(snr_slope: f64, m_new: f64, m_anchor: f64) -> f64 {
    math::log2_1p(snr_slope * m_anchor) + linearized_rate_slope(snr_slope, m_anchor) * (m_new - m_anchor)
}

/// Slope of [`linearized_rate_term`] in its `m_new` argument.
pub fn linearized_rate_slope(snr_slope: f64, m_anchor: f64) -> f64 {
    snr_slope / (LN2 * (1.0 + snr_slope * m_anchor))
}

/// Convex per-node rate part -log2(1 - S_z m), the price of the fractional
/// transform; finite for 0 <= m < 1/S_z.
pub fn convex_rate_term(noise_psd: f64, m: f64) -> f64 {
    -math::log2_1p(-noise_psd * m)
}

/// Derivative of [`convex_rate_term`] in m.
pub fn convex_rate_term_gradient(noise_psd: f64, m: f64) -> f64 {
    noise_psd / (LN2 * (1.0 - noise_psd * m))
}

/// Per-unit flat quantization levels that exactly spend each unit's rate
/// budget at its most demanding gain bound. Returns one PSD level per unit.
pub fn baseline_white_design(scenario: &Scenario) -> Result<Vec<f64>, SolverError> {
    scenario.validate().map_err(SolverError::InvalidScenario)?;
    let grid = make_grid(scenario.bandwidth, scenario.grid_points);
    let sx = flat_signal_esd(scenario.signal_esd_dbm_per_hz, &grid);
    let geometry = derive_circle_geometry(scenario);
    let mut out = Vec::with_capacity(scenario.n_ru());
    for j in 0..scenario.n_ru() {
        let cap = scenario.fronthaul_capacity[j];
        if !(cap > 0.0) {
            return Err(SolverError::ZeroCapacity(j));
        }
        let gmax = geometry
            .iter()
            .map(|g| g.gain_std_upper[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let sz = ar1_noise_psd(&scenario.noise_model[j], &grid);
        let rate_at = |q: f64| -> f64 {
            let mut acc = 0.0;
            for n in 0..grid.len() {
                acc += math::log2_1p((gmax * gmax * sx[n] + sz[n]) / q);
            }
            grid.weight_normalized * acc
        };
        // The rate is strictly decreasing in the level; bracket, then close
        // in with geometric midpoints.
        let mut lo = gmax * gmax * sx[0] + sz[0];
        let mut hi = lo;
        while rate_at(lo) < cap {
            lo /= 16.0;
        }
        while rate_at(hi) > cap {
            hi *= 16.0;
        }
        let mut q = math::sqrt(lo * hi);
        for _ in 0..200 {
            let r = rate_at(q);
            if math::abs(r - cap) <= 1e-9 * cap {
                break;
            }
            if r > cap {
                lo = q;
            } else {
                hi = q;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
            q = math::sqrt(lo * hi);
        }
        out.push(q);
    }
    Ok(out)
}

/// Strictly feasible starting weights: the white baseline backed off by 1%
/// in noise level, pushed through the fractional transform.
pub fn initialize_m(scenario: &Scenario) -> Result<Vec<Vec<f64>>, SolverError> {
    let white = baseline_white_design(scenario)?;
    let grid = make_grid(scenario.bandwidth, scenario.grid_points);
    Ok(scenario
        .noise_model
        .iter()
        .zip(&white)
        .map(|(nm, &q)| {
            let sz = ar1_noise_psd(nm, &grid);
            sz.iter().map(|&z| 1.0 / (1.01 * q + z)).collect()
        })
        .collect())
}

/// Worst-case bound tr(Q^-1) for one circle as a function of the fractional
/// weights, together with its gradient in every m[j][n]. The bound is exact
/// in m (no linearization is involved).
pub fn worst_case_trace_gradient(
    scenario: &Scenario,
    circle: usize,
    m: &[Vec<f64>],
) -> Result<(f64, Vec<Vec<f64>>), SolverError> {
    scenario.validate().map_err(SolverError::InvalidScenario)?;
    assert!(circle < scenario.n_circles(), "circle index out of range");
    let grid = make_grid(scenario.bandwidth, scenario.grid_points);
    let sx = flat_signal_esd(scenario.signal_esd_dbm_per_hz, &grid);
    let geo = &derive_circle_geometry(scenario)[circle];
    let c2 = scenario.propagation_speed * scenario.propagation_speed;
    let base = 8.0 * core::f64::consts::PI * core::f64::consts::PI / c2 * grid.weight_integral;
    let nj = scenario.n_ru();
    let nn = grid.len();
    assert_eq!(m.len(), nj);
    // Weight-space information coefficients and the resulting matrix.
    let mut am = vec![vec![0.0; nn]; nj];
    let mut q = [0.0f64; 3];
    let mut qphi = vec![[0.0f64; 3]; nj];
    for j in 0..nj {
        assert_eq!(m[j].len(), nn);
        let gl = geo.gain_std_lower[j];
        let mut zeta = 0.0;
        for n in 0..nn {
            let f = grid.freqs[n];
            am[j][n] = base * gl * gl * f * f * sx[n];
            zeta += am[j][n] * m[j][n];
        }
        let (c, s) = (math::cos(geo.nominal_angle[j]), math::sin(geo.nominal_angle[j]));
        let se = math::sin(geo.angular_uncertainty[j]);
        qphi[j] = [c * c - se, c * s, s * s - se];
        q[0] += zeta * qphi[j][0];
        q[1] += zeta * qphi[j][1];
        q[2] += zeta * qphi[j][2];
    }
    let det = q[0] * q[2] - q[1] * q[1];
    if !(det > 0.0) || !(q[0] > 0.0) {
        return Err(SolverError::BoundInapplicable);
    }
    let p = [q[2] / det, -q[1] / det, q[0] / det];
    let trace = p[0] + p[2];
    let p2 = [
        p[0] * p[0] + p[1] * p[1],
        p[1] * (p[0] + p[2]),
        p[1] * p[1] + p[2] * p[2],
    ];
    let mut grad = am;
    for j in 0..nj {
        let dfdz = -(qphi[j][0] * p2[0] + 2.0 * qphi[j][1] * p2[1] + qphi[j][2] * p2[2]);
        for g in grad[j].iter_mut() {
            *g *= dfdz;
        }
    }
    Ok((trace, grad))
}

fn u_from_m(prob: &Problem, m: &[Vec<f64>]) -> Result<Vec<f64>, SolverError> {
    if m.len() != prob.n_ru {
        return Err(SolverError::AnchorOutOfRange);
    }
    let mut u = vec![0.0; prob.n_ru * prob.n_nodes];
    for j in 0..prob.n_ru {
        if m[j].len() != prob.n_nodes {
            return Err(SolverError::AnchorOutOfRange);
        }
        for n in 0..prob.n_nodes {
            let v = prob.sz[j][n] * m[j][n];
            if !(v > 0.0 && v < 1.0) {
                return Err(SolverError::AnchorOutOfRange);
            }
            u[j * prob.n_nodes + n] = v;
        }
    }
    Ok(u)
}

fn m_from_u(prob: &Problem, u: &[f64]) -> Vec<Vec<f64>> {
    (0..prob.n_ru)
        .map(|j| (0..prob.n_nodes).map(|n| u[j * prob.n_nodes + n] / prob.sz[j][n]).collect())
        .collect()
}

fn n_from_u(prob: &Problem, u: &[f64]) -> Vec<Vec<f64>> {
    (0..prob.n_ru)
        .map(|j| (0..prob.n_nodes).map(|n| 1.0 - u[j * prob.n_nodes + n]).collect())
        .collect()
}

/// Shrinks the anchor toward zero until every modeled rate clears its
/// capacity by the configured slack, giving the barrier a well-centered
/// start. Returns the shrink factor.
fn shrink_factor(
    prob: &Problem,
    anchor: &AnchorData,
    u_anchor: &[f64],
    opts: &SolverOptions,
) -> Result<f64, SolverError> {
    let (nl, nj, nn) = (prob.n_circles, prob.n_ru, prob.n_nodes);
    let mut eta = vec![0.0; nj];
    for j in 0..nj {
        let cap = prob.capacity[j];
        let h0 = (0..nl).map(|l| anchor.intercept[l][j]).fold(f64::NEG_INFINITY, f64::max);
        if !(h0 < cap) {
            return Err(SolverError::Numerical("anchor rate model exceeds capacity"));
        }
        eta[j] = f64::max((1.0 - opts.feasibility_slack) * cap, h0 + 0.1 * (cap - h0));
    }
    let mut kdot = vec![0.0; nl * nj];
    for l in 0..nl {
        for j in 0..nj {
            kdot[l * nj + j] =
                math::dot(&anchor.kappa[l][j], &u_anchor[j * nn..(j + 1) * nn]);
        }
    }
    let excess = |gamma: f64| -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..nj {
            let mut neglog = 0.0;
            for n in 0..nn {
                neglog -= math::ln_1p(-gamma * u_anchor[j * nn + n]);
            }
            neglog /= LN2;
            for l in 0..nl {
                let r = anchor.intercept[l][j] + gamma * kdot[l * nj + j]
                    + prob.w_norm * neglog;
                worst = f64::max(worst, r - eta[j]);
            }
        }
        worst
    };
    if excess(1.0) <= 0.0 {
        return Ok(0.99);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.clamp(1e-12, 1.0 - 1e-9))
}

fn circle_traces(prob: &Problem, u: &[f64]) -> Result<Vec<f64>, SolverError> {
    let mut f = Vec::with_capacity(prob.n_circles);
    for l in 0..prob.n_circles {
        let q = prob.q_matrix(l, u);
        let det = q[0] * q[2] - q[1] * q[1];
        if !(det > 0.0) || !(q[0] > 0.0) {
            return Err(SolverError::BoundInapplicable);
        }
        f.push((q[0] + q[2]) / det);
    }
    Ok(f)
}

/// Runs the barrier schedule for one anchored inner problem. `u` holds the
/// anchor on entry and the solution on exit.
fn solve_inner_impl(
    prob: &Problem,
    u: &mut Vec<f64>,
    opts: &SolverOptions,
    ws: &mut Workspace,
) -> Result<(f64, usize, bool), SolverError> {
    let dim = prob.dim;
    let anchor = prob.anchor_data(u);
    let gamma = shrink_factor(prob, &anchor, u, opts)?;
    let mut x = vec![0.0; dim];
    for i in 0..dim - 1 {
        x[i] = gamma * u[i];
    }
    let mut mu = opts.barrier_initial_weight;
    let f = circle_traces(prob, &x[..dim - 1])?;
    x[dim - 1] = center_t(&f, mu);
    let mut total_steps = 0;
    let mut capped = false;
    loop {
        let out = newton::run_stage(prob, &anchor, mu, &mut x, ws)?;
        total_steps += out.steps;
        capped |= out.capped;
        let t = x[dim - 1];
        if mu <= opts.kkt_tolerance * f64::max(1.0, math::abs(t)) {
            break;
        }
        mu *= opts.barrier_reduction;
        let f = circle_traces(prob, &x[..dim - 1])?;
        x[dim - 1] = center_t(&f, mu);
    }
    let t = x[dim - 1];
    u.copy_from_slice(&x[..dim - 1]);
    Ok((t, total_steps, capped))
}

/// Solves the convexified design for one fixed linearization anchor given
/// as fractional weights `anchor_m`.
pub fn solve_inner(
    scenario: &Scenario,
    anchor_m: &[Vec<f64>],
    options: &SolverOptions,
) -> Result<InnerSolution, SolverError> {
    options.validate()?;
    let prob = Problem::new(scenario)?;
    let mut u = u_from_m(&prob, anchor_m)?;
    let mut ws = Workspace::new(&prob);
    let (t, newton_steps, capped) = solve_inner_impl(&prob, &mut u, options, &mut ws)?;
    Ok(InnerSolution {
        m: m_from_u(&prob, &u),
        n: n_from_u(&prob, &u),
        t,
        newton_steps,
        capped,
    })
}

/// Full robust design: re-linearizes the rate constraints around each inner
/// solution until the weights settle. The exact worst-case objective is
/// evaluated after every inner solve and an ascending step is rejected, so
/// the recorded objective history never increases.
pub fn solve_robust(scenario: &Scenario, options: &SolverOptions) -> Result<DcState, SolverError> {
    options.validate()?;
    let prob = Problem::new(scenario)?;
    let m0 = initialize_m(scenario)?;
    let mut u = u_from_m(&prob, &m0)?;
    let mut ws = Workspace::new(&prob);
    let mut obj = prob.true_objective(&u);
    if !obj.is_finite() {
        return Err(SolverError::BoundInapplicable);
    }
    let mut state = DcState {
        iteration: 0,
        m: Vec::new(),
        n: Vec::new(),
        t: obj,
        objective_history: vec![obj],
        change_history: Vec::new(),
        newton_steps: 0,
        converged: false,
    };
    for it in 1..=options.max_outer_iterations {
        let mut u_new = u.clone();
        let (t_new, steps, capped) = solve_inner_impl(&prob, &mut u_new, options, &mut ws)?;
        state.newton_steps += steps;
        if capped {
            log::warn!("inner solve at outer iteration {it} stopped early");
        }
        let obj_new = prob.true_objective(&u_new);
        // Exact-descent guard: fall back to the anchor when the linearized
        // model overshot, which also terminates the loop (zero change).
        let ascended = !(obj_new <= obj);
        if ascended {
            log::debug!("outer iteration {it}: inner result rejected ({obj_new:.6e} > {obj:.6e})");
        } else {
            obj = obj_new;
            state.t = t_new;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..prob.n_ru {
            for n in 0..prob.n_nodes {
                let idx = j * prob.n_nodes + n;
                let m_old = u[idx] / prob.sz[j][n];
                let m_new = if ascended { m_old } else { u_new[idx] / prob.sz[j][n] };
                num += math::abs(m_new - m_old);
                den += math::abs(m_old);
            }
        }
        if !ascended {
            u = u_new;
        }
        let chg = if den > 0.0 { num / den } else { 0.0 };
        state.iteration = it;
        state.objective_history.push(obj);
        state.change_history.push(chg);
        log::debug!("outer iteration {it}: objective {obj:.9e}, change {chg:.3e}, {steps} newton steps");
        if chg < options.delta_th {
            state.converged = true;
            break;
        }
    }
    if !state.converged {
        log::warn!(
            "outer loop did not settle within {} iterations; returning best iterate",
            options.max_outer_iterations
        );
    }
    // The inverse-trace bound is only meaningful if every final matrix is
    // positive semidefinite within tolerance.
    for l in 0..prob.n_circles {
        let q = prob.q_matrix(l, &u);
        let tr = q[0] + q[2];
        let mean = 0.5 * tr;
        let r = math::hypot(0.5 * (q[0] - q[2]), q[1]);
        if !(tr > 0.0) || mean - r < -1.0e-9 * tr {
            return Err(SolverError::BoundInapplicable);
        }
    }
    state.m = m_from_u(&prob, &u);
    state.n = n_from_u(&prob, &u);
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::scenario::{default_ru_layout, square_scenario, Circle, NoiseModel};
    use crate::spectra::Grid;

    fn toy_scenario() -> Scenario {
        Scenario {
            area_side: 400.0,
            ru_positions: default_ru_layout(4, 400.0),
            circles: vec![Circle { center: [30.0, -20.0], radius: 60.0 }],
            path_loss_exponent: 2.0,
            fading_power: vec![1.0; 4],
            bandwidth: 1.0e6,
            signal_esd_dbm_per_hz: -60.0,
            noise_model: vec![NoiseModel { n0_dbm_per_hz: -174.0, ar_coeff: 0.5 }; 4],
            fronthaul_capacity: vec![1.5; 4],
            propagation_speed: 299_792_458.0,
            grid_points: 8,
            uncertainty_center: [0.0, 0.0],
            uncertainty_side: 150.0,
        }
    }

    fn grid_of(s: &Scenario) -> Grid {
        make_grid(s.bandwidth, s.grid_points)
    }

    #[test]
    fn charnes_cooper_roundtrip_and_coupling() {
        let sq = [1.0, 0.25, 7.0e-18, 3.0e3];
        let sz = [0.5, 0.5, 4.0e-18, 1.0e-2];
        let (m, n) = charnes_cooper_forward(&sq, &sz);
        for i in 0..sq.len() {
            let c = sz[i] * m[i] + n[i];
            assert!((c - 1.0).abs() < 1e-12, "coupling {c}");
        }
        let back = recover_sq(&m, &n).unwrap();
        for i in 0..sq.len() {
            assert!((back[i] - sq[i]).abs() <= 1e-12 * sq[i]);
        }
    }

    #[test]
    fn recover_sq_rejects_discarded_channel() {
        assert_eq!(recover_sq(&[0.0], &[1.0]), Err(SolverError::ChannelDiscarded));
    }

    #[test]
    fn linearized_term_value_and_tangency() {
        // log2(2) + (1 / (2 ln 2)) * 2 at anchor 1, slope scale 1.
        let v = linearized_rate_term(1.0, 3.0, 1.0);
        assert!((v - 2.4426950408889634).abs() < 1e-15);
        // Tangent touches at the anchor and lies above elsewhere.
        for &a in &[0.3, 1.0, 42.0] {
            for &mh in &[0.1, 1.0, 5.0] {
                let at_anchor = linearized_rate_term(a, mh, mh);
                assert!((at_anchor - math::log2_1p(a * mh)).abs() < 1e-14);
                for &mv in &[0.01, 0.5, 2.0, 10.0] {
                    assert!(linearized_rate_term(a, mv, mh) >= math::log2_1p(a * mv) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn convex_term_gradient_is_consistent() {
        let sz = 0.8;
        for &m in &[0.1, 0.5, 1.2] {
            let h = 1e-6;
            let fd = (convex_rate_term(sz, m + h) - convex_rate_term(sz, m - h)) / (2.0 * h);
            let an = convex_rate_term_gradient(sz, m);
            assert!((fd - an).abs() < 1e-6 * an.abs());
        }
    }

    #[test]
    fn baseline_white_closed_form() {
        // Four units at equal distance from a single circle, fading power
        // chosen so the near-edge gain bound is exactly 1, unit signal and
        // white unit noise: the spent-budget level is 2 / (2^C - 1).
        let d: f64 = 150.0;
        let radius = 50.0;
        let mut s = toy_scenario();
        s.ru_positions = vec![[d, 0.0], [0.0, d], [-d, 0.0], [0.0, -d]];
        s.circles = vec![Circle { center: [0.0, 0.0], radius }];
        s.path_loss_exponent = 1.0;
        s.fading_power = vec![(d - radius) * (d - radius); 4];
        s.signal_esd_dbm_per_hz = 0.0;
        s.noise_model = vec![NoiseModel { n0_dbm_per_hz: 0.0, ar_coeff: 0.0 }; 4];
        for cap in [0.5, 2.0, 5.0] {
            s.fronthaul_capacity = vec![cap; 4];
            s.validate().unwrap();
            let w = baseline_white_design(&s).unwrap();
            let expect = 2.0 / (math::powf(2.0, cap) - 1.0);
            for &q in &w {
                assert!((q - expect).abs() < 1e-7 * expect, "cap {cap}: {q} vs {expect}");
            }
        }
    }

    #[test]
    fn baseline_white_meets_budget_on_colored_noise() {
        let s = square_scenario();
        let w = baseline_white_design(&s).unwrap();
        let grid = grid_of(&s);
        let sx = flat_signal_esd(s.signal_esd_dbm_per_hz, &grid);
        let geo = derive_circle_geometry(&s);
        for j in 0..s.n_ru() {
            let sz = ar1_noise_psd(&s.noise_model[j], &grid);
            let quant = vec![w[j]; grid.len()];
            let worst = geo
                .iter()
                .map(|g| metrics::rate(&grid, &sx, &sz, &quant, g.gain_std_upper[j]).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            let res = (worst - s.fronthaul_capacity[j]).abs() / s.fronthaul_capacity[j];
            assert!(res <= 1e-8, "unit {j}: residual {res}");
        }
    }

    #[test]
    fn baseline_white_rejects_zero_capacity() {
        let mut s = toy_scenario();
        s.fronthaul_capacity[2] = 0.0;
        // The scenario itself stays valid; a zero budget is the solver's
        // error to report, naming the unit.
        s.validate().unwrap();
        assert_eq!(baseline_white_design(&s), Err(SolverError::ZeroCapacity(2)));
    }

    #[test]
    fn initialize_m_is_strictly_feasible() {
        let s = toy_scenario();
        let m0 = initialize_m(&s).unwrap();
        let grid = grid_of(&s);
        let sx = flat_signal_esd(s.signal_esd_dbm_per_hz, &grid);
        let geo = derive_circle_geometry(&s);
        for j in 0..s.n_ru() {
            let sz = ar1_noise_psd(&s.noise_model[j], &grid);
            let n: Vec<f64> = m0[j].iter().zip(&sz).map(|(&m, &z)| 1.0 - z * m).collect();
            let sq = recover_sq(&m0[j], &n).unwrap();
            for g in &geo {
                let r = metrics::rate(&grid, &sx, &sz, &sq, g.gain_std_upper[j]).unwrap();
                assert!(r < s.fronthaul_capacity[j], "unit {j} rate {r} not strictly inside");
                assert!(r > 0.9 * s.fronthaul_capacity[j], "unit {j} start far from budget");
            }
        }
    }

    #[test]
    fn worst_case_trace_gradient_matches_finite_differences() {
        let s = toy_scenario();
        let m0 = initialize_m(&s).unwrap();
        let (f0, grad) = worst_case_trace_gradient(&s, 0, &m0).unwrap();
        assert!(f0 > 0.0);
        for (j, n) in [(0usize, 0usize), (1, 2), (3, 3)] {
            let h = 1e-6 * m0[j][n];
            let mut mp = m0.clone();
            mp[j][n] += h;
            let mut mm = m0.clone();
            mm[j][n] -= h;
            let (fp, _) = worst_case_trace_gradient(&s, 0, &mp).unwrap();
            let (fm, _) = worst_case_trace_gradient(&s, 0, &mm).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (fd - grad[j][n]).abs() <= 1e-5 * grad[j][n].abs().max(1e-12),
                "({j},{n}): fd {fd} vs {}",
                grad[j][n]
            );
        }
    }

    #[test]
    fn solver_options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let mut o = SolverOptions::default();
        o.barrier_reduction = 1.0;
        assert!(o.validate().is_err());
        o = SolverOptions::default();
        o.delta_th = 0.0;
        assert!(o.validate().is_err());
        o = SolverOptions::default();
        o.feasibility_slack = 1.5;
        assert!(o.validate().is_err());
    }

    #[test]
    fn robust_design_toy_converges_and_beats_baseline() {
        let s = toy_scenario();
        let opts = SolverOptions::default();
        let state = solve_robust(&s, &opts).unwrap();
        assert!(state.converged, "toy design should settle");
        assert!(state.iteration <= opts.max_outer_iterations);
        // Objective history never increases.
        for w in state.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * w[0].abs(), "ascent in history: {w:?}");
        }
        // Epigraph level agrees with the final exact objective.
        let last = *state.objective_history.last().unwrap();
        assert!((state.t - last).abs() <= 1e-6 * last.abs() + 1e-9);
        // Strict improvement over the starting point (the backed-off white design).
        assert!(last < state.objective_history[0]);
        // Weight coupling and box bounds.
        let grid = grid_of(&s);
        for j in 0..s.n_ru() {
            let sz = ar1_noise_psd(&s.noise_model[j], &grid);
            for n in 0..grid.len() {
                let c = sz[n] * state.m[j][n] + state.n[j][n];
                assert!((c - 1.0).abs() < 1e-10);
                assert!(state.m[j][n] > 0.0 && state.m[j][n] < 1.0 / sz[n]);
            }
        }
        // Every rate budget is respected by the recovered noise PSDs.
        let sx = flat_signal_esd(s.signal_esd_dbm_per_hz, &grid);
        let geo = derive_circle_geometry(&s);
        for j in 0..s.n_ru() {
            let sz = ar1_noise_psd(&s.noise_model[j], &grid);
            let sq = recover_sq(&state.m[j], &state.n[j]).unwrap();
            for g in &geo {
                let r = metrics::rate(&grid, &sx, &sz, &sq, g.gain_std_upper[j]).unwrap();
                assert!(r <= s.fronthaul_capacity[j] + 1e-6, "unit {j} rate {r}");
            }
        }
    }

    #[test]
    fn inner_solve_from_custom_anchor() {
        let s = toy_scenario();
        let m0 = initialize_m(&s).unwrap();
        let sol = solve_inner(&s, &m0, &SolverOptions::default()).unwrap();
        assert!(!sol.capped);
        assert!(sol.newton_steps > 0);
        assert!(sol.t > 0.0);
        // The inner solution improves on the anchor's exact objective.
        let (f_anchor, _) = worst_case_trace_gradient(&s, 0, &m0).unwrap();
        let (f_sol, _) = worst_case_trace_gradient(&s, 0, &sol.m).unwrap();
        assert!(f_sol < f_anchor);
        assert!((sol.t - f_sol).abs() < 1e-6 * f_sol);
    }

    #[test]
    fn anchor_out_of_box_is_rejected() {
        let s = toy_scenario();
        let mut m0 = initialize_m(&s).unwrap();
        m0[0][0] = 1.0e30;
        assert_eq!(
            solve_inner(&s, &m0, &SolverOptions::default()).unwrap_err(),
            SolverError::AnchorOutOfRange
        );
    }
}
