//! Damped Newton iteration on one barrier subproblem.

use crate::math;

use super::problem::{center_t, AnchorData, Problem, Workspace};
use super::SolverError;

const ARMIJO_C1: f64 = 0.01;
const MAX_BACKTRACKS: u32 = 60;
const BOUNDARY_FRACTION: f64 = 0.995;
const MAX_STAGE_STEPS: usize = 150;
const MAX_REG_TRIES: usize = 30;

pub(crate) struct StageOutcome {
    pub steps: usize,
    pub capped: bool,
}

/// Factor the assembled system and solve for the step, escalating a diagonal
/// shift until the factorization succeeds and yields a descent direction.
/// Returns the Newton decrement lambda^2 = -g . delta.
fn solve_newton_system(prob: &Problem, ws: &mut Workspace) -> Result<f64, SolverError> {
    let dim = prob.dim;
    let mut trace = 0.0;
    for i in 0..dim {
        trace += ws.h[i * dim + i];
    }
    let tau0 = f64::max(1e-14 * trace / dim as f64, 1e-300);
    let mut tau = 0.0;
    for _ in 0..MAX_REG_TRIES {
        ws.hf.copy_from_slice(&ws.h);
        if tau > 0.0 {
            for i in 0..dim {
                ws.hf[i * dim + i] += tau;
            }
        }
        if math::cholesky_in_place(&mut ws.hf, dim).is_ok() {
            for i in 0..dim {
                ws.delta[i] = -ws.g[i];
            }
            math::cholesky_solve(&ws.hf, dim, &mut ws.delta);
            let lambda2 = -math::dot(&ws.g, &ws.delta);
            if lambda2 >= 0.0 && lambda2.is_finite() {
                return Ok(lambda2);
            }
        }
        tau = if tau == 0.0 { tau0 } else { tau * 10.0 };
    }
    Err(SolverError::Numerical("newton system factorization failed"))
}

/// Minimizes the barrier at weight `mu` from the feasible point in `x`,
/// stopping when the Newton decrement satisfies lambda^2 / 2 <= max(1e-14,
/// 0.1 mu). The epigraph level is re-centered analytically after every
/// accepted step, which can only lower the barrier.
pub(crate) fn run_stage(
    prob: &Problem,
    anchor: &AnchorData,
    mu: f64,
    x: &mut [f64],
    ws: &mut Workspace,
) -> Result<StageOutcome, SolverError> {
    let dim = prob.dim;
    let stage_tol = f64::max(1e-14, 0.1 * mu);
    let mut steps = 0;
    loop {
        let ev = prob.eval(anchor, x, mu);
        if !ev.feasible {
            return Err(SolverError::Numerical("barrier iterate left the feasible region"));
        }
        prob.assemble(anchor, x, &ev, mu, ws);
        let lambda2 = solve_newton_system(prob, ws)?;
        if 0.5 * lambda2 <= stage_tol {
            return Ok(StageOutcome { steps, capped: false });
        }
        // Fraction-to-boundary cap: exact on the box, first order on the
        // epigraph and rate slacks so no constraint is crossed in one jump.
        let mut alpha: f64 = 1.0;
        for i in 0..dim - 1 {
            let d = ws.delta[i];
            if d < 0.0 {
                alpha = alpha.min(BOUNDARY_FRACTION * x[i] / -d);
            } else if d > 0.0 {
                alpha = alpha.min(BOUNDARY_FRACTION * (1.0 - x[i]) / d);
            }
        }
        for l in 0..prob.n_circles {
            let ddir = math::dot(&ws.v[l], &ws.delta);
            if ddir > 0.0 {
                alpha = alpha.min(BOUNDARY_FRACTION * ev.sigma[l] / ddir);
            }
        }
        let nn = prob.n_nodes;
        for l in 0..prob.n_circles {
            for j in 0..prob.n_ru {
                let idx = l * prob.n_ru + j;
                let ddir = math::dot(&ws.gg[idx], &ws.delta[j * nn..(j + 1) * nn]);
                if ddir > 0.0 {
                    alpha = alpha.min(BOUNDARY_FRACTION * ev.rslack[idx] / ddir);
                }
            }
        }
        let slope = math::dot(&ws.g, &ws.delta);
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..dim {
                ws.xt[i] = x[i] + alpha * ws.delta[i];
            }
            let evt = prob.eval(anchor, &ws.xt, mu);
            if evt.feasible && evt.barrier <= ev.barrier + ARMIJO_C1 * alpha * slope {
                x.copy_from_slice(&ws.xt);
                x[dim - 1] = center_t(&evt.f, mu);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            log::warn!("line search stalled at barrier weight {mu:.3e}");
            return Ok(StageOutcome { steps, capped: true });
        }
        steps += 1;
        if steps >= MAX_STAGE_STEPS {
            log::warn!("barrier stage at weight {mu:.3e} hit its step cap");
            return Ok(StageOutcome { steps, capped: true });
        }
    }
}
