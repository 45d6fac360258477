//! Convexified design problem in fractional-transform coordinates.
//!
//! Decision variables are u[j][n] = S_z m in (0, 1) per unit j and grid node
//! n, plus the epigraph level t, flattened as x = [u(0,0..N), u(1,0..N), ...,
//! t]. In these coordinates the worst-case information matrices are linear
//! in u and the rate constraints split into a concave part (linearized at
//! the outer anchor) plus a convex log term, so each inner problem is convex.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::scenario::{derive_circle_geometry, Scenario};
use crate::spectra::{ar1_noise_psd, flat_signal_esd, make_grid};

use super::SolverError;

const LN2: f64 = core::f64::consts::LN_2;

/// Symmetric 2x2 matrix stored as (m00, m01, m11).
pub(crate) type Sym2 = [f64; 3];

#[inline]
fn tr_symsym(a: &Sym2, b: &Sym2) -> f64 {
    a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2]
}

pub(crate) struct Problem {
    pub n_ru: usize,
    pub n_nodes: usize,
    pub n_circles: usize,
    /// n_ru * n_nodes + 1; index dim - 1 is the epigraph level.
    pub dim: usize,
    pub w_norm: f64,
    pub capacity: Vec<f64>,
    /// Front-end noise PSD per (unit, node).
    pub sz: Vec<Vec<f64>>,
    /// Information coefficients: zeta[l][j] = dot(a[l][j], u[j]).
    pub a: Vec<Vec<Vec<f64>>>,
    /// Modeled SNR slope sigma_U^2 S_x / S_z per (circle, unit, node).
    pub s: Vec<Vec<Vec<f64>>>,
    /// Spread-relaxed bearing matrices per (circle, unit).
    pub qphi: Vec<Vec<Sym2>>,
}

/// Data tied to one outer linearization anchor.
pub(crate) struct AnchorData {
    /// Slope of the linearized concave rate part, w_norm included.
    pub kappa: Vec<Vec<Vec<f64>>>,
    /// Constant part of the modeled rate per (circle, unit); nonnegative
    /// because the tangent at the anchor sits above the chord through zero.
    pub intercept: Vec<Vec<f64>>,
}

/// Constraint values at one point; only valid when `feasible` is set.
pub(crate) struct Eval {
    pub feasible: bool,
    /// Inverse worst-case matrices per circle.
    pub p: Vec<Sym2>,
    pub det: Vec<f64>,
    /// Worst-case traces tr(Q^-1) per circle.
    pub f: Vec<f64>,
    /// Epigraph slacks t - f per circle.
    pub sigma: Vec<f64>,
    /// Rate slacks C_j - G per (circle * n_ru + unit).
    pub rslack: Vec<f64>,
    pub barrier: f64,
}

/// Reusable buffers for the Newton iteration; sized once per problem.
pub(crate) struct Workspace {
    /// Hessian, row-major; only the lower triangle is meaningful.
    pub h: Vec<f64>,
    /// Factor / regularization scratch copy of `h`.
    pub hf: Vec<f64>,
    pub g: Vec<f64>,
    pub delta: Vec<f64>,
    pub xt: Vec<f64>,
    /// Per-circle gradient of f - t, used for step length capping.
    pub v: Vec<Vec<f64>>,
    /// Per-(circle, unit) rate gradients over that unit's block.
    pub gg: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn new(p: &Problem) -> Self {
        Workspace {
            h: vec![0.0; p.dim * p.dim],
            hf: vec![0.0; p.dim * p.dim],
            g: vec![0.0; p.dim],
            delta: vec![0.0; p.dim],
            xt: vec![0.0; p.dim],
            v: vec![vec![0.0; p.dim]; p.n_circles],
            gg: vec![vec![0.0; p.n_nodes]; p.n_circles * p.n_ru],
        }
    }
}

impl Problem {
    pub fn new(scenario: &Scenario) -> Result<Self, SolverError> {
        scenario.validate().map_err(SolverError::InvalidScenario)?;
        if let Some(j) = scenario.fronthaul_capacity.iter().position(|&c| !(c > 0.0)) {
            return Err(SolverError::ZeroCapacity(j));
        }
        let grid = make_grid(scenario.bandwidth, scenario.grid_points);
        let signal_esd = flat_signal_esd(scenario.signal_esd_dbm_per_hz, &grid);
        let sz: Vec<Vec<f64>> =
            scenario.noise_model.iter().map(|nm| ar1_noise_psd(nm, &grid)).collect();
        let geometry = derive_circle_geometry(scenario);
        let n_ru = scenario.n_ru();
        let n_nodes = grid.len();
        let n_circles = scenario.n_circles();
        let c2 = scenario.propagation_speed * scenario.propagation_speed;
        let base = 8.0 * core::f64::consts::PI * core::f64::consts::PI / c2 * grid.weight_integral;
        let mut a = Vec::with_capacity(n_circles);
        let mut s = Vec::with_capacity(n_circles);
        let mut qphi = Vec::with_capacity(n_circles);
        for geo in &geometry {
            let mut al = Vec::with_capacity(n_ru);
            let mut sl = Vec::with_capacity(n_ru);
            let mut ql = Vec::with_capacity(n_ru);
            for j in 0..n_ru {
                let gl = geo.gain_std_lower[j];
                let gu = geo.gain_std_upper[j];
                let mut aj = Vec::with_capacity(n_nodes);
                let mut sj = Vec::with_capacity(n_nodes);
                for n in 0..n_nodes {
                    let f = grid.freqs[n];
                    aj.push(base * gl * gl * f * f * signal_esd[n] / sz[j][n]);
                    sj.push(gu * gu * signal_esd[n] / sz[j][n]);
                }
                al.push(aj);
                sl.push(sj);
                let (c, si) =
                    (math::cos(geo.nominal_angle[j]), math::sin(geo.nominal_angle[j]));
                let se = math::sin(geo.angular_uncertainty[j]);
                ql.push([c * c - se, c * si, si * si - se]);
            }
            a.push(al);
            s.push(sl);
            qphi.push(ql);
        }
        Ok(Problem {
            n_ru,
            n_nodes,
            n_circles,
            dim: n_ru * n_nodes + 1,
            w_norm: grid.weight_normalized,
            capacity: scenario.fronthaul_capacity.clone(),
            sz,
            a,
            s,
            qphi,
        })
    }

    /// Linearizes the concave rate parts at `u_anchor`.
    pub fn anchor_data(&self, u_anchor: &[f64]) -> AnchorData {
        let (nl, nj, nn) = (self.n_circles, self.n_ru, self.n_nodes);
        let mut kappa = Vec::with_capacity(nl);
        let mut intercept = Vec::with_capacity(nl);
        for l in 0..nl {
            let mut kl = Vec::with_capacity(nj);
            let mut il = Vec::with_capacity(nj);
            for j in 0..nj {
                let mut kj = Vec::with_capacity(nn);
                let mut c0 = 0.0;
                for n in 0..nn {
                    let sv = self.s[l][j][n];
                    let ua = u_anchor[j * nn + n];
                    let k = self.w_norm * sv / (LN2 * (1.0 + sv * ua));
                    kj.push(k);
                    c0 += self.w_norm * math::log2_1p(sv * ua) - k * ua;
                }
                kl.push(kj);
                il.push(c0);
            }
            kappa.push(kl);
            intercept.push(il);
        }
        AnchorData { kappa, intercept }
    }

    /// Modeled rate of unit `j` under circle `l`'s gain bound at point u,
    /// given the shared sum of -log2(1 - u) over the unit's block.
    #[inline]
    fn modeled_rate(&self, anchor: &AnchorData, l: usize, j: usize, u: &[f64], neglog_j: f64) -> f64 {
        let nn = self.n_nodes;
        anchor.intercept[l][j]
            + math::dot(&anchor.kappa[l][j], &u[j * nn..(j + 1) * nn])
            + self.w_norm * neglog_j
    }

    /// Worst-case matrix of circle `l` at u, as (m00, m01, m11).
    pub fn q_matrix(&self, l: usize, u: &[f64]) -> Sym2 {
        let nn = self.n_nodes;
        let mut q = [0.0; 3];
        for j in 0..self.n_ru {
            let zeta = math::dot(&self.a[l][j], &u[j * nn..(j + 1) * nn]);
            let qp = &self.qphi[l][j];
            q[0] += zeta * qp[0];
            q[1] += zeta * qp[1];
            q[2] += zeta * qp[2];
        }
        q
    }

    /// max over circles of tr(Q^-1), or +inf when any matrix fails to be
    /// positive definite. This is the exact design objective; the outer loop
    /// uses it to accept or reject inner iterates.
    pub fn true_objective(&self, u: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for l in 0..self.n_circles {
            let q = self.q_matrix(l, u);
            let det = q[0] * q[2] - q[1] * q[1];
            if !(det > 0.0) || !(q[0] > 0.0) {
                return f64::INFINITY;
            }
            worst = f64::max(worst, (q[0] + q[2]) / det);
        }
        worst
    }

    /// Evaluates all constraints and the barrier objective at x.
    pub fn eval(&self, anchor: &AnchorData, x: &[f64], mu: f64) -> Eval {
        let (nl, nj, nn) = (self.n_circles, self.n_ru, self.n_nodes);
        let u = &x[..self.dim - 1];
        let t = x[self.dim - 1];
        let mut out = Eval {
            feasible: false,
            p: vec![[0.0; 3]; nl],
            det: vec![0.0; nl],
            f: vec![0.0; nl],
            sigma: vec![0.0; nl],
            rslack: vec![0.0; nl * nj],
            barrier: f64::INFINITY,
        };
        let mut box_sum = 0.0;
        for &ui in u {
            if !(ui > 0.0 && ui < 1.0) {
                return out;
            }
            box_sum -= math::ln(ui);
        }
        // Shared log sums: the -log2(1-u) rate term and the upper box barrier
        // both come from ln(1-u).
        let mut neglog = vec![0.0; nj];
        for j in 0..nj {
            let mut acc = 0.0;
            for n in 0..nn {
                acc -= math::ln_1p(-u[j * nn + n]);
            }
            box_sum += acc;
            neglog[j] = acc / LN2;
        }
        let mut logdet_sum = 0.0;
        let mut sig_sum = 0.0;
        for l in 0..nl {
            let q = self.q_matrix(l, u);
            let det = q[0] * q[2] - q[1] * q[1];
            if !(det > 0.0) || !(q[0] > 0.0) {
                return out;
            }
            out.p[l] = [q[2] / det, -q[1] / det, q[0] / det];
            out.det[l] = det;
            out.f[l] = (q[0] + q[2]) / det;
            let sig = t - out.f[l];
            if !(sig > 0.0) {
                return out;
            }
            out.sigma[l] = sig;
            logdet_sum -= math::ln(det);
            sig_sum -= math::ln(sig);
        }
        let mut rate_sum = 0.0;
        for l in 0..nl {
            for j in 0..nj {
                let r = self.capacity[j] - self.modeled_rate(anchor, l, j, u, neglog[j]);
                if !(r > 0.0) {
                    return out;
                }
                out.rslack[l * nj + j] = r;
                rate_sum -= math::ln(r);
            }
        }
        out.feasible = true;
        out.barrier = t + mu * (sig_sum + logdet_sum + rate_sum + box_sum);
        out
    }

    /// Fills ws.g and the lower triangle of ws.h with the barrier gradient
    /// and Hessian at x, and stores the per-constraint gradient vectors used
    /// for step-length capping. `ev` must be a feasible evaluation of x.
    pub fn assemble(&self, anchor: &AnchorData, x: &[f64], ev: &Eval, mu: f64, ws: &mut Workspace) {
        let (nl, nj, nn) = (self.n_circles, self.n_ru, self.n_nodes);
        let dim = self.dim;
        let u = &x[..dim - 1];
        ws.h.fill(0.0);
        ws.g.fill(0.0);
        ws.g[dim - 1] = 1.0;

        for i in 0..dim - 1 {
            let ui = u[i];
            let d = 1.0 - ui;
            ws.g[i] += mu * (1.0 / d - 1.0 / ui);
            ws.h[i * dim + i] += mu * (1.0 / (ui * ui) + 1.0 / (d * d));
        }

        let mut dfdz = vec![0.0; nj];
        let mut dld = vec![0.0; nj];
        let mut tmat = vec![[0.0; 3]; nj];
        let mut ymat = vec![[0.0; 4]; nj];
        let mut mcoef = vec![0.0; nj * nj];
        for l in 0..nl {
            let p = &ev.p[l];
            let p2: Sym2 = [
                p[0] * p[0] + p[1] * p[1],
                p[1] * (p[0] + p[2]),
                p[1] * p[1] + p[2] * p[2],
            ];
            for j in 0..nj {
                let q = &self.qphi[l][j];
                dfdz[j] = -tr_symsym(q, &p2);
                dld[j] = -tr_symsym(p, q);
                // X = P q, T = X P (symmetric), Y = q P.
                let x00 = p[0] * q[0] + p[1] * q[1];
                let x01 = p[0] * q[1] + p[1] * q[2];
                let x10 = p[1] * q[0] + p[2] * q[1];
                let x11 = p[1] * q[1] + p[2] * q[2];
                tmat[j] = [
                    x00 * p[0] + x01 * p[1],
                    x00 * p[1] + x01 * p[2],
                    x10 * p[1] + x11 * p[2],
                ];
                ymat[j] = [
                    q[0] * p[0] + q[1] * p[1],
                    q[0] * p[1] + q[1] * p[2],
                    q[1] * p[0] + q[2] * p[1],
                    q[1] * p[1] + q[2] * p[2],
                ];
            }
            let inv_sig = 1.0 / ev.sigma[l];
            // Gradient of f_l - t, kept for fraction-to-boundary capping.
            let vl = &mut ws.v[l];
            vl[dim - 1] = -1.0;
            for j in 0..nj {
                let cf = dfdz[j];
                let cg = mu * (inv_sig * cf + dld[j]);
                let aj = &self.a[l][j];
                for n in 0..nn {
                    vl[j * nn + n] = cf * aj[n];
                }
                math::axpy_add(&mut ws.g[j * nn..(j + 1) * nn], cg, aj);
            }
            ws.g[dim - 1] -= mu * inv_sig;
            // Fused curvature in zeta: epigraph slack pulls in the second
            // derivative of the trace, the log-det barrier its own.
            for j in 0..nj {
                let tj = &tmat[j];
                for k in 0..=j {
                    let yk = &ymat[k];
                    let d2f =
                        2.0 * (tj[0] * yk[0] + tj[1] * (yk[1] + yk[2]) + tj[2] * yk[3]);
                    let d2ld = tr_symsym(tj, &self.qphi[l][k]);
                    mcoef[j * nj + k] = mu * (inv_sig * d2f + d2ld);
                }
            }
            for j in 0..nj {
                let aj = &self.a[l][j];
                for k in 0..=j {
                    let mjk = mcoef[j * nj + k];
                    let ak = &self.a[l][k];
                    for r in 0..nn {
                        let row = (j * nn + r) * dim + k * nn;
                        math::axpy_add(&mut ws.h[row..row + nn], mjk * aj[r], ak);
                    }
                }
            }
            // Rank-one epigraph slack curvature over the full vector.
            let c = mu * inv_sig * inv_sig;
            for i in 0..dim {
                let vi = vl[i];
                if vi != 0.0 {
                    let row = i * dim;
                    math::axpy_add(&mut ws.h[row..row + i + 1], c * vi, &vl[..i + 1]);
                }
            }
        }

        for l in 0..nl {
            for j in 0..nj {
                let idx = l * nj + j;
                let r = ev.rslack[idx];
                let inv_r = mu / r;
                let base = j * nn;
                let ggv = &mut ws.gg[idx];
                for n in 0..nn {
                    let d = 1.0 - u[base + n];
                    ggv[n] = anchor.kappa[l][j][n] + self.w_norm / (LN2 * d);
                    ws.h[(base + n) * dim + base + n] +=
                        inv_r * self.w_norm / (LN2 * d * d);
                }
                math::axpy_add(&mut ws.g[base..base + nn], inv_r, ggv);
                let c = mu / (r * r);
                for rr in 0..nn {
                    let row = (base + rr) * dim + base;
                    math::axpy_add(&mut ws.h[row..row + rr + 1], c * ggv[rr], &ggv[..rr + 1]);
                }
            }
        }
    }
}

/// Epigraph level that exactly centers the slack barrier at fixed traces:
/// the unique t with sum_l mu / (t - f_l) = 1, found by bisection on
/// [max f + mu, max f + L mu].
pub(crate) fn center_t(f: &[f64], mu: f64) -> f64 {
    let l = f.len();
    let fmax = f.iter().fold(f64::NEG_INFINITY, |a, &b| f64::max(a, b));
    if l == 1 {
        return fmax + mu;
    }
    let mut lo = fmax + mu;
    let mut hi = fmax + l as f64 * mu;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = f.iter().map(|&fi| mu / (mid - fi)).sum();
        if s >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
