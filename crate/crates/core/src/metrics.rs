//! Fisher-information and fronthaul-rate figures of merit.
//!
//! Positions live in the plane, so every information matrix here is
//! symmetric 2x2, stored row-major as `[[f64; 2]; 2]`.

use crate::math;
use crate::scenario::CircleGeometry;
use crate::spectra::Grid;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricsError {
    /// Fisher information is singular or indefinite: the geometry and spectra
    /// do not pin down a position.
    Unlocalizable,
    /// A quantization noise PSD node is zero or negative.
    NonPositiveQuantPsd,
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Unlocalizable => write!(f, "unlocalizable configuration"),
            Self::NonPositiveQuantPsd => {
                write!(f, "quantization noise psd must be positive at every grid point")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

/// Rank-one bearing matrix u(phi) u(phi)^T with u = (cos phi, sin phi).
pub fn direction_matrix(phi: f64) -> Mat2 {
    let (c, s) = (math::cos(phi), math::sin(phi));
    [[c * c, c * s], [c * s, s * s]]
}

/// Bearing matrix shrunk for an angular spread of `eps`:
/// direction_matrix(phi) - sin(eps) I. Holds below the bearing matrix of any
/// angle within eps of phi, which is what makes the worst-case bound valid.
pub fn relaxed_direction_matrix(phi: f64, eps: f64) -> Mat2 {
    let mut m = direction_matrix(phi);
    let se = math::sin(eps);
    m[0][0] -= se;
    m[1][1] -= se;
    m
}

/// Delay-information integral for one unit: (8 pi^2 / c^2) times the band
/// integral of f^2 S_x(f) / (S_z(f) + S_q(f)). Multiplying by the squared
/// amplitude gain gives that unit's ranging information.
pub fn information_integral(
    grid: &Grid,
    signal_esd: &[f64],
    noise_psd: &[f64],
    quant_psd: &[f64],
    propagation_speed: f64,
) -> f64 {
    debug_assert_eq!(grid.len(), signal_esd.len());
    debug_assert_eq!(grid.len(), noise_psd.len());
    debug_assert_eq!(grid.len(), quant_psd.len());
    let mut acc = 0.0;
    for n in 0..grid.len() {
        let f = grid.freqs[n];
        acc += f * f * signal_esd[n] / (noise_psd[n] + quant_psd[n]);
    }
    let c = propagation_speed;
    8.0 * core::f64::consts::PI * core::f64::consts::PI / (c * c) * grid.weight_integral * acc
}

/// Equivalent Fisher information matrix of the position estimate:
/// sum over units of gain^2 * information_integral * direction_matrix(phi).
pub fn efim(angles: &[f64], gains: &[f64], integrals: &[f64]) -> Mat2 {
    debug_assert_eq!(angles.len(), gains.len());
    debug_assert_eq!(angles.len(), integrals.len());
    let mut m = [[0.0; 2]; 2];
    for ((&phi, &g), &k) in angles.iter().zip(gains).zip(integrals) {
        let w = g * g * k;
        let (c, s) = (math::cos(phi), math::sin(phi));
        m[0][0] += w * c * c;
        m[0][1] += w * c * s;
        m[1][1] += w * s * s;
    }
    m[1][0] = m[0][1];
    m
}

/// Worst-case information matrix for one uncertainty circle: like [`efim`]
/// with far-edge gain bounds and spread-relaxed bearing matrices. Positive
/// semidefiniteness is not guaranteed; callers must check before trusting
/// its inverse as a bound.
pub fn worst_case_q_matrix(geometry: &CircleGeometry, integrals: &[f64]) -> Mat2 {
    debug_assert_eq!(geometry.nominal_angle.len(), integrals.len());
    let mut m = [[0.0; 2]; 2];
    for j in 0..integrals.len() {
        let sl = geometry.gain_std_lower[j];
        let w = sl * sl * integrals[j];
        let q =
            relaxed_direction_matrix(geometry.nominal_angle[j], geometry.angular_uncertainty[j]);
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += w * q[r][c];
            }
        }
    }
    m
}

/// Smallest eigenvalue of a symmetric 2x2 matrix.
pub(crate) fn min_eig_sym(m: &Mat2) -> f64 {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let r = math::hypot(0.5 * (m[0][0] - m[1][1]), m[0][1]);
    mean - r
}

/// Trace of the inverse of a symmetric positive-definite 2x2 information
/// matrix: the position error bound. Fails with
/// [`MetricsError::Unlocalizable`] when the matrix is singular or indefinite
/// beyond a relative tolerance of 1e-9 on the trace.
pub fn crb_trace(m: &Mat2) -> Result<f64, MetricsError> {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 0.0) || !(tr > 0.0) || min_eig_sym(m) < -1.0e-9 * tr {
        return Err(MetricsError::Unlocalizable);
    }
    Ok(tr / det)
}

fn rate_with_gain_power(
    grid: &Grid,
    signal_esd: &[f64],
    noise_psd: &[f64],
    quant_psd: &[f64],
    gain_power: f64,
) -> Result<f64, MetricsError> {
    debug_assert_eq!(grid.len(), signal_esd.len());
    debug_assert_eq!(grid.len(), noise_psd.len());
    debug_assert_eq!(grid.len(), quant_psd.len());
    let mut acc = 0.0;
    for n in 0..grid.len() {
        let sq = quant_psd[n];
        if !(sq > 0.0) {
            return Err(MetricsError::NonPositiveQuantPsd);
        }
        acc += math::log2_1p((gain_power * signal_esd[n] + noise_psd[n]) / sq);
    }
    Ok(grid.weight_normalized * acc)
}

/// Fronthaul rate in bits/s/Hz needed to forward one unit's band at the
/// given quantization noise PSD, averaged over fading (gain power equals
/// the squared gain standard deviation). Fails if any `quant_psd` node is
/// not positive.
pub fn rate(
    grid: &Grid,
    signal_esd: &[f64],
    noise_psd: &[f64],
    quant_psd: &[f64],
    gain_std: f64,
) -> Result<f64, MetricsError> {
    rate_with_gain_power(grid, signal_esd, noise_psd, quant_psd, gain_std * gain_std)
}

/// Fronthaul rate for one fading realization with amplitude gain `gain`.
/// Concavity of the log makes the fading-averaged value of this never exceed
/// [`rate`] evaluated at the matching gain standard deviation.
pub fn per_realization_rate(
    grid: &Grid,
    signal_esd: &[f64],
    noise_psd: &[f64],
    quant_psd: &[f64],
    gain: f64,
) -> Result<f64, MetricsError> {
    rate_with_gain_power(grid, signal_esd, noise_psd, quant_psd, gain * gain)
}
