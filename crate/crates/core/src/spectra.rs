//! Frequency grid and the signal / front-end noise spectra evaluated on it.

use alloc::vec::Vec;

use crate::math;
use crate::scenario::NoiseModel;

/// One-sided frequency grid over a symmetric band of total width `bandwidth`.
///
/// Points sit at f_n = n * bandwidth / n_points for n = 1..=n_points/2, the
/// right-endpoint rule on (0, bandwidth/2]. Spectra here are even in f, so
/// sums weighted by `weight_integral` approximate two-sided band integrals
/// and sums weighted by `weight_normalized` approximate band averages.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub freqs: Vec<f64>,
    pub bandwidth: f64,
    /// 2 * bandwidth / n_points.
    pub weight_integral: f64,
    /// 2 / n_points.
    pub weight_normalized: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Builds the one-sided grid; `n_points` counts the full two-sided grid and
/// must be even and at least 4.
pub fn make_grid(bandwidth: f64, n_points: usize) -> Grid {
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    assert!(n_points >= 4 && n_points % 2 == 0, "grid size must be even and >= 4");
    let step = bandwidth / n_points as f64;
    let freqs = (1..=n_points / 2).map(|n| n as f64 * step).collect();
    Grid {
        freqs,
        bandwidth,
        weight_integral: 2.0 * step,
        weight_normalized: 2.0 / n_points as f64,
    }
}

/// Flat signal energy spectral density: the dBm/Hz level converted to linear
/// mW/Hz at every grid point.
pub fn flat_signal_esd(level_dbm_per_hz: f64, grid: &Grid) -> Vec<f64> {
    let level = math::powf(10.0, level_dbm_per_hz / 10.0);
    alloc::vec![level; grid.len()]
}

/// First-order autoregressive noise power spectral density on the grid:
/// N0 (1 - rho^2) / |1 - rho e^{-j 2 pi f / B}|^2, in linear mW/Hz.
///
/// At rho = 0 this is white at the floor level N0.
pub fn ar1_noise_psd(model: &NoiseModel, grid: &Grid) -> Vec<f64> {
    let n0 = math::powf(10.0, model.n0_dbm_per_hz / 10.0);
    let rho = model.ar_coeff;
    let scale = n0 * (1.0 - rho * rho);
    grid.freqs
        .iter()
        .map(|&f| {
            let theta = 2.0 * core::f64::consts::PI * f / grid.bandwidth;
            scale / (1.0 - 2.0 * rho * math::cos(theta) + rho * rho)
        })
        .collect()
}
