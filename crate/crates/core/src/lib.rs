//! Quantization-noise shaping for cloud radio positioning.
//!
//! A set of radio units forwards band samples of a ranging waveform to a
//! central unit over capacity-limited fronthaul links; compression adds
//! quantization noise whose per-unit power spectral density is a design
//! choice. This crate models the localization accuracy of that system
//! through its Fisher information, bounds the worst case over circular
//! position-uncertainty regions, and shapes the per-unit noise spectra to
//! minimize that bound subject to the link rates. A Monte Carlo evaluator
//! measures the resulting accuracy against a rate-matched white-noise
//! baseline.
//!
//! The crate is `no_std` (with `alloc`) unless the default `std` feature is
//! enabled; disable default features and enable `libm` for embedded use.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod evaluation;
pub mod math;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod solver;
pub mod spectra;

pub use evaluation::{
    avg_crb_at, psd_shape_diagnostic, sample_positions, sweep_capacity, AvgCrb, EvalConfig,
    EvalError, EvalReport, PointResult, SweepPoint,
};
pub use metrics::{
    crb_trace, direction_matrix, efim, information_integral, per_realization_rate, rate,
    relaxed_direction_matrix, worst_case_q_matrix, Mat2, MetricsError,
};
pub use scenario::{
    default_ru_layout, derive_circle_geometry, Circle, CircleGeometry, NoiseModel, Scenario,
    ScenarioError,
};
pub use solver::{
    baseline_white_design, charnes_cooper_forward, convex_rate_term, convex_rate_term_gradient,
    initialize_m, linearized_rate_slope, linearized_rate_term, recover_sq, solve_inner,
    solve_robust, worst_case_trace_gradient, DcState, InnerSolution, SolverError, SolverOptions,
};
pub use spectra::{ar1_noise_psd, flat_signal_esd, make_grid, Grid};
