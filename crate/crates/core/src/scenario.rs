//! Deployment description and derived per-circle geometry.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

/// Circular region of prior position uncertainty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Colored-noise description for one radio unit front end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// One-sided noise floor level in dBm/Hz.
    pub n0_dbm_per_hz: f64,
    /// First-order autoregressive coefficient in [0, 1).
    pub ar_coeff: f64,
}

/// Full deployment: geometry, channel statistics, spectra, and link budgets.
///
/// All per-unit vectors have one entry per radio unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Side of the square deployment area, meters; centered at the origin.
    pub area_side: f64,
    /// Radio unit coordinates, meters.
    pub ru_positions: Vec<[f64; 2]>,
    /// Position-uncertainty circles the design must cover.
    pub circles: Vec<Circle>,
    /// Amplitude path-loss exponent mu in gain = |alpha| / d^mu.
    pub path_loss_exponent: f64,
    /// Fading power E|alpha|^2 per radio unit.
    pub fading_power: Vec<f64>,
    /// Two-sided signal bandwidth, Hz.
    pub bandwidth: f64,
    /// Flat signal energy spectral density level, dBm/Hz.
    pub signal_esd_dbm_per_hz: f64,
    /// Front-end noise description per radio unit.
    pub noise_model: Vec<NoiseModel>,
    /// Fronthaul capacity per radio unit, bits/s/Hz.
    pub fronthaul_capacity: Vec<f64>,
    /// Propagation speed, m/s.
    pub propagation_speed: f64,
    /// Number of frequency grid points (even, at least 4).
    pub grid_points: usize,
    /// Center of the square target-sampling region for evaluation.
    pub uncertainty_center: [f64; 2],
    /// Side of the square target-sampling region, meters.
    pub uncertainty_side: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioError {
    TooFewUnits(usize),
    LengthMismatch(&'static str, usize, usize),
    NonPositive(&'static str),
    ArCoeffOutOfRange(f64),
    GridPointsInvalid(usize),
    CircleOutsideArea(usize),
    UnitInsideCircle { unit: usize, circle: usize },
    RegionOutsideArea,
    BadValue(String),
}

impl core::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::TooFewUnits(n) => write!(f, "need at least 3 radio units, got {n}"),
            Self::LengthMismatch(field, got, want) => {
                write!(f, "{field} has {got} entries, expected {want} (one per radio unit)")
            }
            Self::NonPositive(field) => write!(f, "{field} must be positive"),
            Self::ArCoeffOutOfRange(r) => write!(f, "ar_coeff {r} outside [0, 1)"),
            Self::GridPointsInvalid(n) => write!(f, "grid_points {n} must be even and >= 4"),
            Self::CircleOutsideArea(l) => write!(f, "circle {l} extends outside the area"),
            Self::UnitInsideCircle { unit, circle } => {
                write!(f, "radio unit {unit} lies inside uncertainty circle {circle}")
            }
            Self::RegionOutsideArea => write!(f, "sampling region extends outside the area"),
            Self::BadValue(msg) => write!(f, "{msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ScenarioError {}

impl Scenario {
    /// Checks every structural invariant; all other operations assume them.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n_ru = self.ru_positions.len();
        if n_ru < 3 {
            return Err(ScenarioError::TooFewUnits(n_ru));
        }
        for (field, len) in [
            ("fading_power", self.fading_power.len()),
            ("noise_model", self.noise_model.len()),
            ("fronthaul_capacity", self.fronthaul_capacity.len()),
        ] {
            if len != n_ru {
                return Err(ScenarioError::LengthMismatch(field, len, n_ru));
            }
        }
        for (field, v) in [
            ("area_side", self.area_side),
            ("path_loss_exponent", self.path_loss_exponent),
            ("bandwidth", self.bandwidth),
            ("propagation_speed", self.propagation_speed),
            ("uncertainty_side", self.uncertainty_side),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ScenarioError::NonPositive(field));
            }
        }
        if !self.signal_esd_dbm_per_hz.is_finite() {
            return Err(ScenarioError::BadValue("signal_esd_dbm_per_hz must be finite".into()));
        }
        for &p in &self.fading_power {
            if !(p > 0.0) || !p.is_finite() {
                return Err(ScenarioError::NonPositive("fading_power"));
            }
        }
        for nm in &self.noise_model {
            if !nm.n0_dbm_per_hz.is_finite() {
                return Err(ScenarioError::BadValue("n0_dbm_per_hz must be finite".into()));
            }
            if !(0.0..1.0).contains(&nm.ar_coeff) {
                return Err(ScenarioError::ArCoeffOutOfRange(nm.ar_coeff));
            }
        }
        // Zero capacity describes a valid (if unusable) link; solvers report
        // it as their own error so callers can tell it apart from bad input.
        for &c in &self.fronthaul_capacity {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(ScenarioError::NonPositive("fronthaul_capacity"));
            }
        }
        if self.grid_points < 4 || self.grid_points % 2 != 0 {
            return Err(ScenarioError::GridPointsInvalid(self.grid_points));
        }
        let half = self.area_side / 2.0;
        for (l, c) in self.circles.iter().enumerate() {
            if !(c.radius > 0.0) || !c.radius.is_finite() {
                return Err(ScenarioError::NonPositive("circle radius"));
            }
            if math::abs(c.center[0]) + c.radius > half || math::abs(c.center[1]) + c.radius > half
            {
                return Err(ScenarioError::CircleOutsideArea(l));
            }
            for (j, ru) in self.ru_positions.iter().enumerate() {
                let d = math::hypot(ru[0] - c.center[0], ru[1] - c.center[1]);
                if d <= c.radius {
                    return Err(ScenarioError::UnitInsideCircle { unit: j, circle: l });
                }
            }
        }
        let hs = self.uncertainty_side / 2.0;
        if math::abs(self.uncertainty_center[0]) + hs > half
            || math::abs(self.uncertainty_center[1]) + hs > half
        {
            return Err(ScenarioError::RegionOutsideArea);
        }
        Ok(())
    }

    pub fn n_ru(&self) -> usize {
        self.ru_positions.len()
    }

    pub fn n_circles(&self) -> usize {
        self.circles.len()
    }

    /// Signal energy spectral density in linear mW/Hz.
    pub fn signal_esd(&self) -> f64 {
        math::powf(10.0, self.signal_esd_dbm_per_hz / 10.0)
    }

    /// FNV-1a hash over a canonical field serialization; identifies which
    /// deployment produced a result artifact. Stable across runs and
    /// platforms, independent of any source file formatting.
    pub fn content_hash(&self) -> u64 {
        let mut h = Fnv::new();
        h.f64(self.area_side);
        h.usize(self.ru_positions.len());
        for p in &self.ru_positions {
            h.f64(p[0]);
            h.f64(p[1]);
        }
        h.usize(self.circles.len());
        for c in &self.circles {
            h.f64(c.center[0]);
            h.f64(c.center[1]);
            h.f64(c.radius);
        }
        h.f64(self.path_loss_exponent);
        for &v in &self.fading_power {
            h.f64(v);
        }
        h.f64(self.bandwidth);
        h.f64(self.signal_esd_dbm_per_hz);
        for nm in &self.noise_model {
            h.f64(nm.n0_dbm_per_hz);
            h.f64(nm.ar_coeff);
        }
        for &v in &self.fronthaul_capacity {
            h.f64(v);
        }
        h.f64(self.propagation_speed);
        h.usize(self.grid_points);
        h.f64(self.uncertainty_center[0]);
        h.f64(self.uncertainty_center[1]);
        h.f64(self.uncertainty_side);
        h.0
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }

    fn byte(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x100000001b3);
    }

    fn f64(&mut self, v: f64) {
        for b in v.to_bits().to_le_bytes() {
            self.byte(b);
        }
    }

    fn usize(&mut self, v: usize) {
        for b in (v as u64).to_le_bytes() {
            self.byte(b);
        }
    }
}

/// Geometry of one uncertainty circle as seen from every radio unit.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleGeometry {
    pub circle_index: usize,
    /// Distance from each unit to the circle center, meters.
    pub nominal_distance: Vec<f64>,
    /// Bearing of each unit from the circle center, radians.
    pub nominal_angle: Vec<f64>,
    /// Half-angle subtended by the circle at each unit, radians.
    pub angular_uncertainty: Vec<f64>,
    /// Amplitude gain standard deviation at the far edge of the circle.
    pub gain_std_lower: Vec<f64>,
    /// Amplitude gain standard deviation at the near edge of the circle.
    pub gain_std_upper: Vec<f64>,
}

/// Computes nominal bearings, angular spreads, and edge-of-circle gain
/// bounds for every (circle, unit) pair.
///
/// Assumes the scenario is valid; in particular every unit lies strictly
/// outside every circle, so the subtended half-angle and the near-edge
/// distance are well defined.
pub fn derive_circle_geometry(scenario: &Scenario) -> Vec<CircleGeometry> {
    let mu = scenario.path_loss_exponent;
    scenario
        .circles
        .iter()
        .enumerate()
        .map(|(l, c)| {
            let mut dist = Vec::with_capacity(scenario.n_ru());
            let mut ang = Vec::with_capacity(scenario.n_ru());
            let mut eps = Vec::with_capacity(scenario.n_ru());
            let mut lo = Vec::with_capacity(scenario.n_ru());
            let mut hi = Vec::with_capacity(scenario.n_ru());
            for (ru, &sa2) in scenario.ru_positions.iter().zip(&scenario.fading_power) {
                let dx = ru[0] - c.center[0];
                let dy = ru[1] - c.center[1];
                let d = math::hypot(dx, dy);
                let sa = math::sqrt(sa2);
                dist.push(d);
                ang.push(math::atan2(dy, dx));
                eps.push(math::asin(c.radius / d));
                lo.push(sa / math::powf(d + c.radius, mu));
                hi.push(sa / math::powf(d - c.radius, mu));
            }
            CircleGeometry {
                circle_index: l,
                nominal_distance: dist,
                nominal_angle: ang,
                angular_uncertainty: eps,
                gain_std_lower: lo,
                gain_std_upper: hi,
            }
        })
        .collect()
}

/// Places `n_ru` units evenly on the perimeter of the deployment square,
/// corners included. `n_ru` must be divisible by 4.
pub fn default_ru_layout(n_ru: usize, area_side: f64) -> Vec<[f64; 2]> {
    assert!(n_ru >= 4 && n_ru % 4 == 0, "unit count must be a positive multiple of 4");
    let per = n_ru / 4;
    let h = area_side / 2.0;
    let step = area_side / per as f64;
    let mut pts = Vec::with_capacity(n_ru);
    for i in 0..per {
        pts.push([-h + i as f64 * step, -h]);
    }
    for i in 0..per {
        pts.push([h, -h + i as f64 * step]);
    }
    for i in 0..per {
        pts.push([h - i as f64 * step, h]);
    }
    for i in 0..per {
        pts.push([-h, h - i as f64 * step]);
    }
    pts
}

/// Sixteen perimeter units around four circles in the middle of a 500 m
/// square, used by tests across the crate.
#[cfg(test)]
pub(crate) fn square_scenario() -> Scenario {
    use alloc::vec;
    let side = 500.0;
    Scenario {
        area_side: side,
        ru_positions: default_ru_layout(16, side),
        circles: vec![
            Circle { center: [50.0, 50.0], radius: 70.71067811865476 },
            Circle { center: [-50.0, 50.0], radius: 70.71067811865476 },
            Circle { center: [-50.0, -50.0], radius: 70.71067811865476 },
            Circle { center: [50.0, -50.0], radius: 70.71067811865476 },
        ],
        path_loss_exponent: 3.0,
        fading_power: vec![1.0; 16],
        bandwidth: 1.0e6,
        signal_esd_dbm_per_hz: -60.0,
        noise_model: vec![NoiseModel { n0_dbm_per_hz: -174.0, ar_coeff: 0.9 }; 16],
        fronthaul_capacity: vec![5.0; 16],
        propagation_speed: 299_792_458.0,
        grid_points: 100,
        uncertainty_center: [0.0, 0.0],
        uncertainty_side: 200.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_covers_corners_without_duplicates() {
        let pts = default_ru_layout(16, 500.0);
        assert_eq!(pts.len(), 16);
        for corner in [[-250.0, -250.0], [250.0, -250.0], [250.0, 250.0], [-250.0, 250.0]] {
            assert!(pts.contains(&corner), "missing corner {corner:?}");
        }
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                assert!(a != b, "duplicate point {a:?}");
            }
        }
        for p in &pts {
            assert!(p[0].abs() == 250.0 || p[1].abs() == 250.0, "{p:?} not on perimeter");
        }
    }

    #[test]
    fn square_scenario_is_valid() {
        square_scenario().validate().unwrap();
    }

    #[test]
    fn validation_rejects_overlapping_unit() {
        let mut s = square_scenario();
        s.ru_positions[0] = [50.0, 50.0];
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::UnitInsideCircle { unit: 0, circle: 0 })
        ));
    }

    #[test]
    fn validation_rejects_escaping_circle() {
        let mut s = square_scenario();
        s.circles[1].center = [-200.0, 50.0];
        assert!(matches!(s.validate(), Err(ScenarioError::CircleOutsideArea(1))));
    }

    #[test]
    fn validation_rejects_bad_ar_coeff() {
        let mut s = square_scenario();
        s.noise_model[3].ar_coeff = 1.0;
        assert!(matches!(s.validate(), Err(ScenarioError::ArCoeffOutOfRange(_))));
        s.noise_model[3].ar_coeff = -0.1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn geometry_gain_bounds_bracket_center_gain() {
        // Unit at distance 300 from a circle of radius 50*sqrt(2): the far-edge
        // gain std is (300 + 50*sqrt(2))^-3 for unit fading power and mu = 3.
        let mut s = square_scenario();
        s.ru_positions[0] = [-250.0, 50.0];
        s.circles[0] = Circle { center: [50.0, 50.0], radius: 70.71067811865476 };
        s.validate().unwrap();
        let geo = derive_circle_geometry(&s);
        let g = &geo[0];
        assert_eq!(g.circle_index, 0);
        assert!((g.nominal_distance[0] - 300.0).abs() < 1e-12);
        assert!((g.gain_std_lower[0] - 1.9628843504774994e-8).abs() < 1e-22);
        assert!(g.gain_std_upper[0] > g.gain_std_lower[0]);
        let center_gain = 1.0 / 300.0f64.powi(3);
        assert!(g.gain_std_lower[0] < center_gain && center_gain < g.gain_std_upper[0]);
        // Bearing of that unit from the circle center points along -x.
        assert!((g.nominal_angle[0] - core::f64::consts::PI).abs() < 1e-12);
        let eps = g.angular_uncertainty[0];
        assert!((eps - (70.71067811865476f64 / 300.0).asin()).abs() < 1e-15);
    }
}
