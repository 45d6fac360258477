//! Scenario file loading: TOML keyed exactly like the scenario struct, with
//! per-unit fields accepting either one value for all units or a full list.

use anyhow::{Context, Result};
use cranloc_core::{Circle, NoiseModel, Scenario};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::path::Path;

/// A per-unit field: a single value broadcast to every unit, or one entry
/// per unit. Length checks happen in scenario validation.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PerRu<T> {
    One(T),
    Each(Vec<T>),
}

impl<T: Clone> PerRu<T> {
    fn expand(&self, n_ru: usize) -> Vec<T> {
        match self {
            PerRu::One(v) => vec![v.clone(); n_ru],
            PerRu::Each(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleFile {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModelFile {
    pub n0_dbm_per_hz: f64,
    pub ar_coeff: f64,
}

/// On-disk scenario schema. Lengths in meters, bandwidth in Hz, spectral
/// levels in dBm/Hz, capacities in bits/s/Hz.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub area_side: f64,
    pub ru_positions: Vec<[f64; 2]>,
    pub circles: Vec<CircleFile>,
    pub path_loss_exponent: f64,
    pub fading_power: PerRu<f64>,
    pub bandwidth: f64,
    pub signal_esd_dbm_per_hz: f64,
    pub noise_model: PerRu<NoiseModelFile>,
    pub fronthaul_capacity: PerRu<f64>,
    pub propagation_speed: f64,
    pub grid_points: usize,
    pub uncertainty_center: [f64; 2],
    pub uncertainty_side: f64,
}

impl ScenarioFile {
    /// Expands broadcast fields; does not validate.
    pub fn into_scenario(self) -> Scenario {
        let n_ru = self.ru_positions.len();
        Scenario {
            area_side: self.area_side,
            ru_positions: self.ru_positions,
            circles: self
                .circles
                .into_iter()
                .map(|c| Circle { center: c.center, radius: c.radius })
                .collect(),
            path_loss_exponent: self.path_loss_exponent,
            fading_power: self.fading_power.expand(n_ru),
            bandwidth: self.bandwidth,
            signal_esd_dbm_per_hz: self.signal_esd_dbm_per_hz,
            noise_model: self
                .noise_model
                .expand(n_ru)
                .into_iter()
                .map(|nm| NoiseModel { n0_dbm_per_hz: nm.n0_dbm_per_hz, ar_coeff: nm.ar_coeff })
                .collect(),
            fronthaul_capacity: self.fronthaul_capacity.expand(n_ru),
            propagation_speed: self.propagation_speed,
            grid_points: self.grid_points,
            uncertainty_center: self.uncertainty_center,
            uncertainty_side: self.uncertainty_side,
        }
    }
}

/// A scenario together with the hash of the exact bytes it was read from.
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub sha256_hex: String,
}

/// Reads the raw bytes of a scenario file; the error names the path.
pub fn read_scenario_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading scenario file {}", path.display()))
}

/// Parses and broadcast-expands a scenario document without validating it.
pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario> {
    let text = std::str::from_utf8(bytes).context("scenario file is not UTF-8")?;
    let file: ScenarioFile = toml::from_str(text).context("parsing scenario file")?;
    Ok(file.into_scenario())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Reads, parses, and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let bytes = read_scenario_bytes(path)?;
    let scenario = parse_scenario(&bytes)?;
    scenario
        .validate()
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok(LoadedScenario { scenario, sha256_hex: sha256_hex(&bytes) })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
area_side = 400.0
ru_positions = [[-200.0, -200.0], [200.0, -200.0], [200.0, 200.0], [-200.0, 200.0]]
path_loss_exponent = 2.0
fading_power = 1.0
bandwidth = 1.0e6
signal_esd_dbm_per_hz = -60.0
noise_model = { n0_dbm_per_hz = -174.0, ar_coeff = 0.5 }
fronthaul_capacity = 1.5
propagation_speed = 299792458.0
grid_points = 8
uncertainty_center = [0.0, 0.0]
uncertainty_side = 100.0

[[circles]]
center = [30.0, -20.0]
radius = 60.0
"#;

    #[test]
    fn parses_and_broadcasts_minimal_file() {
        let s = parse_scenario(MINIMAL.as_bytes()).unwrap();
        assert_eq!(s.n_ru(), 4);
        assert_eq!(s.fading_power, vec![1.0; 4]);
        assert_eq!(s.fronthaul_capacity, vec![1.5; 4]);
        assert_eq!(s.noise_model.len(), 4);
        assert!((s.noise_model[3].ar_coeff - 0.5).abs() < 1e-15);
        s.validate().unwrap();
    }

    #[test]
    fn accepts_per_unit_lists() {
        let text = MINIMAL.replace(
            "fronthaul_capacity = 1.5",
            "fronthaul_capacity = [1.0, 2.0, 3.0, 4.0]",
        );
        let s = parse_scenario(text.as_bytes()).unwrap();
        assert_eq!(s.fronthaul_capacity, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lengths() {
        let text = format!("{MINIMAL}\nextra_key = 1\n");
        assert!(parse_scenario(text.as_bytes()).is_err());
        let text = MINIMAL.replace("fading_power = 1.0", "fading_power = [1.0, 2.0]");
        let s = parse_scenario(text.as_bytes()).unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn sha256_matches_known_vector() {
        // SHA-256 of the empty string and of "abc" are published test vectors.
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
