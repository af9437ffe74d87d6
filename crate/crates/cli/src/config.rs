use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sphinpaint::synth::SynthSpec;
use sphinpaint::{BandLimit, DegreeWeights, MaskSpec, NpgConfig, PenaltyConfig};

use crate::CliError;

/// How `ϱ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RhoPolicy {
    /// `ϱ = ∫ |Δ|²` of the generated noise.
    #[default]
    NoiseEnergy,
    Explicit(f64),
}

fn default_p() -> f64 {
    0.5
}

fn default_eta() -> f64 {
    1.0 + 1e-4
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_map_height() -> u32 {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub synth: SynthSpec,
    pub mask: MaskSpec,
    /// Band limit of the recovery; the data may be generated at a higher one.
    pub band_limit: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub rho: RhoPolicy,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub npg: NpgConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_map_height")]
    pub map_height: u32,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Apply command-line overrides and check every sub-configuration.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(out) = out {
            self.output_dir = out;
        }
        self.synth.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.synth.validate()?;
        self.mask.shape.validate()?;
        self.weights()?;
        self.penalty.validate()?;
        self.npg.validate()?;
        if let RhoPolicy::Explicit(rho) = self.rho {
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(CliError::Config(format!("rho = {rho} must be positive")));
            }
        }
        if self.map_height == 0 {
            return Err(CliError::Config("map_height must be positive".into()));
        }
        Ok(())
    }

    pub fn solve_band(&self) -> BandLimit {
        BandLimit::new(self.band_limit)
    }

    /// Degree of the quadrature grid: exact for both the data and the model.
    pub fn grid_degree(&self) -> usize {
        self.band_limit.max(self.synth.band_limit)
    }

    pub fn weights(&self) -> Result<DegreeWeights, CliError> {
        Ok(DegreeWeights::new(self.solve_band(), self.p, self.eta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "synth": {"band_limit": 8, "support": {"degrees": [1, 3]}},
        "mask": {"shape": {"kind": "polar_cap", "center_colatitude": 0.0, "center_longitude": 0.0, "angular_radius": 0.4}},
        "band_limit": 8
    }"#;

    #[test]
    fn defaults_fill_missing_fields() {
        let c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        assert_eq!(c.p, 0.5);
        assert_eq!(c.rho, RhoPolicy::NoiseEnergy);
        assert_eq!(c.penalty, PenaltyConfig::default());
        assert!(c.mask.complement);
        c.validate().unwrap();
    }

    #[test]
    fn json_roundtrip_is_stable() {
        let c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        let mut c = c.resolve(Some(9), None).unwrap();
        c.rho = RhoPolicy::Explicit(0.125);
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn overrides_reach_the_synth_spec() {
        let c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        let c = c.resolve(Some(42), Some("elsewhere".into())).unwrap();
        assert_eq!(c.synth.seed, 42);
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        c.synth.support = sphinpaint::synth::SupportSpec::Degrees(vec![9]);
        assert!(matches!(c.validate(), Err(CliError::Core(_))));
        let mut c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        c.rho = RhoPolicy::Explicit(-1.0);
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        assert!(serde_json::from_str::<ExperimentConfig>(
            &MINIMAL.replace("\"band_limit\": 8\n", "\"band_limit\": 8, \"typo\": 1\n")
        )
        .is_err());
    }
}
