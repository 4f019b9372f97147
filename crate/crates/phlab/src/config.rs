//! Run configuration: a TOML file with `[source]`, `[detectors]`,
//! `[windows]`, `[rng]`, `[[scenarios]]`, `[[nuisance]]` and `[io]`
//! sections mapping 1:1 onto the simulation and analysis types. Unknown
//! keys are rejected.

use crate::channel::Channel;
use crate::montecarlo::{NuisancePeak, RngPlan, SourceParams};
use crate::noisemodel::ScenarioSpec;
use crate::timetag::{Window, WindowConfig};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// The underlying TOML error message carries line/column context.
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub detectors: DetectorSection,
    #[serde(default)]
    pub windows: WindowSection,
    #[serde(default)]
    pub rng: RngSection,
    #[serde(default)]
    pub scenarios: Vec<ScenarioSection>,
    #[serde(default)]
    pub nuisance: Vec<NuisanceSection>,
    #[serde(default)]
    pub io: IoSection,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Mean photon-pair number per slot; exclusive with
    /// `excitation_probability`.
    pub mean_pairs: Option<f64>,
    pub excitation_probability: Option<f64>,
    #[serde(default = "one")]
    pub eta_s: f64,
    #[serde(default = "one")]
    pub eta_asv: f64,
    #[serde(default = "one")]
    pub eta_conv: f64,
    /// Mean equivalent-input noise photons per herald window; exclusive
    /// with `zeta`.
    pub noise_mean: Option<f64>,
    /// Converter-input signal-to-noise ratio, an alternative way to state
    /// the noise level.
    pub zeta: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(default)]
    pub dark_rates: DarkRates,
    /// Quantum efficiency of the direct herald detectors, used to turn the
    /// estimated path transmittance into a collection probability.
    pub quantum_efficiency: Option<f64>,
    pub filter_transmittance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DarkRates {
    #[serde(default)]
    pub ds1: f64,
    #[serde(default)]
    pub ds2: f64,
    #[serde(default)]
    pub dv1: f64,
    #[serde(default)]
    pub dv2: f64,
    #[serde(default)]
    pub dt1: f64,
    #[serde(default)]
    pub dt2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub s_offset_ns: u64,
    pub s_width_ns: u64,
    pub as_offset_ns: u64,
    pub as_width_ns: u64,
    pub histogram_bin_ns: u64,
}

impl Default for WindowSection {
    fn default() -> WindowSection {
        let d = WindowConfig::default();
        WindowSection {
            s_offset_ns: d.s_window.offset_ns,
            s_width_ns: d.s_window.width_ns,
            as_offset_ns: d.as_window.offset_ns,
            as_width_ns: d.as_window.width_ns,
            histogram_bin_ns: d.histogram_bin_ns,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngSection {
    pub master_seed: u64,
    pub batch_size: u64,
    pub trials: u64,
}

impl Default for RngSection {
    fn default() -> RngSection {
        let plan = RngPlan::default();
        RngSection {
            master_seed: plan.master_seed,
            batch_size: plan.batch_size,
            trials: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub label: String,
    pub zeta_multiplier: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuisanceSection {
    pub channel: String,
    pub offset_ns: u64,
    pub width_ns: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_str(text: &str, origin: &Path) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::from_str(&text, path)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.source.mean_pairs.is_some() && self.source.excitation_probability.is_some() {
            return Err(ConfigError::Invalid(
                "set either source.mean_pairs or source.excitation_probability, not both".into(),
            ));
        }
        if let Some(p) = self.source.excitation_probability {
            if !(0.0..1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!(
                    "excitation_probability {p} must lie in [0, 1)"
                )));
            }
        }
        if self.source.noise_mean.is_some() && self.source.zeta.is_some() {
            return Err(ConfigError::Invalid(
                "set either source.noise_mean or source.zeta, not both".into(),
            ));
        }
        if let Some(z) = self.source.zeta {
            if !(z > 0.0) {
                return Err(ConfigError::Invalid(format!("zeta {z} must be positive")));
            }
        }
        for n in &self.nuisance {
            if Channel::parse(&n.channel).is_none() {
                return Err(ConfigError::Invalid(format!(
                    "unknown nuisance channel {}",
                    n.channel
                )));
            }
        }
        // Physical ranges are re-checked by the simulation types; build them
        // now so a bad config fails before any work.
        self.source_params()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.window_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.rng.batch_size == 0 || self.rng.trials == 0 {
            return Err(ConfigError::Invalid(
                "rng.batch_size and rng.trials must be positive".into(),
            ));
        }
        for s in &self.scenarios {
            if !(s.zeta_multiplier > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "scenario {} multiplier must be positive",
                    s.label
                )));
            }
        }
        Ok(())
    }

    pub fn source_params(&self) -> Result<SourceParams, crate::montecarlo::SimError> {
        let mean_pairs = match (self.source.mean_pairs, self.source.excitation_probability) {
            (Some(m), _) => m,
            (None, Some(p)) => SourceParams::mean_pairs_for_excitation(p),
            (None, None) => 0.0,
        };
        let d = &self.detectors.dark_rates;
        let mut params = SourceParams {
            mean_pairs,
            eta_s: self.source.eta_s,
            eta_asv: self.source.eta_asv,
            eta_conv: self.source.eta_conv,
            noise_mean: self.source.noise_mean.unwrap_or(0.0),
            dark_rate: [d.ds1, d.ds2, d.dv1, d.dv2, d.dt1, d.dt2],
        };
        if let Some(zeta) = self.source.zeta {
            params.noise_mean = params.noise_mean_for_zeta(zeta);
        }
        params.validate()?;
        Ok(params)
    }

    pub fn window_config(&self) -> WindowConfig {
        WindowConfig {
            s_window: Window {
                offset_ns: self.windows.s_offset_ns,
                width_ns: self.windows.s_width_ns,
            },
            as_window: Window {
                offset_ns: self.windows.as_offset_ns,
                width_ns: self.windows.as_width_ns,
            },
            histogram_bin_ns: self.windows.histogram_bin_ns,
        }
    }

    pub fn rng_plan(&self) -> RngPlan {
        RngPlan {
            master_seed: self.rng.master_seed,
            batch_size: self.rng.batch_size,
        }
    }

    pub fn scenario_specs(&self) -> Vec<ScenarioSpec> {
        if self.scenarios.is_empty() {
            return vec![ScenarioSpec {
                label: "baseline".to_string(),
                zeta_multiplier: 1.0,
            }];
        }
        self.scenarios
            .iter()
            .map(|s| ScenarioSpec {
                label: s.label.clone(),
                zeta_multiplier: s.zeta_multiplier,
            })
            .collect()
    }

    pub fn nuisance_peaks(&self) -> Vec<NuisancePeak> {
        self.nuisance
            .iter()
            .map(|n| NuisancePeak {
                channel: Channel::parse(&n.channel).expect("validated channel"),
                offset_ns: n.offset_ns,
                width_ns: n.width_ns,
                probability: n.probability,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[source]
excitation_probability = 0.1
eta_s = 0.006
eta_asv = 0.007
zeta = 0.55

[detectors]
dark_rates = { dv1 = 1e-6 }
quantum_efficiency = 0.6
filter_transmittance = 0.25

[windows]
s_offset_ns = 500
s_width_ns = 250
as_offset_ns = 300
as_width_ns = 100
histogram_bin_ns = 10

[rng]
master_seed = 42
batch_size = 99000
trials = 1000000

[[scenarios]]
label = "collection x10"
zeta_multiplier = 10.0

[[nuisance]]
channel = "dv1"
offset_ns = 120
width_ns = 40
probability = 0.001
"#;

    #[test]
    fn sample_config_parses() {
        let config = RunConfig::from_str(SAMPLE, Path::new("sample.toml")).unwrap();
        let params = config.source_params().unwrap();
        assert!((params.mean_pairs - 0.1 / 0.9).abs() < 1e-12);
        assert!((params.zeta().unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(params.dark_rate[2], 1e-6);
        assert_eq!(config.rng_plan().master_seed, 42);
        assert_eq!(config.window_config().as_window.offset_ns, 300);
        assert_eq!(config.scenario_specs().len(), 1);
        assert_eq!(config.nuisance_peaks()[0].channel, Channel::Dv1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_str("[source]\nbogus = 1\n", Path::new("x.toml")).unwrap_err();
        match err {
            ConfigError::Parse { message, .. } => assert!(message.contains("bogus")),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn exclusive_keys_are_rejected() {
        let err = RunConfig::from_str(
            "[source]\nmean_pairs = 0.1\nexcitation_probability = 0.1\n",
            Path::new("x.toml"),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        let err = RunConfig::from_str(
            "[source]\nnoise_mean = 0.1\nzeta = 0.5\n",
            Path::new("x.toml"),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn defaults_are_complete() {
        let config = RunConfig::from_str("", Path::new("empty.toml")).unwrap();
        assert_eq!(config.window_config(), WindowConfig::default());
        assert_eq!(config.rng.trials, 1_000_000);
        assert_eq!(config.scenario_specs()[0].zeta_multiplier, 1.0);
    }

    #[test]
    fn physical_ranges_checked_up_front() {
        let err =
            RunConfig::from_str("[source]\neta_s = 1.5\n", Path::new("x.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        let err = RunConfig::from_str(
            "[windows]\ns_offset_ns = 900\ns_width_ns = 250\nas_offset_ns = 300\nas_width_ns = 100\nhistogram_bin_ns = 10\n",
            Path::new("x.toml"),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }
}
