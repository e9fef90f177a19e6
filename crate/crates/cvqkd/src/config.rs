//! Run configuration: built-in defaults, overridden by a flat JSON file,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cvqkd_core::analysis::{ChannelMapping, SearchMode};
use cvqkd_core::protocol::ProtocolParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Search {
    Diagonal,
    FullPlane,
}

impl From<Search> for SearchMode {
    fn from(s: Search) -> Self {
        match s {
            Search::Diagonal => SearchMode::Diagonal,
            Search::FullPlane => SearchMode::FullPlane,
        }
    }
}

/// Fully resolved configuration. Serializes to exactly the keys accepted
/// in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub v_a: f64,
    pub v_b: f64,
    pub eta: f64,
    /// Reconciliation efficiency for single-rate commands (`keyrate`, `sweep`).
    pub beta: f64,
    /// Efficiencies run by `optimal` and `frontier`.
    pub betas: Vec<f64>,
    pub epsilon: f64,
    /// Noise levels run by `optimal`.
    pub epsilons: Vec<f64>,
    pub detector_electronic_noise: f64,
    pub k_override: Option<f64>,
    pub attenuation_db_per_km: f64,
    pub distance_km: f64,
    /// Distances for `sweep`, `optimal` and `frontier`; each command has
    /// its own default when unset.
    pub distances_km: Option<Vec<f64>>,
    pub grid: usize,
    pub refine: usize,
    pub search: Search,
    pub c_x: Option<f64>,
    pub c_p: Option<f64>,
    pub v_e1: f64,
    pub v_e2: f64,
    pub out: PathBuf,
    /// `0` uses every available core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            v_a: 20.0,
            v_b: 20.0,
            eta: 0.75,
            beta: 1.0,
            betas: vec![1.0, 0.95],
            epsilon: 0.2,
            epsilons: vec![0.2, 0.15, 0.1, 0.05, 0.02],
            detector_electronic_noise: 0.0,
            k_override: None,
            attenuation_db_per_km: ChannelMapping::DEFAULT_ATTENUATION,
            distance_km: 10.0,
            distances_km: None,
            grid: 21,
            refine: 12,
            search: Search::Diagonal,
            c_x: None,
            c_p: None,
            v_e1: 3.0,
            v_e2: 3.0,
            out: PathBuf::from("out"),
            workers: 0,
        }
    }
}

/// Any subset of [`RunConfig`]; the shape of config files and of the
/// command-line overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub v_a: Option<f64>,
    pub v_b: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub detector_electronic_noise: Option<f64>,
    pub k_override: Option<f64>,
    pub attenuation_db_per_km: Option<f64>,
    pub distance_km: Option<f64>,
    pub distances_km: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub refine: Option<usize>,
    pub search: Option<Search>,
    pub c_x: Option<f64>,
    pub c_p: Option<f64>,
    pub v_e1: Option<f64>,
    pub v_e2: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $over:expr, [$($plain:ident),*], [$($opt:ident),*]) => {{
        $( if let Some(v) = $over.$plain { $base.$plain = v; } )*
        $( if $over.$opt.is_some() { $base.$opt = $over.$opt; } )*
    }};
}

impl RunConfig {
    /// Applies every key present in `layer`.
    pub fn apply(&mut self, layer: PartialConfig) {
        overlay!(
            self,
            layer,
            [
                v_a, v_b, eta, beta, betas, epsilon, epsilons, detector_electronic_noise,
                attenuation_db_per_km, distance_km, grid, refine, search, v_e1, v_e2, out, workers
            ],
            [k_override, distances_km, c_x, c_p]
        );
    }

    pub fn from_json(text: &str) -> Result<PartialConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))
    }

    pub fn load_file(path: &Path) -> Result<PartialConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message)))
    }

    /// Defaults, then `file`, then `flags`.
    pub fn resolve(file: Option<PartialConfig>, flags: PartialConfig) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(f) = file {
            cfg.apply(f);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let beta_ok = |b: f64| (0.0..=1.0).contains(&b);
        if !beta_ok(self.beta) || self.betas.is_empty() || !self.betas.iter().all(|&b| beta_ok(b)) {
            return Err(CliError::usage("beta values must lie in [0, 1] and betas must be non-empty"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
            return Err(CliError::usage("epsilons must be a non-empty list of values >= 0"));
        }
        if self.grid < 3 || self.grid % 2 == 0 {
            return Err(CliError::usage(format!("grid must be odd and >= 3, got {}", self.grid)));
        }
        if self.refine == 0 {
            return Err(CliError::usage("refine must be >= 1"));
        }
        if let Some(d) = &self.distances_km {
            if d.is_empty() || d.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(CliError::usage("distances_km must be a non-empty list of positive values"));
            }
        }
        ChannelMapping::new(self.attenuation_db_per_km, self.distance_km)?;
        self.protocol(self.distance_km, self.beta, self.epsilon)?;
        Ok(())
    }

    pub fn transmittance(&self, distance_km: f64) -> Result<f64, CliError> {
        Ok(ChannelMapping::new(self.attenuation_db_per_km, distance_km)?.transmittance())
    }

    /// Protocol parameters at a distance, efficiency and noise level.
    pub fn protocol(&self, distance_km: f64, beta: f64, epsilon: f64) -> Result<ProtocolParams, CliError> {
        let t = self.transmittance(distance_km)?;
        if !(t < 1.0) {
            return Err(CliError::usage(format!(
                "distance {distance_km} km gives a lossless channel; use a positive distance"
            )));
        }
        Ok(ProtocolParams::new(self.v_a, self.v_b, self.eta, beta, t, epsilon)?
            .with_electronic_noise(self.detector_electronic_noise)?
            .with_k_override(self.k_override)?)
    }

    /// Configured distances, sorted ascending and deduplicated, or `default`.
    pub fn distances_or(&self, default: &[f64]) -> Vec<f64> {
        let mut d = self.distances_km.clone().unwrap_or_else(|| default.to_vec());
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let cfg = RunConfig {
            k_override: Some(0.31),
            distances_km: Some(vec![1.0, 2.5]),
            search: Search::FullPlane,
            ..RunConfig::default()
        };
        let again = RunConfig::resolve(Some(RunConfig::from_json(&cfg.to_json()).unwrap()), PartialConfig::default()).unwrap();
        assert_eq!(again, cfg);
        let direct: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(direct, cfg);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_json(r#"{"v_a": 20, "gird": 5}"#).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("gird"), "{}", err.message);
    }

    #[test]
    fn precedence() {
        let file = RunConfig::from_json(r#"{"grid": 31, "epsilon": 0.1}"#).unwrap();
        let flags = PartialConfig {
            epsilon: Some(0.05),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Some(file), flags).unwrap();
        assert_eq!(cfg.grid, 31);
        assert_eq!(cfg.epsilon, 0.05);
        assert_eq!(cfg.v_a, 20.0);
    }

    #[test]
    fn rejects_invalid_values() {
        for bad in [r#"{"grid": 4}"#, r#"{"beta": 1.5}"#, r#"{"eta": -0.1}"#, r#"{"betas": []}"#] {
            let layer = RunConfig::from_json(bad).unwrap();
            assert!(RunConfig::resolve(Some(layer), PartialConfig::default()).is_err(), "{bad}");
        }
    }
}
