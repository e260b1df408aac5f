//! Run configuration (TOML). Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use relaxprof::discretization::GridParams;
use relaxprof::model::BuiltinModelId;
use relaxprof::oracle::MarchConfig;
use relaxprof::solver::IterationConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: BuiltinModelId,
    /// Amplitude for single-point commands.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Strictly descending amplitudes for `sweep`.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Chapman–Enskog order `N`.
    #[serde(default)]
    pub order: usize,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub norm: NormConfig,
    #[serde(default)]
    pub iteration: IterationConfig,
    #[serde(default)]
    pub structure: StructureConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub uniqueness: UniquenessConfig,
    #[serde(default)]
    pub oracle: MarchConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_epsilons() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub s: usize,
    pub delta: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { s: 3, delta: relaxprof::discretization::DELTA0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureConfig {
    pub samples: usize,
    pub kawashima_seeds: usize,
    pub kawashima_iterations: usize,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self { samples: 64, kawashima_seeds: 8, kawashima_iterations: 500 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub window: f64,
    pub decay_range: [f64; 2],
    pub decay_delta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let d = relaxprof::solver::SweepOptions::default();
        Self { window: d.window, decay_range: d.decay_range, decay_delta: d.decay_delta }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessConfig {
    /// Restarts run after `solve` when set.
    pub enabled: bool,
    /// Radius as a multiple of `ε`.
    pub radius: f64,
    pub restarts: usize,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        Self { enabled: false, radius: 0.1, restarts: 5 }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub order: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(e) = ov.epsilon {
            self.epsilon = e;
        }
        if let Some(o) = ov.order {
            self.order = o;
        }
        if let Some(d) = &ov.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let e = self.epsilon;
        if !(e > 0.0 && e <= relaxprof::chapman_enskog::EPS_MAX) {
            return Err(format!("epsilon = {e} not in (0, {}]", relaxprof::chapman_enskog::EPS_MAX));
        }
        if self.epsilons.iter().any(|&x| !(x > 0.0 && x <= relaxprof::chapman_enskog::EPS_MAX)) {
            return Err(format!("epsilons {:?} outside (0, {}]", self.epsilons, relaxprof::chapman_enskog::EPS_MAX));
        }
        if self.order > relaxprof::chapman_enskog::MAX_ORDER {
            return Err(format!("order {} > {}", self.order, relaxprof::chapman_enskog::MAX_ORDER));
        }
        if !(self.grid.l_tilde > 0.0 && self.grid.h_tilde > 0.0 && self.grid.h_tilde < self.grid.l_tilde) {
            return Err(format!("grid l_tilde = {}, h_tilde = {}", self.grid.l_tilde, self.grid.h_tilde));
        }
        if !(self.norm.delta >= 0.0) {
            return Err(format!("norm delta = {}", self.norm.delta));
        }
        if !(self.uniqueness.radius >= 0.0) {
            return Err(format!("uniqueness radius = {}", self.uniqueness.radius));
        }
        if self.structure.samples == 0 || self.structure.kawashima_seeds == 0 {
            return Err("structure samples and kawashima_seeds must be positive".into());
        }
        self.iteration.validate().map_err(|e| e.to_string())?;
        self.oracle.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration,
    /// output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let canon = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nkind = \"JinXinBurgers\"\na = 1.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.epsilon, 0.1);
        assert_eq!(c.grid, GridParams::default());
        assert_eq!(c.epsilons.len(), 4);
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        for extra in ["epsilom = 0.1\n", "[grid]\nh = 0.1\n", "[iteration]\ntheta = 2.0\n", "[oracle]\ncfl_max = 0.4\n"] {
            let text = format!("{extra}{MINIMAL}");
            let text = if extra.starts_with('[') { format!("{MINIMAL}{extra}") } else { text };
            assert!(RunConfig::parse(&text).is_err(), "{extra}");
        }
        assert!(RunConfig::parse("[model]\nkind = \"JinXinBurgers\"\na = 1.0\nb = 2.0\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::parse(&format!("epsilon = 0.5\n{MINIMAL}")).is_err());
        assert!(RunConfig::parse(&format!("order = 3\n{MINIMAL}")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}[oracle]\ncfl = 0.6\n")).is_err());
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let b = RunConfig::parse(&format!("epsilon = 0.1\n{MINIMAL}")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.apply(&Overrides { epsilon: Some(0.05), ..Default::default() });
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
        let mut d = a.clone();
        d.apply(&Overrides { output_dir: Some("elsewhere".into()), ..Default::default() });
        assert_eq!(a.hash(), d.hash());
    }
}
