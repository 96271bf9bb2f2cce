//! One TOML file configures every workflow; absent sections take defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dse::DseGrid;
use crate::electrical::{ElectricalCoefficients, RouterConfig};
use crate::error::{Error, Result};
use crate::experiment::ExperimentPlan;
use crate::photonic::PhotonicTechParams;
use crate::selector::{SelectionConstraints, SelectorConfig};
use crate::sim::SimConfig;
use crate::topology::MeshSpec;
use crate::traffic::PatternSpec;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub mesh: MeshSpec,
    pub photonic: PhotonicTechParams,
    pub electrical: ElectricalCoefficients,
    pub router: RouterConfig,
    pub dse: DseGrid,
    pub selector: SelectorConfig,
    pub constraints: SelectionConstraints,
    pub sim: SimConfig,
    /// Pattern used by the single-run workflows.
    pub traffic: PatternSpec,
    pub experiment: ExperimentPlan,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Defaults when no path is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(e.to_string()))
    }

    /// Overrides every seed in the configuration.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.traffic.seed = seed;
        self.experiment.seed = Some(seed);
        self
    }

    /// The analytic path costs of the selector must agree with the
    /// simulator's timing, otherwise idle latencies drift from the routing
    /// tables' costs.
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.photonic.validate()?;
        self.electrical.validate()?;
        self.sim.validate()?;
        self.traffic.validate()?;
        if self.sim.hop_cycles != self.selector.hop_cycles
            || self.sim.photonic_cycles != self.selector.photonic_edge_cost()
        {
            return Err(Error::invalid(format!(
                "simulator timing (hop {}, photonic {}) disagrees with selector costs (hop {}, photonic {})",
                self.sim.hop_cycles,
                self.sim.photonic_cycles,
                self.selector.hop_cycles,
                self.selector.photonic_edge_cost()
            )));
        }
        if self.sim.hop_length_mm != self.mesh.hop_length_mm {
            return Err(Error::invalid("sim and mesh hop lengths differ"));
        }
        self.experiment.validate(&self.mesh, &self.constraints)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

pub(crate) fn digest_json<T: Serialize>(value: &T) -> String {
    digest_bytes(&serde_json::to_vec(value).expect("configuration types serialize"))
}

pub(crate) fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = Config::default().with_seed(7);
        let text = cfg.to_toml().unwrap();
        let back = Config::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
        assert_ne!(back.digest(), Config::default().digest());
    }

    #[test]
    fn sections_override_fields() {
        let cfg = Config::from_toml("[dse]\nstrides = [2]\n[traffic]\nkind = \"fcp\"\n").unwrap();
        assert_eq!(cfg.dse.strides, vec![2]);
        assert_eq!(cfg.traffic.kind, crate::traffic::PatternKind::Fcp);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            Config::from_toml("[sim]\nclock = 1\n"),
            Err(Error::Toml(_))
        ));
    }

    #[test]
    fn mismatched_timing_is_rejected() {
        let err = Config::from_toml("[sim]\nphotonic_cycles = 5\n").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
}
