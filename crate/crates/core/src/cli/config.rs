use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::Mode;
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

pub const CONFIG_SCHEMA: &str = "gibbs-interp/run-config/v1";
pub const RESULT_SCHEMA: &str = "gibbs-interp/result/v1";

/// Source of the zero-free constants `(δ_zf, C)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZeroFreeSpec {
    Asserted { delta_zf: f64, c_bound: f64 },
    Derived(DerivedTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivedTag {
    ThresholdDerived,
}

/// Explicit disk-map parameters for `certify-map`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub rho: f64,
    pub beta_anchor: f64,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// `λ` as a fraction of the certified threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_free: Option<ZeroFreeSpec>,
    /// Highest coefficient order for `coefficients`; also a cap for `run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub verify: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub plot_data: bool,
    /// Oracle quadrature width for `threshold` and threshold-derived runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_used: Option<usize>,
    /// Target width for `certify-map`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::input(format!("config: {e}")))?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(Error::input(format!("config schema must be {CONFIG_SCHEMA:?}, got {:?}", cfg.schema)));
        }
        if let Some(e) = cfg.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::input(format!("epsilon must lie in (0, 1), got {e}")));
            }
        }
        if let Some(t) = cfg.threads {
            if t == 0 {
                return Err(Error::input("threads must be at least 1"));
            }
        }
        Ok(cfg)
    }

    pub fn potential(&self) -> Result<&PotentialSpec> {
        self.potential.as_ref().ok_or_else(|| Error::input("config needs a potential"))
    }

    pub fn n(&self) -> Result<u32> {
        self.n.ok_or_else(|| Error::input("config needs the box half-side n"))
    }

    pub fn epsilon(&self) -> Result<f64> {
        self.epsilon.ok_or_else(|| Error::input("config needs epsilon"))
    }

    pub fn quad_width(&self) -> f64 {
        self.quad_width.unwrap_or(1.0 / 32.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_run() {
        let cfg = RunConfig::parse(
            r#"{"schema": "gibbs-interp/run-config/v1",
                "potential": {"kind": "zero", "dimension": 2},
                "n": 1, "lambda": 0.5, "epsilon": 0.05, "mode": "certified",
                "zero_free": {"delta_zf": 2.0, "c_bound": 1.0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.zero_free, Some(ZeroFreeSpec::Asserted { delta_zf: 2.0, c_bound: 1.0 }));
        let again = RunConfig::parse(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn derived_zero_free() {
        let cfg = RunConfig::parse(r#"{"schema": "gibbs-interp/run-config/v1", "zero_free": "threshold-derived"}"#).unwrap();
        assert_eq!(cfg.zero_free, Some(ZeroFreeSpec::Derived(DerivedTag::ThresholdDerived)));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::parse(r#"{"schema": "v0"}"#).is_err());
        assert!(RunConfig::parse(r#"{"schema": "gibbs-interp/run-config/v1", "epsilon": 1.5}"#).is_err());
        assert!(RunConfig::parse(r#"{"schema": "gibbs-interp/run-config/v1", "bogus": 1}"#).is_err());
    }
}
