//! Declarative run configuration: one TOML file per run, with blocks for the
//! landscape, the dissipation family, the scaling regime, run controls, and
//! output. The serialized canonical form is hashed into output file names so
//! identical configs map to identical artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dissipation::DissipationFamily;
use crate::energy::{make_builtin, EnergyLandscape};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub landscape: LandscapeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipation: Option<DissipationConfig>,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DissipationConfig {
    /// One of `cosh`, `vanishing_viscosity`, `quadratic_limit`, `rate_independent`.
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

/// Scaling-regime parameters. Which subset must be present depends on the
/// command; [`RegimeConfig::require`] names the missing key in errors.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_list: Option<Vec<f64>>,
    /// Wiggle amplitude for the Langevin command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiggle_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub t_end: f64,
    pub x0: f64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_load: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_shift: Option<f64>,
    /// Input curve (CSV `t,x`) for commands that evaluate functionals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// Worker pool size; default = all cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t_end: 1.0,
            x0: 0.0,
            tol: 1e-8,
            dt: None,
            dt_load: None,
            replicas: None,
            seed: None,
            tube_radius: None,
            reference_shift: None,
            input: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical serialized form (field order fixed by the struct).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 12 hex characters of the SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn landscape(&self) -> Result<EnergyLandscape> {
        make_builtin(&self.landscape.id, &self.landscape.params)
    }

    pub fn dissipation_family(&self) -> Result<DissipationFamily> {
        let d = self
            .dissipation
            .as_ref()
            .ok_or_else(|| Error::Config("missing [dissipation] block".into()))?;
        let need = |v: Option<f64>, k: &str| {
            v.ok_or_else(|| Error::Config(format!("dissipation.{k} required for family `{}`", d.family)))
        };
        match d.family.as_str() {
            "cosh" => match (d.alpha, d.beta, d.a) {
                (Some(alpha), Some(beta), None) => Ok(DissipationFamily::cosh(alpha, beta)),
                (None, Some(beta), Some(a)) => Ok(DissipationFamily::cosh_with_threshold(a, beta)),
                _ => Err(Error::Config(
                    "cosh family needs (alpha, beta) or (a, beta)".into(),
                )),
            },
            "vanishing_viscosity" => Ok(DissipationFamily::vanishing_viscosity(
                need(d.beta, "beta")?,
                need(d.a, "a")?,
            )),
            "quadratic_limit" => Ok(DissipationFamily::quadratic_limit(need(d.omega, "omega")?)),
            "rate_independent" => Ok(DissipationFamily::rate_independent(need(d.a, "a")?)),
            other => Err(Error::Config(format!("unknown dissipation family `{other}`"))),
        }
    }
}

impl RegimeConfig {
    pub fn require<T: Copy>(&self, v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| Error::Config(format!("regime.{key} is required for this command")))
    }
}

impl RunConfig {
    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("run.seed is mandatory for stochastic commands".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[landscape]
id = "quadratic_loading"
params = { ell1 = 1.0 }

[regime]
alpha = 1.0
beta = 1.0

[run]
t_end = 1.0
seed = 42

[output]
dir = "out"
"#;

    #[test]
    fn round_trip_is_identity() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 12);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SAMPLE.replace("[run]", "[run]\nbogus_key = 1.0");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn dissipation_block_variants() {
        let text = r#"
[landscape]
id = "linear_tilt"
params = { g = 1.0 }

[dissipation]
family = "cosh"
a = 1.0
beta = 10.0
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let fam = c.dissipation_family().unwrap();
        assert_eq!(fam.threshold, 1.0);
        assert_eq!(fam.ln_alpha, -10.0);

        let missing = text.replace("beta = 10.0", "");
        let c = ExperimentConfig::parse(&missing).unwrap();
        assert!(c.dissipation_family().is_err());
    }

    #[test]
    fn seed_requirement() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.run.require_seed().unwrap(), 42);
        let no_seed = SAMPLE.replace("seed = 42", "");
        let c = ExperimentConfig::parse(&no_seed).unwrap();
        assert!(c.run.require_seed().is_err());
    }
}
