//! Run configuration: JSON schema, defaults, validation and hashing.
//!
//! ```json
//! {"scenario": "simulate", "T": 1, "N": 8, "M": 8, "seed": 7}
//! ```
//!
//! Unknown keys are rejected. Omitted keys take the defaults listed on
//! [`SimConfig`].

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{CouplingParams, Scheme};
use crate::experiments::presets::{SprayPreset, VortexPreset};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Simulate,
    Meanfield,
    Stability,
    Hydro,
    Conservation,
    Massless,
    Distance,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Simulate => "simulate",
            Scenario::Meanfield => "meanfield",
            Scenario::Stability => "stability",
            Scenario::Hydro => "hydro",
            Scenario::Conservation => "conservation",
            Scenario::Massless => "massless",
            Scenario::Distance => "distance",
        }
    }
}

fn default_delta() -> f64 {
    0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_scheme() -> Scheme {
    Scheme::Auto
}
fn default_omega() -> f64 {
    0.5
}
fn default_n_grid() -> Vec<usize> {
    vec![32, 64, 128, 256]
}
fn default_eps_grid() -> Vec<f64> {
    vec![0.1, 0.025, 0.00625]
}
fn default_eta() -> f64 {
    1e-3
}
fn default_radius() -> f64 {
    0.5
}
fn default_ratio_floor() -> f64 {
    1e-9
}
fn default_drift_floor() -> f64 {
    1e-12
}

/// A validated run configuration. Defaults: `delta = 0.5`, `epsilon = 1`,
/// `dt = 1e-3`, `T = 1`, `N = M = 0`, `scheme = auto`, `seed = 0`, Gaussian
/// vortices and rigidly rotating Gaussian spray with `omega = 0.5`, spray
/// mass 1, 20 observations per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: Scenario,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_one")]
    pub epsilon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(rename = "T", default = "default_one")]
    pub t_final: f64,
    /// Vortex count.
    #[serde(rename = "N", default)]
    pub n: usize,
    /// Spray count.
    #[serde(rename = "M", default)]
    pub m: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub vortex_preset: VortexPreset,
    #[serde(default)]
    pub spray_preset: SprayPreset,
    /// Angular velocity of rotating presets.
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_one")]
    pub spray_mass: f64,
    /// Steps between observations; defaults to a twentieth of the run.
    #[serde(default)]
    pub cadence: Option<usize>,
    /// Initial snapshot for `simulate`, overriding the presets.
    #[serde(default)]
    pub initial: Option<String>,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing)]
    pub out: Option<String>,

    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    /// Reference size for `meanfield`; defaults to four times the largest N.
    #[serde(default)]
    pub n_ref: Option<usize>,
    /// Seeds of the experiment grid; defaults to `[seed]`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    /// Kernel scales of the `stability` grid; defaults to `[delta]`.
    #[serde(default)]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    /// Time steps of the `conservation` grid; defaults to `[dt, dt/2, dt/4]`.
    #[serde(default)]
    pub dt_grid: Option<Vec<f64>>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Spray atoms duplicated in `hydro`.
    #[serde(default)]
    pub duplicates: usize,
    /// `hydro`: the Lipschitz ratio threshold is `3 max(initial, ratio_floor)`.
    #[serde(default = "default_ratio_floor")]
    pub ratio_floor: f64,
    /// `conservation`: drift ratios are only asserted where the coarser drift
    /// exceeds this floor.
    #[serde(default = "default_drift_floor")]
    pub drift_floor: f64,
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            field,
            message: format!("must be positive, got {v}"),
        })
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("delta", self.delta)?;
        positive("epsilon", self.epsilon)?;
        positive("dt", self.dt)?;
        positive("spray_mass", self.spray_mass)?;
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(ConfigError::Invalid {
                field: "T",
                message: format!("must be nonnegative, got {}", self.t_final),
            });
        }
        if self.t_final / self.dt > crate::dynamics::MAX_STEPS {
            return Err(ConfigError::Invalid {
                field: "T",
                message: format!("T / dt exceeds {:e} steps", crate::dynamics::MAX_STEPS),
            });
        }
        if self.cadence == Some(0) {
            return Err(ConfigError::Invalid {
                field: "cadence",
                message: "must be at least 1".into(),
            });
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(ConfigError::Invalid {
                field: "n_grid",
                message: "needs positive entries".into(),
            });
        }
        if self.n_ref == Some(0) {
            return Err(ConfigError::Invalid {
                field: "n_ref",
                message: "must be positive".into(),
            });
        }
        if matches!(&self.seeds, Some(s) if s.is_empty()) {
            return Err(ConfigError::Invalid {
                field: "seeds",
                message: "must not be empty".into(),
            });
        }
        for (field, grid) in [
            ("delta_grid", self.delta_grid.clone()),
            ("eps_grid", Some(self.eps_grid.clone())),
            ("dt_grid", self.dt_grid.clone()),
        ] {
            if let Some(g) = grid {
                if g.is_empty() {
                    return Err(ConfigError::Invalid {
                        field,
                        message: "must not be empty".into(),
                    });
                }
                for v in g {
                    positive(field, v)?;
                }
            }
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(ConfigError::Invalid {
                field: "eta",
                message: format!("must be nonnegative, got {}", self.eta),
            });
        }
        positive("radius", self.radius)?;
        positive("ratio_floor", self.ratio_floor)?;
        positive("drift_floor", self.drift_floor)?;
        Ok(())
    }

    pub fn params(&self) -> CouplingParams {
        CouplingParams::new(self.delta, self.epsilon).expect("validated")
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![self.seed])
    }

    pub fn delta_grid(&self) -> Vec<f64> {
        self.delta_grid.clone().unwrap_or_else(|| vec![self.delta])
    }

    pub fn dt_grid(&self) -> Vec<f64> {
        self.dt_grid
            .clone()
            .unwrap_or_else(|| vec![self.dt, self.dt / 2.0, self.dt / 4.0])
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
            .unwrap_or_else(|| 4 * self.n_grid.iter().copied().max().unwrap_or(1))
    }

    /// Observation cadence for a run of `steps` steps.
    pub fn cadence_for(&self, steps: usize) -> usize {
        self.cadence.unwrap_or((steps / 20).max(1))
    }

    /// SHA-256 of the canonical JSON form (sorted keys, shortest round-trip
    /// floats), hex encoded.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let text = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Applies `key=value` overrides. Values are parsed as JSON when possible
/// and taken as strings otherwise.
pub fn apply_overrides(
    obj: &mut Map<String, Value>,
    overrides: &[String],
) -> Result<(), ConfigError> {
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Schema {
            path: o.clone(),
            message: "override must look like key=value".into(),
        })?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        obj.insert(k.trim().to_string(), value);
    }
    Ok(())
}

/// Parses and validates a configuration object.
pub fn config_from_value(value: Value) -> Result<SimConfig, ConfigError> {
    let cfg: SimConfig =
        serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a JSON configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value: Value = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    config_from_value(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(r#"{"scenario":"simulate","T":1,"N":8,"M":8,"seed":7}"#).unwrap();
        assert_eq!(cfg.scenario, Scenario::Simulate);
        assert_eq!((cfg.delta, cfg.epsilon, cfg.dt), (0.5, 1.0, 1e-3));
        assert_eq!(cfg.scheme, Scheme::Auto);
        assert_eq!((cfg.n, cfg.m, cfg.seed, cfg.t_final), (8, 8, 7, 1.0));
        assert_eq!(cfg.cadence_for(1000), 50);
        assert_eq!(cfg.cadence_for(3), 1);
        assert_eq!(cfg.seeds(), vec![7]);
        assert_eq!(cfg.n_ref(), 1024);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            r#"{"scenario":"simulate","delta":0}"#,
            r#"{"scenario":"simulate","delta":-1}"#,
            r#"{"scenario":"simulate","epsilon":0}"#,
            r#"{"scenario":"simulate","T":-1}"#,
            r#"{"scenario":"simulate","cadence":0}"#,
        ] {
            assert!(
                matches!(parse_config(bad), Err(ConfigError::Invalid { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn schema_errors_carry_the_field_path() {
        match parse_config(r#"{"scenario":"simulate","bogus":1}"#) {
            Err(ConfigError::Schema { message, .. }) => assert!(message.contains("bogus")),
            other => panic!("{other:?}"),
        }
        match parse_config(r#"{"scenario":"simulate","seeds":[1,"x"]}"#) {
            Err(ConfigError::Schema { path, .. }) => assert_eq!(path, "seeds[1]"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config(r#"{"scenario":"juggle"}"#),
            Err(ConfigError::Schema { .. })
        ));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let text = r#"{"scenario":"massless","T":1,"N":64,"M":64,"seed":3}"#;
        let a = parse_config(text).unwrap();
        let b = parse_config(text).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let reordered =
            parse_config(r#"{"seed":3,"M":64,"N":64,"T":1.0,"scenario":"massless"}"#).unwrap();
        assert_eq!(a.hash(), reordered.hash());
        let mut c = a.clone();
        c.seed = 4;
        assert_ne!(a.hash(), c.hash());
        c = a.clone();
        c.out = Some("/tmp/elsewhere".into());
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn overrides_replace_fields() {
        let mut obj = Map::new();
        obj.insert("scenario".into(), Value::String("hydro".into()));
        apply_overrides(
            &mut obj,
            &[
                "delta=0.25".into(),
                "scheme=split".into(),
                "seeds=[1,2]".into(),
            ],
        )
        .unwrap();
        let cfg = config_from_value(Value::Object(obj)).unwrap();
        assert_eq!(cfg.delta, 0.25);
        assert_eq!(cfg.scheme, Scheme::Split);
        assert_eq!(cfg.seeds(), vec![1, 2]);
        let mut obj = Map::new();
        assert!(apply_overrides(&mut obj, &["novalue".into()]).is_err());
    }
}
