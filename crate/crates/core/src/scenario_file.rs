//! TOML scenario files.
//!
//! ```toml
//! [config]                  # optional, every key defaults
//! seed = 7
//! friction_model = "ellipsoid"   # or "numeric_limit_surface"
//! noise_force_std = 0.01
//!
//! [config.break_transient]  # optional
//! amplitude = 3.0
//! rise_time = 0.004
//! decay_time = 0.02
//!
//! [[segment]]
//! duration = 2.0
//! twist = { v_x = 0.01, v_y = 0.0, omega = 0.0 }   # omitted => stick
//! truth = { mu_s = 0.6, mu_c = 0.4, r = 0.01 }
//! dist = { kind = "uniform_disc", radius = 0.015 } # omitted => disc with r_eff = truth.r
//! fn = 2.0                                         # or [[t, fn], ...]
//! load_rate = 2.0                                  # stick load ramp, N/s
//! load_direction = 0.0                             # rad
//! ```
//!
//! Config keys are listed in [`SIM_CONFIG_KEYS`]; `dist.kind` is one of
//! `uniform_disc`, `rim` (both with `radius`) or `grid` (with
//! `cells = [[x, y, weight], ...]`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact_model::{ContactParams, PlanarTwist, PressureDistribution};
use crate::simulator::{NormalForceProfile, ScenarioSegment, SimConfig, SimError, SIM_CONFIG_KEYS};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid override `{key}`: {message}")]
    InvalidOverride { key: String, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl ScenarioError {
    /// Config key the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ScenarioError::UnknownKey(k) | ScenarioError::InvalidOverride { key: k, .. } => Some(k),
            ScenarioError::Sim(SimError::Config { key, .. }) => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    config: SimConfig,
    #[serde(rename = "segment", default)]
    segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSpec {
    duration: f64,
    #[serde(default)]
    twist: PlanarTwist,
    truth: ContactParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dist: Option<PressureDistribution>,
    #[serde(rename = "fn")]
    fn_profile: NormalForceProfile,
    #[serde(default)]
    load_rate: f64,
    #[serde(default)]
    load_direction: f64,
}

impl From<SegmentSpec> for ScenarioSegment {
    fn from(s: SegmentSpec) -> Self {
        let base = ScenarioSegment::new(s.duration, s.twist, s.truth, 0.0);
        ScenarioSegment {
            dist: s.dist.unwrap_or(base.dist.clone()),
            fn_profile: s.fn_profile,
            load_rate: s.load_rate,
            load_direction: s.load_direction,
            ..base
        }
    }
}

impl From<&ScenarioSegment> for SegmentSpec {
    fn from(s: &ScenarioSegment) -> Self {
        SegmentSpec {
            duration: s.duration,
            twist: s.commanded_twist,
            truth: s.truth,
            dist: Some(s.dist.clone()),
            fn_profile: s.fn_profile.clone(),
            load_rate: s.load_rate,
            load_direction: s.load_direction,
        }
    }
}

/// A parsed scenario: simulator configuration plus segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SimConfig,
    pub segments: Vec<ScenarioSegment>,
}

impl Scenario {
    pub fn reference() -> Self {
        Self {
            config: SimConfig::default(),
            segments: crate::simulator::make_paper_like_scenario(),
        }
    }

    pub fn to_toml(&self) -> String {
        let file = ScenarioFile {
            config: self.config.clone(),
            segments: self.segments.iter().map(SegmentSpec::from).collect(),
        };
        toml::to_string(&file).expect("scenario serializes to TOML")
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    if file.segments.is_empty() {
        return Err(SimError::Config {
            key: "segment".into(),
            message: "scenario has no segments".into(),
        }
        .into());
    }
    let scenario = Scenario {
        config: file.config,
        segments: file.segments.into_iter().map(Into::into).collect(),
    };
    scenario.config.validate()?;
    Ok(scenario)
}

/// Splits `key=value`.
pub fn parse_override(arg: &str) -> Result<(String, String), ScenarioError> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(ScenarioError::InvalidOverride {
            key: arg.to_string(),
            message: "expected key=value".into(),
        }),
    }
}

/// Applies `key=value` overrides to a config. Values are TOML literals;
/// bare words are taken as strings.
pub fn apply_overrides(
    config: &SimConfig,
    overrides: &[(String, String)],
) -> Result<SimConfig, ScenarioError> {
    if overrides.is_empty() {
        return Ok(config.clone());
    }
    let mut table = toml::Table::try_from(config).expect("config serializes to a table");
    for (key, raw) in overrides {
        if !SIM_CONFIG_KEYS.contains(&key.as_str()) {
            return Err(ScenarioError::UnknownKey(key.clone()));
        }
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.clone()));
        table.insert(key.clone(), value);
    }
    let updated: SimConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| {
            let key = overrides.last().map(|o| o.0.clone()).unwrap_or_default();
            ScenarioError::InvalidOverride {
                key,
                message: e.message().to_string(),
            }
        })?;
    updated.validate()?;
    Ok(updated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::FrictionModel;

    const SAMPLE: &str = r#"
[config]
seed = 11
friction_model = "ellipsoid"

[[segment]]
duration = 1.0
twist = { v_x = 0.01 }
truth = { mu_s = 0.6, mu_c = 0.4, r = 0.01 }
fn = 2.0

[[segment]]
duration = 0.5
truth = { mu_s = 0.6, mu_c = 0.4, r = 0.01 }
dist = { kind = "rim", radius = 0.01 }
fn = [[0.0, 2.0], [0.5, 3.0]]
load_rate = 2.0
"#;

    #[test]
    fn parses_sample() {
        let s = parse_scenario(SAMPLE).unwrap();
        assert_eq!(s.config.seed, 11);
        assert_eq!(s.config.friction_model, FrictionModel::Ellipsoid);
        assert_eq!(s.segments.len(), 2);
        assert!(!s.segments[0].is_stick());
        assert_eq!(
            s.segments[0].dist,
            PressureDistribution::UniformDisc { radius: 0.015 }
        );
        assert!(s.segments[1].is_stick());
        assert_eq!(s.segments[1].fn_profile.at(0.25), 2.5);
        assert_eq!(s.segments[1].dist, PressureDistribution::Rim { radius: 0.01 });
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = SAMPLE.replace("seed = 11", "sede = 11");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
        let err = apply_overrides(&SimConfig::default(), &[("sede".into(), "1".into())]).unwrap_err();
        assert_eq!(err.key(), Some("sede"));
    }

    #[test]
    fn overrides_apply() {
        let cfg = apply_overrides(
            &SimConfig::default(),
            &[
                ("seed".into(), "42".into()),
                ("noise_force_std".into(), "0.02".into()),
                ("friction_model".into(), "ellipsoid".into()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.noise_force_std, 0.02);
        assert_eq!(cfg.friction_model, FrictionModel::Ellipsoid);
        let err = apply_overrides(&SimConfig::default(), &[("dt_sim".into(), "-1".into())])
            .unwrap_err();
        assert_eq!(err.key(), Some("dt_sim"));
        let err = apply_overrides(&SimConfig::default(), &[("seed".into(), "abc".into())])
            .unwrap_err();
        assert_eq!(err.key(), Some("seed"));
        assert!(parse_override("novalue").is_err());
        assert_eq!(parse_override("a = 1").unwrap(), ("a".into(), "1".into()));
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::reference();
        let back = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }
}
