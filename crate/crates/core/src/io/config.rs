//! JSON configuration: one file with a `filter` and a `sim` section.
//!
//! Unknown keys are rejected everywhere. Omitted keys take the defaults of
//! the synthetic-array profile and are written back out in full.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::check_version;
use crate::bank::GateConfig;
use crate::error::{Error, Result};
use crate::kalman::{self, FilterConfig, FilterParams, ProcessNoiseModel};
use crate::metrics::DEFAULT_BURNOUT;
use crate::sim::SimConfig;

pub const CONFIG_VERSION: &str = "1.0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialCovariance {
    /// Position variance (mm²) on every axis; `null` reuses `r_var_xyz`.
    pub pos_var: Option<f64>,
    pub vel_var: f64,
    pub acc_var: f64,
}

impl Default for InitialCovariance {
    fn default() -> Self {
        let p = FilterParams::default();
        Self {
            pos_var: None,
            vel_var: p.p0_vel_var,
            acc_var: p.p0_acc_var,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub dt_s: f64,
    pub q_var: f64,
    pub q_model: ProcessNoiseModel,
    pub r_var_xyz: [f64; 3],
    pub p0: InitialCovariance,
    pub gate_threshold: f64,
    pub gate_persistence: u32,
    pub reject_gated: bool,
    pub burnout: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        let p = FilterParams::default();
        let g = GateConfig::default();
        Self {
            dt_s: p.dt,
            q_var: p.q_var,
            q_model: p.q_model,
            r_var_xyz: p.r_var,
            p0: InitialCovariance::default(),
            gate_threshold: g.threshold,
            gate_persistence: g.persistence,
            reject_gated: g.reject_gated,
            burnout: DEFAULT_BURNOUT,
        }
    }
}

impl FilterSection {
    /// Profile for real recordings: larger process noise.
    pub fn recorded_profile() -> Self {
        Self {
            q_var: kalman::RECORDED_Q_VAR,
            ..Self::default()
        }
    }

    pub fn params(&self) -> FilterParams {
        FilterParams {
            dt: self.dt_s,
            q_var: self.q_var,
            q_model: self.q_model,
            r_var: self.r_var_xyz,
            p0_pos_var: self.p0.pos_var.map(|v| [v; 3]),
            p0_vel_var: self.p0.vel_var,
            p0_acc_var: self.p0.acc_var,
        }
    }

    /// Filter configuration for frames spaced `dt` seconds apart.
    pub fn filter_config(&self, dt: f64) -> Result<FilterConfig> {
        FilterConfig::from_params(&FilterParams { dt, ..self.params() })
    }

    pub fn gate(&self) -> GateConfig {
        GateConfig {
            threshold: self.gate_threshold,
            persistence: self.gate_persistence,
            reject_gated: self.reject_gated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("filter.{key}"), format!("must be > 0, got {v}")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("filter.{key}"), format!("must be >= 0, got {v}")))
            }
        };
        positive("dt_s", self.dt_s)?;
        non_negative("q_var", self.q_var)?;
        for (i, &v) in self.r_var_xyz.iter().enumerate() {
            positive(&format!("r_var_xyz[{i}]"), v)?;
        }
        if let Some(v) = self.p0.pos_var {
            non_negative("p0.pos_var", v)?;
        }
        non_negative("p0.vel_var", self.p0.vel_var)?;
        non_negative("p0.acc_var", self.p0.acc_var)?;
        positive("gate_threshold", self.gate_threshold)?;
        if self.gate_persistence == 0 {
            return Err(Error::config("filter.gate_persistence", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_version")]
    pub version: String,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub sim: SimConfig,
}

fn default_version() -> String {
    CONFIG_VERSION.to_string()
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            version: default_version(),
            filter: FilterSection::default(),
            sim: SimConfig::default(),
        }
    }
}

impl ConfigFile {
    pub fn validate(&self) -> Result<()> {
        check_version(&self.version, CONFIG_VERSION)?;
        self.filter.validate()?;
        self.sim.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let key = if path == "." { "<root>".to_string() } else { path };
            Error::config(key, format!("{inner}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ConfigFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ConfigFile::from_json(&text)
}

pub fn write_config(path: impl AsRef<Path>, config: &ConfigFile) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, config.to_json()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ConfigFile::from_json("{}").unwrap();
        assert!((c.filter.r_var_xyz[0] - 0.0225).abs() < 1e-15);
        assert!((c.filter.r_var_xyz[1] - 0.0225).abs() < 1e-15);
        assert!((c.filter.r_var_xyz[2] - 0.0441).abs() < 1e-15);
        assert_eq!(c.filter.q_var, 0.001);
        assert_eq!(FilterSection::recorded_profile().q_var, 0.01);
        assert_eq!(c.filter.burnout, 100);
        assert_eq!(c.sim.fps, 200.0);
        assert_eq!(c, ConfigFile::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ConfigFile::from_json(r#"{"filter": {"q_varr": 1.0}}"#).unwrap_err();
        match err {
            Error::Config { key, .. } => assert!(key.starts_with("filter"), "{key}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn wrong_type_is_named() {
        let err = ConfigFile::from_json(r#"{"sim": {"fps": "fast"}}"#).unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "sim.fps"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn out_of_range_is_named() {
        let err = ConfigFile::from_json(r#"{"sim": {"fps": -200}}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "sim.fps"), "{err}");
        let err = ConfigFile::from_json(r#"{"filter": {"r_var_xyz": [1, 0, 1]}}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "filter.r_var_xyz[1]"));
    }

    #[test]
    fn newer_major_version_rejected() {
        assert!(matches!(
            ConfigFile::from_json(r#"{"version": "2.0"}"#),
            Err(Error::Version { .. })
        ));
        assert!(ConfigFile::from_json(r#"{"version": "1.3"}"#).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let mut c = ConfigFile::default();
        c.filter.p0.pos_var = Some(0.5);
        c.sim.seed = 17;
        let back = ConfigFile::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
