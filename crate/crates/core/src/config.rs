//! JSON run configuration shared by the CLI and the preset registry.
//!
//! Parsing is strict: unknown keys anywhere in the document are rejected.
//! A config can be layered over a preset as an RFC 7396 merge patch.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::model::{ErrorParams, Protocol, SystemParams};
use crate::robustness::{AxisSpec, PhaseGridSpec, SweepSpec};

pub const UNITS_NOTE: &str =
    "all frequencies and rates in units of omega_d; time in units of 1/omega_d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub format: OutputFormat,
}

/// Sweep axes; everything else comes from the enclosing [`RunConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub x: AxisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub units: String,
    pub protocol: Protocol,
    pub params: SystemParams,
    pub errors: ErrorParams,
    pub integrator: IntegratorConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_diagram: Option<PhaseGridSpec>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            units: UNITS_NOTE.to_string(),
            protocol: Protocol::Bare,
            params: SystemParams::default(),
            errors: ErrorParams::default(),
            integrator: IntegratorConfig::default(),
            sweep: None,
            phase_diagram: None,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.errors.validate()?;
        self.integrator.validate()?;
        if self.sweep.is_some() {
            self.sweep_spec()?.validate()?;
        }
        if let Some(pd) = &self.phase_diagram {
            pd.validate()?;
        }
        Ok(())
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let axes = self
            .sweep
            .ok_or_else(|| Error::Config("config has no sweep section".into()))?;
        Ok(SweepSpec {
            x: axes.x,
            y: axes.y,
            base: self.params,
            protocol: self.protocol,
            errors: self.errors,
            integrator: self.integrator,
        })
    }

    /// Strict parse followed by validation.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// Applies `patch` as a JSON merge patch and re-parses strictly.
    pub fn patched(&self, patch: &Value) -> Result<Self> {
        if !patch.is_object() {
            return Err(Error::Config("config patch must be a JSON object".into()));
        }
        let mut doc = self.to_value();
        json_patch::merge(&mut doc, patch);
        RunConfig::from_value(doc)
    }
}
