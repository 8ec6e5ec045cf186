//! Experiment configuration files: a single JSON object selecting one of
//! the batch sweep kinds, its parameters, and the output destination.
//!
//! Units at this boundary are Tesla, Hz and seconds; frequencies are
//! converted to angular frequencies internally. Everything is seedless and
//! fully deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn field_err(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

/// A numeric sweep axis; `points = 1` degenerates to the single value
/// `start`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl Range {
    pub fn validate(&self, field: &'static str) -> Result<(), ConfigError> {
        if self.points < 1 {
            return Err(field_err(field, "points must be at least 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(field_err(field, "start and stop must be finite"));
        }
        if self.scale == Scale::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(field_err(field, "log scale requires positive start and stop"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / n;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * t,
                    Scale::Log => self.start * (self.stop / self.start).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: String,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Shelving efficiency vs magnetic field, with the pulse duration
/// re-optimized at every field value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShelveSweepParams {
    pub field_tesla: Range,
    /// Rabi frequency of the shelving laser in Hz.
    pub rabi_hz: f64,
}

/// Shelving efficiency vs pulse duration at fixed field, with the reduced
/// two-rate model alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShelvePulseParams {
    pub field_tesla: f64,
    pub rabi_hz: f64,
    pub time_s: Range,
}

/// Steady-state fluorescing-level population vs magnetic field during
/// detection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectSweepParams {
    pub field_tesla: Range,
    /// Rabi frequency of the principal detection laser in Hz.
    pub rabi_blue_hz: f64,
    /// Rabi frequency of the repumping laser in Hz.
    pub rabi_ir_hz: f64,
}

/// Cooling on a single red sideband: motional steady state vs η².
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoolSingleParams {
    pub eta_sq: Range,
    /// Linewidth Γ in units of the trap frequency.
    pub gamma: f64,
    pub sideband: u32,
    #[serde(default)]
    pub n_max: Option<usize>,
}

/// Cooling on the m-th plus first sidebands: ground-state deficit vs η².
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoolDoubleParams {
    pub eta_sq: Range,
    pub gamma: f64,
    pub sideband: u32,
    /// Intensity ratio of the first-sideband laser; default 1/(3η²).
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub n_max: Option<usize>,
}

/// Confinement bound η_max vs linewidth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaLimitParams {
    pub gamma: Range,
}

/// Sideband strengths |<f|e^{ikz}|n>|² for f, n up to `max_level`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixTableParams {
    pub eta: f64,
    pub max_level: usize,
}

/// Readout success probability vs repetition count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadoutStatsParams {
    pub epsilon: f64,
    pub ions: u32,
    pub repetitions: Range,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum ExperimentKind {
    ShelveSweep(ShelveSweepParams),
    ShelvePulse(ShelvePulseParams),
    DetectSweep(DetectSweepParams),
    CoolSingle(CoolSingleParams),
    CoolDouble(CoolDoubleParams),
    EtaLimit(EtaLimitParams),
    MatrixTable(MatrixTableParams),
    ReadoutStats(ReadoutStatsParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub kind: ExperimentKind,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_string(), source })?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &'static str, v: f64| -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(field_err(field, format!("must be positive and finite, got {v}")))
            }
        };
        match &self.kind {
            ExperimentKind::ShelveSweep(p) => {
                // zero-field grid points are legal here; they fail per
                // point and come back as flagged rows
                p.field_tesla.validate("field_tesla")?;
                positive("rabi_hz", p.rabi_hz)?;
            }
            ExperimentKind::ShelvePulse(p) => {
                positive("field_tesla", p.field_tesla)?;
                positive("rabi_hz", p.rabi_hz)?;
                p.time_s.validate("time_s")?;
                if p.time_s.start < 0.0 || p.time_s.stop < 0.0 {
                    return Err(field_err("time_s", "durations must be nonnegative"));
                }
            }
            ExperimentKind::DetectSweep(p) => {
                p.field_tesla.validate("field_tesla")?;
                positive("rabi_blue_hz", p.rabi_blue_hz)?;
                if !(p.rabi_ir_hz >= 0.0 && p.rabi_ir_hz.is_finite()) {
                    return Err(field_err("rabi_ir_hz", "must be nonnegative"));
                }
            }
            ExperimentKind::CoolSingle(p) => {
                p.eta_sq.validate("eta_sq")?;
                if p.eta_sq.start < 0.0 || p.eta_sq.stop < 0.0 {
                    return Err(field_err("eta_sq", "must be nonnegative"));
                }
                positive("gamma", p.gamma)?;
                if p.sideband < 1 {
                    return Err(field_err("sideband", "must be at least 1"));
                }
                if let Some(n) = p.n_max {
                    if n < 1 {
                        return Err(field_err("n_max", "must be at least 1"));
                    }
                }
            }
            ExperimentKind::CoolDouble(p) => {
                p.eta_sq.validate("eta_sq")?;
                if !(p.eta_sq.start > 0.0 && p.eta_sq.stop > 0.0) {
                    return Err(field_err(
                        "eta_sq",
                        "must be positive (the default alpha = 1/(3 eta^2) diverges at 0)",
                    ));
                }
                positive("gamma", p.gamma)?;
                if p.sideband < 1 {
                    return Err(field_err("sideband", "must be at least 1"));
                }
                if let Some(a) = p.alpha {
                    if !(a >= 0.0 && a.is_finite()) {
                        return Err(field_err("alpha", "must be nonnegative"));
                    }
                }
            }
            ExperimentKind::EtaLimit(p) => {
                p.gamma.validate("gamma")?;
                if !(p.gamma.start > 0.0 && p.gamma.stop > 0.0) {
                    return Err(field_err("gamma", "must be positive"));
                }
            }
            ExperimentKind::MatrixTable(p) => {
                if !(p.eta.is_finite()) {
                    return Err(field_err("eta", "must be finite"));
                }
                if p.max_level > 300 {
                    return Err(field_err("max_level", "must be at most 300"));
                }
            }
            ExperimentKind::ReadoutStats(p) => {
                if !(p.epsilon > 0.0 && p.epsilon <= 1.0) {
                    return Err(field_err("epsilon", "must lie in (0, 1]"));
                }
                if p.ions < 1 {
                    return Err(field_err("ions", "must be at least 1"));
                }
                p.repetitions.validate("repetitions")?;
                if p.repetitions.start < 1.0 {
                    return Err(field_err("repetitions", "must start at 1 or above"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_values_linear_and_log() {
        let r = Range { start: 0.0, stop: 1.0, points: 5, scale: Scale::Linear };
        assert_eq!(r.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let r = Range { start: 1.0, stop: 100.0, points: 3, scale: Scale::Log };
        let v = r.values();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(v.len(), 3);
        let r = Range { start: 7.0, stop: 9.0, points: 1, scale: Scale::Linear };
        assert_eq!(r.values(), vec![7.0]);
    }

    #[test]
    fn parses_a_full_config() {
        let text = r#"{
            "kind": "shelve_sweep",
            "parameters": {
                "field_tesla": {"start": 1e-4, "stop": 0.05, "points": 40, "scale": "log"},
                "rabi_hz": 2.15e7
            },
            "output": {"path": "out.csv", "format": "csv"}
        }"#;
        let cfg = ExperimentConfig::from_str(text).unwrap();
        match &cfg.kind {
            ExperimentKind::ShelveSweep(p) => {
                assert_eq!(p.field_tesla.points, 40);
                assert_eq!(p.rabi_hz, 2.15e7);
            }
            other => panic!("wrong kind: {other:?}"),
        }
        assert_eq!(cfg.output.format, OutputFormat::Csv);
    }

    #[test]
    fn rejects_bad_fields_with_field_name() {
        let text = r#"{
            "kind": "readout_stats",
            "parameters": {
                "epsilon": 1.5,
                "ions": 2,
                "repetitions": {"start": 1, "stop": 100, "points": 100}
            },
            "output": {"path": "out.csv"}
        }"#;
        let err = ExperimentConfig::from_str(text).unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");

        let text = r#"{
            "kind": "cool_double",
            "parameters": {
                "eta_sq": {"start": 0.0, "stop": 3.0, "points": 10},
                "gamma": 0.1,
                "sideband": 2
            },
            "output": {"path": "out.csv"}
        }"#;
        let err = ExperimentConfig::from_str(text).unwrap_err();
        assert!(err.to_string().contains("eta_sq"), "{err}");
    }

    #[test]
    fn unknown_kind_is_a_parse_error() {
        let text = r#"{"kind": "fly_to_the_moon", "parameters": {}, "output": {"path": "x"}}"#;
        assert!(matches!(
            ExperimentConfig::from_str(text),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{
            "kind": "cool_double",
            "parameters": {
                "eta_sq": {"start": 0.05, "stop": 3.0, "points": 60},
                "gamma": 0.1,
                "sideband": 3
            },
            "output": {"path": "fig.csv", "format": "json"}
        }"#;
        let cfg = ExperimentConfig::from_str(text).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        let again = ExperimentConfig::from_str(&echoed).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), echoed);
    }
}
