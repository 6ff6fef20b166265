use std::path::Path;

use scires_core::ingest::CleaningPolicy;
use scires_core::response::{validate_resources, InternalResource};
use scires_core::timeline::TimelineParams;
use serde::{Deserialize, Serialize};

use crate::error::AppError;

const DEFAULT_CONFIG: &str = include_str!("../../../config/default.json");

/// Runtime settings shared by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    /// SKUs with availability below this are candidates for disruption.
    pub availability_threshold: u64,
    #[serde(default)]
    pub cleaning_policy: CleaningPolicy,
    #[serde(default)]
    pub internal_resources: Vec<InternalResource>,
    /// Days after the disruption at which external supply lands without a
    /// recommendation.
    pub baseline_recovery_delay: f64,
    pub timeline: TimelineDefaults,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineDefaults {
    pub nominal_performance: f64,
    pub initial_drop: f64,
    pub slow_decline_rate: f64,
    pub steep_decline_rate: f64,
    pub recovery_ramp_rate: f64,
    pub horizon: f64,
}

impl TimelineDefaults {
    /// Parameters with the event-specific fields left at the disruption time.
    pub fn params(&self) -> TimelineParams {
        TimelineParams {
            nominal_performance: self.nominal_performance,
            t_disrupt: 0.0,
            initial_drop: self.initial_drop,
            internal_coverage: 0.0,
            slow_decline_rate: self.slow_decline_rate,
            steep_decline_rate: self.steep_decline_rate,
            external_arrival: 0.0,
            recovery_ramp_rate: self.recovery_ramp_rate,
            horizon: self.horizon,
        }
    }
}

impl Default for AppConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("bundled config parses")
    }
}

impl AppConfig {
    pub fn validate(&self) -> Result<(), AppError> {
        validate_resources(&self.internal_resources).map_err(|e| AppError::validation(e.to_string()))?;
        if !(self.baseline_recovery_delay.is_finite() && self.baseline_recovery_delay >= 0.0) {
            return Err(AppError::validation(
                "baseline_recovery_delay must be a finite value >= 0",
            ));
        }
        let probe = TimelineParams {
            external_arrival: self.timeline.horizon.min(self.baseline_recovery_delay),
            ..self.timeline.params()
        };
        probe.validate().map_err(|e| AppError::validation(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, AppError> {
        let config = match path {
            Some(p) => read_json(p)?,
            None => AppConfig::default(),
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| AppError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AppError::input(format!("{}: {e}", path.display())))
}
