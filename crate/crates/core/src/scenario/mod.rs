//! Declarative experiments, the closed-loop driver, metrics and telemetry.

mod metrics;
mod parse;
mod script;
mod sim;
mod telemetry;

use serde::{Deserialize, Serialize};

pub use metrics::{compute_metrics, ForceStepMetrics, Metric, MetricsError, MetricsReport};
pub use parse::load_scenario;
pub use script::{ForceScript, GroundContact, RobotDrive, Steps, Waveform, WaveformKind};
pub use sim::{run, RunError, RunOutput};
pub use telemetry::{format_sig9, read_csv, write_csv, write_csv_to, Telemetry, TelemetryRecord};

use crate::controllers::{ForceGains, RecoveryGains, ShadowGains};
use crate::dynamics::{ModelParams, SensorConfig, SpringMode};
use crate::supervisor::{FailureCause, FailureConfig, Mode};

/// Scripted failure: at `time`, force the chosen detector to fire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureInjection {
    pub time: f64,
    pub kind: FailureCause,
}

/// Optional overrides for the initial plant state. Unset entries are derived
/// from the drive and the initial mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConditions {
    pub y_r: Option<f64>,
    pub v_r: Option<f64>,
    pub y_p: Option<f64>,
    pub v_p: Option<f64>,
}

/// Scripted lowering after the hold phase. Off unless `lower_after` is set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HoldConfig {
    /// Seconds spent in Hold before lowering starts.
    pub lower_after: Option<f64>,
    /// Planarizer position to lower to (m).
    pub lower_to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub dt_control: f64,
    pub dt_physics: f64,
    pub params: ModelParams<f64>,
    pub sensors: SensorConfig<f64>,
    pub spring_mode: SpringMode,
    pub initial_mode: Mode,
    pub shadow: ShadowGains<f64>,
    pub force: ForceGains<f64>,
    pub recovery: RecoveryGains<f64>,
    pub hold: HoldConfig,
    pub robot_drive: RobotDrive,
    pub f_ext: ForceScript,
    pub ground: Option<GroundContact>,
    pub f_des: Steps,
    pub failure_injection: Option<FailureInjection>,
    pub failure_cfg: FailureConfig<f64>,
    /// Nominal scripted joint angles (rad).
    pub joint_angles: Vec<(String, f64)>,
    pub init: InitialConditions,
    pub rng_seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            duration: 1.0,
            dt_control: 1e-3,
            dt_physics: 1e-4,
            params: ModelParams::default(),
            sensors: SensorConfig::default(),
            spring_mode: SpringMode::Corrected,
            initial_mode: Mode::Shadowing,
            shadow: ShadowGains::default(),
            force: ForceGains::default(),
            recovery: RecoveryGains::default(),
            hold: HoldConfig::default(),
            robot_drive: RobotDrive::ScriptedPosition(Waveform::constant(0.3)),
            f_ext: ForceScript::default(),
            ground: None,
            f_des: Steps::default(),
            failure_injection: None,
            failure_cfg: FailureConfig::biped_default(),
            joint_angles: Vec::new(),
            init: InitialConditions::default(),
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {field}: {constraint}")]
    Validation { field: String, constraint: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

impl Scenario {
    /// Number of control ticks after the initial one.
    pub fn tick_count(&self) -> usize {
        (self.duration / self.dt_control + 1e-9).floor() as usize
    }

    pub fn substeps(&self) -> usize {
        (self.dt_control / self.dt_physics).round() as usize
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |v: f64, field: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ScenarioError::invalid(field, "must be finite and > 0"))
            }
        };
        positive(self.duration, "duration")?;
        positive(self.dt_control, "dt_control")?;
        positive(self.dt_physics, "dt_physics")?;
        if self.dt_physics > crate::dynamics::MAX_PHYSICS_DT * (1.0 + 1e-9) {
            return Err(ScenarioError::invalid("dt_physics", "must be <= 0.001 s"));
        }
        let ratio = self.dt_control / self.dt_physics;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(ScenarioError::invalid(
                "dt_control",
                "must be an integer multiple of dt_physics",
            ));
        }
        self.params.validate().map_err(|e| match e {
            crate::dynamics::DynamicsError::InvalidParams { field, constraint } => {
                ScenarioError::invalid(format!("params.{field}"), constraint)
            }
            other => ScenarioError::invalid("params", other.to_string()),
        })?;
        let s = &self.sensors;
        if !(s.encoder_resolution >= 0.0 && s.encoder_resolution.is_finite()) {
            return Err(ScenarioError::invalid("sensors.encoder_resolution", ">= 0"));
        }
        if !(s.loadcell_noise_std >= 0.0 && s.loadcell_noise_std.is_finite()) {
            return Err(ScenarioError::invalid("sensors.loadcell_noise_std", ">= 0"));
        }
        positive(s.velocity_cutoff, "sensors.velocity_cutoff")?;
        positive(self.shadow.d, "shadow.d")?;
        if !(self.shadow.k_p >= 0.0) {
            return Err(ScenarioError::invalid("shadow.k_p", ">= 0"));
        }
        positive(self.force.omega_c, "force.omega_c")?;
        positive(self.recovery.tau, "recovery.tau")?;
        positive(self.recovery.v_max, "recovery.v_max")?;
        positive(self.recovery.a_max, "recovery.a_max")?;
        if !(self.recovery.safe_rise >= 0.0) {
            return Err(ScenarioError::invalid("recovery.safe_rise", ">= 0"));
        }
        if !self.initial_mode.is_operational() {
            return Err(ScenarioError::invalid("mode", "initial mode must be shadowing or force"));
        }
        if let RobotDrive::ScriptedPosition(w) = &self.robot_drive {
            for (v, f) in [
                (w.amplitude, "robot.amplitude"),
                (w.frequency, "robot.frequency"),
                (w.phase, "robot.phase"),
                (w.offset, "robot.offset"),
            ] {
                if !v.is_finite() {
                    return Err(ScenarioError::invalid(f, "must be finite"));
                }
            }
        }
        if let Some(g) = &self.ground {
            positive(g.stiffness, "ground.stiffness")?;
            if !(g.damping >= 0.0) {
                return Err(ScenarioError::invalid("ground.damping", ">= 0"));
            }
        }
        self.failure_cfg
            .validate()
            .map_err(|e| ScenarioError::invalid("failure", e.to_string()))?;
        for (name, _) in &self.joint_angles {
            if !self.failure_cfg.joint_limits.iter().any(|l| &l.name == name) {
                return Err(ScenarioError::invalid(
                    "failure.angles",
                    format!("joint '{name}' has no limit in failure.joints"),
                ));
            }
        }
        if let Some(inj) = &self.failure_injection {
            if !(inj.time >= 0.0 && inj.time.is_finite()) {
                return Err(ScenarioError::invalid("failure.inject_time", ">= 0"));
            }
            if inj.kind == FailureCause::JointFault && self.joint_angles.is_empty() {
                return Err(ScenarioError::invalid(
                    "failure.inject_kind",
                    "joint injection needs at least one entry in failure.angles",
                ));
            }
        }
        if let Some(after) = self.hold.lower_after {
            if !(after >= 0.0) {
                return Err(ScenarioError::invalid("hold.lower_after", ">= 0"));
            }
        }
        Ok(())
    }
}
