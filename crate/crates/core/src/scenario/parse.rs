//! Line-oriented `key = value` scenario format.
//!
//! ```text
//! # comment
//! name = shadow
//! duration = 10
//! params.M = 11.07
//! shadow.k_p = 5
//! f_des.steps = 0:10, 1:20, 2:50
//! ```

use std::collections::HashSet;

use super::{
    FailureInjection, ForceScript, GroundContact, RobotDrive, Scenario, ScenarioError, Steps,
    Waveform, WaveformKind,
};
use crate::supervisor::{FailureCause, JointLimit, MonitoredPoint, Mode, SpfInitSource};

/// Parses and validates a scenario document. Missing keys take their
/// defaults; unknown or repeated keys are rejected.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut sc = Scenario::default();
    let mut seen = HashSet::new();
    let mut robot = WaveBuilder::default();
    let mut f_ext = WaveBuilder::default();
    let mut ground = GroundBuilder::default();
    let mut inject_time = None;
    let mut inject_kind = None;
    let mut has_duration = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ScenarioError::Parse {
            line,
            message: format!("expected 'key = value', found '{content}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ScenarioError::Parse {
                line,
                message: "empty key".into(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ScenarioError::Parse {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
        let v = Value { line, key, raw: value };

        match key {
            "name" => sc.name = v.string()?,
            "duration" => {
                sc.duration = v.number()?;
                has_duration = true;
            }
            "dt_control" => sc.dt_control = v.number()?,
            "dt_physics" => sc.dt_physics = v.number()?,
            "mode" => sc.initial_mode = v.parse_with(|s| s.parse::<Mode>())?,
            "spring_mode" => sc.spring_mode = v.parse_with(|s| s.parse())?,
            "seed" => sc.rng_seed = v.parse_with(|s| s.parse::<u64>().map_err(|e| e.to_string()))?,

            "params.M" => sc.params.mass = v.number()?,
            "params.M_h" => sc.params.hanging_mass = v.number()?,
            "params.g" => sc.params.gravity = v.number()?,
            "params.k" => sc.params.stiffness = v.number()?,
            "params.b" => sc.params.damping = v.number()?,
            "params.epsilon" => sc.params.blend_width = v.number()?,
            "params.v_motor_max" => sc.params.v_motor_max = v.number()?,
            "params.F_cable_max" => sc.params.f_cable_max = v.number()?,
            "params.y_travel" => sc.params.y_travel = v.number()?,
            "params.motor_lag" => {
                let tc = v.number()?;
                sc.params.motor_time_constant = (tc > 0.0).then_some(tc);
            }

            "sensors.encoder_resolution" => sc.sensors.encoder_resolution = v.number()?,
            "sensors.loadcell_noise_std" => sc.sensors.loadcell_noise_std = v.number()?,
            "sensors.velocity_cutoff" => sc.sensors.velocity_cutoff = v.number()?,

            "shadow.d" => sc.shadow.d = v.number()?,
            "shadow.k_p" => sc.shadow.k_p = v.number()?,
            "shadow.k_ff" => sc.shadow.k_ff = v.number()?,

            "force.omega_c" => sc.force.omega_c = v.number()?,
            "force.k_p" => sc.force.k_p = v.number()?,
            "force.k_ff" => sc.force.k_ff = v.number()?,

            "recovery.tau" => sc.recovery.tau = v.number()?,
            "recovery.v_max" => sc.recovery.v_max = v.number()?,
            "recovery.a_max" => sc.recovery.a_max = v.number()?,
            "recovery.k_p" => sc.recovery.k_p = v.number()?,
            "recovery.k_ff" => sc.recovery.k_ff = v.number()?,
            "recovery.safe_rise" => sc.recovery.safe_rise = v.number()?,
            "recovery.init_source" => {
                sc.failure_cfg.init_source = v.parse_with(|s| match s {
                    "planarizer" => Ok(SpfInitSource::Planarizer),
                    "robot" => Ok(SpfInitSource::Robot),
                    other => Err(format!("expected planarizer|robot, found '{other}'")),
                })?
            }

            "hold.lower_after" => sc.hold.lower_after = Some(v.number()?),
            "hold.lower_to" => sc.hold.lower_to = v.number()?,

            "robot.drive" => {
                robot.drive = Some(v.parse_with(|s| match s {
                    "free" => Ok(false),
                    "scripted" => Ok(true),
                    other => Err(format!("expected free|scripted, found '{other}'")),
                })?)
            }
            "robot.waveform" => robot.kind = Some(v.waveform_kind()?),
            "robot.amplitude" => robot.amplitude = Some(v.number()?),
            "robot.frequency" => robot.frequency = Some(v.number()?),
            "robot.phase" => robot.phase = Some(v.number()?),
            "robot.offset" => robot.offset = Some(v.number()?),

            "f_ext.waveform" => f_ext.kind = Some(v.waveform_kind()?),
            "f_ext.amplitude" => f_ext.amplitude = Some(v.number()?),
            "f_ext.frequency" => f_ext.frequency = Some(v.number()?),
            "f_ext.phase" => f_ext.phase = Some(v.number()?),
            "f_ext.offset" => f_ext.offset = Some(v.number()?),
            "f_ext.steps" => f_ext.steps = Some(v.steps()?),

            "ground.stand_height" => ground.stand_height = Some(v.number()?),
            "ground.stiffness" => ground.stiffness = Some(v.number()?),
            "ground.damping" => ground.damping = Some(v.number()?),

            "f_des.steps" => sc.f_des = v.steps()?,

            "failure.min_height" => sc.failure_cfg.min_height = v.number()?,
            "failure.points" => {
                sc.failure_cfg.monitored_points = v
                    .list(2)?
                    .into_iter()
                    .map(|f| Ok(MonitoredPoint::new(f[0].to_string(), v.num(f[1])?)))
                    .collect::<Result<_, _>>()?
            }
            "failure.joints" => {
                sc.failure_cfg.joint_limits = v
                    .list(3)?
                    .into_iter()
                    .map(|f| Ok(JointLimit::new(f[0].to_string(), v.num(f[1])?, v.num(f[2])?)))
                    .collect::<Result<_, _>>()?
            }
            "failure.angles" => {
                sc.joint_angles = v
                    .list(2)?
                    .into_iter()
                    .map(|f| Ok((f[0].to_string(), v.num(f[1])?)))
                    .collect::<Result<_, _>>()?
            }
            "failure.inject_time" => inject_time = Some(v.number()?),
            "failure.inject_kind" => {
                inject_kind = Some(v.parse_with(|s| match s {
                    "ground" => Ok(FailureCause::GroundProximity),
                    "joint" => Ok(FailureCause::JointFault),
                    other => Err(format!("expected ground|joint, found '{other}'")),
                })?)
            }

            "init.y_r" => sc.init.y_r = Some(v.number()?),
            "init.v_r" => sc.init.v_r = Some(v.number()?),
            "init.y_p" => sc.init.y_p = Some(v.number()?),
            "init.v_p" => sc.init.v_p = Some(v.number()?),

            unknown => {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("unknown key '{unknown}'"),
                })
            }
        }
    }

    if !has_duration {
        return Err(ScenarioError::invalid("duration", "required"));
    }
    sc.sensors.rng_seed = sc.rng_seed;
    sc.robot_drive = robot.into_drive()?;
    sc.f_ext = f_ext.into_force_script()?;
    sc.ground = ground.build()?;
    sc.failure_injection = match (inject_time, inject_kind) {
        (Some(time), kind) => Some(FailureInjection {
            time,
            kind: kind.unwrap_or(FailureCause::GroundProximity),
        }),
        (None, Some(_)) => {
            return Err(ScenarioError::invalid(
                "failure.inject_time",
                "required when failure.inject_kind is set",
            ))
        }
        (None, None) => None,
    };
    sc.validate()?;
    Ok(sc)
}

struct Value<'a> {
    line: usize,
    key: &'a str,
    raw: &'a str,
}

impl Value<'_> {
    fn err(&self, message: impl std::fmt::Display) -> ScenarioError {
        ScenarioError::Parse {
            line: self.line,
            message: format!("{}: {message}", self.key),
        }
    }

    fn string(&self) -> Result<String, ScenarioError> {
        if self.raw.is_empty() {
            return Err(self.err("empty value"));
        }
        Ok(self.raw.to_string())
    }

    fn num(&self, s: &str) -> Result<f64, ScenarioError> {
        let x: f64 = s
            .trim()
            .parse()
            .map_err(|_| self.err(format!("expected a number, found '{}'", s.trim())))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.err("number must be finite"))
        }
    }

    fn number(&self) -> Result<f64, ScenarioError> {
        self.num(self.raw)
    }

    fn parse_with<R>(&self, f: impl FnOnce(&str) -> Result<R, String>) -> Result<R, ScenarioError> {
        f(self.raw).map_err(|e| self.err(e))
    }

    fn waveform_kind(&self) -> Result<WaveformKind, ScenarioError> {
        self.parse_with(|s| match s {
            "constant" => Ok(WaveformKind::Constant),
            "sine" => Ok(WaveformKind::Sine),
            other => Err(format!("expected constant|sine, found '{other}'")),
        })
    }

    /// Comma-separated entries of `arity` colon-separated fields.
    fn list(&self, arity: usize) -> Result<Vec<Vec<&str>>, ScenarioError> {
        if self.raw.is_empty() {
            return Ok(Vec::new());
        }
        self.raw
            .split(',')
            .map(|entry| {
                let fields: Vec<&str> = entry.split(':').map(str::trim).collect();
                if fields.len() != arity || fields.iter().any(|f| f.is_empty()) {
                    Err(self.err(format!(
                        "entry '{}' should have {arity} ':'-separated fields",
                        entry.trim()
                    )))
                } else {
                    Ok(fields)
                }
            })
            .collect()
    }

    fn steps(&self) -> Result<Steps, ScenarioError> {
        let points = self
            .list(2)?
            .into_iter()
            .map(|f| Ok((self.num(f[0])?, self.num(f[1])?)))
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(Steps::new(points))
    }
}

#[derive(Default)]
struct WaveBuilder {
    drive: Option<bool>,
    kind: Option<WaveformKind>,
    amplitude: Option<f64>,
    frequency: Option<f64>,
    phase: Option<f64>,
    offset: Option<f64>,
    steps: Option<Steps>,
}

impl WaveBuilder {
    fn has_wave_fields(&self) -> bool {
        self.kind.is_some()
            || self.amplitude.is_some()
            || self.frequency.is_some()
            || self.phase.is_some()
            || self.offset.is_some()
    }

    fn waveform(&self, default_offset: f64) -> Waveform {
        Waveform {
            kind: self.kind.unwrap_or(WaveformKind::Constant),
            amplitude: self.amplitude.unwrap_or(0.0),
            frequency: self.frequency.unwrap_or(0.0),
            phase: self.phase.unwrap_or(0.0),
            offset: self.offset.unwrap_or(default_offset),
        }
    }

    fn into_drive(self) -> Result<RobotDrive, ScenarioError> {
        match self.drive {
            Some(false) => {
                if self.has_wave_fields() {
                    return Err(ScenarioError::invalid(
                        "robot.waveform",
                        "waveform keys require robot.drive = scripted",
                    ));
                }
                Ok(RobotDrive::FreeDynamics)
            }
            Some(true) | None => Ok(RobotDrive::ScriptedPosition(self.waveform(0.3))),
        }
    }

    fn into_force_script(self) -> Result<ForceScript, ScenarioError> {
        match self.steps {
            Some(_) if self.has_wave_fields() => Err(ScenarioError::invalid(
                "f_ext.steps",
                "use either f_ext.steps or waveform keys, not both",
            )),
            Some(steps) => Ok(ForceScript::Steps(steps)),
            None => Ok(ForceScript::Waveform(self.waveform(0.0))),
        }
    }
}

#[derive(Default)]
struct GroundBuilder {
    stand_height: Option<f64>,
    stiffness: Option<f64>,
    damping: Option<f64>,
}

impl GroundBuilder {
    fn build(self) -> Result<Option<GroundContact>, ScenarioError> {
        match self.stand_height {
            None if self.stiffness.is_some() || self.damping.is_some() => Err(
                ScenarioError::invalid("ground.stand_height", "required when ground keys are set"),
            ),
            None => Ok(None),
            Some(stand_height) => Ok(Some(GroundContact {
                stand_height,
                stiffness: self.stiffness.unwrap_or(2.0e5),
                damping: self.damping.unwrap_or(2.0e3),
            })),
        }
    }
}
