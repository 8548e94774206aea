//! Failure detection and the operating-mode state machine.
//!
//! Modes only move forward within a run: Shadowing or ForceControl, then
//! Recovery once a failure latches, then Hold once the lift trajectory has
//! settled on its target.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{spring_force, ModelParams, PlantState, SensorReadings, SpringMode};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Shadowing,
    ForceControl,
    Recovery,
    Hold,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Shadowing => "shadowing",
            Mode::ForceControl => "force",
            Mode::Recovery => "recovery",
            Mode::Hold => "hold",
        }
    }

    /// Modes in which a failure can still be detected.
    pub fn is_operational(self) -> bool {
        matches!(self, Mode::Shadowing | Mode::ForceControl)
    }

    fn rank(self) -> u8 {
        match self {
            Mode::Shadowing | Mode::ForceControl => 0,
            Mode::Recovery => 1,
            Mode::Hold => 2,
        }
    }

    /// Whether `self -> next` is an allowed transition (including staying put).
    pub fn may_transition_to(self, next: Mode) -> bool {
        if self == next {
            return true;
        }
        matches!(
            (self, next),
            (Mode::Shadowing | Mode::ForceControl, Mode::Recovery) | (Mode::Recovery, Mode::Hold)
        )
    }

    /// Checks that a mode sequence is a prefix of `(Shadowing|Force)* Recovery* Hold*`.
    pub fn sequence_is_monotone(modes: impl IntoIterator<Item = Mode>) -> bool {
        let mut prev: Option<Mode> = None;
        for m in modes {
            if let Some(p) = prev {
                if m.rank() < p.rank() || (m.rank() == 0 && m != p) {
                    return false;
                }
            }
            prev = Some(m);
        }
        true
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shadowing" => Ok(Mode::Shadowing),
            "force" => Ok(Mode::ForceControl),
            "recovery" => Ok(Mode::Recovery),
            "hold" => Ok(Mode::Hold),
            other => Err(format!(
                "unknown mode '{other}' (expected shadowing|force|recovery|hold)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    GroundProximity,
    JointFault,
}

impl FailureCause {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureCause::GroundProximity => "ground_proximity",
            FailureCause::JointFault => "joint_fault",
        }
    }
}

/// Point on the robot whose height is checked against the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoredPoint<T> {
    pub name: String,
    /// Height relative to the robot reference height (m).
    pub offset: T,
}

impl<T: Real> MonitoredPoint<T> {
    pub fn new(name: impl Into<String>, offset: T) -> Self {
        Self {
            name: name.into(),
            offset,
        }
    }

    pub fn height(&self, y_r: T) -> T {
        y_r + self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLimit<T> {
    pub name: String,
    pub low: T,
    pub high: T,
}

impl<T: Real> JointLimit<T> {
    pub fn new(name: impl Into<String>, low: T, high: T) -> Self {
        Self {
            name: name.into(),
            low,
            high,
        }
    }
}

/// Where the recovery trajectory takes its initial position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpfInitSource {
    #[default]
    Planarizer,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureConfig<T> {
    pub monitored_points: Vec<MonitoredPoint<T>>,
    /// Failure when the lowest point is strictly below this height (m).
    pub min_height: T,
    pub joint_limits: Vec<JointLimit<T>>,
    pub init_source: SpfInitSource,
}

impl<T: Real> FailureConfig<T> {
    /// Knees and top body corners of a planar biped, heights relative to the
    /// hip reference.
    pub fn biped_default() -> Self {
        Self {
            monitored_points: vec![
                MonitoredPoint::new("knee_left", T::lit(-0.1)),
                MonitoredPoint::new("knee_right", T::lit(-0.1)),
                MonitoredPoint::new("body_front", T::lit(0.05)),
                MonitoredPoint::new("body_rear", T::lit(0.05)),
            ],
            min_height: T::lit(0.05),
            joint_limits: Vec::new(),
            init_source: SpfInitSource::Planarizer,
        }
    }

    pub fn validate(&self) -> Result<(), SupervisorError> {
        if self.monitored_points.is_empty() {
            return Err(SupervisorError::EmptyPointList);
        }
        if !(self.min_height >= T::zero()) {
            return Err(SupervisorError::InvalidConfig(
                "failure.min_height must be >= 0".into(),
            ));
        }
        for l in &self.joint_limits {
            if !(l.low < l.high) {
                return Err(SupervisorError::InvalidConfig(format!(
                    "joint '{}' needs low < high",
                    l.name
                )));
            }
        }
        Ok(())
    }

    pub fn point_heights(&self, y_r: T) -> Vec<T> {
        self.monitored_points.iter().map(|p| p.height(y_r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SupervisorError {
    #[error("no monitored points configured")]
    EmptyPointList,
    #[error("joint '{0}' has no configured limit")]
    UnknownJoint(String),
    #[error("invalid failure configuration: {0}")]
    InvalidConfig(String),
}

/// True iff the lowest point is strictly below `min_height`.
pub fn check_ground_failure<T: Real>(
    point_heights: &[T],
    min_height: T,
) -> Result<bool, SupervisorError> {
    let lowest = point_heights
        .iter()
        .copied()
        .reduce(T::min)
        .ok_or(SupervisorError::EmptyPointList)?;
    Ok(lowest < min_height)
}

/// True iff any joint angle lies outside its configured range.
pub fn check_joint_fault<T: Real, S: AsRef<str>>(
    joint_angles: &[(S, T)],
    cfg: &FailureConfig<T>,
) -> Result<bool, SupervisorError> {
    let mut fault = false;
    for (name, angle) in joint_angles {
        let name = name.as_ref();
        let limit = cfg
            .joint_limits
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| SupervisorError::UnknownJoint(name.to_string()))?;
        fault |= *angle < limit.low || *angle > limit.high;
    }
    Ok(fault)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Robot acceleration at or below the lift bound.
    AccelBound,
    /// Spring went slack after engaging during the lift.
    LiftOff,
    /// Spring force above the cable limit.
    CableForce,
    /// A position hit an end stop.
    TravelLimit,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::AccelBound => "accel_bound",
            ViolationKind::LiftOff => "lift_off",
            ViolationKind::CableForce => "cable_force",
            ViolationKind::TravelLimit => "travel_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation<T> {
    pub t: T,
    pub kind: ViolationKind,
    pub value: T,
}

/// Scripted or measured auxiliary signals used for failure detection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuxSignals<T> {
    pub point_heights: Vec<T>,
    pub joint_angles: Vec<(String, T)>,
}

/// Recovery trajectory state the supervisor needs to decide on Hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySnapshot<T> {
    pub y_des: T,
    pub v_des: T,
    pub target: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisorInputs<T> {
    pub readings: SensorReadings<T>,
    pub aux: AuxSignals<T>,
    pub trajectory: Option<TrajectorySnapshot<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisorActions<T> {
    pub halt_robot: bool,
    /// Initial `(position, velocity)` for the recovery set-point filter.
    pub init_spf: Option<(T, T)>,
    pub active_mode: Mode,
    pub transition: Option<(Mode, Mode)>,
}

/// Hold is entered once the trajectory is within this distance of its target (m).
pub const HOLD_POSITION_TOL: f64 = 1e-3;
/// ... and slower than this (m/s).
pub const HOLD_VELOCITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisorState<T> {
    pub mode: Mode,
    pub failure_cause: Option<FailureCause>,
    pub failure_time: Option<T>,
    /// Measured robot height when the failure latched.
    pub failure_height: Option<T>,
    pub robot_motors_halted: bool,
    /// Spring has engaged at least once since the failure.
    pub lift_engaged: bool,
    pub violations: Vec<Violation<T>>,
}

impl<T: Real> SupervisorState<T> {
    pub fn new(initial: Mode) -> Self {
        Self {
            mode: initial,
            failure_cause: None,
            failure_time: None,
            failure_height: None,
            robot_motors_halted: matches!(initial, Mode::Recovery | Mode::Hold),
            lift_engaged: false,
            violations: Vec::new(),
        }
    }

    /// One control tick of failure detection and mode logic.
    pub fn step(
        &mut self,
        inputs: &SupervisorInputs<T>,
        cfg: &FailureConfig<T>,
        t: T,
    ) -> Result<SupervisorActions<T>, SupervisorError> {
        let mut actions = SupervisorActions {
            halt_robot: self.robot_motors_halted,
            init_spf: None,
            active_mode: self.mode,
            transition: None,
        };
        match self.mode {
            Mode::Shadowing | Mode::ForceControl => {
                let ground = check_ground_failure(&inputs.aux.point_heights, cfg.min_height)?;
                let joint = check_joint_fault(&inputs.aux.joint_angles, cfg)?;
                let cause = if ground {
                    Some(FailureCause::GroundProximity)
                } else if joint {
                    Some(FailureCause::JointFault)
                } else {
                    None
                };
                if let Some(cause) = cause {
                    let r = &inputs.readings;
                    let from = self.mode;
                    self.failure_cause = Some(cause);
                    self.failure_time = Some(t);
                    self.failure_height = Some(r.y_r_meas);
                    self.robot_motors_halted = true;
                    self.mode = Mode::Recovery;
                    actions.halt_robot = true;
                    actions.init_spf = Some(match cfg.init_source {
                        SpfInitSource::Planarizer => (r.y_p_meas, r.v_p_est),
                        SpfInitSource::Robot => (r.y_r_meas, r.v_r_est),
                    });
                    actions.transition = Some((from, Mode::Recovery));
                }
            }
            Mode::Recovery => {
                if let Some(traj) = inputs.trajectory {
                    let settled = (traj.y_des - traj.target).abs() < T::lit(HOLD_POSITION_TOL)
                        && traj.v_des.abs() < T::lit(HOLD_VELOCITY_TOL);
                    if settled {
                        self.mode = Mode::Hold;
                        actions.transition = Some((Mode::Recovery, Mode::Hold));
                    }
                }
            }
            Mode::Hold => {}
        }
        actions.active_mode = self.mode;
        Ok(actions)
    }

    /// Runtime constraint monitoring. Records violations, never acts.
    ///
    /// During the lift (Recovery or Hold) the robot acceleration must stay
    /// above `bound` and the spring must not go slack once it has engaged.
    /// The cable force limit is checked in every mode.
    pub fn monitor(
        &mut self,
        state: &PlantState<T>,
        accel_r: T,
        params: &ModelParams<T>,
        spring_mode: SpringMode,
        bound: T,
    ) {
        let dy = state.deflection();
        let f_sp = spring_force(dy, state.deflection_rate(), params, spring_mode);
        if matches!(self.mode, Mode::Recovery | Mode::Hold) {
            if accel_r <= bound {
                self.record(state.t, ViolationKind::AccelBound, accel_r);
            }
            if dy > T::zero() {
                self.lift_engaged = true;
            } else if self.lift_engaged {
                self.record(state.t, ViolationKind::LiftOff, dy);
            }
        }
        if f_sp > params.f_cable_max {
            self.record(state.t, ViolationKind::CableForce, f_sp);
        }
    }

    pub fn record(&mut self, t: T, kind: ViolationKind, value: T) {
        self.violations.push(Violation { t, kind, value });
    }

    pub fn violation_count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FailureConfig<f64> {
        FailureConfig {
            joint_limits: vec![JointLimit::new("knee", 0.1, 2.8)],
            ..FailureConfig::biped_default()
        }
    }

    fn inputs(heights: Vec<f64>, knee: f64) -> SupervisorInputs<f64> {
        SupervisorInputs {
            readings: SensorReadings {
                y_r_meas: 0.3,
                y_p_meas: 0.28,
                v_r_est: -0.05,
                v_p_est: -0.04,
                f_raw: 0.0,
            },
            aux: AuxSignals {
                point_heights: heights,
                joint_angles: vec![("knee".to_string(), knee)],
            },
            trajectory: None,
        }
    }

    #[test]
    fn ground_check() {
        assert!(check_ground_failure(&[0.05, 0.12, 0.30, 0.31], 0.06).unwrap());
        assert!(!check_ground_failure(&[0.10, 0.12], 0.06).unwrap());
        assert!(!check_ground_failure(&[0.06], 0.06).unwrap());
        assert_eq!(
            check_ground_failure::<f64>(&[], 0.06),
            Err(SupervisorError::EmptyPointList)
        );
    }

    #[test]
    fn joint_check() {
        let c = cfg();
        assert!(!check_joint_fault(&[("knee", 1.2)], &c).unwrap());
        assert!(check_joint_fault(&[("knee", 2.9)], &c).unwrap());
        assert!(check_joint_fault(&[("knee", 0.05)], &c).unwrap());
        assert!(!check_joint_fault::<f64, &str>(&[], &c).unwrap());
        assert_eq!(
            check_joint_fault(&[("hip", 1.0)], &c),
            Err(SupervisorError::UnknownJoint("hip".into()))
        );
    }

    #[test]
    fn ground_failure_latches_recovery() {
        let mut sup = SupervisorState::new(Mode::Shadowing);
        let a = sup.step(&inputs(vec![0.04, 0.2], 1.0), &cfg(), 2.0).unwrap();
        assert_eq!(sup.mode, Mode::Recovery);
        assert_eq!(sup.failure_cause, Some(FailureCause::GroundProximity));
        assert_eq!(sup.failure_time, Some(2.0));
        assert!(sup.robot_motors_halted && a.halt_robot);
        assert_eq!(a.init_spf, Some((0.28, -0.04)));
        assert_eq!(a.transition, Some((Mode::Shadowing, Mode::Recovery)));
    }

    #[test]
    fn simultaneous_failures_record_ground() {
        let mut sup = SupervisorState::new(Mode::ForceControl);
        sup.step(&inputs(vec![0.0], 3.0), &cfg(), 1.0).unwrap();
        assert_eq!(sup.failure_cause, Some(FailureCause::GroundProximity));
    }

    #[test]
    fn robot_init_source() {
        let c = FailureConfig {
            init_source: SpfInitSource::Robot,
            ..cfg()
        };
        let mut sup = SupervisorState::new(Mode::Shadowing);
        let a = sup.step(&inputs(vec![0.5], 3.0), &c, 1.0).unwrap();
        assert_eq!(sup.failure_cause, Some(FailureCause::JointFault));
        assert_eq!(a.init_spf, Some((0.3, -0.05)));
    }

    #[test]
    fn latched_failure_ignores_new_faults() {
        let mut sup = SupervisorState::new(Mode::Shadowing);
        sup.step(&inputs(vec![0.0], 1.0), &cfg(), 2.0).unwrap();
        let before = sup.clone();
        let a = sup.step(&inputs(vec![0.5], 3.0), &cfg(), 2.1).unwrap();
        assert_eq!(sup, before);
        assert_eq!(a.init_spf, None);
        assert_eq!(a.active_mode, Mode::Recovery);
    }

    #[test]
    fn no_failure_passes_through() {
        let mut sup = SupervisorState::new(Mode::Shadowing);
        let before = sup.clone();
        let a = sup.step(&inputs(vec![0.2, 0.3], 1.0), &cfg(), 0.5).unwrap();
        assert_eq!(sup, before);
        assert!(!a.halt_robot);
        assert_eq!(a.transition, None);
    }

    #[test]
    fn recovery_settles_into_hold() {
        let mut sup = SupervisorState::new(Mode::Shadowing);
        sup.step(&inputs(vec![0.0], 1.0), &cfg(), 2.0).unwrap();
        let mut i = inputs(vec![0.0], 1.0);
        i.trajectory = Some(TrajectorySnapshot {
            y_des: 0.395,
            v_des: 0.01,
            target: 0.4,
        });
        sup.step(&i, &cfg(), 2.2).unwrap();
        assert_eq!(sup.mode, Mode::Recovery);
        i.trajectory = Some(TrajectorySnapshot {
            y_des: 0.3995,
            v_des: 0.0005,
            target: 0.4,
        });
        let a = sup.step(&i, &cfg(), 2.5).unwrap();
        assert_eq!(sup.mode, Mode::Hold);
        assert_eq!(a.transition, Some((Mode::Recovery, Mode::Hold)));
        assert!(sup.robot_motors_halted);
        assert_eq!(sup.failure_cause, Some(FailureCause::GroundProximity));
    }

    fn plant(dy: f64) -> PlantState<f64> {
        PlantState {
            t: 2.1,
            y_r: 0.3,
            v_r: 0.0,
            y_p: 0.3 + dy,
            v_p: 0.0,
        }
    }

    #[test]
    fn monitor_accel_only_during_lift() {
        let params = ModelParams::default();
        let mut sup = SupervisorState::new(Mode::Recovery);
        sup.monitor(&plant(0.01), -7.0, &params, SpringMode::Corrected, -6.7);
        assert_eq!(sup.violation_count(ViolationKind::AccelBound), 1);
        sup.monitor(&plant(0.01), -5.0, &params, SpringMode::Corrected, -6.7);
        assert_eq!(sup.violation_count(ViolationKind::AccelBound), 1);

        let mut shadow = SupervisorState::new(Mode::Shadowing);
        shadow.monitor(&plant(-0.02), -9.4, &params, SpringMode::Corrected, -6.7);
        assert!(shadow.violations.is_empty());
    }

    #[test]
    fn monitor_lift_off_after_engagement() {
        let params = ModelParams::default();
        let mut sup = SupervisorState::new(Mode::Recovery);
        sup.monitor(&plant(-0.01), 0.0, &params, SpringMode::Corrected, -6.7);
        assert!(sup.violations.is_empty(), "slack before engagement is fine");
        sup.monitor(&plant(0.005), 0.0, &params, SpringMode::Corrected, -6.7);
        sup.monitor(&plant(-0.001), 0.0, &params, SpringMode::Corrected, -6.7);
        assert_eq!(sup.violation_count(ViolationKind::LiftOff), 1);
    }

    #[test]
    fn monitor_cable_force_any_mode() {
        let params = ModelParams::default();
        let mut sup = SupervisorState::new(Mode::ForceControl);
        sup.monitor(&plant(0.1), 0.0, &params, SpringMode::Corrected, -6.7);
        assert_eq!(sup.violation_count(ViolationKind::CableForce), 1);
    }

    #[test]
    fn mode_sequences() {
        use Mode::*;
        assert!(Mode::sequence_is_monotone([Shadowing, Shadowing, Recovery, Hold, Hold]));
        assert!(Mode::sequence_is_monotone([ForceControl, Recovery]));
        assert!(!Mode::sequence_is_monotone([Shadowing, Recovery, Shadowing]));
        assert!(!Mode::sequence_is_monotone([Hold, Recovery]));
        assert!(!Mode::sequence_is_monotone([Shadowing, ForceControl]));
        assert!(Recovery.may_transition_to(Hold));
        assert!(!Recovery.may_transition_to(ForceControl));
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let empty = FailureConfig {
            monitored_points: vec![],
            ..cfg()
        };
        assert_eq!(empty.validate(), Err(SupervisorError::EmptyPointList));
        let bad = FailureConfig {
            joint_limits: vec![JointLimit::new("knee", 2.0, 1.0)],
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }
}
