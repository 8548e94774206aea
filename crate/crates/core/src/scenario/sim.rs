use super::{
    compute_metrics, MetricsError, MetricsReport, RobotDrive, Scenario, Telemetry,
    TelemetryRecord,
};
use crate::controllers::{force_cmd, recovery_cmd, shadowing_cmd};
use crate::dynamics::{
    accel_bound, clamp_travel, damping_bound, modified_gravity, robot_accel, spring_force,
    step_physics, DynamicsError, MotorSegment, PlantState, SensorSuite, TravelAxis,
};
use crate::signal::{LowPass, SetPointFilter};
use crate::supervisor::{
    AuxSignals, FailureCause, Mode, SupervisorInputs, SupervisorState, TrajectorySnapshot,
    ViolationKind,
};

/// Deflection-rate bound used to size the damping margin of the lift constraint (m/s).
pub const LIFT_DEFLECTION_RATE_BOUND: f64 = 0.1;
/// Margin below the minimum height given to an injected ground failure (m).
const INJECTED_GROUND_MARGIN: f64 = 0.01;
/// Excursion past the upper limit given to an injected joint fault (rad).
const INJECTED_JOINT_EXCURSION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub telemetry: Telemetry,
    pub metrics: MetricsReport,
    pub supervisor: SupervisorState<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    /// The integrator blew up. `telemetry` holds every row up to the failure
    /// plus a final row tagged `error:non_finite_state`.
    #[error("non-finite plant state at t = {t} s")]
    NonFiniteState {
        t: f64,
        telemetry: Box<Telemetry>,
        supervisor: Box<SupervisorState<f64>>,
    },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] super::ScenarioError),
    #[error("supervisor: {0}")]
    Supervisor(#[from] crate::supervisor::SupervisorError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

/// Initial plant state: robot from the drive (or overrides), planarizer at
/// the shadowing offset or at the deflection carrying the first desired force.
fn initial_state(sc: &Scenario) -> PlantState<f64> {
    let (y_r, v_r) = match &sc.robot_drive {
        RobotDrive::ScriptedPosition(w) => (w.value(0.0), w.rate(0.0)),
        RobotDrive::FreeDynamics => (sc.init.y_r.unwrap_or(0.3), sc.init.v_r.unwrap_or(0.0)),
    };
    let (y_p, v_p) = match sc.initial_mode {
        Mode::ForceControl => (y_r + sc.f_des.value(0.0) / sc.params.stiffness, v_r),
        _ => (y_r - sc.shadow.d, v_r),
    };
    PlantState {
        t: 0.0,
        y_r,
        v_r,
        y_p: sc.init.y_p.unwrap_or(y_p),
        v_p: sc.init.v_p.unwrap_or(v_p),
    }
}

fn external_force(sc: &Scenario, weight: f64, s: &PlantState<f64>) -> f64 {
    let scripted = sc.f_ext.value(s.t);
    let ground = sc
        .ground
        .map(|g| g.force(s.y_r, s.v_r, weight))
        .unwrap_or(0.0);
    scripted + ground
}

fn aux_signals(sc: &Scenario, y_r_meas: f64, t: f64) -> AuxSignals<f64> {
    let mut aux = AuxSignals {
        point_heights: sc.failure_cfg.point_heights(y_r_meas),
        joint_angles: sc.joint_angles.clone(),
    };
    if let Some(inj) = sc.failure_injection {
        if t >= inj.time - 1e-9 {
            match inj.kind {
                FailureCause::GroundProximity => {
                    if let Some(h) = aux.point_heights.first_mut() {
                        *h = h.min(sc.failure_cfg.min_height - INJECTED_GROUND_MARGIN);
                    }
                }
                FailureCause::JointFault => {
                    if let Some((name, angle)) = aux.joint_angles.first_mut() {
                        if let Some(limit) =
                            sc.failure_cfg.joint_limits.iter().find(|l| &l.name == name)
                        {
                            *angle = limit.high + INJECTED_JOINT_EXCURSION;
                        }
                    }
                }
            }
        }
    }
    aux
}

/// Recovery set-point filter plus the position it is driving toward.
struct Lift {
    spf: SetPointFilter<f64>,
    target: f64,
    hold_since: Option<f64>,
    lowering: bool,
}

/// Executes a scenario. Per control tick: sample sensors, filter, run the
/// supervisor, evaluate the active control law, log, then integrate the
/// plant over `dt_control / dt_physics` substeps.
pub fn run(sc: &Scenario) -> Result<RunOutput, RunError> {
    sc.validate()?;
    let params = &sc.params;
    let dt_c = sc.dt_control;
    let dt_p = dt_c / sc.substeps() as f64;
    let n_ticks = sc.tick_count();
    let weight = modified_gravity(params);
    let bound = accel_bound(params, damping_bound(params.damping, LIFT_DEFLECTION_RATE_BOUND));

    let mut state = initial_state(sc);
    let mut sensors = SensorSuite::primed(sc.sensors, &state);
    let f0 = spring_force(state.deflection(), state.deflection_rate(), params, sc.spring_mode);
    let mut force_filter = LowPass::new(f0, sc.force.omega_c);
    let mut sup = SupervisorState::new(sc.initial_mode);
    let mut lift: Option<Lift> = None;
    let mut records = Vec::with_capacity(n_ticks + 1);
    let mut pending_events: Vec<String> = Vec::new();

    let meta = vec![
        ("scenario".to_string(), sc.name.clone()),
        ("spring_mode".to_string(), sc.spring_mode.to_string()),
        ("seed".to_string(), sc.rng_seed.to_string()),
        ("dt_control".to_string(), super::format_sig9(dt_c)),
        ("dt_physics".to_string(), super::format_sig9(dt_p)),
    ];

    for n in 0..=n_ticks {
        let t = n as f64 * dt_c;
        state.t = t;
        let mut events = std::mem::take(&mut pending_events);

        let readings = sensors.sample(&state, params, sc.spring_mode, dt_c);
        let f_filt = force_filter.update(readings.f_raw, dt_c);

        let inputs = SupervisorInputs {
            readings,
            aux: aux_signals(sc, readings.y_r_meas, t),
            trajectory: lift.as_ref().map(|l| TrajectorySnapshot {
                y_des: l.spf.y_des,
                v_des: l.spf.v_des,
                target: l.target,
            }),
        };
        let actions = sup.step(&inputs, &sc.failure_cfg, t)?;
        if let Some((_, to)) = actions.transition {
            if to == Mode::Recovery {
                if let Some(cause) = sup.failure_cause {
                    events.push(format!("failure:{}", cause.as_str()));
                }
                events.push("halt_robot".into());
            }
            events.push(format!("mode:{}", to.as_str()));
        }
        if let Some((y0, v0)) = actions.init_spf {
            let r = &sc.recovery;
            // robot target above the failure height, carried by the static spring deflection
            let robot_target = sup.failure_height.unwrap_or(readings.y_r_meas) + r.safe_rise;
            lift = Some(Lift {
                spf: SetPointFilter::init(y0, v0, r.tau, r.v_max, r.a_max),
                target: robot_target + params.static_deflection(),
                hold_since: None,
                lowering: false,
            });
        }
        if sup.mode == Mode::Hold {
            if let Some(l) = lift.as_mut() {
                if l.hold_since.is_none() {
                    l.hold_since = Some(t);
                    l.spf.y_des = l.target;
                    l.spf.v_des = 0.0;
                }
                if let (Some(after), Some(since)) = (sc.hold.lower_after, l.hold_since) {
                    if !l.lowering && t - since >= after - 1e-9 {
                        l.lowering = true;
                        l.target = sc.hold.lower_to;
                        events.push("hold:lowering".into());
                    }
                }
            }
        }

        let (v_cmd, y_des, v_des) = match sup.mode {
            Mode::Shadowing => (
                shadowing_cmd(readings.y_r_meas, readings.v_r_est, readings.y_p_meas, &sc.shadow),
                Some(readings.y_r_meas - sc.shadow.d),
                Some(readings.v_r_est),
            ),
            Mode::ForceControl => (
                force_cmd(f_filt, sc.f_des.value(t), readings.v_r_est, &sc.force),
                None,
                None,
            ),
            Mode::Recovery | Mode::Hold => {
                let l = lift.as_mut().expect("lift trajectory initialised at failure");
                let cmd = recovery_cmd(l.spf.y_des, l.spf.v_des, readings.y_p_meas, &sc.recovery);
                let out = (cmd, Some(l.spf.y_des), Some(l.spf.v_des));
                if sup.mode == Mode::Recovery || l.lowering {
                    l.spf.update(l.target, dt_c);
                }
                out
            }
        };

        let accel = match &sc.robot_drive {
            RobotDrive::ScriptedPosition(w) => w.accel(t),
            RobotDrive::FreeDynamics => robot_accel(
                &state,
                external_force(sc, weight, &state),
                params,
                sc.spring_mode,
            ),
        };
        let logged = sup.violations.len();
        sup.monitor(&state, accel, params, sc.spring_mode, bound);
        for v in &sup.violations[logged..] {
            events.push(format!(
                "violation:{}={}",
                v.kind.as_str(),
                super::format_sig9(v.value)
            ));
        }

        records.push(TelemetryRecord {
            t,
            y_r: state.y_r,
            v_r: state.v_r,
            y_p: state.y_p,
            v_p: state.v_p,
            dy: state.deflection(),
            f_sp: spring_force(state.deflection(), state.deflection_rate(), params, sc.spring_mode),
            f_raw: readings.f_raw,
            f_filt,
            v_motor_cmd: v_cmd,
            mode: sup.mode,
            y_des,
            v_des,
            event: events.join(";"),
        });

        if n == n_ticks {
            break;
        }

        for _ in 0..sc.substeps() {
            let next = match &sc.robot_drive {
                RobotDrive::FreeDynamics => step_physics(
                    &state,
                    v_cmd,
                    |s: &PlantState<f64>| external_force(sc, weight, s),
                    dt_p,
                    params,
                    sc.spring_mode,
                ),
                RobotDrive::ScriptedPosition(w) => {
                    let motor = MotorSegment::new(state.y_p, state.v_p, v_cmd, params);
                    let (y_p, v_p) = motor.at(dt_p);
                    let t1 = state.t + dt_p;
                    let s = PlantState {
                        t: t1,
                        y_r: w.value(t1),
                        v_r: w.rate(t1),
                        y_p,
                        v_p,
                    };
                    if s.is_finite() {
                        Ok(s)
                    } else {
                        Err(DynamicsError::NonFiniteState { t: t1 })
                    }
                }
            };
            state = match next {
                Ok(s) => s,
                Err(DynamicsError::NonFiniteState { t: t_fail }) => {
                    records.push(blown_up_row(&state, t_fail, sup.mode));
                    return Err(RunError::NonFiniteState {
                        t: t_fail,
                        telemetry: Box::new(Telemetry { meta, records }),
                        supervisor: Box::new(sup),
                    });
                }
                Err(other) => return Err(other.into()),
            };
            for axis in clamp_travel(&mut state, params) {
                let value = match axis {
                    TravelAxis::Robot => state.y_r,
                    TravelAxis::Planarizer => state.y_p,
                };
                sup.record(state.t, ViolationKind::TravelLimit, value);
                let tag = match axis {
                    TravelAxis::Robot => "violation:travel_limit=robot",
                    TravelAxis::Planarizer => "violation:travel_limit=planarizer",
                };
                if !pending_events.iter().any(|e| e == tag) {
                    pending_events.push(tag.to_string());
                }
            }
        }
    }

    let metrics = compute_metrics(&records, sc)?;
    Ok(RunOutput {
        telemetry: Telemetry { meta, records },
        metrics,
        supervisor: sup,
    })
}

fn blown_up_row(last: &PlantState<f64>, t: f64, mode: Mode) -> TelemetryRecord {
    TelemetryRecord {
        t,
        y_r: f64::NAN,
        v_r: f64::NAN,
        y_p: last.y_p,
        v_p: last.v_p,
        dy: f64::NAN,
        f_sp: f64::NAN,
        f_raw: f64::NAN,
        f_filt: f64::NAN,
        v_motor_cmd: f64::NAN,
        mode,
        y_des: None,
        v_des: None,
        event: "error:non_finite_state".into(),
    }
}
