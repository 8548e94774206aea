use serde::{Deserialize, Serialize};

use super::{spring_force, DynamicsError, ModelParams, SpringMode};
use crate::num::Real;

/// Largest physics step accepted by [`step_physics`] (s).
pub const MAX_PHYSICS_DT: f64 = 1e-3;

/// Continuous state of robot and planarizer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState<T> {
    pub t: T,
    /// Robot height (m).
    pub y_r: T,
    /// Robot vertical velocity (m/s).
    pub v_r: T,
    /// Planarizer position in robot coordinates (m).
    pub y_p: T,
    /// Planarizer velocity (m/s).
    pub v_p: T,
}

impl<T: Real> PlantState<T> {
    /// Spring deflection `y_p - y_r`.
    pub fn deflection(&self) -> T {
        self.y_p - self.y_r
    }

    /// Deflection rate `v_p - v_r`.
    pub fn deflection_rate(&self) -> T {
        self.v_p - self.v_r
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.y_r, self.v_r, self.y_p, self.v_p]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Gravity on the robot net of the hanging counterweight, `g (M - M_h)`.
pub fn modified_gravity<T: Real>(params: &ModelParams<T>) -> T {
    params.gravity * (params.mass - params.hanging_mass)
}

/// Robot acceleration from the equation of motion `M a = F_sp + F_ext - F_g`.
pub fn robot_accel<T: Real>(
    state: &PlantState<T>,
    f_ext: T,
    params: &ModelParams<T>,
    mode: SpringMode,
) -> T {
    let f_sp = spring_force(state.deflection(), state.deflection_rate(), params, mode);
    (f_sp + f_ext - modified_gravity(params)) / params.mass
}

/// Upper bound on the damping force for a bounded deflection rate, `b · dv_max`.
pub fn damping_bound<T: Real>(damping: T, dv_max: T) -> T {
    damping * dv_max
}

/// Lower bound the robot acceleration must exceed for the spring to stay
/// engaged while lifting with the legs off the ground.
pub fn accel_bound<T: Real>(params: &ModelParams<T>, damping_force_bound: T) -> T {
    -modified_gravity(params) / params.mass + damping_force_bound / params.mass
}

/// Planarizer trajectory over one physics step for a constant velocity command.
#[derive(Debug, Clone, Copy)]
pub struct MotorSegment<T> {
    y0: T,
    v0: T,
    v_cmd: T,
    time_constant: Option<T>,
}

impl<T: Real> MotorSegment<T> {
    pub fn new(y0: T, v0: T, v_motor_cmd: T, params: &ModelParams<T>) -> Self {
        Self {
            y0,
            v0,
            v_cmd: v_motor_cmd.clamp_sym(params.v_motor_max),
            time_constant: params.motor_time_constant,
        }
    }

    /// Saturated command the motor is tracking.
    pub fn saturated_command(&self) -> T {
        self.v_cmd
    }

    /// Position and velocity `s` seconds into the segment.
    pub fn at(&self, s: T) -> (T, T) {
        match self.time_constant {
            None => (self.y0 + self.v_cmd * s, self.v_cmd),
            Some(tc) => {
                let decay = (-s / tc).exp();
                let dv = self.v0 - self.v_cmd;
                (
                    self.y0 + self.v_cmd * s + dv * tc * (T::one() - decay),
                    self.v_cmd + dv * decay,
                )
            }
        }
    }
}

/// Advances the plant by `dt` with classical fourth-order Runge-Kutta on the
/// robot states. The planarizer is a saturated velocity source whose position
/// is integrated in closed form over the step.
///
/// `external` returns the external force on the robot (ground reaction) for a
/// given intermediate state; it may depend on time only.
pub fn step_physics<T, F>(
    state: &PlantState<T>,
    v_motor_cmd: T,
    external: F,
    dt: T,
    params: &ModelParams<T>,
    mode: SpringMode,
) -> Result<PlantState<T>, DynamicsError>
where
    T: Real,
    F: Fn(&PlantState<T>) -> T,
{
    if !(dt > T::zero() && dt <= T::lit(MAX_PHYSICS_DT) * T::lit(1.0 + 1e-9)) {
        return Err(DynamicsError::InvalidTimeStep {
            dt: dt.to_f64_lossy(),
        });
    }
    let motor = MotorSegment::new(state.y_p, state.v_p, v_motor_cmd, params);
    let half = dt * T::lit(0.5);

    let deriv = |s: T, y_r: T, v_r: T| -> (T, T) {
        let (y_p, v_p) = motor.at(s);
        let stage = PlantState {
            t: state.t + s,
            y_r,
            v_r,
            y_p,
            v_p,
        };
        let f_ext = external(&stage);
        (v_r, robot_accel(&stage, f_ext, params, mode))
    };

    let (k1y, k1v) = deriv(T::zero(), state.y_r, state.v_r);
    let (k2y, k2v) = deriv(half, state.y_r + half * k1y, state.v_r + half * k1v);
    let (k3y, k3v) = deriv(half, state.y_r + half * k2y, state.v_r + half * k2v);
    let (k4y, k4v) = deriv(dt, state.y_r + dt * k3y, state.v_r + dt * k3v);

    let two = T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    let (y_p, v_p) = motor.at(dt);
    let next = PlantState {
        t: state.t + dt,
        y_r: state.y_r + sixth * (k1y + two * k2y + two * k3y + k4y),
        v_r: state.v_r + sixth * (k1v + two * k2v + two * k3v + k4v),
        y_p,
        v_p,
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(DynamicsError::NonFiniteState {
            t: next.t.to_f64_lossy(),
        })
    }
}

/// Which end stop a position hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TravelAxis {
    Robot,
    Planarizer,
}

/// Clamps both positions to `[0, y_travel]`. A position on a stop has its
/// outward velocity zeroed. Returns the axes that were clamped.
pub fn clamp_travel<T: Real>(
    state: &mut PlantState<T>,
    params: &ModelParams<T>,
) -> Vec<TravelAxis> {
    let lo = T::zero();
    let hi = params.y_travel;
    let mut hits = Vec::new();
    let clamp = |y: &mut T, v: &mut T| -> bool {
        if *y < lo {
            *y = lo;
            *v = v.max(T::zero());
            true
        } else if *y > hi {
            *y = hi;
            *v = v.min(T::zero());
            true
        } else {
            false
        }
    };
    if clamp(&mut state.y_r, &mut state.v_r) {
        hits.push(TravelAxis::Robot);
    }
    if clamp(&mut state.y_p, &mut state.v_p) {
        hits.push(TravelAxis::Planarizer);
    }
    hits
}

/// Kinetic + modified-gravity potential + elastic potential (J).
pub fn mechanical_energy<T: Real>(state: &PlantState<T>, params: &ModelParams<T>) -> T {
    T::lit(0.5) * params.mass * state.v_r * state.v_r
        + modified_gravity(params) * state.y_r
        + super::spring::spring_potential(state.deflection(), params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams<f64> {
        ModelParams::default()
    }

    fn at_rest(y_r: f64, y_p: f64) -> PlantState<f64> {
        PlantState {
            t: 0.0,
            y_r,
            v_r: 0.0,
            y_p,
            v_p: 0.0,
        }
    }

    #[test]
    fn modified_gravity_values() {
        assert!((modified_gravity(&p()) - 104.18).abs() < 0.01);
        let balanced = ModelParams {
            hanging_mass: 11.07,
            ..p()
        };
        assert_eq!(modified_gravity(&balanced), 0.0);
        let weightless = ModelParams { gravity: 0.0, ..p() };
        assert_eq!(modified_gravity(&weightless), 0.0);
    }

    #[test]
    fn accel_slack_is_modified_free_fall() {
        let s = at_rest(0.5, 0.4);
        let a = robot_accel(&s, 0.0, &p(), SpringMode::Corrected);
        assert!((a - (-104.1822 / 11.07)).abs() < 1e-9);
        assert!((a + 9.411).abs() < 1e-3);
    }

    #[test]
    fn accel_static_support_is_zero() {
        let params = p();
        let s = at_rest(0.5, 0.5 + params.static_deflection());
        assert!(robot_accel(&s, 0.0, &params, SpringMode::Corrected).abs() < 1e-12);
        assert!((params.static_deflection() - 0.019844).abs() < 1e-6);
    }

    #[test]
    fn accel_ground_support_is_zero() {
        let params = p();
        let s = at_rest(0.5, 0.4);
        let a = robot_accel(&s, modified_gravity(&params), &params, SpringMode::Corrected);
        assert!(a.abs() < 1e-12);
    }

    #[test]
    fn one_step_of_free_fall() {
        let s = at_rest(0.5, 0.4);
        let n = step_physics(&s, 0.0, |_| 0.0, 0.001, &p(), SpringMode::Corrected).unwrap();
        assert!((n.v_r + 0.009411).abs() < 1e-6);
        assert!((n.t - 0.001).abs() < 1e-15);
    }

    #[test]
    fn motor_saturates() {
        let s = at_rest(0.5, 0.4);
        let n = step_physics(&s, 5.0, |_| 0.0, 1e-4, &p(), SpringMode::Corrected).unwrap();
        assert_eq!(n.v_p, 2.4);
        assert!((n.y_p - (0.4 + 2.4e-4)).abs() < 1e-15);
        let n = step_physics(&s, -5.0, |_| 0.0, 1e-4, &p(), SpringMode::Corrected).unwrap();
        assert_eq!(n.v_p, -2.4);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let params = p();
        let s = at_rest(0.5, 0.5 + params.static_deflection());
        let n = step_physics(&s, 0.0, |_| 0.0, 1e-4, &params, SpringMode::Corrected).unwrap();
        assert!((n.y_r - s.y_r).abs() < 1e-15);
        assert!(n.v_r.abs() < 1e-12);
        assert_eq!(n.y_p, s.y_p);
        assert_eq!(n.t, 1e-4);
    }

    #[test]
    fn rejects_large_or_nonpositive_step() {
        let s = at_rest(0.5, 0.4);
        for dt in [0.0, -1e-4, 2e-3] {
            assert!(matches!(
                step_physics(&s, 0.0, |_| 0.0, dt, &p(), SpringMode::Corrected),
                Err(DynamicsError::InvalidTimeStep { .. })
            ));
        }
    }

    #[test]
    fn non_finite_state_is_reported() {
        let s = at_rest(0.5, 0.4);
        let r = step_physics(&s, 0.0, |_| f64::INFINITY, 1e-4, &p(), SpringMode::Corrected);
        assert!(matches!(r, Err(DynamicsError::NonFiniteState { .. })));
    }

    #[test]
    fn motor_lag_approaches_command() {
        let params = ModelParams {
            motor_time_constant: Some(0.01),
            ..p()
        };
        let seg = MotorSegment::new(0.0, 0.0, 1.0, &params);
        let (y, v) = seg.at(0.01);
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        // y = s - tc (1 - e^{-s/tc})
        assert!((y - (0.01 - 0.01 * (1.0 - (-1.0f64).exp()))).abs() < 1e-12);
    }

    #[test]
    fn damping_and_accel_bounds() {
        assert!((damping_bound(300.0_f64, 0.1) - 30.0).abs() < 1e-12);
        assert_eq!(damping_bound(300.0, 0.0), 0.0);
        assert_eq!(damping_bound(0.0, 0.1), 0.0);

        let bound = accel_bound(&p(), 30.0);
        assert!((bound + 6.70).abs() < 0.05, "{bound}");

        let no_counterweight = ModelParams {
            hanging_mass: 0.0,
            ..p()
        };
        assert!((accel_bound(&no_counterweight, 0.0) + 9.81).abs() < 1e-12);
        let fg = modified_gravity(&p());
        assert!(accel_bound(&p(), fg).abs() < 1e-12);
    }

    #[test]
    fn travel_clamp() {
        let params = p();
        let mut s = PlantState {
            t: 0.0,
            y_r: -0.01,
            v_r: -0.3,
            y_p: 0.95,
            v_p: 0.2,
        };
        let hits = clamp_travel(&mut s, &params);
        assert_eq!(hits, vec![TravelAxis::Robot, TravelAxis::Planarizer]);
        assert_eq!((s.y_r, s.v_r), (0.0, 0.0));
        assert_eq!((s.y_p, s.v_p), (0.9, 0.0));
        let mut inside = at_rest(0.3, 0.28);
        assert!(clamp_travel(&mut inside, &params).is_empty());
    }
}
