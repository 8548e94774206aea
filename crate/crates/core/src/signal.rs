//! Discrete-time signal blocks run at the control rate: the force low-pass,
//! the saturated set-point filter and the velocity estimator.

use serde::{Deserialize, Serialize};

use crate::num::Real;

/// First-order low-pass `1 / (s/ω_c + 1)`, discretized with a zero-order hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowPass<T> {
    pub y: T,
    /// Cutoff (rad/s).
    pub omega_c: T,
}

impl<T: Real> LowPass<T> {
    pub fn new(initial: T, omega_c: T) -> Self {
        debug_assert!(omega_c > T::zero());
        Self { y: initial, omega_c }
    }

    /// One exact step: `y += (1 - e^(-ω_c dt)) (input - y)`.
    #[must_use]
    pub fn step(self, input: T, dt: T) -> Self {
        let alpha = T::one() - (-self.omega_c * dt).exp();
        Self {
            y: self.y + alpha * (input - self.y),
            ..self
        }
    }

    pub fn update(&mut self, input: T, dt: T) -> T {
        *self = self.step(input, dt);
        self.y
    }
}

/// Critically damped second-order set-point filter `1 / (τs + 1)²` with
/// acceleration saturation ahead of the velocity integrator and velocity
/// saturation ahead of the position integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetPointFilter<T> {
    pub y_des: T,
    pub v_des: T,
    pub tau: T,
    pub v_max: T,
    pub a_max: T,
}

impl<T: Real> SetPointFilter<T> {
    /// Starts the integrators at the given position and velocity. `v0` is not
    /// clamped here so that the trajectory starts exactly at the measured state.
    pub fn init(y0: T, v0: T, tau: T, v_max: T, a_max: T) -> Self {
        debug_assert!(tau > T::zero() && v_max > T::zero() && a_max > T::zero());
        Self {
            y_des: y0,
            v_des: v0,
            tau,
            v_max,
            a_max,
        }
    }

    /// `k = 1/τ²`
    pub fn stiffness(&self) -> T {
        T::one() / (self.tau * self.tau)
    }

    /// `b = 2/τ`
    pub fn damping(&self) -> T {
        T::lit(2.0) / self.tau
    }

    /// Commanded (saturated) acceleration toward `target`.
    pub fn acceleration(&self, target: T) -> T {
        let raw = self.stiffness() * (target - self.y_des) - self.damping() * self.v_des;
        raw.clamp_sym(self.a_max)
    }

    /// Explicit Euler step of the saturated cascade.
    #[must_use]
    pub fn step(self, target: T, dt: T) -> Self {
        let a = self.acceleration(target);
        let v_des = (self.v_des + a * dt).clamp_sym(self.v_max);
        let y_des = self.y_des + v_des * dt;
        Self {
            y_des,
            v_des,
            ..self
        }
    }

    pub fn update(&mut self, target: T, dt: T) {
        *self = self.step(target, dt);
    }
}

/// Backward difference of sampled positions followed by a low-pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityEstimator<T> {
    prev: Option<T>,
    filter: LowPass<T>,
}

impl<T: Real> VelocityEstimator<T> {
    pub fn new(cutoff: T) -> Self {
        Self {
            prev: None,
            filter: LowPass::new(T::zero(), cutoff),
        }
    }

    /// Estimator already settled on `velocity`; the next sample seeds the
    /// difference and returns `velocity` unchanged.
    pub fn primed(velocity: T, cutoff: T) -> Self {
        Self {
            prev: None,
            filter: LowPass::new(velocity, cutoff),
        }
    }

    pub fn estimate(&self) -> T {
        self.filter.y
    }

    /// Feeds a new position sample. The first sample only seeds the difference.
    pub fn update(&mut self, position: T, dt: T) -> T {
        match self.prev {
            Some(prev) => {
                let (v, filt) = velocity_estimate(prev, position, dt, self.filter);
                self.filter = filt;
                self.prev = Some(position);
                v
            }
            None => {
                self.prev = Some(position);
                self.filter.y
            }
        }
    }
}

/// `(curr - prev) / dt` passed through `filter`.
pub fn velocity_estimate<T: Real>(prev: T, curr: T, dt: T, filter: LowPass<T>) -> (T, LowPass<T>) {
    let next = filter.step((curr - prev) / dt, dt);
    (next.y, next)
}
