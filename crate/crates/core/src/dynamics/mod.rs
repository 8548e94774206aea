//! Plant model: parameters, spring law, equation of motion, motor, sensors
//! and the fixed-step integrator.

mod params;
mod plant;
mod sensors;
mod spring;

pub use params::ModelParams;
pub use plant::{
    accel_bound, clamp_travel, damping_bound, mechanical_energy, modified_gravity, robot_accel,
    step_physics, MotorSegment, PlantState, TravelAxis, MAX_PHYSICS_DT,
};
pub use sensors::{quantize, SensorConfig, SensorReadings, SensorSuite};
pub use spring::{is_engaged, spring_force, spring_potential, SpringMode};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("state became non-finite at t = {t} s")]
    NonFiniteState { t: f64 },
    #[error("physics step {dt} s outside (0, 1 ms]")]
    InvalidTimeStep { dt: f64 },
    #[error("invalid parameter {field}: requires {constraint}")]
    InvalidParams {
        field: &'static str,
        constraint: &'static str,
    },
}
