//! Deterministic simulation of an actuated cable-and-spring support system
//! for a planar legged robot.
//!
//! The robot is a vertical point mass hanging from a unidirectional series
//! spring whose other end is driven by a velocity-controlled planarizer.
//! Three control laws are provided: shadowing (follow the robot with a slack
//! cable), force control through the spring, and a catch-and-lift recovery
//! driven by a saturated set-point filter. A supervisor detects failures and
//! switches to recovery.
//!
//! The numeric core is generic over [`num::Real`] (`f32`/`f64`); the scenario
//! harness runs in `f64`. Aliases for the common instantiations live here.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting range checks

pub mod controllers;
pub mod dynamics;
pub mod num;
pub mod scenario;
pub mod signal;
pub mod suite;
pub mod supervisor;

pub use num::Real;

pub type ModelParams = dynamics::ModelParams<f64>;
pub type PlantState = dynamics::PlantState<f64>;
pub type SensorConfig = dynamics::SensorConfig<f64>;
pub type SensorReadings = dynamics::SensorReadings<f64>;
pub type LowPass = signal::LowPass<f64>;
pub type SetPointFilter = signal::SetPointFilter<f64>;
pub type VelocityEstimator = signal::VelocityEstimator<f64>;
pub type ShadowGains = controllers::ShadowGains<f64>;
pub type ForceGains = controllers::ForceGains<f64>;
pub type RecoveryGains = controllers::RecoveryGains<f64>;
pub type FailureConfig = supervisor::FailureConfig<f64>;
pub type SupervisorState = supervisor::SupervisorState<f64>;

pub type ModelParamsF32 = dynamics::ModelParams<f32>;
pub type PlantStateF32 = dynamics::PlantState<f32>;
pub type SetPointFilterF32 = signal::SetPointFilter<f32>;
pub type LowPassF32 = signal::LowPass<f32>;

pub use dynamics::SpringMode;
pub use scenario::{load_scenario, run, Scenario};
pub use supervisor::Mode;
