use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{spring_force, ModelParams, PlantState, SpringMode};
use crate::num::Real;
use crate::signal::VelocityEstimator;

/// Encoder, load cell and estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig<T> {
    /// Position quantization step (m). Zero disables quantization.
    pub encoder_resolution: T,
    /// Standard deviation of additive load-cell noise (N).
    pub loadcell_noise_std: T,
    /// Velocity estimator low-pass cutoff (rad/s).
    pub velocity_cutoff: T,
    pub rng_seed: u64,
}

impl<T: Real> Default for SensorConfig<T> {
    fn default() -> Self {
        Self {
            encoder_resolution: T::lit(1e-5),
            loadcell_noise_std: T::zero(),
            velocity_cutoff: T::lit(200.0),
            rng_seed: 0,
        }
    }
}

/// One control-tick sample of every sensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorReadings<T> {
    pub y_r_meas: T,
    pub y_p_meas: T,
    pub v_r_est: T,
    pub v_p_est: T,
    /// Load cell reading (N).
    pub f_raw: T,
}

/// Floor quantization, as an incremental encoder counts.
pub fn quantize<T: Real>(x: T, resolution: T) -> T {
    if resolution > T::zero() {
        (x / resolution).floor() * resolution
    } else {
        x
    }
}

/// Stateful sensor front end: encoders, load cell noise source and the two
/// velocity estimators. Noise is drawn from a seeded ChaCha stream, one draw
/// per sample regardless of the noise level.
#[derive(Debug, Clone)]
pub struct SensorSuite<T> {
    cfg: SensorConfig<T>,
    rng: ChaCha8Rng,
    robot_velocity: VelocityEstimator<T>,
    planarizer_velocity: VelocityEstimator<T>,
}

impl<T: Real> SensorSuite<T> {
    pub fn new(cfg: SensorConfig<T>) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            robot_velocity: VelocityEstimator::new(cfg.velocity_cutoff),
            planarizer_velocity: VelocityEstimator::new(cfg.velocity_cutoff),
            cfg,
        }
    }

    /// Sensor suite whose estimators start settled on `state`.
    pub fn primed(cfg: SensorConfig<T>, state: &PlantState<T>) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            robot_velocity: VelocityEstimator::primed(state.v_r, cfg.velocity_cutoff),
            planarizer_velocity: VelocityEstimator::primed(state.v_p, cfg.velocity_cutoff),
            cfg,
        }
    }

    pub fn config(&self) -> &SensorConfig<T> {
        &self.cfg
    }

    pub fn sample(
        &mut self,
        state: &PlantState<T>,
        params: &ModelParams<T>,
        mode: SpringMode,
        dt: T,
    ) -> SensorReadings<T> {
        let res = self.cfg.encoder_resolution;
        let y_r_meas = quantize(state.y_r, res);
        let y_p_meas = quantize(state.y_p, res);
        let v_r_est = self.robot_velocity.update(y_r_meas, dt);
        let v_p_est = self.planarizer_velocity.update(y_p_meas, dt);
        let noise: f64 = StandardNormal.sample(&mut self.rng);
        let f_true = spring_force(state.deflection(), state.deflection_rate(), params, mode);
        SensorReadings {
            y_r_meas,
            y_p_meas,
            v_r_est,
            v_p_est,
            f_raw: f_true + self.cfg.loadcell_noise_std * T::lit(noise),
        }
    }
}
