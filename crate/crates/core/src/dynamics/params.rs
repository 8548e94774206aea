use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::num::Real;

/// Physical constants of the catch system and robot.
///
/// Positions are expressed in robot coordinates: the planarizer (cable spool)
/// position has already been scaled by the pulley transmission ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Robot mass `M` (kg).
    pub mass: T,
    /// Hanging counterweight `M_h` (kg).
    pub hanging_mass: T,
    /// Gravitational acceleration (m/s²).
    pub gravity: T,
    /// Spring stiffness `k` (N/m).
    pub stiffness: T,
    /// Spring damping `b` (N·s/m).
    pub damping: T,
    /// Width of the damping blend region below zero deflection (m).
    pub blend_width: T,
    /// Planarizer velocity limit (m/s).
    pub v_motor_max: T,
    /// Cable force limit (N). Monitored, not enforced.
    pub f_cable_max: T,
    /// Vertical travel of the slider (m).
    pub y_travel: T,
    /// First-order motor lag time constant (s). `None` is an ideal velocity source.
    pub motor_time_constant: Option<T>,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            mass: T::lit(11.07),
            hanging_mass: T::lit(0.45),
            gravity: T::lit(9.81),
            stiffness: T::lit(5250.0),
            damping: T::lit(300.0),
            blend_width: T::lit(1e-3),
            v_motor_max: T::lit(2.4),
            f_cable_max: T::lit(500.0),
            y_travel: T::lit(0.9),
            motor_time_constant: None,
        }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let check = |ok: bool, field: &'static str, constraint: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(DynamicsError::InvalidParams { field, constraint })
            }
        };
        let all = [
            self.mass,
            self.hanging_mass,
            self.gravity,
            self.stiffness,
            self.damping,
            self.blend_width,
            self.v_motor_max,
            self.f_cable_max,
            self.y_travel,
        ];
        check(all.iter().all(|v| v.is_finite()), "params", "all values finite")?;
        check(self.hanging_mass > T::zero(), "M_h", "M_h > 0")?;
        check(self.mass > self.hanging_mass, "M", "M > M_h")?;
        check(self.gravity >= T::zero(), "g", "g >= 0")?;
        check(self.stiffness > T::zero(), "k", "k > 0")?;
        check(self.damping >= T::zero(), "b", "b >= 0")?;
        check(self.blend_width > T::zero(), "epsilon", "epsilon > 0")?;
        check(self.v_motor_max > T::zero(), "v_motor_max", "v_motor_max > 0")?;
        check(self.f_cable_max > T::zero(), "F_cable_max", "F_cable_max > 0")?;
        check(self.y_travel > T::zero(), "y_travel", "y_travel > 0")?;
        if let Some(tc) = self.motor_time_constant {
            check(tc > T::zero() && tc.is_finite(), "motor_lag", "motor_lag > 0")?;
        }
        Ok(())
    }

    /// Spring deflection at which the spring alone carries the modified weight.
    pub fn static_deflection(&self) -> T {
        super::modified_gravity(self) / self.stiffness
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ModelParams::<f64>::default().validate().unwrap();
        ModelParams::<f32>::default().validate().unwrap();
    }

    #[test]
    fn rejects_hanging_mass_heavier_than_robot() {
        let p = ModelParams::<f64> {
            hanging_mass: 12.0,
            ..Default::default()
        };
        assert!(matches!(
            p.validate(),
            Err(DynamicsError::InvalidParams { field: "M", .. })
        ));
    }

    #[test]
    fn rejects_zero_blend_width() {
        let p = ModelParams::<f64> {
            blend_width: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn static_deflection_default() {
        let p = ModelParams::<f64>::default();
        assert!((p.static_deflection() - 104.1822 / 5250.0).abs() < 1e-9);
    }
}
