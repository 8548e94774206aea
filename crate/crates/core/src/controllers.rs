//! Control laws producing a planarizer velocity command. Outputs are not
//! saturated here; the motor model applies the velocity limit.

use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Gains for following the robot from a fixed offset below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowGains<T> {
    /// Offset kept between robot and planarizer (m).
    pub d: T,
    /// 1/s
    pub k_p: T,
    pub k_ff: T,
}

impl<T: Real> Default for ShadowGains<T> {
    fn default() -> Self {
        Self {
            d: T::lit(0.02),
            k_p: T::lit(5.0),
            k_ff: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceGains<T> {
    /// Load-cell filter cutoff (rad/s).
    pub omega_c: T,
    /// m/(N·s)
    pub k_p: T,
    pub k_ff: T,
}

impl<T: Real> Default for ForceGains<T> {
    fn default() -> Self {
        Self {
            omega_c: T::lit(100.0),
            k_p: T::lit(0.002),
            k_ff: T::one(),
        }
    }
}

/// Recovery trajectory generator limits and tracking gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryGains<T> {
    /// Set-point filter time constant (s).
    pub tau: T,
    pub v_max: T,
    pub a_max: T,
    /// 1/s
    pub k_p: T,
    pub k_ff: T,
    /// Height above the failure position that counts as safe (m).
    pub safe_rise: T,
}

impl<T: Real> Default for RecoveryGains<T> {
    fn default() -> Self {
        Self {
            tau: T::lit(0.0833),
            v_max: T::lit(0.5),
            a_max: T::lit(5.0),
            k_p: T::lit(5.0),
            k_ff: T::one(),
            safe_rise: T::lit(0.08),
        }
    }
}

/// `k_p (y_r - d - y_p) + k_ff v_r`
pub fn shadowing_cmd<T: Real>(y_r: T, v_r: T, y_p: T, gains: &ShadowGains<T>) -> T {
    gains.k_p * (y_r - gains.d - y_p) + gains.k_ff * v_r
}

/// `k_p (F_des - F) + k_ff v_r`, with `F` the filtered load-cell force.
pub fn force_cmd<T: Real>(f_filt: T, f_des: T, v_r: T, gains: &ForceGains<T>) -> T {
    gains.k_p * (f_des - f_filt) + gains.k_ff * v_r
}

/// `k_p (y_des - y_p) + k_ff v_des`
pub fn recovery_cmd<T: Real>(y_des: T, v_des: T, y_p: T, gains: &RecoveryGains<T>) -> T {
    gains.k_p * (y_des - y_p) + gains.k_ff * v_des
}
