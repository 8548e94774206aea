use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::num::Real;

/// Constitutive law variant for the unidirectional spring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpringMode {
    /// The published three-case law, signs as printed. Discontinuous at zero
    /// deflection and at `-epsilon`.
    Verbatim,
    /// Elastic term only for positive deflection, damping blended to zero
    /// over `[-epsilon, 0]` with a positive sign.
    #[default]
    Corrected,
}

impl SpringMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SpringMode::Verbatim => "verbatim",
            SpringMode::Corrected => "corrected",
        }
    }
}

impl fmt::Display for SpringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpringMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verbatim" => Ok(SpringMode::Verbatim),
            "corrected" => Ok(SpringMode::Corrected),
            other => Err(format!("unknown spring mode '{other}' (expected verbatim|corrected)")),
        }
    }
}

/// Cubic blend `1 - 2r³ - 3r²`: 1 at `r = 0`, 0 at `r = -1`, zero slope at both ends.
fn blend<T: Real>(r: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    T::one() - two * r * r * r - three * r * r
}

/// Force the spring transmits to the robot for deflection `dy = y_p - y_r`
/// and deflection rate `dv`. Positive values pull the robot up.
pub fn spring_force<T: Real>(dy: T, dv: T, params: &ModelParams<T>, mode: SpringMode) -> T {
    let k = params.stiffness;
    let b = params.damping;
    let eps = params.blend_width;
    if dy > T::zero() {
        k * dy + b * dv
    } else if dy >= -eps {
        let damping = b * blend(dy / eps) * dv;
        match mode {
            SpringMode::Verbatim => k * dy - damping,
            SpringMode::Corrected => damping,
        }
    } else {
        T::zero()
    }
}

/// Whether the cable can transmit force at this deflection.
pub fn is_engaged<T: Real>(dy: T) -> bool {
    dy > T::zero()
}

/// Elastic potential stored in the spring (J). Zero when slack.
pub fn spring_potential<T: Real>(dy: T, params: &ModelParams<T>) -> T {
    if dy > T::zero() {
        T::lit(0.5) * params.stiffness * dy * dy
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> ModelParams<f64> {
        ModelParams::default()
    }

    #[test]
    fn positive_deflection_either_mode() {
        for mode in [SpringMode::Verbatim, SpringMode::Corrected] {
            let f = spring_force(0.01, 0.0, &p(), mode);
            assert!((f - 52.5).abs() < 1e-12, "{mode}: {f}");
        }
    }

    #[test]
    fn slack_cable_is_zero() {
        let eps = p().blend_width;
        for mode in [SpringMode::Verbatim, SpringMode::Corrected] {
            assert_eq!(spring_force(-2.0 * eps, 1.0, &p(), mode), 0.0);
        }
    }

    #[test]
    fn corrected_blend_endpoints() {
        assert!((spring_force(0.0, 0.1, &p(), SpringMode::Corrected) - 30.0).abs() < 1e-12);
        let eps = p().blend_width;
        assert!(spring_force(-eps, 0.1, &p(), SpringMode::Corrected).abs() < 1e-12);
        // first-case limit as dy -> 0+
        let right = 5250.0 * 0.0 + 300.0 * 0.1;
        assert!((spring_force(0.0, 0.1, &p(), SpringMode::Corrected) - right).abs() < 1e-12);
    }

    #[test]
    fn verbatim_middle_case_as_printed() {
        let params = p();
        let eps = params.blend_width;
        let dy = -0.5 * eps;
        let r: f64 = -0.5;
        let expected = params.stiffness * dy - params.damping * (1.0 - 2.0 * r.powi(3) - 3.0 * r.powi(2)) * 0.2;
        assert!((spring_force(dy, 0.2, &params, SpringMode::Verbatim) - expected).abs() < 1e-12);
        // sign flip at zero deflection
        assert!(spring_force(0.0, 0.1, &params, SpringMode::Verbatim) < 0.0);
    }

    #[test]
    fn mode_parse_roundtrip() {
        for m in [SpringMode::Verbatim, SpringMode::Corrected] {
            assert_eq!(m.as_str().parse::<SpringMode>().unwrap(), m);
        }
        assert!("linear".parse::<SpringMode>().is_err());
    }

    #[test]
    fn generic_over_f32() {
        let params = ModelParams::<f32>::default();
        let f = spring_force(0.01_f32, 0.0, &params, SpringMode::Corrected);
        assert!((f - 52.5).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn unidirectional_below_blend(excess in 1e-9f64..1.0, dv in -10.0f64..10.0) {
            let params = p();
            let dy = -params.blend_width - excess;
            prop_assert_eq!(spring_force(dy, dv, &params, SpringMode::Corrected), 0.0);
            prop_assert_eq!(spring_force(dy, dv, &params, SpringMode::Verbatim), 0.0);
        }

        #[test]
        fn corrected_is_continuous_at_boundaries(dv in -5.0f64..5.0) {
            let params = p();
            let eps = params.blend_width;
            let tiny = 1e-15;
            let at = |dy: f64| spring_force(dy, dv, &params, SpringMode::Corrected);
            prop_assert!((at(-tiny) - at(tiny)).abs() < 1e-9);
            prop_assert!((at(-eps - tiny) - at(-eps + tiny)).abs() < 1e-9);
        }

        #[test]
        fn corrected_damping_part_never_exceeds_full_damping(r in -1.0f64..=0.0, dv in -5.0f64..5.0) {
            let params = p();
            let f = spring_force(r * params.blend_width, dv, &params, SpringMode::Corrected);
            prop_assert!(f.abs() <= params.damping * dv.abs() + 1e-9);
        }
    }
}
