//! Scalar abstraction shared by the plant, filters and control laws.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point scalar the simulation core is generic over (`f32` or `f64`).
pub trait Real: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn clamp_sym(self, limit: Self) -> Self {
        self.max(-limit).min(limit)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_clamp() {
        assert_eq!(5.0_f64.clamp_sym(2.4), 2.4);
        assert_eq!((-5.0_f32).clamp_sym(2.4), -2.4);
        assert_eq!(1.0_f64.clamp_sym(2.4), 1.0);
    }
}
