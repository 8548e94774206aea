use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformKind {
    Constant,
    Sine,
}

/// `offset + amplitude · sin(2π f t + phase)`, or just `offset` when constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub kind: WaveformKind,
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// rad
    pub phase: f64,
    pub offset: f64,
}

impl Waveform {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: WaveformKind::Constant,
            amplitude: 0.0,
            frequency: 0.0,
            phase: 0.0,
            offset: value,
        }
    }

    pub fn sine(offset: f64, amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            kind: WaveformKind::Sine,
            amplitude,
            frequency,
            phase,
            offset,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            WaveformKind::Constant => self.offset,
            WaveformKind::Sine => {
                self.offset + self.amplitude * (TAU * self.frequency * t + self.phase).sin()
            }
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self.kind {
            WaveformKind::Constant => 0.0,
            WaveformKind::Sine => {
                let w = TAU * self.frequency;
                self.amplitude * w * (w * t + self.phase).cos()
            }
        }
    }

    pub fn accel(&self, t: f64) -> f64 {
        match self.kind {
            WaveformKind::Constant => 0.0,
            WaveformKind::Sine => {
                let w = TAU * self.frequency;
                -self.amplitude * w * w * (w * t + self.phase).sin()
            }
        }
    }
}

/// Piecewise-constant signal given as `(start time, value)` breakpoints.
/// Before the first breakpoint the first value holds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Steps {
    pub points: Vec<(f64, f64)>,
}

impl Steps {
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { points }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn value(&self, t: f64) -> f64 {
        let Some(first) = self.points.first() else {
            return 0.0;
        };
        self.points
            .iter()
            .take_while(|(start, _)| *start <= t + 1e-9)
            .last()
            .unwrap_or(first)
            .1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ForceScript {
    Waveform(Waveform),
    Steps(Steps),
}

impl Default for ForceScript {
    fn default() -> Self {
        ForceScript::Waveform(Waveform::constant(0.0))
    }
}

impl ForceScript {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ForceScript::Waveform(w) => w.value(t),
            ForceScript::Steps(s) => s.value(t),
        }
    }
}

/// Compliant unilateral ground contact under the robot's feet. At
/// `stand_height` the contact carries the full modified weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundContact {
    pub stand_height: f64,
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
}

impl GroundContact {
    pub fn force(&self, y_r: f64, v_r: f64, weight: f64) -> f64 {
        let surface = self.stand_height + weight / self.stiffness;
        if y_r >= surface {
            return 0.0;
        }
        (self.stiffness * (surface - y_r) - self.damping * v_r).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RobotDrive {
    /// Robot height follows the equation of motion.
    FreeDynamics,
    /// Robot height is imposed kinematically.
    ScriptedPosition(Waveform),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_derivatives_match_finite_differences() {
        let w = Waveform::sine(0.3, 0.1, 0.25, 0.4);
        let h = 1e-5;
        for t in [0.0, 0.7, 3.1] {
            let fd = (w.value(t + h) - w.value(t - h)) / (2.0 * h);
            assert!((fd - w.rate(t)).abs() < 1e-8);
            let fd2 = (w.rate(t + h) - w.rate(t - h)) / (2.0 * h);
            assert!((fd2 - w.accel(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn steps_hold_last_breakpoint() {
        let s = Steps::new(vec![(1.0, 20.0), (0.0, 10.0), (2.0, 50.0)]);
        assert_eq!(s.value(-1.0), 10.0);
        assert_eq!(s.value(0.5), 10.0);
        assert_eq!(s.value(1.0), 20.0);
        assert_eq!(s.value(5.0), 50.0);
        assert_eq!(Steps::default().value(1.0), 0.0);
    }

    #[test]
    fn ground_carries_weight_at_stand_height() {
        let g = GroundContact {
            stand_height: 0.3,
            stiffness: 2e5,
            damping: 2e3,
        };
        assert!((g.force(0.3, 0.0, 104.18) - 104.18).abs() < 1e-9);
        assert_eq!(g.force(0.31, 0.0, 104.18), 0.0);
        // moving up fast unloads the feet, never pulls
        assert_eq!(g.force(0.3, 1.0, 104.18), 0.0);
    }
}
