use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Scenario, TelemetryRecord};
use crate::signal::LowPass;
use crate::supervisor::Mode;

/// Cutoff of the low-pass applied to the gap acceleration estimate (Hz).
pub const GAP_ACCEL_FILTER_HZ: f64 = 50.0;
/// Time after a force step from which the response counts as steady (s).
pub const FORCE_SETTLE_TIME: f64 = 0.5;

/// Response to one commanded force step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceStepMetrics {
    pub t_step: f64,
    pub from: f64,
    pub to: f64,
    pub rise_time_10_90: Option<f64>,
    /// Filtered force beyond the new set-point in the step direction (N).
    pub overshoot: f64,
    /// Largest |F_filt - F_des| once settled (N).
    pub steady_band: Option<f64>,
}

/// Performance figures of one run. A field is `None` when its mode never ran.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gap_dev_max: Option<f64>,
    pub gap_accel_max: Option<f64>,
    pub spring_engaged_during_shadow: Option<bool>,
    pub force_rise_time_10_90: Option<f64>,
    pub force_overshoot: Option<f64>,
    pub force_ss_noise_band: Option<f64>,
    pub force_steps: Vec<ForceStepMetrics>,
    pub recovery_rise_time_to_safe: Option<f64>,
    pub recovery_overshoot: Option<f64>,
    /// Largest deflection rate once the spring engaged after the failure (m/s).
    pub recovery_max_deflection_rate: Option<f64>,
    /// Smallest deflection once the spring engaged after the failure (m).
    pub recovery_min_deflection: Option<f64>,
    pub accel_bound_violations: Option<usize>,
    pub lift_off_violations: Option<usize>,
}

/// Names of scalar metrics, for lookups that must fail when absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    GapDevMax,
    GapAccelMax,
    ForceRiseTime,
    ForceOvershoot,
    ForceSteadyBand,
    RecoveryRiseTime,
    RecoveryOvershoot,
    AccelBoundViolations,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("telemetry is empty")]
    EmptyTelemetry,
    #[error("metric {0:?} unavailable: its mode never ran")]
    ModeAbsent(Metric),
    #[error("inconsistent telemetry: {0}")]
    Inconsistent(String),
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> Result<f64, MetricsError> {
        let v = match metric {
            Metric::GapDevMax => self.gap_dev_max,
            Metric::GapAccelMax => self.gap_accel_max,
            Metric::ForceRiseTime => self.force_rise_time_10_90,
            Metric::ForceOvershoot => self.force_overshoot,
            Metric::ForceSteadyBand => self.force_ss_noise_band,
            Metric::RecoveryRiseTime => self.recovery_rise_time_to_safe,
            Metric::RecoveryOvershoot => self.recovery_overshoot,
            Metric::AccelBoundViolations => self.accel_bound_violations.map(|n| n as f64),
        };
        v.ok_or(MetricsError::ModeAbsent(metric))
    }

    /// Flat `key = value` listing; absent metrics are printed as `absent`.
    pub fn to_kv_string(&self) -> String {
        fn f(v: Option<f64>) -> String {
            v.map(super::format_sig9).unwrap_or_else(|| "absent".into())
        }
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("gap_dev_max", f(self.gap_dev_max));
        line("gap_accel_max", f(self.gap_accel_max));
        line(
            "spring_engaged_during_shadow",
            self.spring_engaged_during_shadow
                .map(|b| b.to_string())
                .unwrap_or_else(|| "absent".into()),
        );
        line("force_rise_time_10_90", f(self.force_rise_time_10_90));
        line("force_overshoot", f(self.force_overshoot));
        line("force_ss_noise_band", f(self.force_ss_noise_band));
        line("recovery_rise_time_to_safe", f(self.recovery_rise_time_to_safe));
        line("recovery_overshoot", f(self.recovery_overshoot));
        line(
            "recovery_max_deflection_rate",
            f(self.recovery_max_deflection_rate),
        );
        line("recovery_min_deflection", f(self.recovery_min_deflection));
        line(
            "accel_bound_violations",
            self.accel_bound_violations
                .map(|n| n.to_string())
                .unwrap_or_else(|| "absent".into()),
        );
        line(
            "lift_off_violations",
            self.lift_off_violations
                .map(|n| n.to_string())
                .unwrap_or_else(|| "absent".into()),
        );
        out
    }
}

pub fn compute_metrics(
    telemetry: &[TelemetryRecord],
    sc: &Scenario,
) -> Result<MetricsReport, MetricsError> {
    if telemetry.is_empty() {
        return Err(MetricsError::EmptyTelemetry);
    }
    let mut report = MetricsReport::default();
    shadow_metrics(telemetry, sc, &mut report)?;
    force_metrics(telemetry, sc, &mut report);
    recovery_metrics(telemetry, sc, &mut report);
    Ok(report)
}

fn shadow_metrics(
    rows: &[TelemetryRecord],
    sc: &Scenario,
    report: &mut MetricsReport,
) -> Result<(), MetricsError> {
    let d = sc.shadow.d;
    let dt = sc.dt_control;
    let shadow: Vec<&TelemetryRecord> = rows.iter().filter(|r| r.mode == Mode::Shadowing).collect();
    if shadow.is_empty() {
        return Ok(());
    }
    let gap = |r: &TelemetryRecord| r.y_r - r.y_p;
    let dev = shadow
        .iter()
        .map(|r| (gap(r) - d).abs())
        .fold(0.0, f64::max);
    let engaged = shadow.iter().any(|r| r.dy > 0.0);
    if dev < d && engaged {
        return Err(MetricsError::Inconsistent(
            "gap deviation below offset but spring engaged while shadowing".into(),
        ));
    }

    let mut filter = LowPass::new(0.0, TAU * GAP_ACCEL_FILTER_HZ);
    let mut accel_max: f64 = 0.0;
    for w in rows.windows(3) {
        if w.iter().any(|r| r.mode != Mode::Shadowing) {
            continue;
        }
        let raw = (gap(&w[2]) - 2.0 * gap(&w[1]) + gap(&w[0])) / (dt * dt);
        accel_max = accel_max.max(filter.update(raw, dt).abs());
    }

    report.gap_dev_max = Some(dev);
    report.gap_accel_max = Some(accel_max);
    report.spring_engaged_during_shadow = Some(engaged);
    Ok(())
}

fn force_metrics(rows: &[TelemetryRecord], sc: &Scenario, report: &mut MetricsReport) {
    let force_rows: Vec<&TelemetryRecord> =
        rows.iter().filter(|r| r.mode == Mode::ForceControl).collect();
    let (Some(first), Some(last)) = (force_rows.first(), force_rows.last()) else {
        return;
    };
    let (t_start, t_end) = (first.t, last.t);
    let points = &sc.f_des.points;
    let mut steps = Vec::new();
    for (i, &(t_step, to)) in points.iter().enumerate() {
        if i == 0 || t_step <= t_start || t_step > t_end {
            continue;
        }
        let from = points[i - 1].1;
        let window_end = points.get(i + 1).map(|p| p.0).unwrap_or(f64::INFINITY).min(t_end + 1e-12);
        let window: Vec<&&TelemetryRecord> = force_rows
            .iter()
            .filter(|r| r.t >= t_step - 1e-9 && r.t < window_end - 1e-9)
            .collect();
        if window.is_empty() {
            continue;
        }
        let delta = to - from;
        let progress = |r: &TelemetryRecord| (r.f_filt - from) / delta;
        let rise_time_10_90 = if delta != 0.0 {
            let t10 = window.iter().find(|r| progress(r) >= 0.1).map(|r| r.t);
            let t90 = window.iter().find(|r| progress(r) >= 0.9).map(|r| r.t);
            t10.zip(t90).map(|(a, b)| b - a)
        } else {
            None
        };
        let sign = if delta >= 0.0 { 1.0 } else { -1.0 };
        let overshoot = window
            .iter()
            .map(|r| (r.f_filt - to) * sign)
            .fold(0.0, f64::max);
        let settle_from = t_step + FORCE_SETTLE_TIME.min(0.5 * (window_end - t_step));
        let steady_band = window
            .iter()
            .filter(|r| r.t >= settle_from - 1e-9)
            .map(|r| (r.f_filt - to).abs())
            .reduce(f64::max);
        steps.push(ForceStepMetrics {
            t_step,
            from,
            to,
            rise_time_10_90,
            overshoot,
            steady_band,
        });
    }

    let largest = steps
        .iter()
        .filter(|s| s.from != s.to)
        .max_by(|a, b| (a.to - a.from).abs().total_cmp(&(b.to - b.from).abs()));
    report.force_rise_time_10_90 = largest.and_then(|s| s.rise_time_10_90);
    report.force_overshoot = steps.iter().map(|s| s.overshoot).reduce(f64::max);
    report.force_ss_noise_band = steps.iter().filter_map(|s| s.steady_band).reduce(f64::max);
    report.force_steps = steps;
}

fn recovery_metrics(rows: &[TelemetryRecord], sc: &Scenario, report: &mut MetricsReport) {
    let Some(fail_idx) = rows
        .iter()
        .position(|r| matches!(r.mode, Mode::Recovery | Mode::Hold))
    else {
        return;
    };
    let failure = &rows[fail_idx];
    let after = &rows[fail_idx..];
    let safe = sc.recovery.safe_rise;
    let y0 = failure.y_r;

    report.recovery_rise_time_to_safe = after
        .iter()
        .find(|r| r.y_r - y0 >= safe)
        .map(|r| r.t - failure.t);
    let peak = after.iter().map(|r| r.y_r).fold(f64::NEG_INFINITY, f64::max);
    report.recovery_overshoot = Some((peak - (y0 + safe)).max(0.0));

    if let Some(engage_idx) = after.iter().position(|r| r.dy > 0.0) {
        let lift = &after[engage_idx..];
        report.recovery_max_deflection_rate = lift
            .iter()
            .map(|r| r.v_p - r.v_r)
            .reduce(f64::max);
        report.recovery_min_deflection = lift.iter().map(|r| r.dy).reduce(f64::min);
    }
    report.accel_bound_violations = Some(after.iter().filter(|r| r.has_event("violation:accel_bound")).count());
    report.lift_off_violations = Some(after.iter().filter(|r| r.has_event("violation:lift_off")).count());
}
