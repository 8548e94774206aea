//! Bundled reproduction scenarios and their pass/fail thresholds.
//!
//! `run_suite` executes every bundled scenario (in parallel, one thread each)
//! and grades the results. The thresholds here are the acceptance gate used
//! by `planarizer suite` and by the `acceptance` test target.

use std::fmt;
use std::time::{Duration, Instant};

use crate::dynamics::{accel_bound, damping_bound, ModelParams};
use crate::scenario::{load_scenario, run, RunError, RunOutput, Scenario, ScenarioError};
use crate::supervisor::Mode;

pub const SHADOWING_CFG: &str = include_str!("../scenarios/shadowing.cfg");
pub const FORCE_STEPS_CFG: &str = include_str!("../scenarios/force_steps.cfg");
pub const FORCE_NOISY_CFG: &str = include_str!("../scenarios/force_noisy.cfg");
pub const RECOVERY_CFG: &str = include_str!("../scenarios/recovery.cfg");

pub const GAP_DEV_MAX: f64 = 0.01;
pub const GAP_ACCEL_MAX: f64 = 7.0;
pub const FORCE_SETTLED_ERROR_MAX: f64 = 0.5;
pub const FORCE_RISE_MIN: f64 = 0.05;
pub const FORCE_RISE_MAX: f64 = 0.20;
pub const FORCE_NOISE_BAND_MAX: f64 = 3.0;
pub const RECOVERY_RISE_MIN: f64 = 0.30;
pub const RECOVERY_RISE_MAX: f64 = 0.50;
pub const RECOVERY_OVERSHOOT_MAX: f64 = 0.005;
pub const RECOVERY_DEFLECTION_RATE_MAX: f64 = 0.1;
pub const ACCEL_BOUND_EXPECTED: f64 = -6.70;
pub const ACCEL_BOUND_TOL: f64 = 0.05;
pub const RUNTIME_MAX: Duration = Duration::from_secs(5);

/// Name and source text of each bundled scenario.
pub fn bundled_sources() -> [(&'static str, &'static str); 4] {
    [
        ("shadowing", SHADOWING_CFG),
        ("force_steps", FORCE_STEPS_CFG),
        ("force_noisy", FORCE_NOISY_CFG),
        ("recovery", RECOVERY_CFG),
    ]
}

pub fn bundled_scenarios() -> Result<Vec<Scenario>, ScenarioError> {
    bundled_sources().iter().map(|(_, src)| load_scenario(src)).collect()
}

/// One graded threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub scenario: &'static str,
    pub name: &'static str,
    pub value: Option<f64>,
    pub threshold: String,
    pub passed: bool,
    pub detail: Option<String>,
}

impl Check {
    fn new(
        criterion: u8,
        scenario: &'static str,
        name: &'static str,
        value: Option<f64>,
        threshold: impl Into<String>,
        pass: impl Fn(f64) -> bool,
    ) -> Self {
        Self {
            criterion,
            scenario,
            name,
            value,
            threshold: threshold.into(),
            passed: value.is_some_and(pass),
            detail: None,
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let value = match self.value {
            Some(v) => format!("{v:.6}"),
            None => "absent".to_string(),
        };
        write!(
            f,
            "[{}] criterion {} {}/{}: {} (threshold {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.scenario,
            self.name,
            value,
            self.threshold
        )?;
        if let Some(d) = &self.detail {
            write!(f, " - {d}")?;
        }
        Ok(())
    }
}

/// Result of one bundled scenario.
#[derive(Debug)]
pub struct ScenarioResult {
    pub name: &'static str,
    pub scenario: Scenario,
    pub output: Result<RunOutput, RunError>,
    pub elapsed: Duration,
    pub checks: Vec<Check>,
}

#[derive(Debug)]
pub struct SuiteReport {
    pub results: Vec<ScenarioResult>,
    /// Checks not tied to a simulation run.
    pub arithmetic: Vec<Check>,
}

impl SuiteReport {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.results.iter().flat_map(|r| r.checks.iter()).chain(self.arithmetic.iter())
    }

    pub fn all_passed(&self) -> bool {
        self.checks().all(|c| c.passed)
    }
}

/// Time after the failure at which the robot first rose `fraction` of the
/// safe rise. Reported alongside the strict rise-time check.
pub fn recovery_partial_rise_time(out: &RunOutput, safe_rise: f64, fraction: f64) -> Option<f64> {
    let rows = &out.telemetry.records;
    let i = rows.iter().position(|r| matches!(r.mode, Mode::Recovery | Mode::Hold))?;
    let (t0, y0) = (rows[i].t, rows[i].y_r);
    rows[i..]
        .iter()
        .find(|r| r.y_r - y0 >= fraction * safe_rise)
        .map(|r| r.t - t0)
}

fn runtime_check(criterion: u8, scenario: &'static str, elapsed: Duration) -> Check {
    Check::new(
        criterion,
        scenario,
        "runtime_s",
        Some(elapsed.as_secs_f64()),
        format!("< {}", RUNTIME_MAX.as_secs_f64()),
        |v| v < RUNTIME_MAX.as_secs_f64(),
    )
}

/// Grades one bundled scenario run against its thresholds.
pub fn grade(
    name: &'static str,
    sc: &Scenario,
    output: &Result<RunOutput, RunError>,
    elapsed: Duration,
) -> Vec<Check> {
    let out = match output {
        Ok(out) => out,
        Err(e) => {
            let mut c = Check::new(0, name, "run", None, "completes", |_| true);
            c.detail = Some(e.to_string());
            return vec![c];
        }
    };
    let m = &out.metrics;
    let count = |v: Option<usize>| v.map(|n| n as f64);
    match name {
        "shadowing" => vec![
            Check::new(1, name, "gap_dev_max_m", m.gap_dev_max, format!("< {GAP_DEV_MAX}"), |v| {
                v < GAP_DEV_MAX
            }),
            Check::new(
                1,
                name,
                "spring_engaged",
                m.spring_engaged_during_shadow.map(|b| f64::from(u8::from(b))),
                "== 0",
                |v| v == 0.0,
            ),
            Check::new(
                1,
                name,
                "gap_accel_max_mps2",
                m.gap_accel_max,
                format!("<= {GAP_ACCEL_MAX}"),
                |v| v <= GAP_ACCEL_MAX,
            ),
            runtime_check(1, name, elapsed),
        ],
        "force_steps" => vec![
            Check::new(
                2,
                name,
                "settled_error_max_n",
                m.force_ss_noise_band,
                format!("< {FORCE_SETTLED_ERROR_MAX}"),
                |v| v < FORCE_SETTLED_ERROR_MAX,
            ),
            Check::new(
                2,
                name,
                "rise_time_10_90_s",
                m.force_rise_time_10_90,
                format!("in [{FORCE_RISE_MIN}, {FORCE_RISE_MAX}]"),
                |v| (FORCE_RISE_MIN..=FORCE_RISE_MAX).contains(&v),
            ),
            runtime_check(2, name, elapsed),
        ],
        "force_noisy" => vec![
            Check::new(
                2,
                name,
                "noise_band_n",
                m.force_ss_noise_band,
                format!("<= {FORCE_NOISE_BAND_MAX}"),
                |v| v <= FORCE_NOISE_BAND_MAX,
            ),
            runtime_check(2, name, elapsed),
        ],
        "recovery" => {
            let safe = sc.recovery.safe_rise;
            let partial = recovery_partial_rise_time(out, safe, 0.95);
            let final_rise = out
                .telemetry
                .records
                .iter()
                .position(|r| matches!(r.mode, Mode::Recovery | Mode::Hold))
                .and_then(|i| {
                    let y0 = out.telemetry.records[i].y_r;
                    out.telemetry.records.last().map(|r| r.y_r - y0)
                });
            let fmt_opt = |v: Option<f64>| v.map_or("absent".to_string(), |v| format!("{v:.5}"));
            vec![
                Check::new(
                    3,
                    name,
                    "rise_time_to_safe_s",
                    m.recovery_rise_time_to_safe,
                    format!("in [{RECOVERY_RISE_MIN}, {RECOVERY_RISE_MAX}]"),
                    |v| (RECOVERY_RISE_MIN..=RECOVERY_RISE_MAX).contains(&v),
                )
                .with_detail(format!(
                    "95% of rise at {} s, final rise {} m",
                    fmt_opt(partial),
                    fmt_opt(final_rise)
                )),
                Check::new(
                    3,
                    name,
                    "overshoot_m",
                    m.recovery_overshoot,
                    format!("< {RECOVERY_OVERSHOOT_MAX}"),
                    |v| v < RECOVERY_OVERSHOOT_MAX,
                ),
                Check::new(
                    3,
                    name,
                    "accel_bound_violations",
                    count(m.accel_bound_violations),
                    "== 0",
                    |v| v == 0.0,
                ),
                Check::new(
                    3,
                    name,
                    "lift_off_violations",
                    count(m.lift_off_violations),
                    "== 0",
                    |v| v == 0.0,
                ),
                Check::new(3, name, "min_deflection_m", m.recovery_min_deflection, "> 0", |v| {
                    v > 0.0
                }),
                Check::new(
                    3,
                    name,
                    "max_deflection_rate_mps",
                    m.recovery_max_deflection_rate,
                    format!("< {RECOVERY_DEFLECTION_RATE_MAX}"),
                    |v| v < RECOVERY_DEFLECTION_RATE_MAX,
                ),
                runtime_check(3, name, elapsed),
            ]
        }
        _ => Vec::new(),
    }
}

/// Constraint arithmetic on the default parameters.
pub fn arithmetic_checks() -> Vec<Check> {
    let p = ModelParams::<f64>::default();
    let bound = accel_bound(&p, damping_bound(p.damping, 0.1));
    vec![Check::new(
        4,
        "constants",
        "accel_bound_mps2",
        Some(bound),
        format!("{ACCEL_BOUND_EXPECTED} +/- {ACCEL_BOUND_TOL}"),
        |v| (v - ACCEL_BOUND_EXPECTED).abs() <= ACCEL_BOUND_TOL,
    )]
}

fn timed_run(sc: &Scenario) -> (Result<RunOutput, RunError>, Duration) {
    let start = Instant::now();
    let out = run(sc);
    (out, start.elapsed())
}

/// Runs every bundled scenario, each on its own thread, and grades them.
/// `adjust` may override fields (seed, step sizes) before the runs; the
/// adjusted scenarios are re-validated.
pub fn run_suite_with(
    adjust: impl Fn(&mut Scenario) + Sync,
) -> Result<SuiteReport, ScenarioError> {
    let mut jobs = Vec::new();
    for (name, src) in bundled_sources() {
        let mut sc = load_scenario(src)?;
        adjust(&mut sc);
        sc.validate()?;
        jobs.push((name, sc));
    }
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(name, sc)| {
                s.spawn(move || {
                    let (output, elapsed) = timed_run(&sc);
                    let checks = grade(name, &sc, &output, elapsed);
                    ScenarioResult { name, scenario: sc, output, elapsed, checks }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    Ok(SuiteReport { results, arithmetic: arithmetic_checks() })
}

pub fn run_suite() -> Result<SuiteReport, ScenarioError> {
    run_suite_with(|_| {})
}
