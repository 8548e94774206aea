#![allow(dead_code)]

use planarizer::dynamics::{step_physics, ModelParams, PlantState};
use planarizer::SpringMode;

/// Robot kicked upward off its static hang under a stationary planarizer:
/// the cable goes slack, then the spring catches it again.
pub fn bounce_start(p: &ModelParams<f64>) -> PlantState<f64> {
    let y_p = 0.5;
    PlantState { t: 0.0, y_r: y_p - p.static_deflection(), v_r: 1.0, y_p, v_p: 0.0 }
}

/// Robot trajectory (t, y_r) of the bounce integrated with the library's RK4.
pub fn bounce_rk4(dt: f64, duration: f64) -> Vec<(f64, f64)> {
    let p = ModelParams::<f64>::default();
    let mut s = bounce_start(&p);
    let n = (duration / dt).round() as usize;
    let mut out = vec![(s.t, s.y_r)];
    for _ in 0..n {
        s = step_physics(&s, 0.0, |_| 0.0, dt, &p, SpringMode::Corrected).unwrap();
        out.push((s.t, s.y_r));
    }
    out
}

/// Spring law written out independently of the library.
pub fn oracle_spring(dy: f64, dv: f64, k: f64, b: f64, eps: f64) -> f64 {
    if dy >= 0.0 {
        k * dy + b * dv
    } else if dy > -eps {
        let r = dy / eps;
        b * (1.0 - 2.0 * r * r * r - 3.0 * r * r) * dv
    } else {
        0.0
    }
}

/// Explicit Euler on M y'' = F_sp - g (M - M_h) with the planarizer fixed.
pub fn bounce_euler(dt: f64, duration: f64, sample_every: usize) -> Vec<(f64, f64)> {
    let (m, m_h, g, k, b, eps) = (11.07, 0.45, 9.81, 5250.0, 300.0, 1e-3);
    let (y_p, v_p) = (0.5, 0.0);
    let mut y = y_p - g * (m - m_h) / k;
    let mut v = 1.0;
    let n = (duration / dt).round() as usize;
    let mut out = vec![(0.0, y)];
    for i in 1..=n {
        let f = oracle_spring(y_p - y, v_p - v, k, b, eps);
        let a = (f - g * (m - m_h)) / m;
        y += dt * v;
        v += dt * a;
        if i % sample_every == 0 {
            out.push((i as f64 * dt, y));
        }
    }
    out
}

pub fn sup_diff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            assert!((x.0 - y.0).abs() < 1e-9);
            (x.1 - y.1).abs()
        })
        .fold(0.0, f64::max)
}

/// Every `k`-th sample, starting with the first.
pub fn every(v: &[(f64, f64)], k: usize) -> Vec<(f64, f64)> {
    v.iter().step_by(k).copied().collect()
}

/// Jump in the central-difference slope of `f` across `x0`, relative to `scale`.
pub fn slope_jump(f: impl Fn(f64) -> f64, x0: f64, scale: f64) -> f64 {
    let (eta, h) = (1e-9, 1e-10);
    let d = |x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (d(x0 + eta) - d(x0 - eta)).abs() / scale
}
