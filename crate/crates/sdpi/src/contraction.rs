//! Total-variation contraction: shift distances `θ(δ)`, amplitude-constrained
//! coefficients `η_TV(A)`, Dobrushin coefficients and the moment thresholds
//! that feed the general diagonal bounds.

use std::f64::consts::E;

use serde::Serialize;

use crate::channels::{DmcKernel, NoiseModel};
use crate::error::{ensure, Error, Result};
use crate::prob::{abs_linear_segment, q_function, GridDensity};
use crate::quad;

/// `d_TV(P_Z, P_{Z+δ})`.
pub fn theta_shift(noise: &NoiseModel, delta: f64) -> Result<f64> {
    ensure(delta.is_finite(), || format!("shift {delta} must be finite"))?;
    Ok(1.0 - theta_complement(noise, delta)?)
}

/// `1 - θ(δ)`, computed without cancellation for the analytic families.
pub fn theta_complement(noise: &NoiseModel, delta: f64) -> Result<f64> {
    ensure(delta.is_finite(), || format!("shift {delta} must be finite"))?;
    let d = delta.abs();
    Ok(match noise {
        NoiseModel::Gaussian { sigma } => 2.0 * q_function(d / (2.0 * sigma)),
        NoiseModel::Uniform { lo, hi } => (1.0 - d / (hi - lo)).max(0.0),
        NoiseModel::Laplace { scale } => (-d / (2.0 * scale)).exp(),
        NoiseModel::Grid(g) => (1.0 - grid_shift_tv(g, d)).max(0.0),
    })
}

/// `½ ∫ |p(z) - p(z - δ)| dz` for the piecewise-linear interpolant.
fn grid_shift_tv(g: &GridDensity, d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let n = g.len();
    let mut pts: Vec<f64> = Vec::with_capacity(2 * n);
    for i in 0..n {
        pts.push(g.x(i));
        pts.push(g.x(i) + d);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * g.step());
    let diff = |x: f64| g.density_at(x) - g.density_at(x - d);
    let mut s = 0.0;
    let mut prev_x = pts[0];
    let mut prev_d = diff(prev_x);
    for &x in &pts[1..] {
        let dx = diff(x);
        s += abs_linear_segment(prev_d, dx, x - prev_x);
        prev_x = x;
        prev_d = dx;
    }
    (0.5 * s).min(1.0)
}

/// `η_TV(A) = sup_{|δ| <= 2A} θ(δ)`.
pub fn eta_tv_amplitude(noise: &NoiseModel, a: f64) -> Result<f64> {
    Ok(1.0 - eta_tv_complement(noise, a)?)
}

/// `1 - η_TV(A)`.
pub fn eta_tv_complement(noise: &NoiseModel, a: f64) -> Result<f64> {
    ensure(a >= 0.0 && a.is_finite(), || format!("amplitude {a} must be nonnegative"))?;
    if noise.is_symmetric_unimodal() {
        return theta_complement(noise, 2.0 * a);
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    let f = |d: f64| -theta_complement(noise, d).unwrap_or(1.0);
    let (_, v) = quad::grid_golden_max(0.0, 2.0 * a, 512, 1e-10 * (1.0 + a), f);
    Ok((-v).clamp(0.0, 1.0))
}

/// Dobrushin coefficient `max_{x,x'} d_TV(K(·|x), K(·|x'))`.
pub fn dobrushin_dmc(k: &DmcKernel) -> f64 {
    let mut best = 0.0f64;
    for a in 0..k.rows() {
        for b in a + 1..k.rows() {
            let d: f64 = k.row(a).iter().zip(k.row(b)).map(|(p, q)| (p - q).abs()).sum();
            best = best.max(0.5 * d);
        }
    }
    best
}

/// Outcome of a threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub alpha_star: Option<f64>,
    pub a_star: Option<f64>,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

fn search_floor(noise: &NoiseModel) -> f64 {
    match noise {
        NoiseModel::Grid(g) => 0.5 * g.step(),
        _ => 1e-12,
    }
}

/// `α* = inf{α > 0 : η_TV(1/(2α)) <= 1/3}`.
pub fn alpha_star(noise: &NoiseModel) -> Result<ThresholdReport> {
    let target = 1.0 / 3.0;
    let eta = |a: f64| eta_tv_amplitude(noise, a).unwrap_or(1.0);
    let floor = search_floor(noise);
    if eta(floor) > target {
        return Err(Error::NoSolution(format!(
            "η_TV exceeds 1/3 already at the resolvable amplitude {floor:e}"
        )));
    }
    let mut hi = floor.max(1e-6);
    let mut it = 0;
    while eta(hi) <= target {
        hi *= 2.0;
        it += 1;
        if hi > 1e12 {
            return Err(Error::NoSolution("η_TV never exceeds 1/3".into()));
        }
    }
    let lo = (hi / 2.0).max(floor);
    let (a, k) = quad::bisect_boundary(lo, hi, 1e-14 * hi, 200, |a| eta(a) <= target);
    let alpha = 1.0 / (2.0 * a);
    Ok(ThresholdReport {
        alpha_star: Some(alpha),
        a_star: Some(a),
        iterations: it + k,
        bracket: (1.0 / (2.0 * hi), 1.0 / (2.0 * lo)),
    })
}

/// Smallest `u >= floor` with `ln(u)/u <= level`; `ln(u)/u` decreases on `u >= e`.
fn smallest_u(floor: f64, level: f64) -> (f64, usize, (f64, f64)) {
    let g = |u: f64| u.ln() / u;
    if g(floor) <= level {
        return (floor, 0, (floor, floor));
    }
    let mut lo = floor;
    let mut hi = floor * 2.0;
    let mut it = 0;
    while g(hi) > level {
        lo = hi;
        hi *= 2.0;
        it += 1;
    }
    while hi - lo > 1e-12 * hi && it < 400 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= level {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
    (hi, it, (lo, hi))
}

/// `A₂*(t) = inf{A : 18γ A^{-p} log(A^p) <= t, A^p >= max(e, 2γ, α* e³/γ)}`.
pub fn a2_star(noise: &NoiseModel, t: f64, gamma: f64, p: f64) -> Result<ThresholdReport> {
    ensure(t > 0.0 && t.is_finite(), || format!("t = {t} must be positive"))?;
    ensure(gamma > 0.0 && p > 0.0, || "moment order and budget must be positive".into())?;
    let alpha = alpha_star(noise)?.alpha_star.unwrap();
    let floor = E.max(2.0 * gamma).max(alpha * E.powi(3) / gamma);
    let (u, it, (lo, hi)) = smallest_u(floor, t / (18.0 * gamma));
    Ok(ThresholdReport {
        alpha_star: Some(alpha),
        a_star: Some(u.powf(1.0 / p)),
        iterations: it,
        bracket: (lo.powf(1.0 / p), hi.powf(1.0 / p)),
    })
}

/// `A₁* = min{A : A^p >= max(e, 2γ, e³/(γΔ)), A^{-p} log A^p <= H/(6γ)}`.
pub fn a1_star(gamma: f64, p: f64, spacing: f64, entropy: f64) -> Result<ThresholdReport> {
    ensure(gamma > 0.0 && p > 0.0, || "moment order and budget must be positive".into())?;
    ensure(spacing > 0.0 && entropy > 0.0, || "grid spacing and entropy must be positive".into())?;
    let floor = E.max(2.0 * gamma).max(E.powi(3) / (gamma * spacing));
    let (u, it, (lo, hi)) = smallest_u(floor, entropy / (6.0 * gamma));
    Ok(ThresholdReport {
        alpha_star: None,
        a_star: Some(u.powf(1.0 / p)),
        iterations: it,
        bracket: (lo.powf(1.0 / p), hi.powf(1.0 / p)),
    })
}
