//! Deconvolution estimates: closeness of `P*P_Z` and `Q*P_Z` in total
//! variation implies closeness of `P` and `Q` in Kolmogorov–Smirnov distance
//! (or in the smoothed `v`-window sense), given a profile of the noise
//! characteristic function.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::channels::NoiseModel;
use crate::error::{domain, ensure, Error, Result};
use crate::prob::{levy_concentration, v_window, Distribution, GridDensity, Law};
use crate::quad;

/// `c = 2 + √(8π)`.
pub fn v_constant() -> f64 {
    2.0 + (8.0 * PI).sqrt()
}

/// Esseen smoothing bound
/// `(1/π)∫_{-T}^{T} |φ_P - φ_Q|/|ω| dω + 24 m₂/(πT)`; `m₂` bounds the density of `Q`.
pub fn esseen_bound(p: &dyn Law, q: &dyn Law, m2: f64, t: f64) -> Result<f64> {
    ensure(t > 0.0 && t.is_finite(), || format!("cutoff {t} must be positive"))?;
    ensure(m2 > 0.0 && m2.is_finite(), || format!("density bound {m2} must be positive"))?;
    let step = (1e-3f64).min(t / 4096.0);
    let n = ((t / step).ceil() as usize).max(2);
    let slope0 = (p.mean() - q.mean()).abs();
    let f = |w: f64| {
        if w == 0.0 {
            slope0
        } else {
            (p.char_fn(w) - q.char_fn(w)).norm() / w
        }
    };
    let integral = 2.0 * quad::simpson(0.0, t, n, f);
    Ok(integral / PI + 24.0 * m2 / (PI * t))
}

/// The `g₁` profile of `noise`; see [`CfProfile::for_noise`].
pub fn g1_profile(noise: &NoiseModel) -> Result<CfProfile> {
    CfProfile::for_noise(noise)
}

/// Profile `g₁` such that the noise CF is below `√u` on a set of measure at
/// most `√T` inside `[-T, T]` for `T = g₁(u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CfProfile {
    Gaussian { sigma: f64 },
    Uniform { width: f64 },
    Laplace { scale: f64 },
    Numeric { step: f64, mags: Vec<f64>, floor: f64 },
}

impl CfProfile {
    pub fn for_noise(noise: &NoiseModel) -> Result<Self> {
        Ok(match noise {
            NoiseModel::Gaussian { sigma } => CfProfile::Gaussian { sigma: *sigma },
            NoiseModel::Uniform { lo, hi } if hi - lo >= 1.0 => CfProfile::Uniform { width: hi - lo },
            NoiseModel::Laplace { scale } => CfProfile::Laplace { scale: *scale },
            NoiseModel::Uniform { .. } => {
                let step = 1e-3;
                let cap = 4096.0;
                let mags = (0..=(cap / step) as usize).map(|i| noise.char_fn(i as f64 * step).norm()).collect();
                CfProfile::Numeric { step, mags, floor: 1e-14 }
            }
            NoiseModel::Grid(g) => grid_profile(g),
        })
    }

    /// `g₁(u)` for `u ∈ (0, 1]`.
    pub fn g1(&self, u: f64) -> Result<f64> {
        ensure(u > 0.0 && u <= 1.0, || format!("profile argument {u} outside (0,1]"))?;
        self.g1_ln(u.ln())
    }

    /// `g₁(e^{ln_u})`, usable far below the `f64` range of `u`.
    pub fn g1_ln(&self, ln_u: f64) -> Result<f64> {
        ensure(ln_u <= 0.0, || format!("profile argument e^{ln_u} exceeds 1"))?;
        match self {
            CfProfile::Gaussian { sigma } => Ok((-ln_u).sqrt() / sigma),
            CfProfile::Uniform { width } => Ok((-ln_u / 3.0).exp() / width),
            CfProfile::Laplace { scale } => Ok(((-ln_u / 2.0).exp() - 1.0).max(0.0).sqrt() / scale),
            CfProfile::Numeric { step, mags, floor } => {
                let level = (0.5 * ln_u).exp();
                if level <= 10.0 * floor {
                    return Err(Error::ProfileFailure(format!(
                        "level √u = {level:e} is below the resolvable CF floor {floor:e}"
                    )));
                }
                let cap = step * (mags.len() - 1) as f64;
                let mut below = 0usize;
                let mut idx = 0usize;
                let mut best: Option<f64> = None;
                let mut k = -10i32;
                loop {
                    let t = 2f64.powi(k);
                    if t > cap {
                        break;
                    }
                    let end = ((t / step).floor() as usize).min(mags.len() - 1);
                    while idx <= end {
                        if mags[idx] <= level {
                            below += 1;
                        }
                        idx += 1;
                    }
                    let measure = 2.0 * step * below as f64;
                    if measure <= t.sqrt() {
                        best = Some(t);
                    }
                    k += 1;
                }
                best.ok_or_else(|| Error::ProfileFailure("no dyadic cutoff satisfies the measure condition".into()))
            }
        }
    }
}

fn grid_profile(g: &GridDensity) -> CfProfile {
    let h = g.step();
    let target = 1e-3;
    let m = ((2.0 * PI / (h * target)).ceil() as usize).next_power_of_two().max(g.len().next_power_of_two());
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
    let n = g.len();
    for (i, (b, v)) in buf.iter_mut().zip(g.values()).enumerate() {
        let wt = if i == 0 || i + 1 == n { 0.5 } else { 1.0 } * h;
        *b = Complex64::new(wt * v, 0.0);
    }
    FftPlanner::<f64>::new().plan_fft_inverse(m).process(&mut buf);
    let step = 2.0 * PI / (m as f64 * h);
    let nyq = m / 2;
    let mags: Vec<f64> = buf[..=nyq].iter().map(|c| c.norm()).collect();
    let tail = &mags[(nyq * 9) / 10..];
    let floor = tail.iter().copied().fold(1e-14, f64::max);
    CfProfile::Numeric { step, mags, floor }
}

/// `(T, c/√T)` with `T = g₁(m₁·d_TV)`: bound on
/// `sup_x |E_P v(T(X-x)) - E_Q v(T(X-x))|`.
pub fn deconv_v_bound(noise: &NoiseModel, d_tv: f64) -> Result<(f64, f64)> {
    ensure(d_tv > 0.0 && d_tv <= 1.0, || format!("d_TV = {d_tv} outside (0,1]"))?;
    let u = noise.sup_density() * d_tv;
    ensure(u <= 1.0, || format!("m₁·d_TV = {u} exceeds 1"))?;
    let t = CfProfile::for_noise(noise)?.g1(u)?;
    let bound = if t > 0.0 { v_constant() / t.sqrt() } else { f64::INFINITY };
    Ok((t, bound))
}

/// `E v(T(X - x0))` evaluated directly.
pub fn v_expectation(p: &Distribution, t: f64, x0: f64) -> f64 {
    match p {
        Distribution::Discrete(d) => d.atoms().iter().zip(d.weights()).map(|(a, w)| w * v_window(t * (a - x0))).sum(),
        Distribution::Grid(g) => {
            let n = g.len();
            (0..n)
                .map(|i| {
                    let wt = if i == 0 || i + 1 == n { 0.5 } else { 1.0 } * g.step();
                    wt * g.values()[i] * v_window(t * (g.x(i) - x0))
                })
                .sum()
        }
    }
}

/// `E v(T(X - x0))` through `(1/T)∫_{-T}^{T} φ_P(ω) e^{-iωx0} (1 - |ω|/T) dω`.
pub fn v_expectation_fourier(p: &Distribution, t: f64, x0: f64) -> f64 {
    let f = |w: f64| (p.char_fn(w) * Complex64::from_polar(1.0, -w * x0)).re * (1.0 - w / t);
    2.0 * quad::simpson(0.0, t, 4096, f) / t
}

/// Inputs of the TV-to-KS transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTransferInputs {
    pub m1: f64,
    pub m2: f64,
    /// `E_P|X| + E_Q|X|`.
    pub first_moments: f64,
    pub g_t: f64,
    pub h_t: f64,
    pub t: f64,
    pub d_tv: f64,
}

/// `2T h(T)/π + (24m₂ + 2(E_P|X| + E_Q|X|))/(πT) + (2T)^{3/2}/(√π g(T))·√(m₁ d_TV)`.
pub fn ks_from_tv_bound(inp: &KsTransferInputs) -> Result<f64> {
    ensure(inp.t > 0.0 && inp.t.is_finite(), || "cutoff must be positive".into())?;
    ensure(inp.m1 > 0.0 && inp.m2 > 0.0, || "density bounds must be positive".into())?;
    ensure(inp.h_t >= 0.0 && inp.first_moments >= 0.0, || "h(T) and moments must be nonnegative".into())?;
    ensure((0.0..=1.0).contains(&inp.d_tv), || format!("d_TV = {} outside [0,1]", inp.d_tv))?;
    if inp.g_t <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let t = inp.t;
    Ok(2.0 * t * inp.h_t / PI
        + (24.0 * inp.m2 + 2.0 * inp.first_moments) / (PI * t)
        + (2.0 * t).powf(1.5) / (PI.sqrt() * inp.g_t) * (inp.m1 * inp.d_tv).sqrt())
}

/// Second-moment variant: the `T^{3/2}√δ` term becomes `4T√(2Sδ)/(π g(T))`,
/// where `S` is the sum of the second moments of `P*P_Z` and `Q*P_Z`.
pub fn ks_from_tv_bound_w1(inp: &KsTransferInputs, conv_second_moments: f64) -> Result<f64> {
    ensure(conv_second_moments >= 0.0, || "second moments must be nonnegative".into())?;
    if inp.g_t <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let base = ks_from_tv_bound(&KsTransferInputs { m1: inp.m1, d_tv: 0.0, ..*inp })?;
    let moment_term = if inp.h_t > 0.0 { 0.0 } else { 2.0 * inp.first_moments / (PI * inp.t) };
    Ok(base - moment_term + 4.0 * inp.t * (2.0 * conv_second_moments * inp.d_tv).sqrt() / (PI * inp.g_t))
}

/// `inf_{|ω| <= T} |φ_Z(ω)|`.
pub fn cf_inf_modulus(noise: &NoiseModel, t: f64) -> f64 {
    match noise {
        NoiseModel::Gaussian { sigma } => (-0.5 * (sigma * t).powi(2)).exp(),
        NoiseModel::Laplace { scale } => 1.0 / (1.0 + (scale * t).powi(2)),
        NoiseModel::Uniform { lo, hi } => {
            if t * (hi - lo) >= 2.0 * PI {
                0.0
            } else {
                noise.char_fn(t).norm()
            }
        }
        NoiseModel::Grid(_) => {
            let step = 1e-3;
            let n = (t / step).ceil() as usize;
            (0..=n).map(|i| noise.char_fn((i as f64 * step).min(t)).norm()).fold(1.0, f64::min)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeconvKs {
    pub t: f64,
    pub bound: f64,
    pub residual: f64,
    pub fast_path: bool,
}

/// KS bound from a TV gap when the noise CF has no zeros on the working
/// range. Gaussian noise uses `T = √(log(1/d_TV)/2)`; other noises solve
/// `g(T)² = d_TV T⁵`.
pub fn ks_deconv_solve(noise: &NoiseModel, d_tv: f64, m2: f64, first_moments: f64) -> Result<DeconvKs> {
    ensure(d_tv > 0.0 && d_tv < 1.0, || format!("d_TV = {d_tv} outside (0,1)"))?;
    ensure(m2 > 0.0 && first_moments >= 0.0, || "density bound and moments must be positive".into())?;
    let m1 = noise.sup_density();
    if let NoiseModel::Gaussian { sigma } = noise {
        let t = ((1.0 / d_tv).ln() / 2.0).sqrt() / sigma;
        let g = cf_inf_modulus(noise, t);
        let bound = ks_from_tv_bound(&KsTransferInputs { m1, m2, first_moments, g_t: g, h_t: 0.0, t, d_tv })?;
        return Ok(DeconvKs { t, bound, residual: (g * g - d_tv * t.powi(5)).abs(), fast_path: true });
    }
    let f = |t: f64| cf_inf_modulus(noise, t).powi(2) - d_tv * t.powi(5);
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Precondition("no crossing of g(T)² = d_TV·T⁵ below 1e6".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = lo;
    let g = cf_inf_modulus(noise, t);
    if g <= 0.0 {
        return Err(Error::Precondition("noise CF vanishes on the working frequency range".into()));
    }
    let c0 = (24.0 * m2 + 2.0 * first_moments).max((8.0 * m1 * PI).sqrt()) / PI;
    Ok(DeconvKs { t, bound: 2.0 * c0 / t, residual: f(t).abs(), fast_path: false })
}

fn rho_value(ln_inv_eps: f64, profile: &CfProfile, m1: f64, x_star: &Distribution) -> Result<f64> {
    let t = profile.g1_ln(m1.ln() - 0.5 * ln_inv_eps)?;
    if !(t > 0.0) {
        return Ok(f64::INFINITY);
    }
    let l = levy_concentration(x_star, t.powf(-0.75))?;
    Ok(l + (4.0 + 2.0 * v_constant()) / t.sqrt())
}

/// Largest `log(1/ε)` below which the horizontal rate is undefined, by
/// 64-step bisection.
pub fn rho_validity_threshold(noise: &NoiseModel, x_star: &Distribution) -> Result<f64> {
    let profile = CfProfile::for_noise(noise)?;
    let m1 = noise.sup_density();
    let ok = |l: f64| matches!(rho_value(l, &profile, m1, x_star), Ok(v) if v < 1.0);
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(domain("the rate is undefined for every ε: x* is too concentrated"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `ρ(ε) = -½ log(L(X*; T^{-3/4}) + (4+2c)/√T)`, `T = g₁(m₁√ε)`, with `ε`
/// given through `log(1/ε)`.
pub fn rho_horizontal_ln(ln_inv_eps: f64, noise: &NoiseModel, x_star: &Distribution) -> Result<f64> {
    ensure(ln_inv_eps > 0.0, || "ε must lie in (0,1)".into())?;
    let profile = CfProfile::for_noise(noise)?;
    let v = rho_value(ln_inv_eps, &profile, noise.sup_density(), x_star)?;
    if v >= 1.0 {
        let l0 = rho_validity_threshold(noise, x_star)?;
        return Err(domain(format!("ε = e^-{ln_inv_eps} outside validity; need ε < ε₀ = e^-{l0:.6}")));
    }
    Ok(-0.5 * v.ln())
}

pub fn rho_horizontal(eps: f64, noise: &NoiseModel, x_star: &Distribution) -> Result<f64> {
    ensure(eps > 0.0 && eps < 1.0, || format!("ε = {eps} outside (0,1)"))?;
    rho_horizontal_ln(-eps.ln(), noise, x_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{DiscretePmf, Normal};
    use approx::assert_abs_diff_eq;

    #[test]
    fn esseen_identical_laws() {
        let n = Normal::standard();
        let v = esseen_bound(&n, &n, 0.4, 2.0).unwrap();
        assert_abs_diff_eq!(v, 24.0 * 0.4 / (2.0 * PI), epsilon = 1e-12);
        assert!(esseen_bound(&n, &n, 0.4, 0.0).is_err());
    }

    #[test]
    fn profiles() {
        let g = CfProfile::for_noise(&NoiseModel::standard_gaussian()).unwrap();
        assert_abs_diff_eq!(g.g1((-16.0f64).exp()).unwrap(), 4.0, epsilon = 1e-12);
        let u = CfProfile::for_noise(&NoiseModel::uniform(0.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(u.g1(1e-3).unwrap(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn v_bound_gaussian() {
        let n = NoiseModel::standard_gaussian();
        let d = (-16.0f64).exp() / n.sup_density();
        let (t, b) = deconv_v_bound(&n, d).unwrap();
        assert_abs_diff_eq!(t, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b, v_constant() / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn plancherel_identity() {
        let p: Distribution = DiscretePmf::new(vec![-0.4, 0.3, 1.1], vec![0.2, 0.5, 0.3]).unwrap().into();
        for &(t, x0) in &[(1.0, 0.0), (3.0, 0.2), (7.0, -0.5)] {
            assert_abs_diff_eq!(v_expectation(&p, t, x0), v_expectation_fourier(&p, t, x0), epsilon = 1e-8);
        }
    }

    #[test]
    fn gaussian_fast_path() {
        let r = ks_deconv_solve(&NoiseModel::standard_gaussian(), (-8.0f64).exp(), 0.4, 1.0).unwrap();
        assert!(r.fast_path);
        assert_abs_diff_eq!(r.t, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn laplace_root() {
        let r = ks_deconv_solve(&NoiseModel::laplace(1.0).unwrap(), 1e-4, 0.4, 1.0).unwrap();
        assert!(r.residual <= 1e-9 * r.t.powi(5).max(1.0));
    }
}
