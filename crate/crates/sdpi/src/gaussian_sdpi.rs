//! Gap bounds for the power-constrained Gaussian channel `Y = √γ X + N(0,1)`,
//! `E X² <= 1`: the diagonal gap `t - F_I(t)` and the horizontal gap
//! `C(γ) - F_I(t)`, together with the Kolmogorov–Smirnov estimates and the
//! achievability examples that show how tight the bounds are.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::channels::{awgn_capacity, gauss_hermite_input, mi_additive, AdditiveChannel};
use crate::error::{domain, ensure, Result};
use crate::prob::{hb, q_function, DiscretePmf};
use crate::quad;

/// `a₀ = 24/π^{3/2}`.
pub const A0: f64 = 4.310_090_931_003_997;
/// `a₁ = √2/π`.
pub const A1: f64 = 0.450_158_158_078_553;

/// Constant in the two-set divergence bound.
pub const A2: f64 = 108.0;

/// SNR, information budget and the constants shared by the Gaussian bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianBoundParams {
    pub gamma: f64,
    pub t: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// Horizontal constant `c₁(γ)`.
    pub c1: f64,
    /// `2 log(1 + 1/γ)`, the rate of the Gauss–Hermite capacity bound at `m = e^t`.
    pub c2: f64,
}

impl GaussianBoundParams {
    pub fn new(gamma: f64, t: f64) -> Result<Self> {
        check_gamma(gamma)?;
        ensure(t >= 0.0 && t.is_finite(), || format!("t = {t} must be nonnegative"))?;
        let k = horizontal_constants(gamma)?;
        Ok(Self { gamma, t, a0: A0, a1: A1, a2: A2, c1: k.c1, c2: 2.0 * (1.0 / gamma).ln_1p() })
    }

    pub fn gd_lower(&self) -> Result<f64> {
        gd_lower(self.t, self.gamma)
    }

    pub fn ln_gh_lower(&self) -> Result<f64> {
        ln_gh_lower(self.t, self.gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    ensure(gamma > 0.0 && gamma.is_finite(), || format!("snr {gamma} must be positive"))
}

/// `h_b(x) + (x/2) log(1 + γ/x)`.
fn fd(x: f64, gamma: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    hb(x) + 0.5 * x * (gamma / x).ln_1p()
}

/// `2Q(√(γ/x))·(t - h_b(x) - (x/2) log(1 + γ/x))`.
pub fn gd_lower_at(t: f64, gamma: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    2.0 * q_function((gamma / x).sqrt()) * (t - fd(x, gamma))
}

/// Lower bound on `t - F_I(t)`: maximum of [`gd_lower_at`] over `x ∈ [0, 1/2]`,
/// clipped at zero.
pub fn gd_lower(t: f64, gamma: f64) -> Result<f64> {
    ensure(t >= 0.0 && t.is_finite(), || format!("t = {t} must be nonnegative"))?;
    check_gamma(gamma)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (_, v) = quad::grid_golden_max(0.0, 0.5, 2000, 1e-10, |x| gd_lower_at(t, gamma, x));
    Ok(v.max(0.0))
}

/// The diagonal bound restricted to `t = 1/u`, `x = 1/(2u log u)`.
pub fn gd_rate_small_t(u: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    ensure(u > 1.0 && u * u.ln() >= 1.0, || format!("u = {u} too small: need u log u >= 1"))?;
    let x = 1.0 / (2.0 * u * u.ln());
    Ok(gd_lower_at(1.0 / u, gamma, x).max(0.0))
}

/// `2Q(√(2γs log(1/y)))·(t - h_b(y) - (y/2) log(1 + γ/y))`, unclipped.
pub fn gd_subgaussian_at(t: f64, gamma: f64, s: f64, y: f64) -> f64 {
    if y <= 0.0 || y > 0.5 {
        return f64::NEG_INFINITY;
    }
    2.0 * q_function((2.0 * gamma * s * (1.0 / y).ln()).sqrt()) * (t - fd(y, gamma))
}

/// Diagonal bound for `s`-subgaussian inputs, maximised over the tail level
/// `y ∈ (0, 1/2]` and clipped at zero.
pub fn gd_subgaussian(t: f64, gamma: f64, s: f64) -> Result<f64> {
    check_gamma(gamma)?;
    ensure(s > 0.0 && s.is_finite(), || format!("subgaussian parameter {s} must be positive"))?;
    ensure(t > 0.0 && t <= 0.25, || format!("t = {t} outside (0, 1/4]"))?;
    let f = |ly: f64| gd_subgaussian_at(t, gamma, s, ly.exp());
    let (_, v) = quad::grid_golden_max(-700.0, 0.5f64.ln(), 2000, 1e-10, f);
    Ok(v.max(0.0))
}

/// Binary input `P[X=a] = 1/a²`, `P[X=0] = 1 - 1/a²`.
pub fn two_point_input(a: f64) -> Result<DiscretePmf> {
    ensure(a > 1.0 && a.is_finite(), || format!("a = {a} must exceed 1"))?;
    let w = 1.0 / (a * a);
    DiscretePmf::new(vec![0.0, a], vec![1.0 - w, w])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagAchievability {
    pub h_x: f64,
    pub fano_lower: f64,
    pub mi_exact: f64,
    pub ordered: bool,
}

/// `H(X)`, the Fano bound `H(X) - h_b(Q(√γ a/2))` and the exact `I(X;Y)` for
/// [`two_point_input`].
pub fn diag_achievability(a: f64, gamma: f64) -> Result<DiagAchievability> {
    check_gamma(gamma)?;
    let x = two_point_input(a)?;
    let h_x = x.entropy();
    let fano_lower = h_x - hb(q_function(gamma.sqrt() * a / 2.0));
    let mi_exact = mi_additive(&x, &AdditiveChannel::awgn(gamma)?)?;
    let ordered = fano_lower <= mi_exact + 1e-9 && mi_exact <= h_x + 1e-9;
    Ok(DiagAchievability { h_x, fano_lower, mi_exact, ordered })
}

fn check_eps(eps: f64) -> Result<()> {
    ensure(eps > 0.0 && eps < 1.0, || format!("gap {eps} outside (0,1)"))
}

/// `d_KS(P_X, N(0,1))` from an MMSE-integral gap `ε`.
pub fn ks_from_mmse_gap(eps: f64, gamma: f64) -> Result<f64> {
    check_eps(eps)?;
    check_gamma(gamma)?;
    let l = (1.0 / eps).ln();
    Ok(A0 * (1.0 / (gamma * l)).sqrt() + A1 * (1.0 + gamma) * eps.powf(0.25) * (gamma * l).sqrt())
}

/// `d_KS(P_X, N(0,1))` from a capacity gap `ε`, requires `γ > 4ε`.
pub fn ks_from_capacity_gap(eps: f64, gamma: f64) -> Result<f64> {
    check_eps(eps)?;
    check_gamma(gamma)?;
    ensure(gamma > 4.0 * eps, || format!("need γ > 4ε, got γ = {gamma}, ε = {eps}"))?;
    let l = (gamma / (4.0 * eps)).ln();
    Ok(A0 * (2.0 / (gamma * l)).sqrt() + A1 * (1.0 + gamma) * (gamma * eps).powf(0.25) * (2.0 * l).sqrt())
}

/// Transport-based variant of [`ks_from_capacity_gap`].
pub fn ks_talagrand(eps: f64, gamma: f64) -> Result<f64> {
    check_eps(eps)?;
    check_gamma(gamma)?;
    let l = (1.0 / eps).ln();
    Ok(A0 / (gamma * l).sqrt() + 2.0 * (2.0 * (1.0 + gamma)).sqrt() * eps.powf(0.25) * l.sqrt() / PI)
}

/// `(ε^{1/8}, 108 ε^{1/8})`: radius and escaping-mass bound under
/// `D(N(0,1) ‖ P_X * N(0,1)) <= 2ε`.
pub fn concentration_radius(eps: f64) -> Result<(f64, f64)> {
    ensure(eps > 0.0 && eps.is_finite(), || format!("ε = {eps} must be positive"))?;
    let r = eps.powf(0.125);
    Ok((r, 108.0 * r))
}

/// Constants of the horizontal bound `t >= ¼ log log(1/ε) - log c₁(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizontalConstants {
    /// `P_X(E) <= κ (log 1/ε)^{-1/2}` for the concentration interval `E`.
    pub kappa: f64,
    /// Additive loss in the two-set divergence bound.
    pub a5: f64,
    /// `c₁ = √(e^{a₅} κ)`.
    pub c1: f64,
    /// The bound holds for `log(1/ε) >= ln_inv_eps0`.
    pub ln_inv_eps0: f64,
}

impl HorizontalConstants {
    pub fn eps0(&self) -> f64 {
        (-self.ln_inv_eps0).exp()
    }
}

fn horizontal_valid(l: f64, gamma: f64, kappa: f64) -> bool {
    let four_over = (4.0 / gamma).ln().max(0.0);
    if l <= 0.0 || l <= (4.0 / gamma).ln() || l < 2.0 * four_over {
        return false;
    }
    let leak = A2 * (-l / 8.0).exp();
    if leak >= 1.0 {
        return false;
    }
    let lam = 0.5 * l.ln() - kappa.ln();
    leak * lam.max(0.0) <= LN_2
}

/// Assembles `κ(γ)`, `a₅`, `c₁(γ)` and the validity threshold.
pub fn horizontal_constants(gamma: f64) -> Result<HorizontalConstants> {
    check_gamma(gamma)?;
    let c = (gamma / 4.0).ln().max(0.0);
    let beta = if gamma < 4.0 { 2f64.sqrt() } else { 1.0 };
    let s_a = 2.0 * (-0.5f64).exp();
    let s_c = if c < 4.0 { 4.0 * ((c - 4.0) / 4.0).exp() } else { c };
    let term_a = 2f64.sqrt() * s_a / (PI * gamma).sqrt();
    let term_b = 2.0 * 2f64.sqrt() * beta * A0 / gamma.sqrt();
    let c_lemma = 2.0 * A1 * (1.0 + gamma) * gamma.powf(0.25) * 2f64.sqrt() * s_c;
    let c_transport = 2.0 * 2.0 * (2.0 * (1.0 + gamma)).sqrt() / PI * 4.0 / std::f64::consts::E;
    let kappa = term_a + term_b + c_lemma.max(c_transport);
    let a5 = LN_2 + 2.0 / std::f64::consts::E;
    let c1 = (a5.exp() * kappa).sqrt();
    let mut hi = 8.0;
    while !horizontal_valid(hi, gamma, kappa) {
        hi *= 2.0;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..64 {
        let mid = 0.5 * (lo + up);
        if horizontal_valid(mid, gamma, kappa) {
            up = mid;
        } else {
            lo = mid;
        }
    }
    Ok(HorizontalConstants { kappa, a5, c1, ln_inv_eps0: up })
}

/// `¼ log log(1/ε) - log c₁(γ)`, with `ε` given through `log(1/ε)`.
pub fn t_lower_from_ln_gap(ln_inv_eps: f64, gamma: f64) -> Result<f64> {
    let k = horizontal_constants(gamma)?;
    if !(ln_inv_eps >= k.ln_inv_eps0) {
        return Err(domain(format!(
            "gap e^-{ln_inv_eps} outside validity; need ε <= ε₀ = e^-{:.6}",
            k.ln_inv_eps0
        )));
    }
    Ok(0.25 * ln_inv_eps.ln() - k.c1.ln())
}

/// Horizontal lower bound on `I(W;X)` given `C(γ) - I(W;Y) <= ε`.
pub fn t_lower_from_gap(eps: f64, gamma: f64) -> Result<f64> {
    ensure(eps > 0.0 && eps < 1.0, || format!("gap {eps} outside (0,1)"))?;
    t_lower_from_ln_gap(-eps.ln(), gamma)
}

/// `log` of the horizontal-gap lower bound `min(ε₀, exp(-c₁⁴ e^{4t}))`.
pub fn ln_gh_lower(t: f64, gamma: f64) -> Result<f64> {
    ensure(t >= 0.0 && t.is_finite(), || format!("t = {t} must be nonnegative"))?;
    let k = horizontal_constants(gamma)?;
    Ok(-(k.c1.powi(4) * (4.0 * t).exp()).max(k.ln_inv_eps0))
}

/// Lower bound on `C(γ) - F_I(t)`; underflows to zero for most `t`, see
/// [`ln_gh_lower`].
pub fn gh_lower(t: f64, gamma: f64) -> Result<f64> {
    Ok(ln_gh_lower(t, gamma)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapAchievability {
    pub m: usize,
    pub bound: f64,
    pub gap: f64,
}

/// Gauss–Hermite input with `m = ⌊e^t⌋` atoms, its capacity gap, and the
/// bound `4(1+γ)(γ/(1+γ))^{2m}`.
pub fn gh_upper_achievability(t: f64, gamma: f64) -> Result<CapAchievability> {
    ensure((0.0..=20.0).contains(&t), || format!("t = {t} outside [0, 20]"))?;
    gh_capacity_gap((t.exp().floor() as usize).max(1), gamma)
}

/// Capacity gap of the `m`-atom Gauss–Hermite input against `4(1+γ)(γ/(1+γ))^{2m}`.
pub fn gh_capacity_gap(m: usize, gamma: f64) -> Result<CapAchievability> {
    ensure(m >= 1, || "need at least one atom".into())?;
    ensure(gamma >= 0.0 && gamma.is_finite(), || format!("snr {gamma} must be nonnegative"))?;
    if gamma == 0.0 {
        return Ok(CapAchievability { m, bound: 0.0, gap: 0.0 });
    }
    let bound = 4.0 * (1.0 + gamma) * (gamma / (1.0 + gamma)).powi(2 * m as i32);
    let x = gauss_hermite_input(m)?;
    let gap = awgn_capacity(gamma)? - mi_additive(&x, &AdditiveChannel::awgn(gamma)?)?;
    Ok(CapAchievability { m, bound, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants() {
        assert_abs_diff_eq!(A0, 24.0 / PI.powf(1.5), epsilon = 1e-14);
        assert_abs_diff_eq!(A1, 2f64.sqrt() / PI, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_basic() {
        assert_eq!(gd_lower(0.0, 1.0).unwrap(), 0.0);
        let v = gd_lower(0.5, 1.0).unwrap();
        assert!(v > 0.0 && v < 0.5);
        assert!(gd_lower(0.5, -1.0).is_err());
        assert!(gd_rate_small_t(1.2, 1.0).is_err());
        let u = 20.0;
        assert!(gd_rate_small_t(u, 1.0).unwrap() <= gd_lower(1.0 / u, 1.0).unwrap() + 1e-12);
    }

    #[test]
    fn subgaussian_literal_choice_is_negative() {
        let t: f64 = 0.1;
        let y = t / (1.0 / t).ln();
        assert!(gd_subgaussian_at(t, 1.0, 1.0, y) < 0.0);
        assert!(gd_subgaussian(t, 1.0, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn concentration() {
        let (r, m) = concentration_radius(1e-16).unwrap();
        assert_abs_diff_eq!(r, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(m, 1.08, epsilon = 1e-13);
    }

    #[test]
    fn horizontal_example() {
        let k = horizontal_constants(1.0).unwrap();
        let t = t_lower_from_ln_gap(16f64.exp(), 1.0).unwrap();
        assert_abs_diff_eq!(t, 4.0 - k.c1.ln(), epsilon = 1e-12);
        assert!(t_lower_from_gap(1e-3, 1.0).is_err());
        let lg = ln_gh_lower(t, 1.0).unwrap();
        assert_abs_diff_eq!(lg, -(16f64.exp()), epsilon = 1e-9 * 16f64.exp());
    }

    #[test]
    fn cap_at_two_atoms() {
        let r = gh_upper_achievability(2f64.ln() + 1e-9, 1.0).unwrap();
        assert_eq!(r.m, 2);
        assert_abs_diff_eq!(r.bound, 0.5, epsilon = 1e-15);
        assert!(r.gap <= r.bound);
    }
}
