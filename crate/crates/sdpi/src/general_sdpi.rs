//! Diagonal bounds for general additive noise under an `L_p` moment
//! constraint, the strict-contraction test on grid densities, and the
//! general horizontal rate.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::NoiseModel;
use crate::contraction::{a1_star, a2_star, eta_tv_complement};
use crate::error::{ensure, Error, Result};
use crate::prob::{Distribution, GridDensity};

pub use crate::deconv::{rho_horizontal, rho_horizontal_ln, rho_validity_threshold};

/// Noise, moment order and budget, plus an approximation of the
/// capacity-achieving input where the horizontal rate needs one.
#[derive(Debug, Clone)]
pub struct GeneralBoundParams {
    pub noise: NoiseModel,
    pub p: f64,
    pub gamma: f64,
    pub capacity_input: Option<Distribution>,
}

impl GeneralBoundParams {
    pub fn new(noise: NoiseModel, p: f64, gamma: f64) -> Result<Self> {
        ensure(p >= 1.0 && p.is_finite(), || format!("moment order p = {p} must be >= 1"))?;
        ensure(gamma > 0.0 && gamma.is_finite(), || format!("budget γ = {gamma} must be positive"))?;
        Ok(Self { noise, p, gamma, capacity_input: None })
    }

    pub fn with_capacity_input(mut self, x: Distribution) -> Self {
        self.capacity_input = Some(x);
        self
    }

    pub fn diag(&self, t: f64) -> Result<GeneralDiag> {
        general_diag_bound(t, &self.noise, self.p, self.gamma)
    }

    pub fn rho(&self, eps: f64) -> Result<f64> {
        let x = self
            .capacity_input
            .as_ref()
            .ok_or_else(|| Error::Precondition("the horizontal rate needs a capacity input".into()))?;
        rho_horizontal(eps, &self.noise, x)
    }
}

/// `I_WX - η̄ (I_WX - h(ε) - ε I(W;X|E=1))`.
pub fn diag_master_bound(i_wx: f64, h_eps: f64, eps: f64, i_cond_e1: f64, eta_bar: f64) -> Result<f64> {
    ensure(
        i_wx >= 0.0 && h_eps >= 0.0 && eps >= 0.0 && i_cond_e1 >= 0.0,
        || "information terms must be nonnegative".into(),
    )?;
    ensure((0.0..=1.0).contains(&eta_bar), || format!("η̄ = {eta_bar} outside [0,1]"))?;
    Ok(i_wx - eta_bar * (i_wx - h_eps - eps * i_cond_e1))
}

/// Coefficient `1 - (1 - η_TV(A₁*))/2` with `I(X;Y) <= coefficient · H(X)` for
/// inputs on a grid of spacing `Δ`.
pub fn discrete_grid_bound(noise: &NoiseModel, p: f64, gamma: f64, grid_step: f64, entropy: f64) -> Result<f64> {
    let a1 = a1_star(gamma, p, grid_step, entropy)?.a_star.unwrap();
    Ok(1.0 - 0.5 * eta_tv_complement(noise, a1)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralDiag {
    pub value: f64,
    pub contracting: bool,
    pub alpha_star: Option<f64>,
    pub a2_star: Option<f64>,
    /// `1 - η_TV(A₂*)`.
    pub eta_complement: f64,
}

/// `g_d(t) = ½ (1 - η_TV(A₂*)) t`.
pub fn general_diag_bound(t: f64, noise: &NoiseModel, p: f64, gamma: f64) -> Result<GeneralDiag> {
    ensure(t > 0.0 && t.is_finite(), || format!("t = {t} must be positive"))?;
    ensure(p >= 1.0, || format!("moment order p = {p} must be >= 1"))?;
    let r = match a2_star(noise, t, gamma, p) {
        Ok(r) => r,
        Err(Error::NoSolution(_)) => {
            return Ok(GeneralDiag { value: 0.0, contracting: false, alpha_star: None, a2_star: None, eta_complement: 0.0 })
        }
        Err(e) => return Err(e),
    };
    let a2 = r.a_star.unwrap();
    let comp = eta_tv_complement(noise, a2)?;
    Ok(GeneralDiag {
        value: 0.5 * comp * t,
        contracting: comp > 0.0,
        alpha_star: r.alpha_star,
        a2_star: Some(a2),
        eta_complement: comp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictReport {
    pub strict: bool,
    pub witness: Option<f64>,
    /// Smallest `Leb(S ∩ (S+x))` over the scanned shifts.
    pub min_overlap: f64,
    /// Verdicts are valid up to this grid step.
    pub resolution: f64,
}

/// Support threshold for grid nodes.
pub const SUPPORT_FLOOR: f64 = 1e-12;

fn support_intervals(g: &GridDensity) -> Vec<(f64, f64)> {
    let mask = g.support_mask(SUPPORT_FLOOR);
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=mask.len() {
        let on = i < mask.len() && mask[i];
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((g.x(s), g.x(i - 1)));
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn overlap(s: &[(f64, f64)], x: f64) -> f64 {
    let mut total = 0.0;
    for &(a, b) in s {
        for &(c, d) in s {
            let lo = a.max(c + x);
            let hi = b.min(d + x);
            if hi > lo {
                total += hi - lo;
            }
        }
    }
    total
}

/// Scans `Leb(S ∩ (S+x))` over `shift_grid`; a shift whose overlap falls
/// below half a grid cell is a witness of non-strict contraction. The witness
/// of smallest `|x|` is reported.
pub fn strict_contraction_check(noise: &GridDensity, shift_grid: &[f64]) -> StrictReport {
    let s = support_intervals(noise);
    let h = noise.step();
    let overlaps: Vec<(f64, f64)> = shift_grid.par_iter().map(|&x| (x, overlap(&s, x))).collect();
    let min_overlap = overlaps.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let witness = overlaps
        .iter()
        .filter(|(_, o)| *o < 0.5 * h)
        .map(|(x, _)| *x)
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap().then(a.partial_cmp(b).unwrap()));
    StrictReport { strict: witness.is_none(), witness, min_overlap, resolution: h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::q_function;
    use approx::assert_abs_diff_eq;

    #[test]
    fn master_bound_arithmetic() {
        assert_abs_diff_eq!(diag_master_bound(0.5, 0.05, 0.01, 0.3, 0.4).unwrap(), 0.3212, epsilon = 1e-15);
        assert_eq!(diag_master_bound(0.7, 0.1, 0.1, 0.1, 0.0).unwrap(), 0.7);
        assert_eq!(diag_master_bound(0.7, 0.0, 0.0, 0.1, 1.0).unwrap(), 0.0);
        assert!(diag_master_bound(0.7, 0.0, 0.0, 0.1, 1.5).is_err());
    }

    #[test]
    fn grid_coefficient_gaussian() {
        let g = NoiseModel::standard_gaussian();
        let a1 = a1_star(1.0, 2.0, 1.0, 1.0).unwrap().a_star.unwrap();
        let c = discrete_grid_bound(&g, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(c, 1.0 - q_function(a1), epsilon = 1e-14);
        assert!(c < 1.0);
    }

    #[test]
    fn gaussian_diag_positive() {
        let r = general_diag_bound(0.5, &NoiseModel::standard_gaussian(), 2.0, 1.0).unwrap();
        assert!(r.contracting && r.value > 0.0 && r.value < 0.25);
    }

    #[test]
    fn strict_verdicts() {
        let gauss = NoiseModel::standard_gaussian().to_grid(0.01).unwrap();
        let shifts: Vec<f64> = (0..=300).map(|i| i as f64 * 0.01).collect();
        assert!(strict_contraction_check(&gauss, &shifts).strict);
        let unif = GridDensity::from_fn(0.0, 1.0, 1001, |_| 1.0).unwrap();
        let r = strict_contraction_check(&unif, &shifts);
        assert!(!r.strict);
        assert_abs_diff_eq!(r.witness.unwrap(), 1.0, epsilon = 1e-12);
    }
}
