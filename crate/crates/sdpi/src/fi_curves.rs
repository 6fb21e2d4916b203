//! `F_I` curves: closed forms for erasure and binary symmetric channels, the
//! fixed-marginal BSC curve, a numerical envelope for general DMCs, and a
//! checker for the structural properties every `F_I` curve satisfies.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{mi_coupling_dmc, mi_joint, DmcKernel};
use crate::error::{ensure, Result};
use crate::prob::{bconv, check_prob, hb, hb_inv, Ccurve};

/// `(1 - α)·min(t, log k)` for the erasure channel on `k` symbols.
pub fn fi_erasure(t: f64, alpha: f64, alphabet: usize) -> Result<f64> {
    ensure(t >= 0.0, || format!("t = {t} must be nonnegative"))?;
    check_prob(alpha, "erasure probability")?;
    ensure(alphabet >= 1, || "alphabet must be nonempty".into())?;
    Ok((1.0 - alpha) * t.min((alphabet as f64).ln()))
}

/// `h_b(δ * h_b⁻¹(x))` for `x ∈ [0, log 2]`.
pub fn mrs_gerber(x: f64, delta: f64) -> Result<f64> {
    ensure((0.0..=LN_2 + 1e-15).contains(&x), || format!("entropy {x} outside [0, log 2]"))?;
    check_prob(delta, "crossover")?;
    Ok(hb(bconv(delta, hb_inv(x))))
}

/// `log 2 - h_b(δ * h_b⁻¹(|log 2 - t|⁺))`.
pub fn fi_bsc(t: f64, delta: f64) -> Result<f64> {
    ensure(t >= 0.0 && t.is_finite(), || format!("t = {t} must be nonnegative"))?;
    check_prob(delta, "crossover")?;
    let x = (LN_2 - t).max(0.0);
    Ok((LN_2 - hb(bconv(delta, hb_inv(x)))).max(0.0))
}

/// `h_b(p * δ) - h_b(δ * h_b⁻¹(h_b(p) - x))` for input `Ber(p)`, `p <= 1/2`.
pub fn fi_fixed_marginal_bsc(x: f64, p: f64, delta: f64) -> Result<f64> {
    ensure((0.0..=0.5).contains(&p), || format!("input bias {p} outside [0, 1/2]"))?;
    check_prob(delta, "crossover")?;
    let h = hb(p);
    ensure(x >= 0.0 && x <= h + 1e-12, || format!("x = {x} outside [0, h_b(p)]"))?;
    let rest = (h - x).max(0.0);
    Ok(hb(bconv(p, delta)) - hb(bconv(delta, hb_inv(rest))))
}

/// Joint law of `(W, X)` as `P_W` and one conditional row `P_{X|W=w}` per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub w_weights: Vec<f64>,
    pub cond_rows: Vec<Vec<f64>>,
}

impl CouplingSpec {
    pub fn new(w_weights: Vec<f64>, cond_rows: Vec<Vec<f64>>) -> Result<Self> {
        ensure(!w_weights.is_empty() && w_weights.len() == cond_rows.len(), || {
            format!("{} labels for {} conditional rows", w_weights.len(), cond_rows.len())
        })?;
        let nx = cond_rows[0].len();
        let is_pmf = |r: &[f64]| r.iter().all(|v| *v >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        ensure(is_pmf(&w_weights), || "label weights are not a pmf".into())?;
        for (w, r) in cond_rows.iter().enumerate() {
            ensure(r.len() == nx && is_pmf(r), || format!("row {w} is not a pmf over {nx} atoms"))?;
        }
        Ok(Self { w_weights, cond_rows })
    }

    /// `joint[w][x] = P(w, x)`.
    pub fn joint(&self) -> Vec<Vec<f64>> {
        self.cond_rows.iter().zip(&self.w_weights).map(|(r, w)| r.iter().map(|v| v * w).collect()).collect()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        let mut px = vec![0.0; self.cond_rows[0].len()];
        for (r, w) in self.cond_rows.iter().zip(&self.w_weights) {
            for (a, v) in px.iter_mut().zip(r) {
                *a += w * v;
            }
        }
        px
    }

    /// `(I(W;X), I(W;Y))` through the kernel `k`.
    pub fn informations(&self, k: &DmcKernel) -> Result<(f64, f64)> {
        ensure(self.cond_rows[0].len() == k.rows(), || {
            format!("{} atoms for a kernel with {} rows", self.cond_rows[0].len(), k.rows())
        })?;
        let joint = self.joint();
        Ok((mi_joint(&joint), mi_coupling_dmc(&joint, k)))
    }
}

/// Cardinality of the auxiliary variable used by the envelope optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxSize {
    /// `|W| = |X|`.
    Alphabet,
    /// `|W| = |X| + 1`.
    AlphabetPlusOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub restarts: usize,
    pub lambdas: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_iter: usize,
    pub aux: AuxSize,
    pub seed: u64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            restarts: 32,
            lambdas: 64,
            lambda_min: 1e-3,
            lambda_max: 0.999,
            max_iter: 1500,
            aux: AuxSize::Alphabet,
            seed: 0,
        }
    }
}

struct Lagrangian<'a> {
    k: &'a DmcKernel,
    nw: usize,
    nx: usize,
    lambda: f64,
}

impl Lagrangian<'_> {
    fn rows(&self, q: &[f64]) -> Vec<Vec<f64>> {
        q.chunks(self.nx).map(|r| r.to_vec()).collect()
    }

    fn value(&self, q: &[f64]) -> (f64, f64, f64) {
        let rows = self.rows(q);
        let iwx = mi_joint(&rows);
        let iwy = mi_coupling_dmc(&rows, self.k);
        (iwy - self.lambda * iwx, iwx, iwy)
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let (nw, nx, ny) = (self.nw, self.nx, self.k.cols());
        let mut pw = vec![0.0; nw];
        let mut px = vec![0.0; nx];
        for w in 0..nw {
            for x in 0..nx {
                pw[w] += q[w * nx + x];
                px[x] += q[w * nx + x];
            }
        }
        let py = self.k.push(&px);
        let mut g = vec![0.0; nw * nx];
        for w in 0..nw {
            let qwy = self.k.push(&q[w * nx..(w + 1) * nx]);
            for x in 0..nx {
                let mut s = 0.0;
                for y in 0..ny {
                    let kxy = self.k.get(x, y);
                    if kxy > 0.0 {
                        s += kxy * (qwy[y].max(1e-300) / (pw[w].max(1e-300) * py[y].max(1e-300))).ln();
                    }
                }
                let qwx = q[w * nx + x].max(1e-300);
                g[w * nx + x] = s - self.lambda * (qwx / (pw[w].max(1e-300) * px[x].max(1e-300))).ln();
            }
        }
        g
    }

    /// Multiplicative mirror ascent on the joint simplex with a
    /// backtracking step size. Returns `(I(W;X), I(W;Y))` at the end point.
    fn maximize(&self, mut q: Vec<f64>, max_iter: usize) -> (f64, f64, f64) {
        let mut step = 1.0;
        let (mut val, _, _) = self.value(&q);
        let mut stall = 0;
        for _ in 0..max_iter {
            let g = self.gradient(&q);
            let gm = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut accepted = false;
            for _ in 0..30 {
                let mut cand: Vec<f64> = q.iter().zip(&g).map(|(a, b)| a * (step * (b - gm)).exp()).collect();
                let s: f64 = cand.iter().sum();
                for c in &mut cand {
                    *c /= s;
                }
                let (v, _, _) = self.value(&cand);
                if v >= val - 1e-15 {
                    let gain = v - val;
                    q = cand;
                    val = v;
                    accepted = true;
                    step = (step * 1.5).min(1e3);
                    stall = if gain < 1e-12 { stall + 1 } else { 0 };
                    break;
                }
                step *= 0.5;
            }
            if !accepted || stall >= 8 {
                break;
            }
        }
        self.value(&q)
    }
}

/// Upper concave hull through `(0,0)` of achievable `(I(W;X), I(W;Y))` pairs,
/// truncated at its maximum and extended flat.
pub(crate) fn concave_hull_eval(points: &[(f64, f64)], t: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.push((0.0, 0.0));
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let peak = hull
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.1 > acc.1 { (i, p.1) } else { acc });
    hull.truncate(peak.0 + 1);
    if t >= hull[hull.len() - 1].0 {
        return hull[hull.len() - 1].1;
    }
    for w in hull.windows(2) {
        if t <= w[1].0 {
            let s = if w[1].0 > w[0].0 { (t - w[0].0) / (w[1].0 - w[0].0) } else { 1.0 };
            return w[0].1 + s * (w[1].1 - w[0].1);
        }
    }
    hull[hull.len() - 1].1
}

/// Achievable lower envelope of the concavified `F_I` for a DMC, from a sweep
/// of `max I(W;Y) - λ I(W;X)` over couplings.
pub fn fi_dmc_envelope(k: &DmcKernel, t_grid: &[f64], params: &EnvelopeParams) -> Result<Ccurve> {
    ensure(t_grid.iter().all(|t| *t >= 0.0), || "t-grid must be nonnegative".into())?;
    ensure(params.lambdas >= 1 && params.restarts >= 1, || "need at least one λ and one restart".into())?;
    ensure(
        params.lambda_min > 0.0 && params.lambda_max >= params.lambda_min,
        || "λ range must be positive and ordered".into(),
    )?;
    let nx = k.rows();
    let nw = match params.aux {
        AuxSize::Alphabet => nx,
        AuxSize::AlphabetPlusOne => nx + 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut stalled = 0usize;
    for li in 0..params.lambdas {
        let frac = if params.lambdas == 1 { 0.0 } else { li as f64 / (params.lambdas - 1) as f64 };
        let lambda = params.lambda_min * (params.lambda_max / params.lambda_min).powf(frac);
        let lag = Lagrangian { k, nw, nx, lambda };
        let mut best = f64::NEG_INFINITY;
        let mut improved = false;
        for r in 0..params.restarts {
            let q0 = random_joint(&mut rng, nw * nx, r);
            let (v, iwx, iwy) = lag.maximize(q0, params.max_iter);
            if v > best + 1e-12 {
                if r > 0 {
                    improved = true;
                }
                best = v;
            }
            points.push((iwx, iwy));
        }
        if !improved {
            stalled += 1;
        }
    }
    let f: Vec<f64> = t_grid.iter().map(|&t| concave_hull_eval(&points, t)).collect();
    let curve = Ccurve::new(t_grid.to_vec(), f)?
        .with_meta("method", "lagrangian-envelope")
        .with_meta("restarts", params.restarts)
        .with_meta("lambdas", params.lambdas)
        .with_meta("aux_size", nw)
        .with_meta("seed", params.seed)
        .with_meta("lambdas_without_restart_gain", stalled);
    Ok(curve)
}

fn random_joint(rng: &mut ChaCha8Rng, n: usize, restart: usize) -> Vec<f64> {
    let sharp = if restart.is_multiple_of(2) { 1.0 } else { 4.0 };
    let mut v: Vec<f64> = (0..n).map(|_| (-rng.random::<f64>().max(1e-300).ln()).powf(sharp)).collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x = (*x / s).max(1e-12);
    }
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Result of [`fi_properties_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Checks monotonicity, `F(t) <= t`, `F(t)/t` nonincreasing, subadditivity
/// and `F(0) = 0` on the sampled curve with tolerance 1e-6.
pub fn fi_properties_check(curve: &Ccurve) -> PropertyReport {
    let tol = 1e-6;
    let (t, f) = (&curve.t, &curve.f);
    let mut failures = Vec::new();
    for i in 0..t.len() {
        if f[i] > t[i] + tol {
            failures.push(format!("F({}) = {} exceeds t", t[i], f[i]));
        }
        if i + 1 < t.len() {
            if f[i + 1] < f[i] - tol {
                failures.push(format!("F decreases between t = {} and t = {}", t[i], t[i + 1]));
            }
            if t[i] > 0.0 && f[i + 1] / t[i + 1] > f[i] / t[i] + tol {
                failures.push(format!("F(t)/t increases between t = {} and t = {}", t[i], t[i + 1]));
            }
        }
        if t[i] == 0.0 && f[i].abs() > tol {
            failures.push(format!("F(0) = {}", f[i]));
        }
    }
    let t_max = t.last().copied().unwrap_or(0.0);
    for i in 0..t.len() {
        for j in i..t.len() {
            let s = t[i] + t[j];
            if t[i] <= 0.0 || s > t_max + 1e-12 {
                continue;
            }
            let fs = curve.eval(s);
            if fs > f[i] + f[j] + tol {
                failures.push(format!("subadditivity fails at ({}, {}): F(sum) = {fs}", t[i], t[j]));
            }
        }
    }
    PropertyReport { ok: failures.is_empty(), failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bsc_values() {
        assert_abs_diff_eq!(fi_bsc(0.0, 0.1).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fi_bsc(LN_2, 0.1).unwrap(), LN_2 - hb(0.1), epsilon = 1e-12);
        assert_abs_diff_eq!(fi_bsc(1.0, 0.1).unwrap(), LN_2 - hb(0.1), epsilon = 1e-12);
        assert!(fi_bsc(0.3, 1.2).is_err());
        assert_abs_diff_eq!(mrs_gerber(hb(0.1), 0.1).unwrap(), 0.471_393_486_810_094_2, epsilon = 1e-9);
    }

    #[test]
    fn fixed_marginal_ends() {
        let p = 0.2;
        let d = 0.1;
        assert_abs_diff_eq!(fi_fixed_marginal_bsc(0.0, p, d).unwrap(), 0.0, epsilon = 1e-12);
        let full = hb(bconv(p, d)) - hb(d);
        assert_abs_diff_eq!(fi_fixed_marginal_bsc(hb(p), p, d).unwrap(), full, epsilon = 1e-12);
        assert!(fi_fixed_marginal_bsc(hb(p) + 0.1, p, d).is_err());
    }

    #[test]
    fn erasure_values() {
        assert_abs_diff_eq!(fi_erasure(0.5, 0.3, 3).unwrap(), 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(fi_erasure(5.0, 0.3, 3).unwrap(), 0.7 * 3f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn hull_is_flat_after_peak() {
        let pts = [(0.5, 0.4), (1.0, 0.6), (1.5, 0.55)];
        assert_abs_diff_eq!(concave_hull_eval(&pts, 0.25), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(concave_hull_eval(&pts, 2.0), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn property_checker_flags_violations() {
        let c = Ccurve::new(vec![0.0, 0.1, 0.2], vec![0.0, 0.2, 0.2]).unwrap();
        let r = fi_properties_check(&c);
        assert!(!r.ok);
        let good = Ccurve::from_fn(&[0.0, 0.1, 0.2, 0.3], |t| fi_bsc(t, 0.1).unwrap()).unwrap();
        assert!(fi_properties_check(&good).ok);
    }
}
