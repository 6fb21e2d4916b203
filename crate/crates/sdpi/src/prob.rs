//! Probability primitives: discrete and gridded laws, entropies, distances,
//! characteristic functions and convolution.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI, SQRT_2};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure, Error, Result};

/// Mass tolerance accepted by the normalising constructors.
pub const MASS_TOL: f64 = 1e-6;

/// Finitely supported law on the real line with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePmf {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscretePmf {
    /// Validates sorted atoms and nonnegative weights summing to one.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(Error::Shape(format!(
                "{} atoms vs {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        ensure(atoms.iter().all(|a| a.is_finite()), || "non-finite atom".into())?;
        ensure(atoms.windows(2).all(|w| w[0] < w[1]), || "atoms must be strictly increasing".into())?;
        ensure(weights.iter().all(|w| w.is_finite() && *w >= 0.0), || "negative or non-finite weight".into())?;
        let total: f64 = weights.iter().sum();
        ensure((total - 1.0).abs() <= 1e-9, || format!("weights sum to {total}"))?;
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { atoms, weights })
    }

    /// Sorts atoms, merges duplicates and normalises the weights.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut v: Vec<(f64, f64)> = pairs.into_iter().collect();
        ensure(v.iter().all(|(a, w)| a.is_finite() && w.is_finite() && *w >= 0.0), || {
            "invalid atom/weight pair".into()
        })?;
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut atoms: Vec<f64> = Vec::with_capacity(v.len());
        let mut weights: Vec<f64> = Vec::with_capacity(v.len());
        for (a, w) in v {
            if atoms.last() == Some(&a) {
                *weights.last_mut().unwrap() += w;
            } else {
                atoms.push(a);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        ensure(total > 0.0, || "zero total mass".into())?;
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::new(atoms, weights)
    }

    pub fn point_mass(a: f64) -> Self {
        Self { atoms: vec![a], weights: vec![1.0] }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn abs_moment(&self, p: f64) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * a.abs().powf(p)).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * a * a).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * (a - m) * (a - m)).sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.weights)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `P[X <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| *a <= x);
        self.weights[..k].iter().sum::<f64>().min(1.0)
    }

    /// `P[X < x]`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| *a < x);
        self.weights[..k].iter().sum::<f64>().min(1.0)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            acc += w;
            if acc >= u {
                return *a;
            }
        }
        *self.atoms.last().unwrap()
    }

    pub fn char_fn(&self, omega: f64) -> Complex64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| Complex64::from_polar(*w, omega * a))
            .sum()
    }

    /// Law of `c·X`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        ensure(c > 0.0 && c.is_finite(), || format!("scale {c} must be positive"))?;
        Ok(Self { atoms: self.atoms.iter().map(|a| a * c).collect(), weights: self.weights.clone() })
    }

    /// Affine map to mean 0 and variance 1.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mean();
        let v = self.variance();
        ensure(v > 1e-300, || "zero-variance input cannot be normalised".into())?;
        let s = v.sqrt();
        Ok(Self { atoms: self.atoms.iter().map(|a| (a - m) / s).collect(), weights: self.weights.clone() })
    }

    /// True when mean is 0 and variance is 1 within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.mean().abs() <= tol && (self.second_moment() - 1.0).abs() <= tol
    }
}

/// Density sampled on a uniform grid and interpreted as its piecewise-linear
/// interpolant (zero outside the grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    x_min: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridDensity {
    /// Requires trapezoid mass within [`MASS_TOL`] of one; renormalises exactly.
    pub fn new(x_min: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        Self::checked(x_min, step, values)
    }

    fn raw(x_min: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        ensure(x_min.is_finite(), || "non-finite grid origin".into())?;
        ensure(step > 0.0 && step.is_finite(), || format!("grid step {step} must be positive"))?;
        if values.len() < 2 {
            return Err(Error::Shape("grid needs at least two nodes".into()));
        }
        ensure(values.iter().all(|v| v.is_finite() && *v >= 0.0), || "negative or non-finite density".into())?;
        Ok(Self { x_min, step, values })
    }

    fn checked(x_min: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        let g = Self::raw(x_min, step, values)?;
        let m = g.mass();
        ensure((m - 1.0).abs() <= MASS_TOL, || format!("density integrates to {m}"))?;
        Ok(g.rescaled(1.0 / m))
    }

    /// Normalises any nonnegative sample vector with positive trapezoid mass.
    pub fn from_unnormalized(x_min: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        let g = Self::raw(x_min, step, values)?;
        let m = g.mass();
        ensure(m > 0.0, || "density has zero mass".into())?;
        Ok(g.rescaled(1.0 / m))
    }

    /// Samples `f` on `[lo, hi]` with `n` nodes and normalises.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        ensure(hi > lo && n >= 2, || "invalid sampling window".into())?;
        let step = (hi - lo) / (n - 1) as f64;
        let values = (0..n).map(|i| f(lo + i as f64 * step).max(0.0)).collect();
        Self::from_unnormalized(lo, step, values)
    }

    /// Standard normal `N(mu, sd²)` on `mu ± span·sd` with the given step.
    pub fn gaussian(mu: f64, sd: f64, step: f64, span: f64) -> Result<Self> {
        let n = (2.0 * span * sd / step).round() as usize + 1;
        let lo = mu - step * ((n - 1) as f64) / 2.0;
        Self::from_fn(lo, lo + step * (n - 1) as f64, n, |x| {
            (-(x - mu) * (x - mu) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt())
        })
    }

    fn rescaled(mut self, c: f64) -> Self {
        for v in &mut self.values {
            *v *= c;
        }
        self
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.step * (self.values.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.step * i as f64
    }

    fn trap_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.values.len() {
            0.5 * self.step
        } else {
            self.step
        }
    }

    /// Trapezoid mass.
    pub fn mass(&self) -> f64 {
        (0..self.values.len()).map(|i| self.trap_weight(i) * self.values[i]).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation, zero outside the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        let u = (x - self.x_min) / self.step;
        if !(u >= 0.0) || u > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.values.len() - 2);
        let f = u - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.values.len()];
        for i in 1..self.values.len() {
            c[i] = c[i - 1] + 0.5 * self.step * (self.values[i - 1] + self.values[i]);
        }
        c
    }

    /// Exact CDF of the piecewise-linear interpolant.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_with(&self.cumulative(), x)
    }

    fn cdf_with(&self, cum: &[f64], x: f64) -> f64 {
        if x <= self.x_min {
            return 0.0;
        }
        if x >= self.x_max() {
            return 1.0;
        }
        let u = (x - self.x_min) / self.step;
        let i = (u.floor() as usize).min(self.values.len() - 2);
        let s = x - self.x(i);
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        (cum[i] + f0 * s + (f1 - f0) * s * s / (2.0 * self.step)).clamp(0.0, 1.0)
    }

    fn quantile_with(&self, cum: &[f64], u: f64) -> f64 {
        if u <= 0.0 {
            return self.x_min;
        }
        let n = self.values.len();
        if u >= cum[n - 1] {
            return self.x_max();
        }
        let i = cum.partition_point(|c| *c < u).saturating_sub(1).min(n - 2);
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let r = u - cum[i];
        let a = (f1 - f0) / (2.0 * self.step);
        let s = if a.abs() < 1e-14 * (f0 + f1).max(1e-300) {
            if f0 > 0.0 { r / f0 } else { 0.0 }
        } else {
            let disc = (f0 * f0 + 4.0 * a * r).max(0.0);
            2.0 * r / (f0 + disc.sqrt())
        };
        self.x(i) + s.clamp(0.0, self.step)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.quantile_with(&self.cumulative(), u)
    }

    pub fn mean(&self) -> f64 {
        (0..self.len()).map(|i| self.trap_weight(i) * self.values[i] * self.x(i)).sum()
    }

    pub fn abs_moment(&self, p: f64) -> f64 {
        (0..self.len()).map(|i| self.trap_weight(i) * self.values[i] * self.x(i).abs().powf(p)).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.abs_moment(2.0)
    }

    /// Differential entropy in nats (trapezoid).
    pub fn entropy(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let v = self.values[i];
                if v > 0.0 { -self.trap_weight(i) * v * v.ln() } else { 0.0 }
            })
            .sum()
    }

    /// Trapezoid characteristic function.
    pub fn char_fn(&self, omega: f64) -> Complex64 {
        (0..self.len())
            .map(|i| Complex64::from_polar(self.trap_weight(i) * self.values[i], omega * self.x(i)))
            .sum()
    }

    /// Nodes with value above `floor`.
    pub fn support_mask(&self, floor: f64) -> Vec<bool> {
        self.values.iter().map(|v| *v > floor).collect()
    }

    /// Linear resampling onto a finer step `step / k`.
    pub fn refined(&self, k: usize) -> Self {
        if k <= 1 {
            return self.clone();
        }
        let n = (self.len() - 1) * k + 1;
        let h = self.step / k as f64;
        let values = (0..n).map(|i| self.density_at(self.x_min + h * i as f64)).collect();
        Self { x_min: self.x_min, step: h, values }.renormalized()
    }

    fn renormalized(self) -> Self {
        let m = self.mass();
        if m > 0.0 { self.rescaled(1.0 / m) } else { self }
    }
}

/// Either kind of law handled by the distance functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    Discrete(DiscretePmf),
    Grid(GridDensity),
}

impl From<DiscretePmf> for Distribution {
    fn from(p: DiscretePmf) -> Self {
        Distribution::Discrete(p)
    }
}

impl From<GridDensity> for Distribution {
    fn from(g: GridDensity) -> Self {
        Distribution::Grid(g)
    }
}

/// Common interface used by the deconvolution estimates.
pub trait Law {
    fn cdf(&self, x: f64) -> f64;
    fn char_fn(&self, omega: f64) -> Complex64;
    fn mean(&self) -> f64;
    fn abs_mean(&self) -> f64;
}

impl Law for DiscretePmf {
    fn cdf(&self, x: f64) -> f64 {
        DiscretePmf::cdf(self, x)
    }
    fn char_fn(&self, omega: f64) -> Complex64 {
        DiscretePmf::char_fn(self, omega)
    }
    fn mean(&self) -> f64 {
        DiscretePmf::mean(self)
    }
    fn abs_mean(&self) -> f64 {
        self.abs_moment(1.0)
    }
}

impl Law for GridDensity {
    fn cdf(&self, x: f64) -> f64 {
        GridDensity::cdf(self, x)
    }
    fn char_fn(&self, omega: f64) -> Complex64 {
        GridDensity::char_fn(self, omega)
    }
    fn mean(&self) -> f64 {
        GridDensity::mean(self)
    }
    fn abs_mean(&self) -> f64 {
        self.abs_moment(1.0)
    }
}

impl Law for Distribution {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Discrete(p) => p.cdf(x),
            Distribution::Grid(g) => g.cdf(x),
        }
    }
    fn char_fn(&self, omega: f64) -> Complex64 {
        match self {
            Distribution::Discrete(p) => p.char_fn(omega),
            Distribution::Grid(g) => g.char_fn(omega),
        }
    }
    fn mean(&self) -> f64 {
        match self {
            Distribution::Discrete(p) => p.mean(),
            Distribution::Grid(g) => g.mean(),
        }
    }
    fn abs_mean(&self) -> f64 {
        match self {
            Distribution::Discrete(p) => p.abs_moment(1.0),
            Distribution::Grid(g) => g.abs_moment(1.0),
        }
    }
}

/// `N(mean, sd²)` as an analytic law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    pub mean: f64,
    pub sd: f64,
}

impl Normal {
    pub fn standard() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }

    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * PI).sqrt())
    }
}

impl Law for Normal {
    fn cdf(&self, x: f64) -> f64 {
        q_function((self.mean - x) / self.sd)
    }
    fn char_fn(&self, omega: f64) -> Complex64 {
        Complex64::from_polar((-0.5 * self.sd * self.sd * omega * omega).exp(), omega * self.mean)
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn abs_mean(&self) -> f64 {
        let (m, s) = (self.mean, self.sd);
        s * (2.0 / PI).sqrt() * (-m * m / (2.0 * s * s)).exp() + m * (1.0 - 2.0 * q_function(m / s))
    }
}

/// Sampled curve `t ↦ F(t)` with free-form metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ccurve {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl Ccurve {
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() != f.len() {
            return Err(Error::Shape(format!("{} abscissae vs {} values", t.len(), f.len())));
        }
        ensure(t.windows(2).all(|w| w[0] < w[1]), || "curve abscissae must increase".into())?;
        Ok(Self { t, f, meta: BTreeMap::new() })
    }

    pub fn from_fn(t: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(t.to_vec(), t.iter().map(|&x| f(x)).collect())
    }

    pub fn with_meta(mut self, k: &str, v: impl ToString) -> Self {
        self.meta.insert(k.to_string(), v.to_string());
        self
    }

    /// Linear interpolation; clamps outside the sampled range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if n == 0 {
            return f64::NAN;
        }
        if x <= self.t[0] {
            return self.f[0];
        }
        if x >= self.t[n - 1] {
            return self.f[n - 1];
        }
        let i = self.t.partition_point(|v| *v <= x) - 1;
        let s = (x - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.f[i] * (1.0 - s) + self.f[i + 1] * s
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// `h_b(p)` in nats, checked.
pub fn binary_entropy(p: f64) -> Result<f64> {
    ensure((0.0..=1.0).contains(&p), || format!("binary entropy argument {p} outside [0,1]"))?;
    Ok(hb(p))
}

/// `h_b(p)` in nats; arguments are clamped to [0, 1].
pub fn hb(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let a = if p > 0.0 { -p * p.ln() } else { 0.0 };
    let b = if p < 1.0 { -(1.0 - p) * (-p).ln_1p() } else { 0.0 };
    a + b
}

/// Inverse of `h_b` restricted to `[0, 1/2]`.
pub fn binary_entropy_inv(h: f64) -> Result<f64> {
    ensure((-1e-15..=LN_2 + 1e-15).contains(&h), || format!("entropy {h} outside [0, log 2]"))?;
    Ok(hb_inv(h))
}

pub(crate) fn hb_inv(h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= LN_2 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hb(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Binary convolution `p * q = p(1-q) + q(1-p)`.
pub fn bconv(p: f64, q: f64) -> f64 {
    p * (1.0 - q) + q * (1.0 - p)
}

/// Shannon entropy of a weight vector, in nats.
pub fn entropy(w: &[f64]) -> f64 {
    w.iter().filter(|v| **v > 0.0).map(|v| -v * v.ln()).sum()
}

/// Gaussian tail `Q(x) = P[N(0,1) > x]`.
pub fn q_function(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on (0, 1).
pub fn q_inverse(y: f64) -> Result<f64> {
    ensure(y > 0.0 && y < 1.0, || format!("Q-inverse argument {y} outside (0,1)"))?;
    let mut x = SQRT_2 * statrs::function::erf::erfc_inv(2.0 * y);
    for _ in 0..3 {
        let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if phi <= 0.0 {
            break;
        }
        let step = (q_function(x) - y) / phi;
        if !step.is_finite() {
            break;
        }
        x += step;
    }
    Ok(x)
}

fn grid_alignment(p: &GridDensity, q: &GridDensity) -> Result<i64> {
    if (p.step - q.step).abs() > 1e-9 * p.step {
        return Err(Error::Shape(format!("grid steps differ: {} vs {}", p.step, q.step)));
    }
    let off = (q.x_min - p.x_min) / p.step;
    if (off - off.round()).abs() > 1e-6 {
        return Err(Error::Shape("grids are not aligned on a common lattice".into()));
    }
    Ok(off.round() as i64)
}

/// Node values of two aligned grids on their union lattice.
fn union_values(p: &GridDensity, q: &GridDensity) -> Result<(Vec<f64>, Vec<f64>)> {
    let off = grid_alignment(p, q)?;
    let start = off.min(0);
    let end = ((p.len() as i64) - 1).max(off + q.len() as i64 - 1);
    let n = (end - start + 1) as usize;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for (i, v) in p.values.iter().enumerate() {
        a[(i as i64 - start) as usize] = *v;
    }
    for (i, v) in q.values.iter().enumerate() {
        b[(i as i64 + off - start) as usize] = *v;
    }
    Ok((a, b))
}

/// `D(P‖Q)` in nats. Grids must share a lattice; discrete laws match atoms.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    match (p, q) {
        (Distribution::Discrete(p), Distribution::Discrete(q)) => {
            let mut d = 0.0;
            for (a, w) in p.atoms.iter().zip(&p.weights) {
                if *w == 0.0 {
                    continue;
                }
                let k = q.atoms.partition_point(|b| *b < *a);
                let qw = if k < q.len() && q.atoms[k] == *a { q.weights[k] } else { 0.0 };
                if qw == 0.0 {
                    return Ok(f64::INFINITY);
                }
                d += w * (w / qw).ln();
            }
            Ok(d.max(0.0))
        }
        (Distribution::Grid(pg), Distribution::Grid(qg)) => {
            let (a, b) = union_values(pg, qg)?;
            let h = pg.step;
            let n = a.len();
            let mut d = 0.0;
            for i in 0..n {
                if a[i] == 0.0 {
                    continue;
                }
                if b[i] == 0.0 {
                    return Ok(f64::INFINITY);
                }
                let wt = if i == 0 || i + 1 == n { 0.5 * h } else { h };
                d += wt * a[i] * (a[i] / b[i]).ln();
            }
            Ok(d)
        }
        _ => Err(Error::Shape("KL divergence needs two laws of the same kind".into())),
    }
}

/// Total-variation distance. A discrete law against a density is at distance 1.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    match (p, q) {
        (Distribution::Discrete(p), Distribution::Discrete(q)) => {
            let mut i = 0;
            let mut j = 0;
            let mut s = 0.0;
            while i < p.len() || j < q.len() {
                let a = p.atoms.get(i).copied().unwrap_or(f64::INFINITY);
                let b = q.atoms.get(j).copied().unwrap_or(f64::INFINITY);
                if a == b {
                    s += (p.weights[i] - q.weights[j]).abs();
                    i += 1;
                    j += 1;
                } else if a < b {
                    s += p.weights[i];
                    i += 1;
                } else {
                    s += q.weights[j];
                    j += 1;
                }
            }
            Ok((0.5 * s).min(1.0))
        }
        (Distribution::Grid(pg), Distribution::Grid(qg)) => {
            let (a, b) = union_values(pg, qg)?;
            let h = pg.step;
            Ok((0.5 * abs_diff_trapezoid(&a, &b, h)).min(1.0))
        }
        _ => Ok(1.0),
    }
}

/// `∫ |f - g|` for two piecewise-linear functions on a common lattice,
/// integrating sign changes exactly.
pub(crate) fn abs_diff_trapezoid(a: &[f64], b: &[f64], h: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len().saturating_sub(1) {
        s += abs_linear_segment(a[i] - b[i], a[i + 1] - b[i + 1], h);
    }
    s
}

/// `∫_0^h |d0 + (d1-d0) s/h| ds`.
pub(crate) fn abs_linear_segment(d0: f64, d1: f64, h: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * h * (d0.abs() + d1.abs())
    } else {
        0.5 * h * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// Kolmogorov–Smirnov distance between any two supported laws.
pub fn ks_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    let mut pts: Vec<f64> = Vec::new();
    for d in [p, q] {
        match d {
            Distribution::Discrete(x) => pts.extend_from_slice(&x.atoms),
            Distribution::Grid(g) => pts.extend((0..g.len()).map(|i| g.x(i))),
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let cp = CdfEval::new(p);
    let cq = CdfEval::new(q);
    let mut best = 0.0f64;
    for &x in &pts {
        best = best.max((cp.right(x) - cq.right(x)).abs());
        best = best.max((cp.left(x) - cq.left(x)).abs());
    }
    Ok(best)
}

/// KS distance between a law and an analytic CDF (continuous reference).
pub fn ks_to_cdf(p: &Distribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let cp = CdfEval::new(p);
    match p {
        Distribution::Discrete(x) => x
            .atoms
            .iter()
            .map(|&a| (cp.right(a) - cdf(a)).abs().max((cp.left(a) - cdf(a)).abs()))
            .fold(0.0, f64::max),
        Distribution::Grid(g) => {
            let mut best = cdf(g.x_min).abs().max((1.0 - cdf(g.x_max())).abs());
            let sub = 4;
            let h = g.step / sub as f64;
            for i in 0..=(g.len() - 1) * sub {
                let x = g.x_min + h * i as f64;
                best = best.max((cp.right(x) - cdf(x)).abs());
            }
            best
        }
    }
}

struct CdfEval<'a> {
    d: &'a Distribution,
    cum: Vec<f64>,
}

impl<'a> CdfEval<'a> {
    fn new(d: &'a Distribution) -> Self {
        let cum = match d {
            Distribution::Grid(g) => g.cumulative(),
            Distribution::Discrete(p) => {
                let mut c = Vec::with_capacity(p.len());
                let mut acc = 0.0;
                for w in &p.weights {
                    acc += w;
                    c.push(acc.min(1.0));
                }
                c
            }
        };
        Self { d, cum }
    }

    fn right(&self, x: f64) -> f64 {
        match self.d {
            Distribution::Grid(g) => g.cdf_with(&self.cum, x),
            Distribution::Discrete(p) => {
                let k = p.atoms.partition_point(|a| *a <= x);
                if k == 0 { 0.0 } else { self.cum[k - 1] }
            }
        }
    }

    fn left(&self, x: f64) -> f64 {
        match self.d {
            Distribution::Grid(g) => g.cdf_with(&self.cum, x),
            Distribution::Discrete(p) => {
                let k = p.atoms.partition_point(|a| *a < x);
                if k == 0 { 0.0 } else { self.cum[k - 1] }
            }
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match self.d {
            Distribution::Grid(g) => g.quantile_with(&self.cum, u),
            Distribution::Discrete(p) => {
                let k = self.cum.partition_point(|c| *c < u).min(p.len() - 1);
                p.atoms[k]
            }
        }
    }
}

/// Lévy concentration function `sup_x P[X ∈ [x-δ, x+δ]]`.
pub fn levy_concentration(p: &Distribution, delta: f64) -> Result<f64> {
    ensure(delta >= 0.0, || format!("radius {delta} must be nonnegative"))?;
    match p {
        Distribution::Discrete(d) => {
            let mut best = 0.0f64;
            let mut j = 0;
            let mut acc = 0.0;
            for i in 0..d.len() {
                while j < d.len() && d.atoms[j] <= d.atoms[i] + 2.0 * delta {
                    acc += d.weights[j];
                    j += 1;
                }
                best = best.max(acc);
                acc -= d.weights[i];
            }
            Ok(best.min(1.0))
        }
        Distribution::Grid(g) => {
            let cum = g.cumulative();
            let window = |x: f64| g.cdf_with(&cum, x + delta) - g.cdf_with(&cum, x - delta);
            let mut cands: Vec<f64> = Vec::with_capacity(2 * g.len());
            for i in 0..g.len() {
                cands.push(g.x(i) - delta);
                cands.push(g.x(i) + delta);
            }
            cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut best = 0.0f64;
            for w in cands.windows(2) {
                best = best.max(window(w[0]));
                let (l, r) = (w[0], w[1]);
                if r - l > 0.0 {
                    let dl = g.density_at(l + delta) - g.density_at(l - delta);
                    let dr = g.density_at(r + delta) - g.density_at(r - delta);
                    if dl > 0.0 && dr < 0.0 {
                        let x = l + (r - l) * dl / (dl - dr);
                        best = best.max(window(x));
                    }
                }
            }
            if let Some(&last) = cands.last() {
                best = best.max(window(last));
            }
            Ok(best.clamp(0.0, 1.0))
        }
    }
}

/// Characteristic function `E e^{iωX}`.
pub fn char_fn(p: &Distribution, omega: f64) -> Complex64 {
    Law::char_fn(p, omega)
}

/// Density of `X + Z` for a gridded `Z`. Discrete `X` shifts the noise
/// interpolant; gridded `X` must use a step that is a multiple of the
/// noise step and is convolved by FFT.
pub fn convolve(p: &Distribution, z: &GridDensity) -> Result<GridDensity> {
    match p {
        Distribution::Discrete(d) => {
            let h = z.step;
            let lo = d.atoms[0] + z.x_min;
            let hi = d.atoms[d.len() - 1] + z.x_max();
            let n = ((hi - lo) / h).ceil() as usize + 1;
            let values = (0..n)
                .map(|i| {
                    let x = lo + h * i as f64;
                    d.atoms.iter().zip(&d.weights).map(|(a, w)| w * z.density_at(x - a)).sum()
                })
                .collect();
            GridDensity::from_unnormalized(lo, h, values)
        }
        Distribution::Grid(g) => {
            let ratio = g.step / z.step;
            let k = ratio.round();
            if k < 1.0 || (ratio - k).abs() > 1e-6 * k {
                return Err(Error::Shape(format!(
                    "noise step {} must divide input step {}",
                    z.step, g.step
                )));
            }
            let g = g.refined(k as usize);
            let values = linear_convolution(&g.values, &z.values)
                .into_iter()
                .map(|v| (v * z.step).max(0.0))
                .collect();
            GridDensity::from_unnormalized(g.x_min + z.x_min, z.step, values)
        }
    }
}

/// Full linear convolution of two sequences; FFT above a size threshold.
pub fn linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    if a.len().min(b.len()) < 64 {
        let mut out = vec![0.0; n];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let m = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut fa: Vec<Complex64> = a.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    fa.resize(m, Complex64::new(0.0, 0.0));
    let mut fb: Vec<Complex64> = b.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    fb.resize(m, Complex64::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.truncate(n);
    fa.into_iter().map(|c| c.re / m as f64).collect()
}

/// Fejér-type window `v(x) = 2(1 - cos x)/x²`.
pub fn v_window(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 12.0
    } else {
        let s = (0.5 * x).sin() / (0.5 * x);
        s * s
    }
}

/// Fourier transform of [`v_window`]: `2π(1 - |ω|)⁺`.
pub fn v_hat(omega: f64) -> f64 {
    2.0 * PI * (1.0 - omega.abs()).max(0.0)
}

/// Maximum entropy of an integer variable with `E|X| <= m`.
pub fn max_entropy_integer(m: f64) -> Result<f64> {
    ensure(m >= 0.0 && m.is_finite(), || format!("moment budget {m} must be nonnegative"))?;
    Ok((m + 1.0) * hb(1.0 / (m + 1.0)) + LN_2)
}

/// Wasserstein distance of order `p >= 1` via the quantile coupling.
pub fn wasserstein(p: &Distribution, q: &Distribution, order: f64) -> Result<f64> {
    ensure(order >= 1.0, || format!("order {order} must be at least 1"))?;
    if let (Distribution::Discrete(a), Distribution::Discrete(b)) = (p, q) {
        let mut i = 0;
        let mut j = 0;
        let mut ca = a.weights[0];
        let mut cb = b.weights[0];
        let mut u = 0.0;
        let mut s = 0.0;
        loop {
            let next = ca.min(cb);
            s += (next - u).max(0.0) * (a.atoms[i] - b.atoms[j]).abs().powf(order);
            u = next;
            if u >= 1.0 - 1e-15 {
                break;
            }
            if ca <= cb {
                i += 1;
                if i >= a.len() {
                    break;
                }
                ca += a.weights[i];
            } else {
                j += 1;
                if j >= b.len() {
                    break;
                }
                cb += b.weights[j];
            }
        }
        return Ok(s.powf(1.0 / order));
    }
    let cp = CdfEval::new(p);
    let cq = CdfEval::new(q);
    let n = 200_000;
    let mut s = 0.0;
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        s += (cp.quantile(u) - cq.quantile(u)).abs().powf(order);
    }
    Ok((s / n as f64).powf(1.0 / order))
}

pub(crate) fn check_prob(p: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("{name} = {p} outside [0,1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_values() {
        assert_abs_diff_eq!(hb(0.1), 0.325_082_973_391_448_2, epsilon = 1e-12);
        assert_abs_diff_eq!(hb(0.5), LN_2, epsilon = 1e-15);
        assert_eq!(hb(0.0), 0.0);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy_inv(1.0).is_err());
        assert_abs_diff_eq!(binary_entropy_inv(hb(0.1)).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn q_values() {
        assert_abs_diff_eq!(q_function(1.0), 0.158_655_253_931_457_05, epsilon = 1e-15);
        assert_abs_diff_eq!(q_function(0.0), 0.5, epsilon = 1e-16);
        assert!(q_inverse(0.0).is_err());
        assert_abs_diff_eq!(q_inverse(0.158_655_253_931_457_05).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_shift_distances() {
        let p: Distribution = GridDensity::gaussian(0.0, 1.0, 0.01, 12.0).unwrap().into();
        let q: Distribution = GridDensity::from_fn(-12.0, 12.5, 2451, |x| std_normal_pdf(x - 0.5)).unwrap().into();
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 0.125, epsilon = 1e-4);
        let q1: Distribution = GridDensity::from_fn(-12.0, 13.0, 2501, |x| std_normal_pdf(x - 1.0)).unwrap().into();
        assert_abs_diff_eq!(tv_distance(&p, &q1).unwrap(), 0.382_924_922_548_026, epsilon = 1e-5);
        assert_abs_diff_eq!(ks_distance(&p, &q1).unwrap(), 0.382_924_922_548_026, epsilon = 1e-5);
        assert_abs_diff_eq!(wasserstein(&p, &q1, 1.0).unwrap(), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn discrete_distances() {
        let p: Distribution = DiscretePmf::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap().into();
        let q: Distribution = DiscretePmf::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap().into();
        assert_abs_diff_eq!(tv_distance(&p, &q).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(kl_divergence(&p, &q).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(wasserstein(&p, &q, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wasserstein(&p, &q, 2.0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(ks_distance(&p, &q).unwrap(), 0.5, epsilon = 1e-15);
        let g: Distribution = GridDensity::gaussian(0.0, 1.0, 0.01, 8.0).unwrap().into();
        assert!(kl_divergence(&p, &g).is_err());
    }

    #[test]
    fn levy_function() {
        let u: Distribution = GridDensity::from_fn(-1.0, 2.0, 3001, |x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 })
            .unwrap()
            .into();
        assert_abs_diff_eq!(levy_concentration(&u, 0.1).unwrap(), 0.2, epsilon = 2e-3);
        let d: Distribution = DiscretePmf::new(vec![0.0, 0.05, 1.0], vec![0.3, 0.3, 0.4]).unwrap().into();
        assert_abs_diff_eq!(levy_concentration(&d, 0.0).unwrap(), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(levy_concentration(&d, 0.03).unwrap(), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn window_values() {
        assert_abs_diff_eq!(v_window(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v_window(PI), 4.0 / (PI * PI), epsilon = 1e-15);
        let a = v_window(0.999e-8);
        let b = v_window(1.001e-8);
        assert!((a - b).abs() < 1e-9);
        assert_abs_diff_eq!(v_hat(0.5), PI, epsilon = 1e-15);
        assert_eq!(v_hat(1.5), 0.0);
    }

    #[test]
    fn convolution_of_gaussians() {
        let a = GridDensity::gaussian(0.0, 1.0, 0.01, 10.0).unwrap();
        let c = convolve(&a.clone().into(), &a).unwrap();
        let want = GridDensity::from_fn(c.x_min(), c.x_max(), c.len(), |x| Normal { mean: 0.0, sd: 2f64.sqrt() }.density(x)).unwrap();
        let tv = tv_distance(&c.into(), &want.into()).unwrap();
        assert!(tv < 1e-4, "tv {tv}");
        let p = DiscretePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let c = convolve(&p.into(), &a).unwrap();
        assert_abs_diff_eq!(c.mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.second_moment(), 2.0, epsilon = 1e-4);
    }

    #[test]
    fn integer_entropy_cap() {
        assert_abs_diff_eq!(max_entropy_integer(1.0).unwrap(), 2.0 * LN_2 + LN_2, epsilon = 1e-15);
        assert!(max_entropy_integer(-1.0).is_err());
    }
}
