//! Channels: discrete memoryless kernels and additive-noise channels, with
//! mutual information, MMSE and the I-MMSE identity.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::prob::{entropy, q_function, DiscretePmf, GridDensity, Law};
use crate::quad;

/// Row-stochastic transition matrix `K(y | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmcKernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DmcKernel {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!("{rows}x{cols} kernel with {} entries", data.len())));
        }
        ensure(data.iter().all(|v| v.is_finite() && *v >= 0.0), || "negative kernel entry".into())?;
        for r in 0..rows {
            let s: f64 = data[r * cols..(r + 1) * cols].iter().sum();
            ensure((s - 1.0).abs() <= 1e-9, || format!("row {r} sums to {s}"))?;
        }
        Ok(Self { rows, cols, data })
    }

    /// Binary symmetric channel with crossover `delta`.
    pub fn bsc(delta: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&delta), || format!("crossover {delta} outside [0,1]"))?;
        Self::new(2, 2, vec![1.0 - delta, delta, delta, 1.0 - delta])
    }

    /// Erasure channel on `n` symbols; the last output column is the erasure.
    pub fn erasure(alpha: f64, n: usize) -> Result<Self> {
        ensure((0.0..=1.0).contains(&alpha), || format!("erasure probability {alpha} outside [0,1]"))?;
        ensure(n >= 1, || "erasure alphabet must be nonempty".into())?;
        let mut data = vec![0.0; n * (n + 1)];
        for x in 0..n {
            data[x * (n + 1) + x] = 1.0 - alpha;
            data[x * (n + 1) + n] = alpha;
        }
        Self::new(n, n + 1, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.cols..(x + 1) * self.cols]
    }

    /// Output law `Σ_x p(x) K(·|x)`.
    pub fn push(&self, px: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (x, p) in px.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            for (o, k) in out.iter_mut().zip(self.row(x)) {
                *o += p * k;
            }
        }
        out
    }
}

/// Additive noise law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    Uniform { lo: f64, hi: f64 },
    Laplace { scale: f64 },
    Grid(GridDensity),
}

const LAPLACE_SPAN: f64 = 45.0;

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        ensure(sigma > 0.0 && sigma.is_finite(), || format!("sigma {sigma} must be positive"))?;
        Ok(NoiseModel::Gaussian { sigma })
    }

    pub fn standard_gaussian() -> Self {
        NoiseModel::Gaussian { sigma: 1.0 }
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        ensure(lo.is_finite() && hi.is_finite() && hi > lo, || format!("invalid uniform support [{lo},{hi}]"))?;
        Ok(NoiseModel::Uniform { lo, hi })
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        ensure(scale > 0.0 && scale.is_finite(), || format!("scale {scale} must be positive"))?;
        Ok(NoiseModel::Laplace { scale })
    }

    /// Parses `gaussian[:σ]`, `uniform[:a,b]`, `laplace[:b]`; grid noise is
    /// loaded by the CSV reader.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}' in noise '{spec}'")));
        match (name, arg) {
            ("gaussian", None) => Ok(Self::standard_gaussian()),
            ("gaussian", Some(a)) => Self::gaussian(num(a)?),
            ("uniform", None) => Self::uniform(0.0, 1.0),
            ("uniform", Some(a)) => {
                let (lo, hi) = a.split_once(',').ok_or_else(|| Error::Parse(format!("uniform needs 'a,b' in '{spec}'")))?;
                Self::uniform(num(lo)?, num(hi)?)
            }
            ("laplace", None) => Self::laplace(1.0),
            ("laplace", Some(a)) => Self::laplace(num(a)?),
            ("grid", Some(path)) => Ok(NoiseModel::Grid(crate::io::read_grid_csv(path)?)),
            _ => Err(Error::Parse(format!("unknown noise '{spec}'"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NoiseModel::Gaussian { sigma } => format!("gaussian:{sigma}"),
            NoiseModel::Uniform { lo, hi } => format!("uniform:{lo},{hi}"),
            NoiseModel::Laplace { scale } => format!("laplace:{scale}"),
            NoiseModel::Grid(g) => format!("grid:{}nodes", g.len()),
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => (-0.5 * (z / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt()),
            NoiseModel::Uniform { lo, hi } => {
                if z >= *lo && z <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            NoiseModel::Laplace { scale } => (-z.abs() / scale).exp() / (2.0 * scale),
            NoiseModel::Grid(g) => g.density_at(z),
        }
    }

    pub fn ln_density(&self, z: f64) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => -0.5 * (z / sigma).powi(2) - (sigma * (2.0 * PI).sqrt()).ln(),
            NoiseModel::Laplace { scale } => -z.abs() / scale - (2.0 * scale).ln(),
            _ => self.density(z).ln(),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => q_function(-z / sigma),
            NoiseModel::Uniform { lo, hi } => ((z - lo) / (hi - lo)).clamp(0.0, 1.0),
            NoiseModel::Laplace { scale } => {
                if z < 0.0 {
                    0.5 * (z / scale).exp()
                } else {
                    1.0 - 0.5 * (-z / scale).exp()
                }
            }
            NoiseModel::Grid(g) => g.cdf(z),
        }
    }

    pub fn char_fn(&self, omega: f64) -> Complex64 {
        match self {
            NoiseModel::Gaussian { sigma } => Complex64::new((-0.5 * (sigma * omega).powi(2)).exp(), 0.0),
            NoiseModel::Uniform { lo, hi } => {
                let half = 0.5 * (hi - lo) * omega;
                let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
                Complex64::from_polar(1.0, 0.5 * (lo + hi) * omega) * sinc
            }
            NoiseModel::Laplace { scale } => Complex64::new(1.0 / (1.0 + (scale * omega).powi(2)), 0.0),
            NoiseModel::Grid(g) => g.char_fn(omega),
        }
    }

    /// `sup_z p_Z(z)`.
    pub fn sup_density(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => 1.0 / (sigma * (2.0 * PI).sqrt()),
            NoiseModel::Uniform { lo, hi } => 1.0 / (hi - lo),
            NoiseModel::Laplace { scale } => 1.0 / (2.0 * scale),
            NoiseModel::Grid(g) => g.max_value(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            NoiseModel::Uniform { lo, hi } => 0.5 * (lo + hi),
            NoiseModel::Grid(g) => g.mean(),
            _ => 0.0,
        }
    }

    pub fn abs_mean(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => sigma * (2.0 / PI).sqrt(),
            NoiseModel::Uniform { lo, hi } => {
                if *lo >= 0.0 {
                    0.5 * (lo + hi)
                } else if *hi <= 0.0 {
                    -0.5 * (lo + hi)
                } else {
                    (lo * lo + hi * hi) / (2.0 * (hi - lo))
                }
            }
            NoiseModel::Laplace { scale } => *scale,
            NoiseModel::Grid(g) => g.abs_moment(1.0),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => sigma * sigma,
            NoiseModel::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            NoiseModel::Laplace { scale } => 2.0 * scale * scale,
            NoiseModel::Grid(g) => g.second_moment(),
        }
    }

    /// Differential entropy `h(Z)` in nats.
    pub fn entropy(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => 0.5 * (2.0 * PI * E * sigma * sigma).ln(),
            NoiseModel::Uniform { lo, hi } => (hi - lo).ln(),
            NoiseModel::Laplace { scale } => 1.0 + (2.0 * scale).ln(),
            NoiseModel::Grid(g) => g.entropy(),
        }
    }

    /// True for the analytic families, which are symmetric about their centre
    /// and unimodal.
    pub fn is_symmetric_unimodal(&self) -> bool {
        !matches!(self, NoiseModel::Grid(_))
    }

    /// Discretises on `[c - span, c + span]` around the noise centre. Fails
    /// when more than 1e-6 mass falls outside the window.
    pub fn to_grid_span(&self, step: f64, span: f64) -> Result<GridDensity> {
        ensure(step > 0.0 && span > 0.0, || "step and span must be positive".into())?;
        let (lo, hi) = match self {
            NoiseModel::Grid(g) => return Ok(g.clone()),
            NoiseModel::Uniform { lo, hi } => (*lo, *hi),
            _ => (self.mean() - span, self.mean() + span),
        };
        let lost = self.cdf(lo) + (1.0 - self.cdf(hi));
        if lost > 1e-6 {
            return Err(Error::Truncation { lost_mass: lost });
        }
        let n = ((hi - lo) / step).round().max(1.0) as usize + 1;
        GridDensity::from_fn(lo, hi, n, |z| self.density(z.clamp(lo, hi)))
    }

    /// Discretises with the default span (10σ for Gaussian, 20 scales for
    /// Laplace, exact support for uniform).
    pub fn to_grid(&self, step: f64) -> Result<GridDensity> {
        let span = match self {
            NoiseModel::Gaussian { sigma } => 10.0 * sigma,
            NoiseModel::Laplace { scale } => 20.0 * scale,
            _ => 1.0,
        };
        self.to_grid_span(step, span)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseModel::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            NoiseModel::Laplace { scale } => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() { scale * e } else { -scale * e }
            }
            NoiseModel::Grid(g) => g.quantile(rng.random::<f64>()),
        }
    }

    /// `E f(Z)`, with `shifts` marking points where `f` may be non-smooth
    /// relative to the kinks of the noise density.
    pub fn expect(&self, shifts: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => {
                let (z, w) = quad::normal_rule_127();
                z.iter().zip(w).map(|(z, w)| w * f(sigma * z)).sum()
            }
            NoiseModel::Uniform { lo, hi } => {
                let breaks: Vec<f64> = shifts.iter().flat_map(|s| [s + lo, s + hi]).collect();
                let dens = 1.0 / (hi - lo);
                quad::piecewise_legendre(*lo, *hi, &breaks, (hi - lo) / 8.0, |z| dens * f(z))
            }
            NoiseModel::Laplace { scale } => {
                let mut breaks: Vec<f64> = shifts.to_vec();
                breaks.push(0.0);
                let span = LAPLACE_SPAN * scale;
                quad::piecewise_legendre(-span, span, &breaks, 0.5 * scale, |z| self.density(z) * f(z))
            }
            NoiseModel::Grid(g) => {
                let n = g.len();
                (0..n)
                    .map(|i| {
                        let wt = if i == 0 || i + 1 == n { 0.5 } else { 1.0 } * g.step();
                        let v = g.values()[i];
                        if v > 0.0 { wt * v * f(g.x(i)) } else { 0.0 }
                    })
                    .sum()
            }
        }
    }
}

impl Law for NoiseModel {
    fn cdf(&self, x: f64) -> f64 {
        NoiseModel::cdf(self, x)
    }
    fn char_fn(&self, omega: f64) -> Complex64 {
        NoiseModel::char_fn(self, omega)
    }
    fn mean(&self) -> f64 {
        NoiseModel::mean(self)
    }
    fn abs_mean(&self) -> f64 {
        NoiseModel::abs_mean(self)
    }
}

/// Moment constraint `E|X|^p <= budget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentConstraint {
    pub p: f64,
    pub budget: f64,
}

/// `Y = scale·X + Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveChannel {
    pub noise: NoiseModel,
    pub scale: f64,
    pub constraint: Option<MomentConstraint>,
}

impl AdditiveChannel {
    pub fn new(noise: NoiseModel, scale: f64) -> Result<Self> {
        ensure(scale >= 0.0 && scale.is_finite(), || format!("scale {scale} must be nonnegative"))?;
        Ok(Self { noise, scale, constraint: None })
    }

    /// Gaussian channel `√γ X + N(0,1)`.
    pub fn awgn(gamma: f64) -> Result<Self> {
        ensure(gamma >= 0.0 && gamma.is_finite(), || format!("snr {gamma} must be nonnegative"))?;
        Self::new(NoiseModel::standard_gaussian(), gamma.sqrt())
    }

    pub fn with_constraint(mut self, p: f64, budget: f64) -> Result<Self> {
        ensure(p > 0.0 && budget > 0.0, || "moment order and budget must be positive".into())?;
        self.constraint = Some(MomentConstraint { p, budget });
        Ok(self)
    }

    fn check_input(&self, input: &DiscretePmf) -> Result<()> {
        if let Some(c) = self.constraint {
            let m = input.abs_moment(c.p);
            if m > c.budget * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::Precondition(format!(
                    "input moment E|X|^{} = {m} exceeds budget {}",
                    c.p, c.budget
                )));
            }
        }
        Ok(())
    }
}

/// `I(X;Y)` in nats for a DMC.
pub fn mi_dmc(px: &[f64], k: &DmcKernel) -> Result<f64> {
    if px.len() != k.rows() {
        return Err(Error::Shape(format!("input of length {} for {} kernel rows", px.len(), k.rows())));
    }
    ensure(px.iter().all(|p| *p >= 0.0) && (px.iter().sum::<f64>() - 1.0).abs() <= 1e-9, || {
        "input is not a probability vector".into()
    })?;
    let py = k.push(px);
    let cond: f64 = px.iter().enumerate().map(|(x, p)| p * entropy(k.row(x))).sum();
    Ok((entropy(&py) - cond).max(0.0))
}

/// `I(W;X)` for a joint pmf given as rows indexed by `w`.
pub fn mi_joint(joint: &[Vec<f64>]) -> f64 {
    let nx = joint.first().map_or(0, |r| r.len());
    let mut px = vec![0.0; nx];
    let mut pw = Vec::with_capacity(joint.len());
    for r in joint {
        pw.push(r.iter().sum::<f64>());
        for (a, b) in px.iter_mut().zip(r) {
            *a += b;
        }
    }
    let mut i = 0.0;
    for (r, w) in joint.iter().zip(&pw) {
        for (q, x) in r.iter().zip(&px) {
            if *q > 0.0 {
                i += q * (q / (w * x)).ln();
            }
        }
    }
    i.max(0.0)
}

/// `I(W;Y)` when `X → Y` is a DMC and `joint[w][x] = P(w, x)`.
pub fn mi_coupling_dmc(joint: &[Vec<f64>], k: &DmcKernel) -> f64 {
    let wy: Vec<Vec<f64>> = joint.iter().map(|r| k.push(r)).collect();
    mi_joint(&wy)
}

/// `I(X;Y)` for `Y = scale·X + Z`.
pub fn mi_additive(input: &DiscretePmf, channel: &AdditiveChannel) -> Result<f64> {
    channel.check_input(input)?;
    let n = input.len();
    let joint: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut r = vec![0.0; n];
            r[j] = input.weights()[j];
            r
        })
        .collect();
    Ok(mi_coupling_additive(&joint, input.atoms(), channel))
}

/// `I(W;Y)` for `joint[w][x] = P(w, x)` over `atoms`, with `Y = scale·X + Z`.
pub fn mi_coupling_additive(joint: &[Vec<f64>], atoms: &[f64], channel: &AdditiveChannel) -> f64 {
    let n = atoms.len();
    let ys: Vec<f64> = atoms.iter().map(|a| channel.scale * a).collect();
    let mut px = vec![0.0; n];
    for r in joint {
        for (a, b) in px.iter_mut().zip(r) {
            *a += b;
        }
    }
    let ln_px: Vec<f64> = px.iter().map(|p| p.ln()).collect();
    let noise = &channel.noise;
    let mut terms = vec![0.0; n];
    let mut total = 0.0;
    for row in joint {
        let pw: f64 = row.iter().sum();
        if pw <= 0.0 {
            continue;
        }
        let ln_cond: Vec<f64> = row.iter().map(|q| (q / pw).ln()).collect();
        for j in 0..n {
            if row[j] <= 0.0 {
                continue;
            }
            let shifts: Vec<f64> = ys.iter().map(|yk| yk - ys[j]).collect();
            let e = noise.expect(&shifts, |z| {
                let y = ys[j] + z;
                for k in 0..n {
                    terms[k] = noise.ln_density(y - ys[k]);
                }
                let num = lse_weighted(&ln_cond, &terms);
                let den = lse_weighted(&ln_px, &terms);
                if num == f64::NEG_INFINITY {
                    0.0
                } else {
                    num - den
                }
            });
            total += row[j] * e;
        }
    }
    total.max(0.0)
}

fn lse_weighted(ln_w: &[f64], terms: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for (a, b) in ln_w.iter().zip(terms) {
        m = m.max(a + b);
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = ln_w.iter().zip(terms).map(|(a, b)| (a + b - m).exp()).sum();
    m + s.ln()
}

/// `½ log(1 + γ)`.
pub fn awgn_capacity(gamma: f64) -> Result<f64> {
    ensure(gamma >= 0.0 && gamma.is_finite(), || format!("snr {gamma} must be nonnegative"))?;
    Ok(0.5 * gamma.ln_1p())
}

/// `E(X - E[X|Y])²` for `Y = √γ X + N(0,1)`, input of mean 0 and variance 1.
pub fn mmse_numeric(input: &DiscretePmf, gamma: f64) -> Result<f64> {
    ensure(gamma >= 0.0 && gamma.is_finite(), || format!("snr {gamma} must be nonnegative"))?;
    if !input.is_normalized(1e-8) {
        return Err(Error::Precondition("mmse needs an input with mean 0 and variance 1".into()));
    }
    if gamma == 0.0 {
        return Ok(input.variance());
    }
    Ok(mmse_raw(input, gamma))
}

fn mmse_raw(input: &DiscretePmf, gamma: f64) -> f64 {
    let s = gamma.sqrt();
    let atoms = input.atoms();
    let ln_w: Vec<f64> = input.weights().iter().map(|w| w.ln()).collect();
    let (z, wz) = quad::normal_rule_127();
    let n = atoms.len();
    let mut e = vec![0.0; n];
    let mut total = 0.0;
    for j in 0..n {
        let mut acc = 0.0;
        for (zi, wi) in z.iter().zip(wz) {
            let y = s * atoms[j] + zi;
            let mut m = f64::NEG_INFINITY;
            for k in 0..n {
                let d = y - s * atoms[k];
                e[k] = ln_w[k] - 0.5 * d * d;
                m = m.max(e[k]);
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..n {
                let p = (e[k] - m).exp();
                num += p * atoms[k];
                den += p;
            }
            let est = num / den;
            acc += wi * (atoms[j] - est).powi(2);
        }
        total += input.weights()[j] * acc;
    }
    total
}

/// Linear MMSE `1 / (1 + γ)` for a unit-variance input.
pub fn lmmse(gamma: f64) -> Result<f64> {
    ensure(gamma >= 0.0 && gamma.is_finite(), || format!("snr {gamma} must be nonnegative"))?;
    Ok(1.0 / (1.0 + gamma))
}

/// Both sides of `C(γ) - I(γ) = ½∫₀^γ (lmmse - mmse)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImmseReport {
    pub gap_direct: f64,
    pub gap_integral: f64,
    pub agree: bool,
}

pub fn immse_gap_check(input: &DiscretePmf, gamma: f64) -> Result<ImmseReport> {
    ensure(gamma > 0.0 && gamma.is_finite(), || format!("snr {gamma} must be positive"))?;
    if !input.is_normalized(1e-8) {
        return Err(Error::Precondition("I-MMSE check needs a normalised input".into()));
    }
    let ch = AdditiveChannel::awgn(gamma)?;
    let gap_direct = awgn_capacity(gamma)? - mi_additive(input, &ch)?;
    let f = |s: f64| 1.0 / (1.0 + s) - if s == 0.0 { input.variance() } else { mmse_raw(input, s) };
    let gap_integral = 0.5 * quad::adaptive_simpson(0.0, gamma, 1e-9, 64, &f);
    Ok(ImmseReport { gap_direct, gap_integral, agree: (gap_direct - gap_integral).abs() <= 1e-3 })
}

/// Zero-mean, unit-variance Gauss–Hermite constellation with `m` atoms.
pub fn gauss_hermite_input(m: usize) -> Result<DiscretePmf> {
    ensure(m >= 1, || "constellation needs at least one atom".into())?;
    let (z, w) = quad::std_normal_rule(m);
    let p = DiscretePmf::new(z, w)?;
    if m == 1 {
        return Ok(p);
    }
    p.normalized()
}
