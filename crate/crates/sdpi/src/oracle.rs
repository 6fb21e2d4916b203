//! Brute-force references: exhaustive coupling search on a simplex lattice,
//! Monte-Carlo mutual information, and random coupling sweeps checked
//! against bound curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{gauss_hermite_input, mi_coupling_additive, mi_coupling_dmc, mi_joint, AdditiveChannel, DmcKernel, NoiseModel};
use crate::error::{ensure, Error, Result};
use crate::prob::{entropy, DiscretePmf};
use crate::quad::log_sum_exp;

/// Default cap on lattice points visited by [`fi_bruteforce_dmc`].
pub const DEFAULT_BUDGET: u128 = 400_000_000;

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn binom(n: u128, k: u128) -> u128 {
    let mut r = 1u128;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// All `v ∈ {0..n}^d` with `Σ v = n`.
fn lattice(d: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if d == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(d - 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Lattice points that [`fi_bruteforce_dmc_many`] would visit.
pub fn bruteforce_cost(x_size: usize, w_size: usize, resolution: usize) -> u128 {
    let nq = binom((resolution + x_size - 1) as u128, (x_size - 1) as u128);
    let multisets = binom(nq + w_size as u128 - 1, w_size as u128);
    let pw = binom((resolution + w_size - 1) as u128, (w_size - 1) as u128);
    multisets * pw
}

/// [`fi_bruteforce_dmc_many`] at a single `t`.
pub fn fi_bruteforce_dmc(k: &DmcKernel, t: f64, w_size: usize, resolution: usize) -> Result<f64> {
    Ok(fi_bruteforce_dmc_many(k, &[t], w_size, resolution, DEFAULT_BUDGET)?[0])
}

/// Largest `I(W;Y)` subject to `I(W;X) <= t` over couplings whose marginal
/// `P_W` and conditionals `P_{X|W=w}` lie on the lattice `{k/resolution}`.
/// Every returned value is attained by an explicit coupling.
pub fn fi_bruteforce_dmc_many(
    k: &DmcKernel,
    t_grid: &[f64],
    w_size: usize,
    resolution: usize,
    budget: u128,
) -> Result<Vec<f64>> {
    let nx = k.rows();
    ensure((1..=3).contains(&nx), || format!("|X| = {nx} outside 1..=3"))?;
    ensure((1..=nx + 1).contains(&w_size), || format!("|W| = {w_size} outside 1..=|X|+1"))?;
    ensure(resolution >= 10, || format!("resolution {resolution} below 10"))?;
    ensure(t_grid.iter().all(|t| *t >= 0.0 && t.is_finite()), || "t must be nonnegative".into())?;
    let needed = bruteforce_cost(nx, w_size, resolution);
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|a, b| t_grid[*a].partial_cmp(&t_grid[*b]).unwrap());
    let ts: Vec<f64> = order.iter().map(|i| t_grid[*i]).collect();

    let n = resolution as f64;
    let qs: Vec<Vec<f64>> = lattice(nx, resolution)
        .into_iter()
        .map(|v| v.into_iter().map(|c| c as f64 / n).collect())
        .collect();
    let ys: Vec<Vec<f64>> = qs.iter().map(|q| k.push(q)).collect();
    let hx: Vec<f64> = qs.iter().map(|q| entropy(q)).collect();
    let hy: Vec<f64> = ys.iter().map(|y| entropy(y)).collect();
    let pws: Vec<Vec<f64>> = lattice(w_size, resolution)
        .into_iter()
        .map(|v| v.into_iter().map(|c| c as f64 / n).collect())
        .collect();
    let nq = qs.len();
    let ny = k.cols();

    let tuples_from = |first: usize| -> Vec<Vec<usize>> {
        let mut out = vec![vec![first]];
        for _ in 1..w_size {
            out = out
                .into_iter()
                .flat_map(|t| {
                    let last = *t.last().unwrap();
                    (last..nq).map(move |j| {
                        let mut u = t.clone();
                        u.push(j);
                        u
                    })
                })
                .collect();
        }
        out
    };

    let best = (0..nq)
        .into_par_iter()
        .map(|first| {
            let mut best = vec![f64::NEG_INFINITY; ts.len()];
            let mut px = vec![0.0; nx];
            let mut py = vec![0.0; ny];
            for tup in tuples_from(first) {
                for pw in &pws {
                    px.iter_mut().for_each(|v| *v = 0.0);
                    py.iter_mut().for_each(|v| *v = 0.0);
                    let mut cx = 0.0;
                    let mut cy = 0.0;
                    for (w, &qi) in tup.iter().enumerate() {
                        let p = pw[w];
                        if p == 0.0 {
                            continue;
                        }
                        for (a, b) in px.iter_mut().zip(&qs[qi]) {
                            *a += p * b;
                        }
                        for (a, b) in py.iter_mut().zip(&ys[qi]) {
                            *a += p * b;
                        }
                        cx += p * hx[qi];
                        cy += p * hy[qi];
                    }
                    let iwx = (entropy(&px) - cx).max(0.0);
                    let iwy = (entropy(&py) - cy).max(0.0);
                    let j = ts.partition_point(|t| *t < iwx - 1e-15);
                    if j < ts.len() && iwy > best[j] {
                        best[j] = iwy;
                    }
                }
            }
            best
        })
        .reduce(
            || vec![f64::NEG_INFINITY; ts.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    let mut running = 0.0f64;
    let mut out = vec![0.0; t_grid.len()];
    for (j, &i) in order.iter().enumerate() {
        running = running.max(best[j]);
        out[i] = running;
    }
    Ok(out)
}

/// Monte-Carlo estimate of `I(X;Y)` for `Y = √γ X + Z` with a 3σ half-width.
/// The output density is evaluated in closed form as a mixture.
pub fn mc_mutual_info(input: &DiscretePmf, noise: &NoiseModel, gamma: f64, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    ensure(gamma >= 0.0 && gamma.is_finite(), || format!("γ = {gamma} must be nonnegative"))?;
    ensure(n_samples >= 2, || "need at least two samples".into())?;
    let s = gamma.sqrt();
    let shifts: Vec<f64> = input.atoms().iter().map(|a| s * a).collect();
    let ln_w: Vec<f64> = input.weights().iter().map(|w| w.ln()).collect();
    let cum: Vec<f64> = input
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    const CHUNK: usize = 1 << 16;
    let chunks = n_samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed, c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            let mut terms = vec![0.0; shifts.len()];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let u: f64 = rng.random();
                let j = cum.partition_point(|c| *c <= u).min(shifts.len() - 1);
                let y = shifts[j] + noise.sample(&mut rng);
                for (k, t) in terms.iter_mut().enumerate() {
                    *t = ln_w[k] + noise.ln_density(y - shifts[k]);
                }
                let v = noise.ln_density(y - shifts[j]) - log_sum_exp(&terms);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = n_samples as f64;
    let mean = s1 / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok((mean, 3.0 * (var / n).sqrt()))
}

/// Coupling families drawn by the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Generic,
    Diagonal,
    TwoPoint,
    Hermite,
    HermiteMerged,
}

const FAMILIES: [Family; 5] = [Family::Generic, Family::Diagonal, Family::TwoPoint, Family::Hermite, Family::HermiteMerged];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSample {
    pub i_wx: f64,
    pub i_wy: f64,
    pub family: Family,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub seed: u64,
    pub samples: Vec<PairSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub i_wx: f64,
    pub i_wy: f64,
    pub limit: f64,
}

impl SweepResult {
    /// Samples with `I(W;Y) > limit(I(W;X)) + tol`, skipping those where the
    /// bound is undefined.
    pub fn violations(&self, tol: f64, limit: impl Fn(&PairSample) -> Option<f64>) -> Vec<Violation> {
        self.samples
            .iter()
            .enumerate()
            .filter_map(|(index, s)| {
                let l = limit(s)?;
                (s.i_wy > l + tol).then_some(Violation { index, i_wx: s.i_wx, i_wy: s.i_wy, limit: l })
            })
            .collect()
    }

    /// Weak data processing `I(W;Y) <= I(W;X)`.
    pub fn dpi_violations(&self, tol: f64) -> Vec<Violation> {
        self.violations(tol, |s| Some(s.i_wx))
    }

    /// Samples breaking `I(W;Y) <= I(W;X) - g(I(W;X))`.
    pub fn diag_violations(&self, tol: f64, gap: impl Fn(f64) -> Result<f64>) -> Vec<Violation> {
        self.violations(tol, |s| gap(s.i_wx).ok().map(|g| s.i_wx - g))
    }

    /// Samples with `C - I(W;Y) <= max_gap` and `I(W;X) < t_lower(C - I(W;Y)) - tol`.
    /// Gaps outside the validity range of `t_lower` carry no constraint.
    pub fn horizontal_violations(
        &self,
        capacity: f64,
        max_gap: f64,
        tol: f64,
        t_lower: impl Fn(f64) -> Result<f64>,
    ) -> Vec<Violation> {
        self.samples
            .iter()
            .enumerate()
            .filter_map(|(index, s)| {
                let eps = (capacity - s.i_wy).max(f64::MIN_POSITIVE);
                if eps > max_gap {
                    return None;
                }
                let t = t_lower(eps).ok()?;
                (s.i_wx < t - tol).then_some(Violation { index, i_wx: s.i_wx, i_wy: s.i_wy, limit: t })
            })
            .collect()
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize, shape: f64) -> Vec<f64> {
    let g = Gamma::new(shape, 1.0).unwrap();
    loop {
        let v: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 && s.is_finite() {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

fn diagonal(px: &[f64]) -> Vec<Vec<f64>> {
    (0..px.len())
        .map(|j| {
            let mut r = vec![0.0; px.len()];
            r[j] = px[j];
            r
        })
        .collect()
}

/// A random coupling `(joint[w][x], atoms)` with `E|X|^p = budget` exactly.
fn draw_coupling(rng: &mut ChaCha8Rng, family: Family, p: f64, budget: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (joint, atoms) = match family {
        Family::Generic => {
            let nx = rng.random_range(2..=6);
            let nw = rng.random_range(2..=3);
            let atoms: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pw = dirichlet(rng, nw, 1.0);
            let shape = if rng.random::<bool>() { 1.0 } else { 0.2 };
            let joint = pw.iter().map(|w| dirichlet(rng, nx, shape).into_iter().map(|q| w * q).collect()).collect();
            (joint, atoms)
        }
        Family::Diagonal => {
            let nx = rng.random_range(2..=6);
            let atoms: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shape = if rng.random::<bool>() { 1.0 } else { 0.3 };
            (diagonal(&dirichlet(rng, nx, shape)), atoms)
        }
        Family::TwoPoint => {
            let q = 10f64.powf(rng.random_range(-4.0..-0.3));
            (diagonal(&[1.0 - q, q]), vec![0.0, 1.0])
        }
        Family::Hermite | Family::HermiteMerged => {
            let m = rng.random_range(2..=10);
            let gh = gauss_hermite_input(m).unwrap();
            let px = gh.weights().to_vec();
            let joint = if family == Family::Hermite {
                diagonal(&px)
            } else {
                let nw = rng.random_range(2..=3);
                let mut j = vec![vec![0.0; m]; nw];
                for (x, w) in px.iter().enumerate() {
                    j[rng.random_range(0..nw)][x] = *w;
                }
                j.retain(|r| r.iter().any(|v| *v > 0.0));
                j
            };
            (joint, gh.atoms().to_vec())
        }
    };
    let mut px = vec![0.0; atoms.len()];
    for r in &joint {
        for (a, b) in px.iter_mut().zip(r) {
            *a += b;
        }
    }
    let m: f64 = px.iter().zip(&atoms).map(|(w, a)| w * a.abs().powf(p)).sum();
    let c = if m > 0.0 { (budget / m).powf(1.0 / p) } else { 1.0 };
    (joint, atoms.into_iter().map(|a| c * a).collect())
}

/// Random couplings `W - X - Y` for `Y = X + Z` with `E|X|^p = γ`, with
/// `(I(W;X), I(W;Y))` computed by quadrature.
pub fn sdpi_pair_sampler(noise: &NoiseModel, gamma: f64, p: f64, n_couplings: usize, seed: u64) -> Result<SweepResult> {
    ensure(n_couplings >= 1, || "need at least one coupling".into())?;
    ensure(gamma > 0.0 && p > 0.0, || "moment order and budget must be positive".into())?;
    let channel = AdditiveChannel::new(noise.clone(), 1.0)?;
    let samples = (0..n_couplings)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let family = FAMILIES[i % FAMILIES.len()];
            let (joint, atoms) = draw_coupling(&mut rng, family, p, gamma);
            PairSample { i_wx: mi_joint(&joint), i_wy: mi_coupling_additive(&joint, &atoms, &channel), family }
        })
        .collect();
    Ok(SweepResult { seed, samples })
}

/// Random couplings `W - X - Y` through a DMC.
pub fn dmc_pair_sampler(k: &DmcKernel, w_size: usize, n_couplings: usize, seed: u64) -> Result<SweepResult> {
    ensure(w_size >= 1 && n_couplings >= 1, || "need |W| >= 1 and at least one coupling".into())?;
    let samples = (0..n_couplings)
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let pw = dirichlet(&mut rng, w_size, 1.0);
            let shape = if i % 2 == 0 { 1.0 } else { 0.2 };
            let joint: Vec<Vec<f64>> =
                pw.iter().map(|w| dirichlet(&mut rng, k.rows(), shape).into_iter().map(|q| w * q).collect()).collect();
            PairSample { i_wx: mi_joint(&joint), i_wy: mi_coupling_dmc(&joint, k), family: Family::Generic }
        })
        .collect();
    Ok(SweepResult { seed, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::mi_additive;
    use crate::fi_curves::fi_bsc;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lattice_counts() {
        assert_eq!(lattice(3, 4).len(), 15);
        assert_eq!(bruteforce_cost(2, 2, 10), binom(12, 2) * 11);
    }

    #[test]
    fn bruteforce_trivial_cases() {
        let bsc = DmcKernel::bsc(0.1).unwrap();
        assert_abs_diff_eq!(fi_bruteforce_dmc(&bsc, 0.0, 2, 20).unwrap(), 0.0, epsilon = 1e-12);
        let id = DmcKernel::identity(2).unwrap();
        let v = fi_bruteforce_dmc(&id, 0.3, 3, 30).unwrap();
        assert!(v <= 0.3 + 1e-12 && v > 0.29, "{v}");
        assert!(matches!(fi_bruteforce_dmc_many(&bsc, &[0.1], 3, 60, 10), Err(Error::Budget { .. })));
    }

    #[test]
    fn bruteforce_bsc_binary_w() {
        let bsc = DmcKernel::bsc(0.1).unwrap();
        let v = fi_bruteforce_dmc(&bsc, 0.2, 2, 60).unwrap();
        let f = fi_bsc(0.2, 0.1).unwrap();
        assert!(v <= f + 1e-12 && v > f - 5e-3, "{v} vs {f}");
    }

    #[test]
    fn mc_agrees_with_quadrature() {
        let x = DiscretePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let g = NoiseModel::standard_gaussian();
        let (est, ci) = mc_mutual_info(&x, &g, 1.0, 200_000, 3).unwrap();
        let q = mi_additive(&x, &AdditiveChannel::awgn(1.0).unwrap()).unwrap();
        assert!((est - q).abs() <= ci + 1e-4, "{est} ± {ci} vs {q}");
        let (d, dci) = mc_mutual_info(&DiscretePmf::point_mass(0.3), &g, 1.0, 100_000, 3).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        assert!(dci < 1e-12);
    }

    #[test]
    fn sampler_is_reproducible_and_obeys_dpi() {
        let g = NoiseModel::standard_gaussian();
        let a = sdpi_pair_sampler(&g, 1.0, 2.0, 40, 11).unwrap();
        let b = sdpi_pair_sampler(&g, 1.0, 2.0, 40, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.dpi_violations(1e-9).is_empty());
    }

    #[test]
    fn erasure_pairs_on_line() {
        let k = DmcKernel::erasure(0.3, 3).unwrap();
        let s = dmc_pair_sampler(&k, 3, 50, 5).unwrap();
        for p in &s.samples {
            assert_abs_diff_eq!(p.i_wy, 0.7 * p.i_wx, epsilon = 1e-12);
        }
    }
}
