use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdpi::channels::{awgn_capacity, DmcKernel, NoiseModel};
use sdpi::contraction::eta_tv_amplitude;
use sdpi::deconv::{
    cf_inf_modulus, esseen_bound, ks_deconv_solve, ks_from_tv_bound, v_expectation, v_expectation_fourier,
    KsTransferInputs,
};
use sdpi::fi_curves::{fi_bsc, fi_dmc_envelope, fi_erasure, fi_properties_check, mrs_gerber, EnvelopeParams};
use sdpi::gaussian_sdpi::{concentration_radius, diag_achievability, gd_lower, gh_capacity_gap, t_lower_from_gap, two_point_input};
use sdpi::general_sdpi::strict_contraction_check;
use sdpi::oracle::{dmc_pair_sampler, fi_bruteforce_dmc_many, mc_mutual_info, sdpi_pair_sampler, SweepResult, DEFAULT_BUDGET};
use sdpi::prob::{convolve, hb, ks_distance, levy_concentration, q_function, tv_distance, Ccurve, DiscretePmf, Distribution, GridDensity};
use sdpi::quad::normal_rule_127;

fn report(n: usize, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut e = std::io::stderr();
    let _ = writeln!(e, "criterion {n:>2}: {verdict} | {detail}");
}

#[test]
fn c01_bsc_closed_form_vs_brute_force() {
    let start = Instant::now();
    let ts = [0.1, 0.2, 0.4, 0.6];
    let mut worst = 0.0f64;
    let mut above = false;
    for delta in [0.1, 0.3] {
        let k = DmcKernel::bsc(delta).unwrap();
        let brute = fi_bruteforce_dmc_many(&k, &ts, 3, 60, DEFAULT_BUDGET).unwrap();
        for (t, b) in ts.iter().zip(&brute) {
            let f = fi_bsc(*t, delta).unwrap();
            worst = worst.max((f - b).abs());
            above |= *b > f + 1e-12;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst <= 2e-3 && !above && secs <= 120.0;
    report(1, ok, &format!("max |brute - closed form| = {worst:.2e} nats, {secs:.1} s"));
    assert!(ok);
}

#[test]
fn c02_erasure_identity() {
    let k = DmcKernel::erasure(0.3, 3).unwrap();
    let s = dmc_pair_sampler(&k, 3, 200, 2).unwrap();
    let worst = s.samples.iter().map(|p| (p.i_wy - 0.7 * p.i_wx).abs()).fold(0.0, f64::max);
    let ok = worst <= 1e-9;
    report(2, ok, &format!("200 couplings, max |I(W;Y) - 0.7 I(W;X)| = {worst:.2e}"));
    assert!(ok);
}

#[test]
fn c03_gaussian_contraction_closed_form() {
    let g = NoiseModel::standard_gaussian();
    let worst = (0..50)
        .map(|i| {
            let a = 6.0 * i as f64 / 49.0;
            (eta_tv_amplitude(&g, a).unwrap() - (1.0 - 2.0 * q_function(a))).abs()
        })
        .fold(0.0, f64::max);
    let ok = worst <= 1e-8;
    report(3, ok, &format!("50 amplitudes in [0,6], max error {worst:.2e}"));
    assert!(ok);
}

fn diag_sweeps() -> Vec<(f64, SweepResult)> {
    let g = NoiseModel::standard_gaussian();
    [0.5, 1.0, 4.0]
        .iter()
        .enumerate()
        .map(|(i, &gamma)| (gamma, sdpi_pair_sampler(&g, gamma, 2.0, 10_000, 100 + i as u64).unwrap()))
        .collect()
}

#[test]
fn c04_diagonal_soundness_and_c07_horizontal_soundness() {
    let start = Instant::now();
    let sweeps = diag_sweeps();
    let mut diag_bad = 0;
    let mut tightest = f64::INFINITY;
    let mut horiz_bad = 0;
    let mut near_cap = 0;
    let mut constrained = 0;
    for (gamma, s) in &sweeps {
        let v = s.diag_violations(3e-4, |t| gd_lower(t, *gamma));
        diag_bad += v.len();
        for p in &s.samples {
            let slack = p.i_wx - gd_lower(p.i_wx, *gamma).unwrap() - p.i_wy;
            tightest = tightest.min(slack);
        }
        let cap = awgn_capacity(*gamma).unwrap();
        let h = s.horizontal_violations(cap, 1e-3, 1e-6, |e| t_lower_from_gap(e, *gamma));
        horiz_bad += h.len();
        for p in &s.samples {
            let eps = cap - p.i_wy;
            if eps <= 1e-3 {
                near_cap += 1;
                if t_lower_from_gap(eps.max(f64::MIN_POSITIVE), *gamma).is_ok() {
                    constrained += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok4 = diag_bad == 0 && secs <= 600.0;
    report(
        4,
        ok4,
        &format!("3 x 10^4 couplings, {diag_bad} violations, smallest slack {tightest:.3e}, {secs:.1} s"),
    );
    let ok7 = horiz_bad == 0;
    report(
        7,
        ok7,
        &format!("{near_cap} couplings with gap <= 1e-3, {constrained} inside the validity range, {horiz_bad} violations"),
    );
    assert!(ok4 && ok7);
}

#[test]
fn c05_two_point_tightness() {
    let gamma = 1.0;
    let mut ok = true;
    let mut lines = Vec::new();
    let mut ratio_at_10 = f64::NAN;
    for (i, a) in [4.0, 6.0, 8.0, 10.0].into_iter().enumerate() {
        let d = diag_achievability(a, gamma).unwrap();
        let gap = d.h_x - d.mi_exact;
        let fano = hb(q_function(gamma.sqrt() * a / 2.0));
        let (mc, ci) = mc_mutual_info(&two_point_input(a).unwrap(), &NoiseModel::standard_gaussian(), gamma, 1_000_000, 50 + i as u64).unwrap();
        let mc_ok = (mc - d.mi_exact).abs() <= ci + 1e-4;
        let ratio = gap.ln() / (-(gamma / d.h_x) * (1.0 / d.h_x).ln());
        ok &= gap <= fano + 1e-12 && mc_ok;
        if a == 10.0 {
            ratio_at_10 = ratio;
        }
        lines.push(format!("a={a}: gap {gap:.3e} <= {fano:.3e}, mc ok {mc_ok}, ratio {ratio:.3}"));
    }
    let ratio_ok = (0.5..=2.0).contains(&ratio_at_10);
    report(5, ok && ratio_ok, &lines.join("; "));
    assert!(ok, "sandwich or MC cross-check failed");
    assert!(ratio_ok, "log-gap ratio at a=10 is {ratio_at_10}, outside [0.5, 2]");
}

#[test]
fn c06_hermite_capacity_gap() {
    let gamma = 1.0;
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for m in 2..=8 {
        let r = gh_capacity_gap(m, gamma).unwrap();
        ok &= r.gap <= r.bound;
        worst = worst.min(r.bound - r.gap);
        if m == 2 {
            ok &= r.bound == 0.5;
        }
    }
    report(6, ok, &format!("m = 2..8, smallest bound - gap = {worst:.3e}, bound(2) = 0.5"));
    assert!(ok);
}

fn mixture(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> (Vec<(f64, f64, f64)>, GridDensity) {
    let k = rng.random_range(1..=3);
    let comps: Vec<(f64, f64, f64)> =
        (0..k).map(|_| (rng.random_range(0.2..1.0), rng.random_range(-1.5..1.5), rng.random_range(0.3..1.2))).collect();
    let g = grid_of(&comps, lo, hi, n);
    (comps, g)
}

fn grid_of(comps: &[(f64, f64, f64)], lo: f64, hi: f64, n: usize) -> GridDensity {
    let total: f64 = comps.iter().map(|c| c.0).sum();
    let pdf = |x: f64| {
        comps
            .iter()
            .map(|(w, m, s)| w / total * (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt()))
            .sum::<f64>()
    };
    GridDensity::from_fn(lo, hi, n, pdf).unwrap()
}

#[test]
fn c08_deconvolution_domination() {
    let start = Instant::now();
    let (lo, hi, n) = (-10.0, 10.0, 1001);
    let step = (hi - lo) / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = Vec::new();
    let mut tightest = f64::INFINITY;
    for i in 0..60 {
        let noise = match i % 4 {
            0 => NoiseModel::standard_gaussian(),
            1 => NoiseModel::gaussian(0.5).unwrap(),
            2 => NoiseModel::uniform(0.0, 1.0).unwrap(),
            _ => NoiseModel::uniform(-1.0, 1.0).unwrap(),
        };
        let (comps, pg) = mixture(&mut rng, lo, hi, n);
        let qg = if rng.random::<bool>() {
            mixture(&mut rng, lo, hi, n).1
        } else {
            let eps = rng.random_range(0.001..0.1);
            let moved: Vec<(f64, f64, f64)> = comps.iter().map(|(w, m, s)| (*w, m + eps, *s)).collect();
            grid_of(&moved, lo, hi, n)
        };
        let p: Distribution = pg.clone().into();
        let q: Distribution = qg.clone().into();
        let zg = noise.to_grid(step).unwrap();
        let d_tv = tv_distance(&convolve(&p, &zg).unwrap().into(), &convolve(&q, &zg).unwrap().into()).unwrap();
        let d_ks = ks_distance(&p, &q).unwrap();
        let m1 = noise.sup_density();
        let m2 = qg.max_value();
        let moments = pg.abs_moment(1.0) + qg.abs_moment(1.0);
        let t_cap = match noise {
            NoiseModel::Uniform { lo, hi } => 0.999 * 2.0 * std::f64::consts::PI / (hi - lo),
            _ => 40.0,
        };
        let tv_bound = (1..=200)
            .map(|j| {
                let t = t_cap * j as f64 / 200.0;
                let g_t = cf_inf_modulus(&noise, t);
                ks_from_tv_bound(&KsTransferInputs { m1, m2, first_moments: moments, g_t, h_t: 0.0, t, d_tv }).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let solved = ks_deconv_solve(&noise, d_tv.max(1e-300), m2, moments).unwrap().bound;
        let ess = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|t| esseen_bound(&pg, &qg, m2, *t).unwrap())
            .fold(f64::INFINITY, f64::min);
        tightest = tightest.min(tv_bound.min(solved).min(ess) / d_ks.max(1e-300));
        if d_ks > tv_bound || d_ks > solved || d_ks > ess {
            bad.push(format!("triple {i}: d_KS {d_ks:.3e}, transfer {tv_bound:.3e}, solved {solved:.3e}, esseen {ess:.3e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = bad.is_empty() && secs <= 300.0;
    report(
        8,
        ok,
        &format!("60 triples, {} failures, smallest bound/d_KS {tightest:.3}, {secs:.1} s {}", bad.len(), bad.join("; ")),
    );
    assert!(ok);
}

#[test]
fn c09_concentration_lemma() {
    let (z, w) = normal_rule_127();
    let mut cases = 0;
    let mut ok = true;
    let mut min_slack = f64::INFINITY;
    for q in [1e-1, 3e-2, 1e-2, 1e-3, 1e-4, 1e-6] {
        for b in [0.05, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let kl: f64 = z
                .iter()
                .zip(w)
                .map(|(z, w)| -w * (1.0 - q + q * (b * z - 0.5 * b * b).exp()).ln())
                .sum();
            if kl.is_nan() || kl <= 0.0 {
                continue;
            }
            let eps = kl / 2.0;
            let (r, limit) = concentration_radius(eps).unwrap();
            let escaping = if b > r { q } else { 0.0 };
            cases += 1;
            ok &= escaping <= limit;
            min_slack = min_slack.min(limit - escaping);
        }
    }
    report(9, ok, &format!("{cases} two-atom inputs, smallest slack {min_slack:.3e}"));
    assert!(ok);
}

#[test]
fn c10_property_suites() {
    let mut fails = Vec::new();
    for delta in [0.05, 0.1, 0.3] {
        let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 2f64.ln() / 400.0).collect();
        let v: Vec<f64> = xs.iter().map(|x| mrs_gerber(*x, delta).unwrap()).collect();
        if v.windows(3).any(|w| w[0] + w[2] - 2.0 * w[1] < -1e-12) {
            fails.push(format!("Mrs. Gerber not convex at δ = {delta}"));
        }
    }
    let ts: Vec<f64> = (0..=35).map(|i| i as f64 * 0.02).collect();
    let mut curves: Vec<(String, Ccurve)> = Vec::new();
    for delta in [0.05, 0.1, 0.3] {
        curves.push((format!("bsc {delta}"), Ccurve::from_fn(&ts, |t| fi_bsc(t, delta).unwrap()).unwrap()));
    }
    curves.push(("erasure".into(), Ccurve::from_fn(&ts, |t| fi_erasure(t, 0.3, 3).unwrap()).unwrap()));
    let k = DmcKernel::new(2, 3, vec![0.7, 0.2, 0.1, 0.1, 0.3, 0.6]).unwrap();
    let params = EnvelopeParams { restarts: 4, lambdas: 16, max_iter: 400, ..EnvelopeParams::default() };
    curves.push(("envelope".into(), fi_dmc_envelope(&k, &ts, &params).unwrap()));
    for (name, c) in &curves {
        let r = fi_properties_check(c);
        if !r.ok {
            fails.push(format!("{name}: {}", r.failures.join(", ")));
        }
    }
    let d: Distribution = DiscretePmf::new(vec![-1.0, 0.0, 0.5, 2.0], vec![0.1, 0.45, 0.3, 0.15]).unwrap().into();
    if (levy_concentration(&d, 0.0).unwrap() - 0.45).abs() > 1e-15 {
        fails.push("Lévy concentration at 0 differs from the largest atom".into());
    }
    let g: Distribution = GridDensity::gaussian(0.3, 0.8, 0.01, 12.0).unwrap().into();
    let mut worst = 0.0f64;
    for p in [&d, &g] {
        for &(t, x0) in &[(0.5, 0.0), (2.0, 0.4), (5.0, -1.0), (9.0, 1.7)] {
            worst = worst.max((v_expectation(p, t, x0) - v_expectation_fourier(p, t, x0)).abs());
        }
    }
    if worst > 1e-4 {
        fails.push(format!("Plancherel identity off by {worst:.2e}"));
    }
    let shifts: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
    let gauss = NoiseModel::standard_gaussian().to_grid(0.01).unwrap();
    let unif = GridDensity::from_fn(0.0, 1.0, 101, |_| 1.0).unwrap();
    let gs = strict_contraction_check(&gauss, &shifts);
    let us = strict_contraction_check(&unif, &shifts);
    if !gs.strict {
        fails.push("Gaussian grid reported NOT-STRICT".into());
    }
    if us.strict || us.witness.is_none_or(|x| (x - 1.0).abs() > 1e-9) {
        fails.push(format!("uniform verdict {:?}", us.witness));
    }
    let ok = fails.is_empty();
    report(10, ok, &format!("{} curves, Plancherel error {worst:.2e}; {}", curves.len(), fails.join("; ")));
    assert!(ok);
}
