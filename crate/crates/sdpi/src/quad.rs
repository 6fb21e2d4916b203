//! Quadrature rules and one-dimensional search helpers.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights for `∫ f(x) e^{-x²} dx` (physicists' convention).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let pim4 = PI.powf(-0.25);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Rule for `E f(Z)` with `Z ~ N(0,1)`: nodes `√2·x_i`, weights `w_i/√π`.
pub fn std_normal_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_hermite(n);
    let sp = PI.sqrt();
    (
        x.iter().map(|v| v * std::f64::consts::SQRT_2).collect(),
        w.iter().map(|v| v / sp).collect(),
    )
}

/// Cached 127-node standard-normal rule.
pub fn normal_rule_127() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| std_normal_rule(127))
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn legendre_16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite 16-point Gauss–Legendre over `[a, b]`, splitting at `breaks`
/// and further into pieces of length at most `max_len`.
pub fn piecewise_legendre(a: f64, b: f64, breaks: &[f64], max_len: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    pts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (1.0 + q.abs()));
    let (gx, gw) = legendre_16();
    let mut total = 0.0;
    for win in pts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let pieces = ((hi - lo) / max_len).ceil().max(1.0) as usize;
        let h = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let c = lo + (k as f64 + 0.5) * h;
            let r = 0.5 * h;
            let mut s = 0.0;
            for (xi, wi) in gx.iter().zip(gw) {
                s += wi * f(c + r * xi);
            }
            total += r * s;
        }
    }
    total
}

/// Composite Simpson rule on `n` (rounded up to even) panels.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// Adaptive Simpson integration with absolute tolerance `tol`, starting from
/// at least `min_panels` panels.
pub fn adaptive_simpson(a: f64, b: f64, tol: f64, min_panels: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let panels = min_panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let hi = lo + h;
        let fa = f(lo);
        let fb = f(hi);
        let fm = f(0.5 * (lo + hi));
        let whole = h / 6.0 * (fa + 4.0 * fm + fb);
        total += rec(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40);
    }
    total
}

/// Golden-section maximisation of `f` on `[a, b]` until the bracket is
/// narrower than `width`. Returns `(argmax, max)`.
pub fn golden_max(mut a: f64, mut b: f64, width: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |acc, p| if p.1 > acc.1 { p } else { acc })
}

/// Grid scan followed by golden refinement on the best cell.
pub fn grid_golden_max(a: f64, b: f64, n: usize, width: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let h = (b - a) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(a + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + (best_i.saturating_sub(1)) as f64 * h;
    let hi = (a + (best_i + 1) as f64 * h).min(b);
    let (x, v) = golden_max(lo, hi, width, &f);
    if v >= best {
        (x, v)
    } else {
        (a + best_i as f64 * h, best)
    }
}

/// Bisection for the boundary of a predicate that is true on `[lo, x*)` and
/// false on `(x*, hi]`. Returns `(x*, iterations)`.
pub fn bisect_boundary(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, pred: impl Fn(f64) -> bool) -> (f64, usize) {
    let mut it = 0;
    while hi - lo > tol && it < max_iter {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
    }
    (0.5 * (lo + hi), it)
}

/// Numerically stable `log Σ exp(v_i)`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (z, w) = std_normal_rule(127);
        let m0: f64 = w.iter().sum();
        let m2: f64 = z.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = z.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m2 - 1.0).abs() < 1e-11);
        assert!((m4 - 3.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_small_rule() {
        let (z, w) = std_normal_rule(2);
        assert!((z[0] + 1.0).abs() < 1e-14 && (z[1] - 1.0).abs() < 1e-14);
        assert!((w[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn legendre_polynomials() {
        let v = piecewise_legendre(0.0, 2.0, &[0.5], 0.3, |x| x.powi(5));
        assert!((v - 64.0 / 6.0).abs() < 1e-12);
        let s = adaptive_simpson(0.0, PI, 1e-12, 64, &|x: f64| x.sin());
        assert!((s - 2.0).abs() < 1e-10);
    }

    #[test]
    fn golden_finds_peak() {
        let (x, v) = grid_golden_max(0.0, 1.0, 50, 1e-10, |x| -(x - 0.3141).powi(2));
        assert!((x - 0.3141).abs() < 1e-6 && v.abs() < 1e-12);
    }
}
