//! Values pinned against independent high-precision computations.

use approx::assert_abs_diff_eq;
use sdpi::channels::{mi_additive, AdditiveChannel, DmcKernel, NoiseModel};
use sdpi::contraction::{alpha_star, eta_tv_amplitude};
use sdpi::deconv::{deconv_v_bound, esseen_bound, g1_profile, ks_deconv_solve, ks_from_tv_bound, ks_from_tv_bound_w1, KsTransferInputs};
use sdpi::fi_curves::{fi_bsc, fi_fixed_marginal_bsc, mrs_gerber};
use sdpi::gaussian_sdpi::{horizontal_constants, GaussianBoundParams, A0, A1};
use sdpi::general_sdpi::{discrete_grid_bound, rho_horizontal, strict_contraction_check};
use sdpi::oracle::{fi_bruteforce_dmc_many, mc_mutual_info, DEFAULT_BUDGET};
use sdpi::prob::{hb, kl_divergence, ks_distance, q_function, tv_distance, Distribution, DiscretePmf, GridDensity, Normal};

#[test]
fn scalar_functions() {
    assert_abs_diff_eq!(hb(0.1), 0.325_082_973_391_448_2, epsilon = 1e-15);
    assert_abs_diff_eq!(q_function(1.0), 0.158_655_253_931_457_05, epsilon = 1e-15);
    assert_abs_diff_eq!(mrs_gerber(hb(0.1), 0.1).unwrap(), 0.471_393_486_810_094_2, epsilon = 1e-12);
    assert_abs_diff_eq!(fi_fixed_marginal_bsc(0.2, 0.3, 0.1).unwrap(), 0.121_021_640_675_186_22, epsilon = 1e-10);
    assert_abs_diff_eq!(A0, 24.0 / std::f64::consts::PI.powf(1.5), epsilon = 1e-15);
    assert_abs_diff_eq!(A1, 2f64.sqrt() / std::f64::consts::PI, epsilon = 1e-15);
}

#[test]
fn gaussian_distances_on_grids() {
    let on_grid = |m: f64| -> Distribution {
        let n = Normal { mean: m, sd: 1.0 };
        GridDensity::from_fn(-12.0, 13.0, 25_001, |x| n.density(x)).unwrap().into()
    };
    let (p, q, r) = (on_grid(0.0), on_grid(0.5), on_grid(1.0));
    assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 0.125, epsilon = 1e-6);
    assert_abs_diff_eq!(tv_distance(&p, &r).unwrap(), 0.382_924_922_548_026_2, epsilon = 1e-6);
    assert_abs_diff_eq!(ks_distance(&p, &q).unwrap(), 0.197_412_651_365_847_45, epsilon = 1e-6);
}

#[test]
fn amplitude_thresholds() {
    let g = alpha_star(&NoiseModel::standard_gaussian()).unwrap();
    assert_abs_diff_eq!(g.alpha_star.unwrap(), 1.160_827_281_711_310_5, epsilon = 1e-8);
    let u = alpha_star(&NoiseModel::uniform(0.0, 1.0).unwrap()).unwrap();
    assert_abs_diff_eq!(u.alpha_star.unwrap(), 3.0, epsilon = 1e-8);
    assert_abs_diff_eq!(eta_tv_amplitude(&NoiseModel::standard_gaussian(), 1.0).unwrap(), 0.682_689_492_137_085_9, epsilon = 1e-12);
}

#[test]
fn grid_input_coefficient() {
    let noise = NoiseModel::standard_gaussian();
    let c = discrete_grid_bound(&noise, 2.0, 1.0, 1.0, 2f64.ln()).unwrap();
    assert_abs_diff_eq!(c, 0.999_999_967_536_580_8, epsilon = 1e-12);
    let x = DiscretePmf::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let i = mi_additive(&x, &AdditiveChannel::new(noise, 1.0).unwrap()).unwrap();
    assert!(i <= c * x.entropy());
}

#[test]
fn bruteforce_tracks_closed_form() {
    let k = DmcKernel::bsc(0.11).unwrap();
    let ts = [0.1, 0.3, 0.5, 0.69];
    let brute = fi_bruteforce_dmc_many(&k, &ts, 2, 60, DEFAULT_BUDGET).unwrap();
    for (t, b) in ts.iter().zip(brute) {
        let exact = fi_bsc(*t, 0.11).unwrap();
        assert!(b <= exact + 1e-9, "t = {t}: brute {b} above closed form {exact}");
        assert!(exact - b < 5e-3, "t = {t}: brute {b} far below {exact}");
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let x = DiscretePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
    let exact = 0.485_944_154_132_935 * 2f64.ln();
    let (est, band) = mc_mutual_info(&x, &NoiseModel::standard_gaussian(), 1.0, 1 << 18, 3).unwrap();
    assert!((est - exact).abs() <= band, "{est} ± {band} vs {exact}");
    assert!(band < 5e-3);
}

#[test]
fn uniform_noise_passes_a_shifted_bit_losslessly() {
    let grid = NoiseModel::uniform(0.0, 1.0).unwrap().to_grid(1e-3).unwrap();
    let report = strict_contraction_check(&grid, &[0.25, 0.5, 1.0, 1.5]);
    assert!(!report.strict);
    let w = report.witness.unwrap();
    assert_abs_diff_eq!(w, 1.0, epsilon = 1e-3);
    let x = DiscretePmf::new(vec![0.0, w], vec![0.3, 0.7]).unwrap();
    let ch = AdditiveChannel::new(NoiseModel::uniform(0.0, 1.0).unwrap(), 1.0).unwrap();
    assert_abs_diff_eq!(mi_additive(&x, &ch).unwrap(), hb(0.3), epsilon = 1e-6);
}

#[test]
fn esseen_dominates_gaussian_shift() {
    let (p, q) = (Normal::standard(), Normal { mean: 0.5, sd: 1.0 });
    let m2 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let b = esseen_bound(&p, &q, m2, 4.0).unwrap();
    assert_abs_diff_eq!(b, 1.156_728_116_912_477_3, epsilon = 1e-8);
    assert!(b >= 0.197_412_651_365_847_45);
}

#[test]
fn transfer_bound_arithmetic() {
    let inp = KsTransferInputs { m1: 0.4, m2: 0.4, first_moments: 1.6, g_t: (-2f64).exp(), h_t: 0.0, t: 2.0, d_tv: 1e-6 };
    assert_abs_diff_eq!(ks_from_tv_bound(&inp).unwrap(), 2.058_276_060_666_993, epsilon = 1e-12);
}

#[test]
fn deconvolution_profiles_and_solver() {
    let g = NoiseModel::standard_gaussian();
    assert_abs_diff_eq!(g1_profile(&g).unwrap().g1((-4f64).exp()).unwrap(), 2.0, epsilon = 1e-12);
    let u = g1_profile(&NoiseModel::uniform(0.0, 1.0).unwrap()).unwrap();
    assert_abs_diff_eq!(u.g1(1e-3).unwrap(), 10.0, epsilon = 1e-9);
    let (t, b) = deconv_v_bound(&g, (-16f64).exp() / g.sup_density()).unwrap();
    assert_abs_diff_eq!(t, 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(b, 3.506_628_274_631_000_5, epsilon = 1e-12);
    let s = ks_deconv_solve(&g, (-8f64).exp(), 0.4, 1.6).unwrap();
    assert!(s.fast_path);
    assert_abs_diff_eq!(s.t, 2.0, epsilon = 1e-12);
}

#[test]
fn horizontal_rate_domain() {
    let g = NoiseModel::standard_gaussian();
    let x_star: Distribution = GridDensity::gaussian(0.0, 1.0, 1e-2, 10.0).unwrap().into();
    assert!(rho_horizontal(1e-40, &g, &x_star).is_err());
    let atom: Distribution = DiscretePmf::point_mass(0.0).into();
    assert!(rho_horizontal(1e-300, &g, &atom).is_err());
}

#[test]
fn gaussian_parameter_constants() {
    let k = horizontal_constants(1.0).unwrap();
    assert_abs_diff_eq!(k.a5, 2f64.ln() + 2.0 / std::f64::consts::E, epsilon = 1e-15);
    assert_abs_diff_eq!(k.c1, (k.a5.exp() * k.kappa).sqrt(), epsilon = 1e-12);
    let p = GaussianBoundParams::new(1.0, 0.5).unwrap();
    assert_eq!(p.a2, 108.0);
    assert_abs_diff_eq!(p.c2, 2.0 * 2f64.ln(), epsilon = 1e-15);
    assert!(GaussianBoundParams::new(0.0, 0.5).is_err());
}

#[test]
fn second_moment_transfer_dominates_shift() {
    let shift: f64 = 0.3;
    let d_tv = 1.0 - 2.0 * q_function(shift / (2.0 * 2f64.sqrt()));
    let d_ks = 1.0 - 2.0 * q_function(shift / 2.0);
    let m = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let (p, q) = (Normal::standard(), Normal { mean: shift, sd: 1.0 });
    let first = sdpi::prob::Law::abs_mean(&p) + sdpi::prob::Law::abs_mean(&q);
    let best = (1..400)
        .map(|i| {
            let t = 0.05 * i as f64;
            let g_t = (-0.5 * t * t).exp();
            let inp = KsTransferInputs { m1: m, m2: m, first_moments: first, g_t, h_t: 0.0, t, d_tv };
            ks_from_tv_bound_w1(&inp, 4.0 + shift * shift).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best >= d_ks, "{best} < {d_ks}");
}
