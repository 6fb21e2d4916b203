//! Command-line front end. Curves are written as CSV preceded by a single
//! `# meta:` line holding a JSON record of the run; reports are JSON.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::channels::{awgn_capacity, DmcKernel, NoiseModel};
use crate::contraction::{alpha_star, eta_tv_amplitude};
use crate::deconv::{cf_inf_modulus, esseen_bound, ks_deconv_solve, ks_from_tv_bound, v_constant, KsTransferInputs};
use crate::error::{Error, Result};
use crate::fi_curves::{fi_bsc, fi_dmc_envelope, fi_erasure, EnvelopeParams};
use crate::gaussian_sdpi::{gd_lower, horizontal_constants, ln_gh_lower, t_lower_from_ln_gap};
use crate::general_sdpi::{general_diag_bound, strict_contraction_check};
use crate::io::{read_distribution_csv, read_grid_csv, write_table};
use crate::oracle::{fi_bruteforce_dmc_many, sdpi_pair_sampler, DEFAULT_BUDGET};
use crate::prob::{convolve, ks_distance, tv_distance, Distribution, GridDensity, Law};

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(name = "sdpi", version, about = "Strong data-processing curves, bounds and checks")]
pub struct RunConfig {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// `F_I` curve of a discrete channel.
    FiCurve(FiCurveArgs),
    /// Gap bounds.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// `η_TV(A)` over an amplitude grid.
    Contraction(ContractionArgs),
    /// KS bounds from TV after convolution with noise.
    Deconv(DeconvArgs),
    /// Structural checks.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Randomized soundness sweeps; exits with status 1 on any violation.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FiMethod {
    Closed,
    Envelope,
    Brute,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FiCurveArgs {
    /// `bsc:δ`, `erasure:α[,k]` or `kernel:r11,r12;r21,r22`.
    #[arg(long)]
    pub channel: String,
    #[arg(long)]
    pub t_grid: String,
    #[arg(long, value_enum)]
    pub method: Option<FiMethod>,
    #[arg(long, default_value_t = 40)]
    pub resolution: usize,
    #[arg(long)]
    pub w_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum BoundsCommand {
    /// Diagonal gap lower bound for the Gaussian channel.
    Diag(GaussArgs),
    /// Horizontal bounds for the Gaussian channel.
    Horiz(HorizArgs),
    /// Diagonal gap for general noise under `E|X|^p <= γ`.
    GeneralDiag(GeneralDiagArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GaussArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub t_grid: String,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct HorizArgs {
    #[arg(long)]
    pub gamma: f64,
    /// Grid of `t`, producing `log g_h(t)`.
    #[arg(long)]
    pub t_grid: Option<String>,
    /// Grid of `log(1/ε)`, producing the lower bound on `t`.
    #[arg(long)]
    pub eps_grid: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GeneralDiagArgs {
    #[arg(long)]
    pub noise: String,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub t_grid: String,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ContractionArgs {
    #[arg(long)]
    pub noise: String,
    #[arg(long)]
    pub a_grid: String,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DeconvArgs {
    #[arg(long)]
    pub noise: String,
    /// CSV with `x,value` (density) or `atom,weight` (pmf).
    #[arg(long)]
    pub p: PathBuf,
    #[arg(long)]
    pub q: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Strict-contraction verdict for a grid noise density.
    Strict(StrictArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct StrictArgs {
    #[arg(long)]
    pub density: PathBuf,
    /// Shift grid; defaults to `0:width:step` of the density grid.
    #[arg(long)]
    pub shift_grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Diag,
    Horiz,
    Bsc,
    Deconv,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Number of random cases.
    #[arg(long)]
    pub n: Option<usize>,
}

/// `lo:hi:step`, inclusive of `hi` up to rounding.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}' in grid '{spec}'")));
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [lo_s, hi_s, step_s] => {
            let (lo, hi, step) = (num(lo_s)?, num(hi_s)?, num(step_s)?);
            if !(step > 0.0) || hi < lo {
                return Err(Error::Parse(format!("grid '{spec}' needs lo <= hi and step > 0")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            let d = decimals(lo_s).zip(decimals(step_s)).map(|(a, b)| a.max(b));
            Ok((0..=n)
                .map(|i| match d {
                    Some(d) => {
                        let s = 10f64.powi(d as i32);
                        ((lo * s).round() + i as f64 * (step * s).round()) / s
                    }
                    None => lo + i as f64 * step,
                })
                .collect())
        }
        _ => Err(Error::Parse(format!("grid '{spec}' is not lo:hi:step"))),
    }
}

/// Digits after the decimal point of a plain decimal literal.
fn decimals(s: &str) -> Option<usize> {
    let s = s.trim();
    if s.contains(['e', 'E']) {
        return None;
    }
    let d = s.split_once('.').map_or(0, |(_, f)| f.len());
    (d <= 12).then_some(d)
}

/// `bsc:δ`, `erasure:α[,k]` or `kernel:rows` with rows separated by `;`.
pub fn parse_channel(spec: &str) -> Result<DmcKernel> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| Error::Parse(format!("channel '{spec}' lacks parameters")))?;
    let nums = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{v}' in '{spec}'"))))
            .collect()
    };
    match kind {
        "bsc" => DmcKernel::bsc(nums(rest)?[0]),
        "erasure" => {
            let v = nums(rest)?;
            DmcKernel::erasure(v[0], v.get(1).map_or(2, |k| *k as usize))
        }
        "kernel" => {
            let rows: Vec<Vec<f64>> = rest.split(';').map(nums).collect::<Result<_>>()?;
            let cols = rows.first().map_or(0, |r| r.len());
            DmcKernel::new(rows.len(), cols, rows.concat())
        }
        _ => Err(Error::Parse(format!("unknown channel kind '{kind}'"))),
    }
}

fn read_config(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {} is not key = value", n + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

/// Appends `--key value` for every config entry not given on the command
/// line.
fn merge_config(args: &[String], file: &BTreeMap<String, String>) -> Vec<String> {
    let mut out = args.to_vec();
    for (k, v) in file {
        if k == "config" {
            continue;
        }
        let flag = format!("--{k}");
        let given = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !given {
            out.push(flag);
            out.push(v.clone());
        }
    }
    out
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).map(PathBuf::from)
        } else {
            a.strip_prefix("--config=").map(PathBuf::from)
        }
    })
}

struct Output {
    meta: Value,
}

impl Output {
    fn meta_line(&self) -> String {
        self.meta.to_string()
    }
}

fn base_meta(cfg: &RunConfig, command: &str, echo: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": cfg.seed,
        "config": echo,
        "constants": { "c": v_constant() },
    })
}

fn with_horizontal_constants(mut meta: Value, gamma: f64) -> Result<Value> {
    let k = horizontal_constants(gamma)?;
    meta["constants"]["kappa"] = json!(k.kappa);
    meta["constants"]["a5"] = json!(k.a5);
    meta["constants"]["c1"] = json!(k.c1);
    meta["constants"]["ln_inv_eps0"] = json!(k.ln_inv_eps0);
    Ok(meta)
}

enum Artifact {
    Table { meta: Output, header: Vec<&'static str>, rows: Vec<Vec<f64>> },
    Json(Value),
    Report { body: Value, violations: usize },
}

fn fi_curve(cfg: &RunConfig, a: &FiCurveArgs) -> Result<Artifact> {
    let k = parse_channel(&a.channel)?;
    let ts = parse_grid(&a.t_grid)?;
    let kind = a.channel.split(':').next().unwrap_or("");
    let method = a.method.unwrap_or(if kind == "kernel" { FiMethod::Envelope } else { FiMethod::Closed });
    let f: Vec<f64> = match method {
        FiMethod::Closed => match (kind, &k) {
            ("bsc", k) => {
                let delta = k.get(0, 1);
                ts.iter().map(|t| fi_bsc(*t, delta)).collect::<Result<_>>()?
            }
            ("erasure", k) => {
                let alpha = k.get(0, k.cols() - 1);
                ts.iter().map(|t| fi_erasure(*t, alpha, k.rows())).collect::<Result<_>>()?
            }
            _ => return Err(Error::Precondition(format!("no closed form for channel '{}'", a.channel))),
        },
        FiMethod::Envelope => {
            let params = EnvelopeParams { seed: cfg.seed, ..EnvelopeParams::default() };
            fi_dmc_envelope(&k, &ts, &params)?.f
        }
        FiMethod::Brute => {
            let w = a.w_size.unwrap_or(k.rows() + 1);
            fi_bruteforce_dmc_many(&k, &ts, w, a.resolution, DEFAULT_BUDGET)?
        }
    };
    let meta = base_meta(
        cfg,
        "fi-curve",
        json!({"channel": a.channel, "t_grid": a.t_grid, "method": format!("{method:?}").to_lowercase(), "resolution": a.resolution}),
    );
    let rows = ts.iter().zip(&f).map(|(t, v)| vec![*t, *v]).collect();
    Ok(Artifact::Table { meta: Output { meta }, header: vec!["t", "fi"], rows })
}

fn bounds(cfg: &RunConfig, b: &BoundsCommand) -> Result<Artifact> {
    match b {
        BoundsCommand::Diag(a) => {
            let ts = parse_grid(&a.t_grid)?;
            let rows = ts.iter().map(|t| Ok(vec![*t, gd_lower(*t, a.gamma)?])).collect::<Result<_>>()?;
            let meta = base_meta(cfg, "bounds diag", json!({"gamma": a.gamma, "t_grid": a.t_grid}));
            Ok(Artifact::Table { meta: Output { meta }, header: vec!["t", "gd_lower"], rows })
        }
        BoundsCommand::Horiz(a) => {
            let meta = with_horizontal_constants(
                base_meta(cfg, "bounds horiz", json!({"gamma": a.gamma, "t_grid": a.t_grid, "eps_grid": a.eps_grid})),
                a.gamma,
            )?;
            match (&a.t_grid, &a.eps_grid) {
                (Some(t), None) => {
                    let rows = parse_grid(t)?
                        .iter()
                        .map(|t| Ok(vec![*t, ln_gh_lower(*t, a.gamma)?]))
                        .collect::<Result<_>>()?;
                    Ok(Artifact::Table { meta: Output { meta }, header: vec!["t", "ln_gh_lower"], rows })
                }
                (None, Some(e)) => {
                    let rows = parse_grid(e)?
                        .iter()
                        .map(|l| vec![*l, t_lower_from_ln_gap(*l, a.gamma).unwrap_or(f64::NAN)])
                        .collect();
                    Ok(Artifact::Table { meta: Output { meta }, header: vec!["ln_inv_eps", "t_lower"], rows })
                }
                _ => Err(Error::Parse("give exactly one of --t-grid and --eps-grid".into())),
            }
        }
        BoundsCommand::GeneralDiag(a) => {
            let noise = NoiseModel::parse(&a.noise)?;
            let ts = parse_grid(&a.t_grid)?;
            let mut rows = Vec::with_capacity(ts.len());
            let mut alpha = None;
            for t in &ts {
                let r = general_diag_bound(*t, &noise, a.p, a.gamma)?;
                alpha = alpha.or(r.alpha_star);
                rows.push(vec![*t, r.value, r.eta_complement, r.a2_star.unwrap_or(f64::NAN)]);
            }
            let mut meta =
                base_meta(cfg, "bounds general-diag", json!({"noise": a.noise, "p": a.p, "gamma": a.gamma, "t_grid": a.t_grid}));
            meta["constants"]["alpha_star"] = json!(alpha);
            Ok(Artifact::Table { meta: Output { meta }, header: vec!["t", "gd", "eta_complement", "a2_star"], rows })
        }
    }
}

fn contraction(cfg: &RunConfig, a: &ContractionArgs) -> Result<Artifact> {
    let noise = NoiseModel::parse(&a.noise)?;
    let rows = parse_grid(&a.a_grid)?
        .iter()
        .map(|x| Ok(vec![*x, eta_tv_amplitude(&noise, *x)?]))
        .collect::<Result<_>>()?;
    let mut meta = base_meta(cfg, "contraction", json!({"noise": a.noise, "a_grid": a.a_grid}));
    meta["constants"]["alpha_star"] = json!(alpha_star(&noise).ok().and_then(|r| r.alpha_star));
    Ok(Artifact::Table { meta: Output { meta }, header: vec!["a", "eta_tv"], rows })
}

fn deconv_report(noise: &NoiseModel, p: &Distribution, q: &GridDensity) -> Result<Value> {
    let step = q.step();
    let zg = match noise {
        NoiseModel::Grid(g) => g.clone(),
        _ => noise.to_grid(step)?,
    };
    let qd: Distribution = q.clone().into();
    let d_tv = tv_distance(&convolve(p, &zg)?.into(), &convolve(&qd, &zg)?.into())?;
    let d_ks = ks_distance(p, &qd)?;
    let m1 = noise.sup_density();
    let m2 = q.max_value();
    let moments = p.abs_mean() + q.abs_moment(1.0);
    let t_cap = match noise {
        NoiseModel::Uniform { lo, hi } => 0.999 * 2.0 * std::f64::consts::PI / (hi - lo),
        _ => 40.0,
    };
    let (mut transfer, mut t_best) = (f64::INFINITY, f64::NAN);
    for j in 1..=200 {
        let t = t_cap * j as f64 / 200.0;
        let g_t = cf_inf_modulus(noise, t);
        let b = ks_from_tv_bound(&KsTransferInputs { m1, m2, first_moments: moments, g_t, h_t: 0.0, t, d_tv })?;
        if b < transfer {
            transfer = b;
            t_best = t;
        }
    }
    let solved = ks_deconv_solve(noise, d_tv.clamp(1e-300, 1.0 - 1e-12), m2, moments)?;
    let esseen = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|t| esseen_bound(p, &qd, m2, *t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(json!({
        "d_tv_conv": d_tv,
        "d_ks": d_ks,
        "esseen": esseen,
        "transfer": transfer,
        "transfer_t": t_best,
        "solved": solved.bound,
        "solved_t": solved.t,
    }))
}

fn deconv(a: &DeconvArgs) -> Result<Artifact> {
    let noise = NoiseModel::parse(&a.noise)?;
    let p = read_distribution_csv(&a.p)?;
    let q = match read_distribution_csv(&a.q)? {
        Distribution::Grid(g) => g,
        Distribution::Discrete(_) => return Err(Error::Precondition("Q must have a bounded density".into())),
    };
    Ok(Artifact::Json(deconv_report(&noise, &p, &q)?))
}

fn check_strict(a: &StrictArgs) -> Result<Artifact> {
    let g = read_grid_csv(&a.density)?;
    let shifts = match &a.shift_grid {
        Some(s) => parse_grid(s)?,
        None => {
            let n = g.len();
            (0..n).map(|i| i as f64 * g.step()).collect()
        }
    };
    let r = strict_contraction_check(&g, &shifts);
    Ok(Artifact::Json(serde_json::to_value(r).map_err(|e| Error::Parse(e.to_string()))?))
}

fn mixture_grid(rng: &mut ChaCha8Rng, shift: f64) -> Result<GridDensity> {
    let k = rng.random_range(1..=3);
    let comps: Vec<(f64, f64, f64)> =
        (0..k).map(|_| (rng.random_range(0.2..1.0), rng.random_range(-1.5..1.5), rng.random_range(0.3..1.2))).collect();
    let total: f64 = comps.iter().map(|c| c.0).sum();
    GridDensity::from_fn(-10.0, 10.0, 1001, |x| {
        comps
            .iter()
            .map(|(w, m, s)| w / total * (-0.5 * ((x - m - shift) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt()))
            .sum()
    })
}

fn verify(cfg: &RunConfig, a: &VerifyArgs) -> Result<Artifact> {
    let mut violations: Vec<Value> = Vec::new();
    let checked;
    match a.suite {
        Suite::Diag | Suite::Horiz => {
            let n = a.n.unwrap_or(2000);
            let s = sdpi_pair_sampler(&NoiseModel::standard_gaussian(), a.gamma, 2.0, n, cfg.seed)?;
            checked = s.samples.len();
            let v = if a.suite == Suite::Diag {
                s.diag_violations(3e-4, |t| gd_lower(t, a.gamma))
            } else {
                let cap = awgn_capacity(a.gamma)?;
                s.horizontal_violations(cap, 1e-3, 1e-6, |e| t_lower_from_ln_gap(-e.ln(), a.gamma))
            };
            violations.extend(v.iter().map(|v| json!(v)));
        }
        Suite::Bsc => {
            let ts: Vec<f64> = (1..=6).map(|i| i as f64 * 0.1).collect();
            let mut count = 0;
            for delta in [0.1, 0.3] {
                let k = DmcKernel::bsc(delta)?;
                let brute = fi_bruteforce_dmc_many(&k, &ts, 2, 60, DEFAULT_BUDGET)?;
                let params = EnvelopeParams { seed: cfg.seed, restarts: 4, lambdas: 24, ..EnvelopeParams::default() };
                let env = fi_dmc_envelope(&k, &ts, &params)?;
                for (i, t) in ts.iter().enumerate() {
                    let f = fi_bsc(*t, delta)?;
                    count += 2;
                    for (name, v) in [("brute", brute[i]), ("envelope", env.f[i])] {
                        if v > f + 1e-9 {
                            violations.push(json!({"delta": delta, "t": t, "source": name, "value": v, "closed_form": f}));
                        }
                    }
                }
            }
            checked = count;
        }
        Suite::Deconv => {
            let n = a.n.unwrap_or(12);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for i in 0..n {
                let noise = if i % 2 == 0 { NoiseModel::standard_gaussian() } else { NoiseModel::uniform(0.0, 1.0)? };
                let p: Distribution = mixture_grid(&mut rng, 0.0)?.into();
                let shift = rng.random_range(0.0..0.2);
                let q = mixture_grid(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ (i as u64 + 1)), shift)?;
                let r = deconv_report(&noise, &p, &q)?;
                let d = r["d_ks"].as_f64().unwrap();
                for key in ["esseen", "transfer", "solved"] {
                    if r[key].as_f64().unwrap() < d {
                        violations.push(json!({"case": i, "bound": key, "report": r}));
                    }
                }
            }
            checked = n;
        }
    }
    let count = violations.len();
    Ok(Artifact::Report {
        body: json!({
            "suite": format!("{:?}", a.suite).to_lowercase(),
            "seed": cfg.seed,
            "checked": checked,
            "violation_count": count,
            "violations": violations,
        }),
        violations: count,
    })
}

fn dispatch(cfg: &RunConfig) -> Result<Artifact> {
    match &cfg.command {
        Command::FiCurve(a) => fi_curve(cfg, a),
        Command::Bounds(b) => bounds(cfg, b),
        Command::Contraction(a) => contraction(cfg, a),
        Command::Deconv(a) => deconv(a),
        Command::Check(CheckCommand::Strict(a)) => check_strict(a),
        Command::Verify(a) => verify(cfg, a),
    }
}

fn error_record(e: &Error) -> String {
    json!({"error": e.kind(), "message": e.to_string()}).to_string()
}

fn emit(cfg: &RunConfig, art: Artifact, stdout: &mut dyn Write) -> Result<i32> {
    let mut buf: Vec<u8> = Vec::new();
    let status = match art {
        Artifact::Table { meta, header, rows } => {
            write_table(&mut buf, Some(&meta.meta_line()), &header, &rows)?;
            0
        }
        Artifact::Json(v) => {
            writeln!(buf, "{}", serde_json::to_string_pretty(&v).unwrap())?;
            0
        }
        Artifact::Report { body, violations } => {
            writeln!(buf, "{}", serde_json::to_string_pretty(&body).unwrap())?;
            i32::from(violations > 0)
        }
    };
    match &cfg.out {
        Some(p) => std::fs::write(p, &buf)?,
        None => stdout.write_all(&buf)?,
    }
    Ok(status)
}

/// Runs the CLI on `args` (program name first) and returns the exit status:
/// 0 on success, 1 on numeric failure or verification violations, 2 on
/// usage errors.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let merged = match config_path(&args) {
        Some(p) => match read_config(&p) {
            Ok(file) => merge_config(&args, &file),
            Err(e) => {
                let _ = writeln!(stderr, "{}", error_record(&e));
                return 2;
            }
        },
        None => args,
    };
    let cfg = match RunConfig::try_parse_from(&merged) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match dispatch(&cfg).and_then(|a| emit(&cfg, a, stdout)) {
        Ok(code) => code,
        Err(e) => {
            let code = if matches!(e, Error::Parse(_)) { 2 } else { 1 };
            let _ = writeln!(stderr, "{}", error_record(&e));
            code
        }
    }
}
