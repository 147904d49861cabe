use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use precoder_core::channels::{random_gaussian, svd_factor, ChannelMatrix, NoiseModel};
use precoder_core::gradients::{fd_grad_m, fd_grad_w, grad_m, grad_w};
use precoder_core::linalg::{hermitian_part, random_unitary, reconstruct, sqrtm_psd, CMat};
use precoder_core::mi::{mi_gh, mi_mc, op_count_formula, EffectiveChannel, Method};
use precoder_core::optimizer::{optimize, PrecoderResult, TrajectoryRecord};
use precoder_core::pgp::{optimize_pgp, plan_groups, GroupPlan};
use precoder_core::{Constellation, QuadratureRule};

use crate::config::{PrecoderMode, SweepConfig};
use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "snr_b_db,snr_db,sigma2,mi_bits,method,precoder,iters,wall_ms,op_count";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub snr_b_db: f64,
    pub snr_db: f64,
    pub sigma2: f64,
    pub mi_bits: f64,
    pub method: Method,
    pub precoder: PrecoderMode,
    pub iters: usize,
    pub wall_ms: u128,
    pub op_count: u64,
}

impl Row {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.snr_b_db,
            self.snr_db,
            self.sigma2,
            self.mi_bits,
            self.method,
            self.precoder.as_str(),
            self.iters,
            self.wall_ms,
            self.op_count
        )
    }
}

/// Result of one grid point, with the first draw's optimizer trajectory and plan.
pub struct PointResult {
    pub row: Row,
    pub trajectory: Vec<TrajectoryRecord>,
    pub plan: Option<GroupPlan>,
}

struct DrawResult {
    mi_bits: f64,
    iters: usize,
    op_count: u64,
    trajectory: Vec<TrajectoryRecord>,
    plan: Option<GroupPlan>,
}

fn plan_for(cfg: &SweepConfig, h: &ChannelMatrix) -> CliResult<GroupPlan> {
    let plan = match &cfg.plan_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            GroupPlan::from_json(&text)?
        }
        None => plan_groups(&svd_factor(h)?.sigma_h_padded(h.n_t()), cfg.group_size, cfg.pairing)?,
    };
    plan.validate(h.n_t())?;
    Ok(plan)
}

fn optimized_mi(cfg: &SweepConfig, h: &ChannelMatrix, g: &CMat, bits: f64, c: &Constellation, noise: &NoiseModel) -> CliResult<f64> {
    if cfg.mc_samples == 0 {
        return Ok(bits);
    }
    Ok(mi_mc(&EffectiveChannel::product(h.matrix(), g)?, c, noise, cfg.mc_samples, cfg.seed)?.bits)
}

fn evaluate_draw(cfg: &SweepConfig, h: &ChannelMatrix, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule) -> CliResult<DrawResult> {
    let order = cfg.modulation;
    match cfg.precoder {
        PrecoderMode::None => {
            let eff = EffectiveChannel::from_matrix(h.matrix().clone())?;
            let est = if cfg.mc_samples > 0 {
                mi_mc(&eff, c, noise, cfg.mc_samples, cfg.seed)?
            } else {
                mi_gh(&eff, c, noise, rule)?
            };
            Ok(DrawResult {
                mi_bits: est.bits,
                iters: 0,
                op_count: est.op_count.unwrap_or(0),
                trajectory: Vec::new(),
                plan: None,
            })
        }
        PrecoderMode::Optimal => {
            let r: PrecoderResult = optimize(h, c, noise, rule, &cfg.optimizer, None)?;
            let n = h.n_t();
            Ok(DrawResult {
                mi_bits: optimized_mi(cfg, h, &r.g, r.mi_bits(), c, noise)?,
                iters: r.iterations,
                op_count: op_count_formula(order, n, n, cfg.gh_order)?,
                trajectory: r.trajectory,
                plan: None,
            })
        }
        PrecoderMode::Pgp => {
            let plan = plan_for(cfg, h)?;
            let r = optimize_pgp(h, c, noise, rule, &cfg.optimizer, &plan)?;
            let op_count = plan
                .groups
                .iter()
                .map(|g| op_count_formula(order, g.len(), g.len(), cfg.gh_order))
                .sum::<precoder_core::Result<u64>>()?;
            Ok(DrawResult {
                mi_bits: optimized_mi(cfg, h, &r.g_global, r.mi_total_bits, c, noise)?,
                iters: r.iterations(),
                op_count,
                trajectory: r.per_group.first().map(|g| g.trajectory.clone()).unwrap_or_default(),
                plan: Some(plan),
            })
        }
    }
}

pub fn evaluate_point(cfg: &SweepConfig, snr_b_db: f64) -> CliResult<PointResult> {
    let start = Instant::now();
    let c = Constellation::qam(cfg.modulation)?;
    let rule = QuadratureRule::hermite(cfg.gh_order)?;
    let noise = NoiseModel::from_snr_b_db(snr_b_db, cfg.modulation)?;
    let ensemble = cfg.ensemble()?;
    let mut draws = Vec::with_capacity(ensemble.draws);
    for h in ensemble.iter() {
        draws.push(evaluate_draw(cfg, &h?, &c, &noise, &rule)?);
    }
    let mi_bits = draws.iter().map(|d| d.mi_bits).sum::<f64>() / draws.len() as f64;
    let method = if cfg.mc_samples > 0 {
        Method::MonteCarlo
    } else {
        Method::GaussHermite
    };
    let first = draws.swap_remove(0);
    let iters = draws.iter().map(|d| d.iters).fold(first.iters, usize::max);
    Ok(PointResult {
        row: Row {
            snr_b_db,
            snr_db: noise.snr_db(),
            sigma2: noise.sigma2(),
            mi_bits,
            method,
            precoder: cfg.precoder,
            iters,
            wall_ms: if cfg.record_time { start.elapsed().as_millis() } else { 0 },
            op_count: first.op_count,
        },
        trajectory: first.trajectory,
        plan: first.plan,
    })
}

/// All grid points, evaluated in parallel and returned in grid order.
pub fn run_sweep(cfg: &SweepConfig) -> CliResult<Vec<PointResult>> {
    cfg.validate()?;
    cfg.ensemble()?;
    cfg.snr_b_db.par_iter().map(|&s| evaluate_point(cfg, s)).collect()
}

pub fn sweep_csv(points: &[PointResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.row.csv());
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(points: &[PointResult]) -> String {
    let mut out = String::from("snr_b_db,iter,mi_bits,t1,t2,accepted_w,accepted_sigma\n");
    for p in points {
        for t in &p.trajectory {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.row.snr_b_db, t.iter, t.mi_bits, t.t1, t.t2, t.accepted_w, t.accepted_sigma
            );
        }
    }
    out
}

/// Gnuplot script drawing `mi_bits` against `snr_b_db` from `csv`.
pub fn gnuplot_script(csv: &Path, cfg: &SweepConfig) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'SNR_b (dB)'\n\
         set ylabel 'I(x;y) (b/s/Hz)'\n\
         set grid\n\
         plot '{}' using 1:4 with linespoints title '{} M={} {}'\n",
        csv.display(),
        cfg.channel_file
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| cfg.channel.clone()),
        cfg.modulation,
        cfg.precoder.as_str()
    )
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "ok  " } else { "FAIL" }, self.name, self.detail)
    }
}

/// `∫ x^p e^{−x²} dx`.
fn hermite_moment(p: u32) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    let k = p / 2;
    (1..=k).map(|j| (2 * j - 1) as f64 / 2.0).product::<f64>() * std::f64::consts::PI.sqrt()
}

fn quadrature_check() -> Check {
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for order in 1..=10usize {
        let rule = match QuadratureRule::hermite(order) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(format!("L={order}: {e}"));
                break;
            }
        };
        for p in 0..2 * order as u32 {
            let got = rule.integrate(|x| x.powi(p as i32));
            let want = hermite_moment(p);
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    match failure {
        Some(f) => Check::new("quadrature exactness", false, f),
        None => Check::new(
            "quadrature exactness",
            worst <= 1e-10,
            format!("max relative moment error {worst:.2e} for L=1..10"),
        ),
    }
}

fn agreement_check(gh_order: usize, mc_samples: usize, seed: u64) -> CliResult<Check> {
    let h = precoder_core::channels::builtin(precoder_core::channels::BuiltinChannel::H1);
    let c = Constellation::qam(16)?;
    let rule = QuadratureRule::hermite(gh_order)?;
    let eff = EffectiveChannel::from_matrix(h.matrix().clone())?;
    let mut worst = (0.0, 0.0, 0.0);
    let mut passed = true;
    for snr_b in [-10.0, 0.0, 10.0, 20.0] {
        let noise = NoiseModel::from_snr_b_db(snr_b, 16)?;
        let gh = mi_gh(&eff, &c, &noise, &rule)?.bits;
        let mc = mi_mc(&eff, &c, &noise, mc_samples, seed)?;
        let tol = f64::max(0.05, 3.0 * mc.std_err.unwrap_or(0.0));
        let diff = (gh - mc.bits).abs();
        passed &= diff <= tol;
        if diff - tol > worst.1 - worst.2 || worst == (0.0, 0.0, 0.0) {
            worst = (snr_b, diff, tol);
        }
    }
    Ok(Check::new(
        format!("gauss-hermite vs monte-carlo (h1, M=16, L={gh_order})"),
        passed,
        format!("worst |diff| {:.4} (tol {:.4}) at SNR_b {} dB", worst.1, worst.2, worst.0),
    ))
}

fn gradient_check(seed: u64) -> CliResult<Check> {
    let c = Constellation::qam(16)?;
    let rule = QuadratureRule::hermite(3)?;
    let noise = NoiseModel::from_snr_db(0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let q = random_unitary(2, &mut rng);
        let d: Vec<f64> = (0..2).map(|_| rng.random_range(0.3..1.5)).collect();
        let w = hermitian_part(&reconstruct(&q, &d));
        let m = sqrtm_psd(&w)?;
        let s = grad_m(&EffectiveChannel::sqrt_w(m.clone())?, &c, &noise, &rule)?;
        let t = grad_w(&m, &s)?;
        let rel = |a: &CMat, b: &CMat| (a - b).norm() / b.norm().max(1e-12);
        worst = worst.max(rel(&s, &fd_grad_m(&m, &c, &noise, &rule, 1e-4)?));
        worst = worst.max(rel(&t, &fd_grad_w(&w, &c, &noise, &rule, 1e-4)?));
    }
    Ok(Check::new(
        "gradients vs finite differences",
        worst <= 1e-3,
        format!("max relative error {worst:.2e} over 3 instances"),
    ))
}

fn op_count_check(gh_order: usize) -> CliResult<Vec<Check>> {
    let base = op_count_formula(16, 2, 2, gh_order)?;
    let m32 = op_count_formula(32, 2, 2, gh_order)?;
    let nr3 = op_count_formula(16, 2, 3, gh_order)?;
    let l = (2 * gh_order - 1) as u128;
    // N_r 2 → 3 multiplies (2L−1)^{2N_r} by (2L−1)² and N_r(2N_t+N_r−1) from 10 to 18
    let nr_ok = nr3 as u128 * 10 == base as u128 * l * l * 18;
    Ok(vec![
        Check::new("op-count ratio M 16->32", m32 == 4 * base, format!("{} / {} = {}", m32, base, m32 as f64 / base as f64)),
        Check::new(
            "op-count ratio N_r 2->3",
            nr_ok,
            format!("{} / {} = {} (expected {})", nr3, base, nr3 as f64 / base as f64, (l * l * 18) as f64 / 10.0),
        ),
    ])
}

pub fn selftest(gh_order: usize, mc_samples: usize, seed: u64) -> CliResult<Vec<Check>> {
    if gh_order == 0 {
        return Err(CliError::Usage("quadrature order must be at least 1".into()));
    }
    if mc_samples < 2 {
        return Err(CliError::Usage("Monte-Carlo needs at least two samples".into()));
    }
    let mut checks = vec![quadrature_check(), agreement_check(gh_order, mc_samples, seed)?, gradient_check(seed)?];
    checks.extend(op_count_check(gh_order)?);
    Ok(checks)
}

#[derive(Debug, Clone)]
pub struct Timing {
    pub mi_secs: f64,
    pub grad_secs: f64,
    pub op_count: u64,
}

/// Mean wall time of one MI evaluation and one `∇_W I` evaluation on a seeded
/// random `n_r × n_t` channel at 10 dB.
pub fn timing(order: usize, n_t: usize, n_r: usize, gh_order: usize, reps: usize, seed: u64) -> CliResult<Timing> {
    if reps == 0 {
        return Err(CliError::Usage("reps must be at least 1".into()));
    }
    let c = Constellation::qam(order)?;
    let rule = QuadratureRule::hermite(gh_order)?;
    let noise = NoiseModel::from_snr_db(10.0)?;
    let h = random_gaussian(n_r, n_t, seed)?;
    let eff = EffectiveChannel::from_matrix(h.matrix().clone())?;
    let op_count = op_count_formula(order, n_t, n_r, gh_order)?;

    let start = Instant::now();
    for _ in 0..reps {
        mi_gh(&eff, &c, &noise, &rule)?;
    }
    let mi_secs = start.elapsed().as_secs_f64() / reps as f64;

    let m = sqrtm_psd(&hermitian_part(&(h.matrix().adjoint() * h.matrix())))?;
    let start = Instant::now();
    for _ in 0..reps {
        let s = grad_m(&EffectiveChannel::sqrt_w(m.clone())?, &c, &noise, &rule)?;
        grad_w(&m, &s)?;
    }
    let grad_secs = start.elapsed().as_secs_f64() / reps as f64;
    Ok(Timing {
        mi_secs,
        grad_secs,
        op_count,
    })
}
