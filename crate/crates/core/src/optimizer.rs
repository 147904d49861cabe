//! Block-coordinate gradient ascent over `(W, Σ_G²)` on the virtual channel
//! `Σ_H`, with backtracking line searches on each block.
//!
//! The state is `W = V_G diag(σ_H² Σ) V_Gᴴ` with `tr Σ = N_t`; the precoder
//! recovered for the original channel is `G = V_H diag(√Σ) V_Gᴴ`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{svd_factor, ChannelMatrix, NoiseModel};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::gradients::gradients_at;
use crate::linalg::{c64, hermitian_eigen, hermitian_part, random_unitary, reconstruct, unitarity_residual, CMat};
use crate::mi::{mi_gh, EffectiveChannel, MiEstimate};
use crate::quadrature::QuadratureRule;

/// Singular values below this fraction of the largest are treated as dead modes.
const DEAD_MODE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// `G = I` on the original channel (`V_G = V_H`, `Σ = I`).
    NoPrecoding,
    /// `V_G = I` with equal power over live modes.
    Diagonal,
    /// Haar-random `V_G` from the optimizer seed, equal power over live modes.
    Random,
}

/// Search direction of the `Σ` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaDirection {
    /// `∇_{Σ_G²} I` as is; the trace is restored by renormalization.
    Raw,
    /// `∇_{Σ_G²} I` minus its mean over live modes, which keeps the trace fixed.
    Projected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub n1: usize,
    pub n2: usize,
    /// First trial step of the `W` and `Σ` searches.
    pub t1_init: f64,
    pub t2_init: f64,
    pub sigma_direction: SigmaDirection,
    pub max_iters: usize,
    pub tol: f64,
    /// Starting points tried when no explicit initial state is given; the
    /// run with the highest final MI is kept (earlier entries win ties).
    pub starts: Vec<InitStrategy>,
    pub seed: u64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            alpha1: 0.1,
            alpha2: 0.1,
            beta1: 0.5,
            beta2: 0.5,
            n1: 20,
            n2: 20,
            t1_init: 1.0,
            t2_init: 1.0,
            sigma_direction: SigmaDirection::Projected,
            max_iters: 20,
            tol: 1e-4,
            starts: vec![InitStrategy::NoPrecoding, InitStrategy::Random],
            seed: 1,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let in_alpha = |a: f64| a > 0.0 && a <= 0.5;
        let in_beta = |b: f64| b > 0.0 && b < 1.0;
        if !in_alpha(self.alpha1) || !in_alpha(self.alpha2) {
            return Err(Error::InvalidParameter("alpha must lie in (0, 0.5]".into()));
        }
        if !in_beta(self.beta1) || !in_beta(self.beta2) {
            return Err(Error::InvalidParameter("beta must lie in (0, 1)".into()));
        }
        if !(self.t1_init > 0.0 && self.t2_init > 0.0 && self.t1_init.is_finite() && self.t2_init.is_finite()) {
            return Err(Error::InvalidParameter("initial steps must be positive".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter("tol must be nonnegative".into()));
        }
        if self.starts.is_empty() {
            return Err(Error::InvalidParameter("at least one start is required".into()));
        }
        Ok(())
    }
}

/// Square virtual channel `diag(σ_H)` plus the `V_H` needed to express the
/// no-precoding point and to map the result back.
#[derive(Debug, Clone)]
pub struct VirtualChannel {
    pub sigma_h: Vec<f64>,
    pub v_h: CMat,
}

impl VirtualChannel {
    pub fn from_channel(h: &ChannelMatrix) -> Result<Self> {
        let f = svd_factor(h)?;
        Ok(Self {
            sigma_h: f.sigma_h_padded(h.n_t()),
            v_h: f.v_h,
        })
    }

    /// Already-diagonal channel `diag(σ)`.
    pub fn diagonal(sigma_h: Vec<f64>) -> Self {
        let n = sigma_h.len();
        Self {
            sigma_h,
            v_h: CMat::identity(n, n),
        }
    }

    pub fn size(&self) -> usize {
        self.sigma_h.len()
    }

    fn live(&self) -> Vec<bool> {
        let max = self.sigma_h.iter().copied().fold(0.0, f64::max);
        self.sigma_h.iter().map(|&s| max > 0.0 && s > DEAD_MODE * max).collect()
    }

    /// `G = V_H diag(√Σ) V_Gᴴ`.
    pub fn precoder(&self, state: &PrecoderState) -> CMat {
        let roots: Vec<f64> = state.sigma_g2.iter().map(|s| s.max(0.0).sqrt()).collect();
        let mut scaled = self.v_h.clone();
        for (j, r) in roots.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*r);
        }
        scaled * state.v_g.adjoint()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderState {
    pub v_g: CMat,
    pub sigma_g2: Vec<f64>,
    pub w: CMat,
    pub mi_bits: f64,
}

impl PrecoderState {
    /// State with `W` rebuilt from the factors; `mi_bits` is left at NaN until evaluated.
    pub fn new(v_g: CMat, sigma_g2: Vec<f64>, sigma_h: &[f64]) -> Result<Self> {
        let n = sigma_h.len();
        if v_g.shape() != (n, n) || sigma_g2.len() != n {
            return Err(Error::DimensionMismatch("state does not match the virtual channel".into()));
        }
        let lambda: Vec<f64> = sigma_h.iter().zip(&sigma_g2).map(|(h, s)| h * h * s).collect();
        let w = hermitian_part(&reconstruct(&v_g, &lambda));
        Ok(Self {
            v_g,
            sigma_g2,
            w,
            mi_bits: f64::NAN,
        })
    }

    pub fn no_precoding(ch: &VirtualChannel) -> Result<Self> {
        Self::new(ch.v_h.clone(), vec![1.0; ch.size()], &ch.sigma_h)
    }

    pub fn from_strategy(ch: &VirtualChannel, strategy: InitStrategy, seed: u64) -> Result<Self> {
        let n = ch.size();
        let equal = || {
            let live = ch.live();
            let count = live.iter().filter(|&&l| l).count();
            if count == 0 {
                vec![1.0; n]
            } else {
                live.iter().map(|&l| if l { n as f64 / count as f64 } else { 0.0 }).collect()
            }
        };
        match strategy {
            InitStrategy::NoPrecoding => Self::no_precoding(ch),
            InitStrategy::Diagonal => Self::new(CMat::identity(n, n), equal(), &ch.sigma_h),
            InitStrategy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Self::new(random_unitary(n, &mut rng), equal(), &ch.sigma_h)
            }
        }
    }

    /// `M = W^{1/2} = V_G diag(σ_H √Σ) V_Gᴴ`.
    pub fn sqrt_w(&self, sigma_h: &[f64]) -> CMat {
        let roots: Vec<f64> = sigma_h
            .iter()
            .zip(&self.sigma_g2)
            .map(|(h, s)| h * s.max(0.0).sqrt())
            .collect();
        hermitian_part(&reconstruct(&self.v_g, &roots))
    }

    pub fn trace(&self) -> f64 {
        self.sigma_g2.iter().sum()
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.v_g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub mi_bits: f64,
    pub t1: f64,
    pub t2: f64,
    pub accepted_w: bool,
    pub accepted_sigma: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Improvement over one iteration fell below `tol`.
    Converged,
    MaxIterations,
    /// Both line searches exhausted their attempts without an accepted step.
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct PrecoderResult {
    pub g: CMat,
    pub state: PrecoderState,
    /// Row 0 is the starting point; row `i` is the state after iteration `i`.
    pub trajectory: Vec<TrajectoryRecord>,
    pub converged: bool,
    pub stop: StopReason,
    pub iterations: usize,
    pub start: Option<InitStrategy>,
}

impl PrecoderResult {
    pub fn mi_bits(&self) -> f64 {
        self.state.mi_bits
    }

    pub fn trajectory_csv(&self) -> String {
        trajectory_csv(&self.trajectory)
    }

    pub fn write_trajectory(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.trajectory_csv().as_bytes())?;
        Ok(())
    }
}

pub fn trajectory_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = String::from("iter,mi_bits,t1,t2,accepted_w,accepted_sigma\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iter, r.mi_bits, r.t1, r.t2, r.accepted_w, r.accepted_sigma
        );
    }
    out
}

/// Backtracking search over `t ∈ {1, β, β², …}` for the first step with
/// `f(x0 + t·grad) > f(x0) + α t ‖grad‖²`. Returns `(0, false)` when the
/// gradient vanishes or no trial passes.
pub fn armijo_search(
    objective: impl FnMut(&CMat) -> Result<f64>,
    x0: &CMat,
    grad: &CMat,
    alpha: f64,
    beta: f64,
    max_attempts: usize,
) -> Result<(f64, bool)> {
    let mut objective = objective;
    let g2 = grad.norm_squared();
    if g2 == 0.0 || max_attempts == 0 {
        return Ok((0.0, false));
    }
    let f0 = objective(x0)?;
    let mut t = 1.0;
    for _ in 0..max_attempts {
        let trial = x0 + grad * c64(t, 0.0);
        if objective(&trial)? > f0 + alpha * t * g2 {
            return Ok((t, true));
        }
        t *= beta;
    }
    Ok((0.0, false))
}

struct Evaluator<'a> {
    ch: &'a VirtualChannel,
    c: &'a Constellation,
    noise: &'a NoiseModel,
    rule: &'a QuadratureRule,
}

impl Evaluator<'_> {
    fn mi_of_m(&self, m: CMat) -> Result<f64> {
        Ok(mi_gh(&EffectiveChannel::from_matrix(m)?, self.c, self.noise, self.rule)?.bits)
    }

    fn mi_of_state(&self, s: &PrecoderState) -> Result<f64> {
        self.mi_of_m(s.sqrt_w(&self.ch.sigma_h))
    }

    fn mi_of_w(&self, w: &CMat) -> Result<f64> {
        self.mi_of_m(crate::linalg::sqrtm_psd(w)?)
    }

    fn mi_of_sigma(&self, v_g: &CMat, sigma: &[f64]) -> Result<f64> {
        let clipped: Vec<f64> = sigma.iter().map(|s| s.max(0.0)).collect();
        self.mi_of_state(&PrecoderState::new(v_g.clone(), clipped, &self.ch.sigma_h)?)
    }

    /// Eigenvectors of `w_new`, with the `r`-th largest assigned to the mode
    /// holding the `r`-th largest `σ_H² Σ` of the current state.
    fn rotation_from(&self, w_new: &CMat, state: &PrecoderState) -> Result<CMat> {
        let (_, q) = hermitian_eigen(w_new)?;
        let n = self.ch.size();
        let lambda: Vec<f64> = (0..n)
            .map(|i| self.ch.sigma_h[i] * self.ch.sigma_h[i] * state.sigma_g2[i])
            .collect();
        let mut rank: Vec<usize> = (0..n).collect();
        rank.sort_by(|&a, &b| {
            lambda[b]
                .total_cmp(&lambda[a])
                .then(self.ch.sigma_h[b].total_cmp(&self.ch.sigma_h[a]))
                .then(a.cmp(&b))
        });
        let mut v = CMat::zeros(n, n);
        for (r, &mode) in rank.iter().enumerate() {
            v.set_column(mode, &q.column(r));
        }
        Ok(v)
    }

    fn project(&self, grad: &[f64]) -> Vec<f64> {
        let live = self.ch.live();
        let count = live.iter().filter(|&&l| l).count();
        if count == 0 {
            return vec![0.0; grad.len()];
        }
        let mean = grad.iter().zip(&live).filter(|(_, &l)| l).map(|(g, _)| g).sum::<f64>() / count as f64;
        grad.iter().zip(&live).map(|(g, &l)| if l { g - mean } else { 0.0 }).collect()
    }

    fn renormalize(&self, sigma: &[f64]) -> Vec<f64> {
        let live = self.ch.live();
        let n = sigma.len() as f64;
        let clipped: Vec<f64> = sigma
            .iter()
            .zip(&live)
            .map(|(&s, &l)| if l || live.iter().all(|x| !x) { s.max(0.0) } else { 0.0 })
            .collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            return vec![1.0; sigma.len()];
        }
        clipped.iter().map(|s| s * n / total).collect()
    }
}

/// Algorithm on the virtual channel from one explicit start.
pub fn optimize_virtual(
    ch: &VirtualChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    params: &OptimizerParams,
    init: PrecoderState,
) -> Result<PrecoderResult> {
    params.validate()?;
    let ev = Evaluator { ch, c, noise, rule };
    let mut state = init;
    state.mi_bits = ev.mi_of_state(&state)?;
    let mut trajectory = vec![TrajectoryRecord {
        iter: 0,
        mi_bits: state.mi_bits,
        t1: 0.0,
        t2: 0.0,
        accepted_w: false,
        accepted_sigma: false,
    }];
    let mut stop = StopReason::MaxIterations;
    for iter in 1..=params.max_iters {
        let before = state.mi_bits;
        let mut record = TrajectoryRecord {
            iter,
            mi_bits: before,
            t1: 0.0,
            t2: 0.0,
            accepted_w: false,
            accepted_sigma: false,
        };

        // W block: ascend along ∇_W I, keep only the eigenvectors of the trial point.
        let (_, grads) = gradients_at(&state.v_g, &ch.sigma_h, &state.sigma_g2, c, noise, rule)?;
        let t_w = &grads.grad_w;
        let g2 = t_w.norm_squared();
        if g2 > 0.0 {
            let mut t = params.t1_init;
            for _ in 0..params.n1 {
                let w_new = hermitian_part(&(&state.w + t_w * c64(t, 0.0)));
                if ev.mi_of_w(&w_new)? > state.mi_bits + params.alpha1 * t * g2 {
                    let v_g = ev.rotation_from(&w_new, &state)?;
                    let mut candidate = PrecoderState::new(v_g, state.sigma_g2.clone(), &ch.sigma_h)?;
                    candidate.mi_bits = ev.mi_of_state(&candidate)?;
                    if candidate.mi_bits >= state.mi_bits {
                        state = candidate;
                        record.t1 = t;
                        record.accepted_w = true;
                        break;
                    }
                }
                t *= params.beta1;
            }
        }

        // Σ block: ascend along ∇_{Σ_G²} I at the rebuilt W, then clip and renormalize.
        let (_, grads) = gradients_at(&state.v_g, &ch.sigma_h, &state.sigma_g2, c, noise, rule)?;
        let s = match params.sigma_direction {
            SigmaDirection::Raw => grads.grad_sigma_g2.clone(),
            SigmaDirection::Projected => ev.project(&grads.grad_sigma_g2),
        };
        let s = &s;
        let s2: f64 = s.iter().map(|x| x * x).sum();
        if s2 > 0.0 {
            let mut t = params.t2_init;
            for _ in 0..params.n2 {
                let trial: Vec<f64> = state.sigma_g2.iter().zip(s).map(|(a, b)| a + t * b).collect();
                if ev.mi_of_sigma(&state.v_g, &trial)? > state.mi_bits + params.alpha2 * t * s2 {
                    let mut candidate = PrecoderState::new(state.v_g.clone(), ev.renormalize(&trial), &ch.sigma_h)?;
                    candidate.mi_bits = ev.mi_of_state(&candidate)?;
                    if candidate.mi_bits >= state.mi_bits {
                        state = candidate;
                        record.t2 = t;
                        record.accepted_sigma = true;
                        break;
                    }
                }
                t *= params.beta2;
            }
        }

        record.mi_bits = state.mi_bits;
        trajectory.push(record);
        if !record.accepted_w && !record.accepted_sigma {
            stop = StopReason::LineSearchStalled;
            break;
        }
        if state.mi_bits - before < params.tol {
            stop = StopReason::Converged;
            break;
        }
    }
    let iterations = trajectory.len() - 1;
    Ok(PrecoderResult {
        g: ch.precoder(&state),
        state,
        trajectory,
        converged: stop == StopReason::Converged,
        stop,
        iterations,
        start: None,
    })
}

/// Multi-start driver on the virtual channel. With `init = Some(s)` only `s` is used.
pub fn optimize_virtual_best(
    ch: &VirtualChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    params: &OptimizerParams,
    init: Option<PrecoderState>,
) -> Result<PrecoderResult> {
    params.validate()?;
    if let Some(state) = init {
        return optimize_virtual(ch, c, noise, rule, params, state);
    }
    let mut best: Option<PrecoderResult> = None;
    for &strategy in &params.starts {
        let start = PrecoderState::from_strategy(ch, strategy, params.seed)?;
        let mut result = optimize_virtual(ch, c, noise, rule, params, start)?;
        result.start = Some(strategy);
        if best.as_ref().is_none_or(|b| result.mi_bits() > b.mi_bits()) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Optimal precoder for `H` under the total power constraint `tr(GGᴴ) = N_t`.
pub fn optimize(
    h: &ChannelMatrix,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    params: &OptimizerParams,
    init: Option<PrecoderState>,
) -> Result<PrecoderResult> {
    let ch = VirtualChannel::from_channel(h)?;
    optimize_virtual_best(&ch, c, noise, rule, params, init)
}

/// MI with `G = I`.
pub fn no_precoding_baseline(h: &ChannelMatrix, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule) -> Result<MiEstimate> {
    mi_gh(&EffectiveChannel::from_matrix(h.matrix().clone())?, c, noise, rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{builtin, BuiltinChannel};

    fn setup() -> (Constellation, QuadratureRule) {
        (Constellation::qam(16).unwrap(), QuadratureRule::hermite(3).unwrap())
    }

    #[test]
    fn armijo_quadratic_oracle() {
        // f(x) = −½‖x − x*‖² from x* + d: gradient −d and f(x0 + t g) = −½(1 − t)²‖d‖².
        // t = 1 lands on x*: 0 > −½‖d‖² + α‖d‖² holds exactly when α < ½.
        let target = CMat::from_element(2, 1, c64(2.0, -1.0));
        let d = CMat::from_element(2, 1, c64(0.3, 0.1));
        let x0 = &target + &d;
        let grad = -&d;
        let f = |x: &CMat| Ok(-0.5 * (x - &target).norm_squared());
        assert_eq!(armijo_search(f, &x0, &grad, 0.1, 0.5, 10).unwrap(), (1.0, true));
        // α = ½ fails at t = 1; t = ½ gives −⅛‖d‖² > −¼‖d‖².
        assert_eq!(armijo_search(f, &x0, &grad, 0.5, 0.5, 10).unwrap(), (0.5, true));
        assert_eq!(armijo_search(f, &x0, &grad, 0.5, 0.5, 1).unwrap(), (0.0, false));
    }

    #[test]
    fn armijo_degenerate() {
        let x0 = CMat::identity(2, 2);
        let f = |x: &CMat| Ok(x.norm());
        assert_eq!(armijo_search(f, &x0, &CMat::zeros(2, 2), 0.1, 0.5, 10).unwrap(), (0.0, false));
        assert_eq!(armijo_search(f, &x0, &x0, 0.1, 0.5, 0).unwrap(), (0.0, false));
    }

    #[test]
    fn zero_iterations_return_init() {
        let (c, rule) = setup();
        let h = builtin(BuiltinChannel::H1);
        let noise = NoiseModel::from_snr_b_db(-4.0, 16).unwrap();
        let params = OptimizerParams {
            max_iters: 0,
            ..Default::default()
        };
        let ch = VirtualChannel::from_channel(&h).unwrap();
        let init = PrecoderState::no_precoding(&ch).unwrap();
        let r = optimize(&h, &c, &noise, &rule, &params, Some(init.clone())).unwrap();
        assert_eq!(r.state.v_g, init.v_g);
        assert_eq!(r.state.sigma_g2, init.sigma_g2);
        assert!(((&r.g * r.g.adjoint()).trace().re - 2.0).abs() < 1e-9);
        assert!((&r.g - CMat::identity(2, 2)).norm() < 1e-12);
        let base = no_precoding_baseline(&h, &c, &noise, &rule).unwrap().bits;
        assert!((r.mi_bits() - base).abs() < 1e-9);
    }

    #[test]
    fn params_validation() {
        let bad = OptimizerParams {
            alpha1: 0.7,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerParams {
            beta2: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(OptimizerParams::default().validate().is_ok());
    }

    #[test]
    fn baseline_of_zero_channel() {
        let (c, rule) = setup();
        let h = ChannelMatrix::new(CMat::zeros(2, 2)).unwrap();
        let noise = NoiseModel::from_snr_db(5.0).unwrap();
        assert!(no_precoding_baseline(&h, &c, &noise, &rule).unwrap().bits.abs() < 1e-9);
    }

    #[test]
    fn trajectory_csv_format() {
        let rec = TrajectoryRecord {
            iter: 1,
            mi_bits: 2.5,
            t1: 0.5,
            t2: 1.0,
            accepted_w: true,
            accepted_sigma: false,
        };
        assert_eq!(
            trajectory_csv(&[rec]),
            "iter,mi_bits,t1,t2,accepted_w,accepted_sigma\n1,2.5,0.5,1,true,false\n"
        );
    }
}
