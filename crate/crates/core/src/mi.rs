//! Mutual information `I(x; y)` of `y = E x + n` with a finite QAM input
//! alphabet, where `E` is either the product `HG` or the sufficient
//! statistic `M = W^{1/2}`.
//!
//! The Gauss-Hermite route evaluates
//!
//! ```text
//! I ≈ N_t log₂M − N_r/ln2 − (1/M^{N_t}) Σ_k (1/π)^{N_r} Σ_nodes Πc · g_k(σv)
//! g_k(n) = log₂ Σ_m exp(−‖n − E(x_k − x_m)‖² / σ²)
//! ```
//!
//! on the tensor grid over the `2N_r` real noise dimensions. The inner sum is
//! evaluated relative to the `m = k` term (exponent `−‖v‖²`), which is always
//! the reference of the log-sum-exp, so the accumulator starts at exactly 1.
//! Terms whose exponent lies more than [`PRUNE_EXPONENT`] below the reference
//! for every node are skipped: adding them to a partial sum `≥ 1` is a no-op
//! in double precision.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelEnsemble, NoiseModel};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, c64, complex_normal, is_hermitian, hermitian_eigen, CMat};
use crate::quadrature::QuadratureRule;

/// Terms below `exp(−PRUNE_EXPONENT)` relative to the reference term cannot
/// change a sum that is at least 1.
pub const PRUNE_EXPONENT: f64 = 40.0;
/// Default cap on `L^{2N_r} · M^{2N_t}` exponential evaluations per call.
pub const DEFAULT_TERM_BUDGET: f64 = 1e10;
pub const BUDGET_ENV: &str = "PRECODER_FORGE_BUDGET";

const K_CHUNK: usize = 8;
const MC_BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelOrigin {
    Product,
    SqrtW,
}

#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    matrix: CMat,
    origin: ChannelOrigin,
}

impl EffectiveChannel {
    pub fn product(h: &CMat, g: &CMat) -> Result<Self> {
        if h.ncols() != g.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "H is {}x{} but G is {}x{}",
                h.nrows(),
                h.ncols(),
                g.nrows(),
                g.ncols()
            )));
        }
        Self::from_matrix(h * g)
    }

    pub fn from_matrix(matrix: CMat) -> Result<Self> {
        if !all_finite(&matrix) {
            return Err(Error::NonFinite("effective channel"));
        }
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::DimensionMismatch("empty effective channel".into()));
        }
        Ok(Self {
            matrix,
            origin: ChannelOrigin::Product,
        })
    }

    /// `M = W^{1/2}`; must be Hermitian PSD within 1e−9.
    pub fn sqrt_w(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if !all_finite(&m) {
            return Err(Error::NonFinite("sufficient statistic"));
        }
        if !is_hermitian(&m, 1e-9) {
            return Err(Error::InvalidParameter("M is not Hermitian".into()));
        }
        let (values, _) = hermitian_eigen(&m)?;
        if values.iter().any(|&v| v < -1e-9) {
            return Err(Error::InvalidParameter("M is not positive semidefinite".into()));
        }
        Ok(Self {
            matrix: m,
            origin: ChannelOrigin::SqrtW,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn origin(&self) -> ChannelOrigin {
        self.origin
    }

    pub fn n_r(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.matrix.ncols()
    }

    /// The same channel observed through the unitary noise frame `Q`, i.e.
    /// quadrature nodes placed at `Q σ v` instead of `σ v`.
    pub fn in_frame(&self, frame: &CMat) -> Result<Self> {
        if frame.nrows() != self.n_r() || !frame.is_square() {
            return Err(Error::DimensionMismatch("noise frame must be N_r x N_r".into()));
        }
        Self::from_matrix(frame.adjoint() * &self.matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GaussHermite,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::GaussHermite => "gauss_hermite",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub bits: f64,
    pub method: Method,
    pub std_err: Option<f64>,
    /// Operation count under the analytical cost model (GH only).
    pub op_count: Option<u64>,
    /// Exponentials actually evaluated (GH only).
    pub exp_evaluations: Option<u64>,
}

/// Limit on `L^{2N_r} · M^{2N_t}`, the exponential count of one unpruned evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_terms: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_terms: DEFAULT_TERM_BUDGET,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Self {
            max_terms: f64::INFINITY,
        }
    }

    /// Default budget, overridden by `PRECODER_FORGE_BUDGET` when it parses.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| *v > 0.0)
            .map(|max_terms| Self { max_terms })
            .unwrap_or_default()
    }

    pub fn terms(order: usize, n_t: usize, n_r: usize, gh_order: usize) -> f64 {
        (gh_order as f64).powi(2 * n_r as i32) * (order as f64).powi(2 * n_t as i32)
    }

    pub fn check(&self, order: usize, n_t: usize, n_r: usize, gh_order: usize) -> Result<()> {
        let requested = Self::terms(order, n_t, n_r, gh_order);
        if requested > self.max_terms {
            return Err(Error::BudgetExceeded {
                requested,
                budget: self.max_terms,
            });
        }
        Ok(())
    }
}

/// `M^{N_t} (2L−1)^{2N_r} L⁴ N_r (2N_t + N_r − 1)`.
pub fn op_count_formula(order: usize, n_t: usize, n_r: usize, gh_order: usize) -> Result<u64> {
    let per_row = row_cost(n_t, n_r, gh_order)?;
    (order as u64)
        .checked_pow(n_t as u32)
        .and_then(|k| k.checked_mul(per_row))
        .ok_or(Error::Overflow("operation count"))
}

/// Cost-model charge for one `k` row: `(2L−1)^{2N_r} L⁴ N_r (2N_t + N_r − 1)`.
fn row_cost(n_t: usize, n_r: usize, gh_order: usize) -> Result<u64> {
    if n_t == 0 || n_r == 0 || gh_order == 0 {
        return Err(Error::InvalidParameter("operation count needs positive arguments".into()));
    }
    let l = gh_order as u64;
    (2 * l - 1)
        .checked_pow(2 * n_r as u32)
        .and_then(|v| v.checked_mul(l.checked_pow(4)?))
        .and_then(|v| v.checked_mul(n_r as u64))
        .and_then(|v| v.checked_mul((2 * n_t + n_r - 1) as u64))
        .ok_or(Error::Overflow("operation count"))
}

/// Quadrature nodes flattened for the kernels: per node the `2N_r` real
/// coordinates `[re₁, im₁, …]`, its weight product and `‖v‖²`.
pub(crate) struct NodeTable {
    pub dims: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub norms: Vec<f64>,
    pub max_norm: f64,
}

impl NodeTable {
    pub fn new(rule: &QuadratureRule, n_r: usize) -> Result<Self> {
        let grid = rule.tensor(2 * n_r)?;
        let mut coords = Vec::with_capacity(grid.len() as usize * 2 * n_r);
        let mut weights = Vec::with_capacity(grid.len() as usize);
        let mut norms = Vec::with_capacity(grid.len() as usize);
        for p in grid.iter() {
            norms.push(p.nodes.iter().map(|x| x * x).sum());
            coords.extend_from_slice(&p.nodes);
            weights.push(p.weight);
        }
        let max_norm = norms.iter().copied().fold(0.0, f64::max).sqrt();
        Ok(Self {
            dims: 2 * n_r,
            coords,
            weights,
            norms,
            max_norm,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }
}

/// Noise-scaled received points `B x_k` with `B = E/σ`, flattened as `2N_r` reals per `k`.
pub(crate) struct ScaledPoints {
    pub n_r: usize,
    pub n_t: usize,
    pub count: usize,
    pub values: Vec<f64>,
    pub symbols: Vec<Complex64>,
}

impl ScaledPoints {
    pub fn new(eff: &CMat, c: &Constellation, sigma: f64) -> Result<Self> {
        let (n_r, n_t) = eff.shape();
        let symbols = c.all_vectors(n_t)?;
        let count = symbols.len() / n_t;
        let b = eff / c64(sigma, 0.0);
        let mut values = Vec::with_capacity(count * 2 * n_r);
        for k in 0..count {
            let x = &symbols[k * n_t..(k + 1) * n_t];
            for r in 0..n_r {
                let y: Complex64 = (0..n_t).map(|t| b[(r, t)] * x[t]).sum();
                values.push(y.re);
                values.push(y.im);
            }
        }
        Ok(Self {
            n_r,
            n_t,
            count,
            values,
            symbols,
        })
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * 2 * self.n_r..(k + 1) * 2 * self.n_r]
    }

    pub fn symbol(&self, k: usize) -> &[Complex64] {
        &self.symbols[k * self.n_t..(k + 1) * self.n_t]
    }
}

/// Differences `d_m = B(x_k − x_m)` for the `m ≠ k` that survive pruning.
pub(crate) struct NeighborRow {
    pub dims: usize,
    pub diffs: Vec<f64>,
    pub norms: Vec<f64>,
    pub indices: Vec<usize>,
}

impl NeighborRow {
    pub fn build(points: &ScaledPoints, k: usize, radius2: f64) -> Self {
        let dims = 2 * points.n_r;
        let yk = points.point(k);
        let mut row = Self {
            dims,
            diffs: Vec::new(),
            norms: Vec::new(),
            indices: Vec::new(),
        };
        for m in 0..points.count {
            if m == k {
                continue;
            }
            let ym = points.point(m);
            let start = row.diffs.len();
            let mut norm = 0.0;
            for j in 0..dims {
                let d = yk[j] - ym[j];
                row.diffs.push(d);
                norm += d * d;
            }
            if norm < radius2 {
                row.norms.push(norm);
                row.indices.push(m);
            } else {
                row.diffs.truncate(start);
            }
        }
        row
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    /// `‖v‖² − ‖v − d_m‖² = 2 v·d_m − ‖d_m‖²`.
    #[inline]
    pub fn exponent(&self, i: usize, v: &[f64]) -> f64 {
        let d = &self.diffs[i * self.dims..(i + 1) * self.dims];
        let dot: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
        2.0 * dot - self.norms[i]
    }

    /// `S = 1 + Σ_{m≠k} exp(2 v·d_m − ‖d_m‖²)`, the inner sum relative to the `m = k` term.
    #[inline]
    pub fn relative_sum(&self, v: &[f64]) -> f64 {
        let mut s = 1.0;
        for i in 0..self.len() {
            s += self.exponent(i, v).exp();
        }
        s
    }
}

/// Squared pruning radius for scaled differences: beyond it every node sees
/// an exponent below `−PRUNE_EXPONENT`.
pub(crate) fn prune_radius2(max_node_norm: f64, prune: bool) -> f64 {
    if !prune {
        return f64::INFINITY;
    }
    let r = max_node_norm + (max_node_norm * max_node_norm + PRUNE_EXPONENT).sqrt();
    r * r
}

/// `g_k(σv) = log₂ S − ‖v‖²/ln2`.
#[inline]
pub(crate) fn g_value(row: &NeighborRow, v: &[f64], v_norm2: f64) -> f64 {
    row.relative_sum(v).log2() - v_norm2 / LN_2
}

pub(crate) fn check_inputs(eff: &EffectiveChannel, rule: &QuadratureRule, c: &Constellation, budget: &Budget) -> Result<()> {
    budget.check(c.order(), eff.n_t(), eff.n_r(), rule.order())?;
    c.vector_count(eff.n_t())?;
    Ok(())
}

fn assemble(total_g: f64, n_t: usize, n_r: usize, c: &Constellation, count: usize) -> Result<f64> {
    let bits = n_t as f64 * c.bits_per_symbol() - n_r as f64 / LN_2 - total_g / count as f64;
    if !bits.is_finite() {
        return Err(Error::NonFinite("mutual information"));
    }
    Ok(bits)
}

#[derive(Default, Clone, Copy)]
struct Partial {
    g_sum: f64,
    exps: u64,
    ops: u64,
}

/// Reference nested-loop evaluation valid for any `N_r`.
pub fn mi_gh_general(eff: &EffectiveChannel, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule) -> Result<MiEstimate> {
    mi_gh_general_with(eff, c, noise, rule, &Budget::from_env(), true)
}

pub(crate) fn mi_gh_general_with(
    eff: &EffectiveChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    budget: &Budget,
    prune: bool,
) -> Result<MiEstimate> {
    check_inputs(eff, rule, c, budget)?;
    let (n_r, n_t) = (eff.n_r(), eff.n_t());
    let nodes = NodeTable::new(rule, n_r)?;
    let points = ScaledPoints::new(eff.matrix(), c, noise.sigma2().sqrt())?;
    let radius2 = prune_radius2(nodes.max_norm, prune);
    let per_row = row_cost(n_t, n_r, rule.order())?;
    let norm = PI.powi(-(n_r as i32));
    let chunks: Vec<Partial> = (0..points.count.div_ceil(K_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut part = Partial::default();
            for k in chunk * K_CHUNK..((chunk + 1) * K_CHUNK).min(points.count) {
                let row = NeighborRow::build(&points, k, radius2);
                let mut f_k = 0.0;
                for i in 0..nodes.len() {
                    f_k += nodes.weights[i] * g_value(&row, nodes.node(i), nodes.norms[i]);
                }
                part.g_sum += norm * f_k;
                part.exps += (row.len() * nodes.len()) as u64;
                part.ops += per_row;
            }
            part
        })
        .collect();
    finish(chunks, n_t, n_r, c, points.count)
}

fn finish(chunks: Vec<Partial>, n_t: usize, n_r: usize, c: &Constellation, count: usize) -> Result<MiEstimate> {
    let mut total = Partial::default();
    for p in chunks {
        total.g_sum += p.g_sum;
        total.exps += p.exps;
        total.ops += p.ops;
    }
    Ok(MiEstimate {
        bits: assemble(total.g_sum, n_t, n_r, c, count)?,
        method: Method::GaussHermite,
        std_err: None,
        op_count: Some(total.ops),
        exp_evaluations: Some(total.exps),
    })
}

/// `N_r = 2` evaluation through the bilinear forms `ĝ_k = π⁻² cᵗ F_k c`,
/// `F_k[a, b] = cᵗ V_k^{(a,b)} c`, with `V_k^{(a,b)}[c, d] = g_k` at node
/// `(a, b, c, d)`. `F = Σ_k F_k` is contracted once at the end.
pub fn mi_gh_bilinear(eff: &EffectiveChannel, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule) -> Result<MiEstimate> {
    mi_gh_bilinear_with(eff, c, noise, rule, &Budget::from_env(), true)
}

pub(crate) fn mi_gh_bilinear_with(
    eff: &EffectiveChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    budget: &Budget,
    prune: bool,
) -> Result<MiEstimate> {
    if eff.n_r() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "bilinear evaluation needs N_r = 2, got {}",
            eff.n_r()
        )));
    }
    check_inputs(eff, rule, c, budget)?;
    let n_t = eff.n_t();
    let l = rule.order();
    let w = rule.weights();
    let x = rule.nodes();
    let points = ScaledPoints::new(eff.matrix(), c, noise.sigma2().sqrt())?;
    let max_norm = 2.0 * x.iter().map(|v| v * v).fold(0.0, f64::max);
    let radius2 = prune_radius2(max_norm.sqrt(), prune);
    let per_row = row_cost(n_t, 2, l)?;

    struct BiPartial {
        f: Vec<f64>,
        exps: u64,
        ops: u64,
    }
    let chunks: Vec<BiPartial> = (0..points.count.div_ceil(K_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut part = BiPartial {
                f: vec![0.0; l * l],
                exps: 0,
                ops: 0,
            };
            let mut v_k = vec![0.0; l * l];
            for k in chunk * K_CHUNK..((chunk + 1) * K_CHUNK).min(points.count) {
                let row = NeighborRow::build(&points, k, radius2);
                for a in 0..l {
                    for b in 0..l {
                        for cc in 0..l {
                            for d in 0..l {
                                let v = [x[a], x[b], x[cc], x[d]];
                                let norm2 = v.iter().map(|t| t * t).sum();
                                v_k[cc * l + d] = g_value(&row, &v, norm2);
                            }
                        }
                        let mut form = 0.0;
                        for cc in 0..l {
                            let mut inner = 0.0;
                            for d in 0..l {
                                inner += v_k[cc * l + d] * w[d];
                            }
                            form += w[cc] * inner;
                        }
                        part.f[a * l + b] += form;
                    }
                }
                part.exps += (row.len() * l.pow(4)) as u64;
                part.ops += per_row;
            }
            part
        })
        .collect();
    let mut f = vec![0.0; l * l];
    let (mut exps, mut ops) = (0u64, 0u64);
    for p in chunks {
        for (acc, v) in f.iter_mut().zip(&p.f) {
            *acc += v;
        }
        exps += p.exps;
        ops += p.ops;
    }
    let mut total = 0.0;
    for a in 0..l {
        let mut inner = 0.0;
        for b in 0..l {
            inner += f[a * l + b] * w[b];
        }
        total += w[a] * inner;
    }
    Ok(MiEstimate {
        bits: assemble(total / (PI * PI), n_t, 2, c, points.count)?,
        method: Method::GaussHermite,
        std_err: None,
        op_count: Some(ops),
        exp_evaluations: Some(exps),
    })
}

/// Gauss-Hermite mutual information; dispatches to the bilinear form when `N_r = 2`.
pub fn mi_gh(eff: &EffectiveChannel, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule) -> Result<MiEstimate> {
    mi_gh_with_budget(eff, c, noise, rule, &Budget::from_env())
}

pub fn mi_gh_with_budget(
    eff: &EffectiveChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    budget: &Budget,
) -> Result<MiEstimate> {
    if eff.n_r() == 2 {
        mi_gh_bilinear_with(eff, c, noise, rule, budget, true)
    } else {
        mi_gh_general_with(eff, c, noise, rule, budget, true)
    }
}

/// Monte-Carlo estimate: `N_t log₂M − mean log₂ Σ_m exp(−(‖n + E(x_k − x_m)‖² − ‖n‖²)/σ²)`
/// over uniformly drawn `k` and `n ~ CN(0, σ²I)`.
pub fn mi_mc(eff: &EffectiveChannel, c: &Constellation, noise: &NoiseModel, n_samples: usize, seed: u64) -> Result<MiEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter("Monte-Carlo needs at least two samples".into()));
    }
    let (n_r, n_t) = (eff.n_r(), eff.n_t());
    let sigma = noise.sigma2().sqrt();
    // work in noise-normalized units: n = σ u, u ~ CN(0, I)
    let points = ScaledPoints::new(eff.matrix(), c, sigma)?;
    let count = points.count;
    let blocks = n_samples.div_ceil(MC_BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = MC_BLOCK.min(n_samples - b * MC_BLOCK);
            let mut u = vec![0.0; 2 * n_r];
            let mut exps = vec![0.0; count];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let k = rng.random_range(0..count);
                for r in 0..n_r {
                    let z = complex_normal(&mut rng);
                    u[2 * r] = z.re;
                    u[2 * r + 1] = z.im;
                }
                let yk = points.point(k);
                let u2: f64 = u.iter().map(|t| t * t).sum();
                let mut max = f64::NEG_INFINITY;
                for (m, e) in exps.iter_mut().enumerate() {
                    let ym = points.point(m);
                    let mut d2 = 0.0;
                    for j in 0..2 * n_r {
                        let t = u[j] + yk[j] - ym[j];
                        d2 += t * t;
                    }
                    *e = u2 - d2;
                    max = max.max(*e);
                }
                let s: f64 = exps.iter().map(|e| (e - max).exp()).sum();
                let term = (max + s.ln()) / LN_2;
                s1 += term;
                s2 += term * term;
            }
            (s1, s2)
        })
        .collect();
    let (mut s1, mut s2) = (0.0, 0.0);
    for (a, b) in sums {
        s1 += a;
        s2 += b;
    }
    let n = n_samples as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MiEstimate {
        bits: n_t as f64 * c.bits_per_symbol() - mean,
        method: Method::MonteCarlo,
        std_err: Some((var / n).sqrt()),
        op_count: None,
        exp_evaluations: None,
    })
}

/// Sample-average of `mi_gh(H_i G)` over the ensemble draws, with the
/// standard error across draws.
pub fn ergodic_mi(
    ensemble: &ChannelEnsemble,
    g: &CMat,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
) -> Result<MiEstimate> {
    let budget = Budget::from_env();
    let values = ensemble
        .iter()
        .map(|h| {
            let h = h?;
            let eff = EffectiveChannel::product(h.matrix(), g)?;
            Ok(mi_gh_with_budget(&eff, c, noise, rule, &budget)?.bits)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_estimate(&values, Method::GaussHermite))
}

pub(crate) fn mean_estimate(values: &[f64], method: Method) -> MiEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_err = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    MiEstimate {
        bits: mean,
        method,
        std_err: Some(std_err),
        op_count: None,
        exp_evaluations: None,
    }
}
