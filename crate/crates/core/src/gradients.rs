//! Closed-form gradients of the Gauss-Hermite mutual information.
//!
//! With `E = M` square, `B = M/σ`, `d_m = x_k − x_m` and softmax weights
//! `p_m = e_m / Σ e`, the Wirtinger derivative is
//!
//! ```text
//! ∂I/∂M* = −1/(σ ln2) · (1/M^{N_t}) Σ_k (1/π)^{N_r} Σ_nodes Πc Σ_m p_m (v − B d_m) d_mᴴ
//! ```
//!
//! and for Hermitian `M` the gradient used throughout is `S = ∂I/∂M* + (∂I/∂M*)ᴴ`,
//! so that `dI = tr(S dM)` for every Hermitian `dM`. The `W = M²` gradient `T`
//! solves `TM + MT = S`, again with `dI = tr(T dW)`.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::NoiseModel;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, c64, complex_normal, hermitian_eigen, hermitian_part, kron, reconstruct, sqrtm_psd, unvec_cols, vec_cols, CMat};
use crate::mi::{check_inputs, prune_radius2, Budget, EffectiveChannel, MiEstimate, Method, NeighborRow, NodeTable, ScaledPoints};
use crate::quadrature::QuadratureRule;

/// Eigenvalue sums at or below this are treated as singular in the `W` gradient.
pub const EIGEN_FLOOR: f64 = 1e-8;
/// Largest size solved through the explicit Kronecker-sum system.
pub const KRONECKER_MAX_DIM: usize = 8;
/// Largest alphabet `M^{N_t}` enumerated by the MMSE oracle.
pub const MMSE_MAX_VECTORS: u64 = 1_000_000;

const K_CHUNK: usize = 8;
const MC_BLOCK: usize = 2048;

#[derive(Debug, Clone)]
pub struct Gradients {
    pub grad_m: CMat,
    pub grad_w: CMat,
    pub grad_sigma_g2: Vec<f64>,
    /// `σ² ln2 · grad_w`, the error covariance of the MMSE estimate of `x`.
    pub mmse_cov: CMat,
}

/// MI and `∂I/∂E*` from one quadrature pass.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub mi: MiEstimate,
    pub grad_conj: CMat,
}

struct Partial {
    g_sum: f64,
    p: CMat,
    q: CMat,
    exps: u64,
}

/// Shared pass: MI plus the Wirtinger derivative `∂I/∂E*` for any `N_r × N_t` channel.
pub fn evaluate_with_gradient(
    eff: &EffectiveChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
) -> Result<Evaluation> {
    evaluate_with_budget(eff, c, noise, rule, &Budget::from_env())
}

pub fn evaluate_with_budget(
    eff: &EffectiveChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    budget: &Budget,
) -> Result<Evaluation> {
    check_inputs(eff, rule, c, budget)?;
    let (n_r, n_t) = (eff.n_r(), eff.n_t());
    let sigma = noise.sigma2().sqrt();
    let nodes = NodeTable::new(rule, n_r)?;
    let points = ScaledPoints::new(eff.matrix(), c, sigma)?;
    let radius2 = prune_radius2(nodes.max_norm, true);
    let norm = PI.powi(-(n_r as i32));

    let chunks: Vec<Partial> = (0..points.count.div_ceil(K_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut part = Partial {
                g_sum: 0.0,
                p: CMat::zeros(n_r, n_t),
                q: CMat::zeros(n_t, n_t),
                exps: 0,
            };
            let mut exps = Vec::new();
            for k in chunk * K_CHUNK..((chunk + 1) * K_CHUNK).min(points.count) {
                let row = NeighborRow::build(&points, k, radius2);
                let len = row.len();
                exps.resize(len, 0.0);
                // per neighbor: Σ_node w p_m and Σ_node w p_m v (complex, N_r entries)
                let mut c_m = vec![0.0; len];
                let mut u_m = vec![Complex64::new(0.0, 0.0); len * n_r];
                let mut f_k = 0.0;
                for i in 0..nodes.len() {
                    let v = nodes.node(i);
                    let w = nodes.weights[i];
                    let mut s = 1.0;
                    for (j, e) in exps.iter_mut().enumerate() {
                        *e = row.exponent(j, v).exp();
                        s += *e;
                    }
                    f_k += w * (s.log2() - nodes.norms[i] / LN_2);
                    for j in 0..len {
                        let pw = w * exps[j] / s;
                        c_m[j] += pw;
                        for r in 0..n_r {
                            u_m[j * n_r + r] += c64(pw * v[2 * r], pw * v[2 * r + 1]);
                        }
                    }
                }
                part.g_sum += norm * f_k;
                part.exps += (len * nodes.len()) as u64;
                let xk = points.symbol(k);
                for (j, &m) in row.indices.iter().enumerate() {
                    let xm = points.symbol(m);
                    for t in 0..n_t {
                        let dt = (xk[t] - xm[t]).conj();
                        for r in 0..n_r {
                            part.p[(r, t)] += u_m[j * n_r + r] * dt;
                        }
                        for s in 0..n_t {
                            part.q[(s, t)] += (xk[s] - xm[s]) * dt * c_m[j];
                        }
                    }
                }
            }
            part
        })
        .collect();

    let mut g_sum = 0.0;
    let mut p = CMat::zeros(n_r, n_t);
    let mut q = CMat::zeros(n_t, n_t);
    let mut exps = 0;
    for part in chunks {
        g_sum += part.g_sum;
        p += part.p;
        q += part.q;
        exps += part.exps;
    }
    let count = points.count as f64;
    let bits = n_t as f64 * c.bits_per_symbol() - n_r as f64 / LN_2 - g_sum / count;
    let b = eff.matrix() / c64(sigma, 0.0);
    let scale = -norm / (sigma * LN_2 * count);
    let grad_conj = (p - b * q) * c64(scale, 0.0);
    if !bits.is_finite() || !all_finite(&grad_conj) {
        return Err(Error::NonFinite("gradient evaluation"));
    }
    let ops = crate::mi::op_count_formula(c.order(), n_t, n_r, rule.order()).ok();
    Ok(Evaluation {
        mi: MiEstimate {
            bits,
            method: Method::GaussHermite,
            std_err: None,
            op_count: ops,
            exp_evaluations: Some(exps),
        },
        grad_conj,
    })
}

/// Hermitian gradient `S` of the MI with respect to `M = W^{1/2}`.
pub fn grad_m(eff: &EffectiveChannel, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule) -> Result<CMat> {
    Ok(mi_and_grad_m(eff, c, noise, rule)?.1)
}

pub fn mi_and_grad_m(
    eff: &EffectiveChannel,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
) -> Result<(MiEstimate, CMat)> {
    if !eff.matrix().is_square() {
        return Err(Error::NotSquare {
            rows: eff.n_r(),
            cols: eff.n_t(),
        });
    }
    let eval = evaluate_with_gradient(eff, c, noise, rule)?;
    let s = &eval.grad_conj + eval.grad_conj.adjoint();
    Ok((eval.mi, hermitian_part(&s)))
}

fn check_pair(m: &CMat, s: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.shape() != s.shape() {
        return Err(Error::DimensionMismatch("M and its gradient differ in shape".into()));
    }
    Ok(())
}

/// `T` with `TM + MT = S`, through `vec T = (M* ⊗ I + I ⊗ M)⁻¹ vec S`.
pub fn grad_w_kronecker(m: &CMat, grad_m: &CMat) -> Result<CMat> {
    check_pair(m, grad_m)?;
    let n = m.nrows();
    let id = CMat::identity(n, n);
    let system = kron(&m.conjugate(), &id) + kron(&id, m);
    let (values, _) = hermitian_eigen(m)?;
    if values.iter().any(|&v| v <= EIGEN_FLOOR) {
        return Err(Error::SingularSystem(format!(
            "M has eigenvalue {:.3e} at or below the floor",
            values[n - 1]
        )));
    }
    let solution = system
        .lu()
        .solve(&vec_cols(grad_m))
        .ok_or_else(|| Error::SingularSystem("Kronecker sum is singular".into()))?;
    Ok(unvec_cols(&solution, n, n))
}

/// `T` with `TM + MT = S` in the eigenbasis of `M`: `T'_ij = S'_ij / (λ_i + λ_j)`.
/// Entries whose eigenvalue sum is at or below [`EIGEN_FLOOR`] are set to zero.
pub fn grad_w_eigen(m: &CMat, grad_m: &CMat) -> Result<CMat> {
    check_pair(m, grad_m)?;
    let n = m.nrows();
    let (values, q) = hermitian_eigen(m)?;
    if values.iter().all(|&v| 2.0 * v <= EIGEN_FLOOR) {
        return Err(Error::SingularSystem("all eigenvalues of M are below the floor".into()));
    }
    let mut t = q.adjoint() * grad_m * &q;
    for i in 0..n {
        for j in 0..n {
            let denom = values[i] + values[j];
            t[(i, j)] = if denom > EIGEN_FLOOR {
                t[(i, j)] / denom
            } else {
                c64(0.0, 0.0)
            };
        }
    }
    Ok(&q * t * q.adjoint())
}

/// Gradient with respect to `W = M²`; Kronecker solve for small nonsingular
/// `M`, eigenbasis solve otherwise.
pub fn grad_w(m: &CMat, grad_m: &CMat) -> Result<CMat> {
    check_pair(m, grad_m)?;
    if m.nrows() <= KRONECKER_MAX_DIM {
        match grad_w_kronecker(m, grad_m) {
            Ok(t) => return Ok(hermitian_part(&t)),
            Err(Error::SingularSystem(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(hermitian_part(&grad_w_eigen(m, grad_m)?))
}

/// `diag(V_Gᴴ T V_G Σ_H²)`.
pub fn grad_sigma_g2(v_g: &CMat, grad_w: &CMat, sigma_h: &[f64]) -> Result<Vec<f64>> {
    let n = v_g.nrows();
    if !v_g.is_square() || grad_w.shape() != (n, n) || sigma_h.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "V_G {}x{}, gradient {}x{}, {} singular values",
            v_g.nrows(),
            v_g.ncols(),
            grad_w.nrows(),
            grad_w.ncols(),
            sigma_h.len()
        )));
    }
    let rotated = v_g.adjoint() * grad_w * v_g;
    let scale = 1.0 + rotated.norm();
    (0..n)
        .map(|i| {
            let d = rotated[(i, i)];
            if d.im.abs() > 1e-8 * scale {
                return Err(Error::NumericalFailure(format!("diagonal entry {i} has imaginary part {:.3e}", d.im)));
            }
            Ok(d.re * sigma_h[i] * sigma_h[i])
        })
        .collect()
}

/// All gradients at the virtual state `W = V_G diag(σ_H² Σ) V_Gᴴ`.
pub fn gradients_at(
    v_g: &CMat,
    sigma_h: &[f64],
    sigma_g2: &[f64],
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
) -> Result<(MiEstimate, Gradients)> {
    let roots: Vec<f64> = sigma_h.iter().zip(sigma_g2).map(|(h, s)| h * s.max(0.0).sqrt()).collect();
    let m = hermitian_part(&reconstruct(v_g, &roots));
    let (mi, gm) = mi_and_grad_m(&EffectiveChannel::sqrt_w(m.clone())?, c, noise, rule)?;
    let gw = grad_w(&m, &gm)?;
    let gs = grad_sigma_g2(v_g, &gw, sigma_h)?;
    let mmse_cov = &gw * c64(noise.sigma2() * LN_2, 0.0);
    Ok((
        mi,
        Gradients {
            grad_m: gm,
            grad_w: gw,
            grad_sigma_g2: gs,
            mmse_cov,
        },
    ))
}

/// Monte-Carlo estimate of `Φ = E{(x − E[x|y])(x − E[x|y])ᴴ}` with exact
/// posterior enumeration; returns `Φ` and the per-entry standard error.
pub fn mmse_mc(
    h: &CMat,
    g: &CMat,
    c: &Constellation,
    noise: &NoiseModel,
    n_samples: usize,
    seed: u64,
) -> Result<(CMat, DMatrix<f64>)> {
    if h.ncols() != g.nrows() {
        return Err(Error::DimensionMismatch("H and G are not conformable".into()));
    }
    let n_t = g.ncols();
    let count = c.vector_count(n_t)?;
    if count > MMSE_MAX_VECTORS {
        return Err(Error::BudgetExceeded {
            requested: count as f64,
            budget: MMSE_MAX_VECTORS as f64,
        });
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter("MMSE estimate needs at least two samples".into()));
    }
    let eff = h * g;
    let n_r = eff.nrows();
    let sigma = noise.sigma2().sqrt();
    let points = ScaledPoints::new(&eff, c, sigma)?;
    let count = points.count;
    let blocks = n_samples.div_ceil(MC_BLOCK);
    let nn = n_t * n_t;
    let sums: Vec<(Vec<Complex64>, Vec<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = MC_BLOCK.min(n_samples - b * MC_BLOCK);
            let mut sum = vec![c64(0.0, 0.0); nn];
            let mut sq = vec![0.0; nn];
            let mut u = vec![0.0; 2 * n_r];
            let mut logp = vec![0.0; count];
            for _ in 0..len {
                let k = rng.random_range(0..count);
                for r in 0..n_r {
                    let z = complex_normal(&mut rng);
                    u[2 * r] = z.re;
                    u[2 * r + 1] = z.im;
                }
                let yk = points.point(k);
                let mut max = f64::NEG_INFINITY;
                for (m, lp) in logp.iter_mut().enumerate() {
                    let ym = points.point(m);
                    let mut d2 = 0.0;
                    for j in 0..2 * n_r {
                        let t = u[j] + yk[j] - ym[j];
                        d2 += t * t;
                    }
                    *lp = -d2;
                    max = max.max(-d2);
                }
                let mut total = 0.0;
                let mut mean = vec![c64(0.0, 0.0); n_t];
                for (m, lp) in logp.iter().enumerate() {
                    let p = (lp - max).exp();
                    total += p;
                    for (acc, x) in mean.iter_mut().zip(points.symbol(m)) {
                        *acc += x * p;
                    }
                }
                let err: Vec<Complex64> = points
                    .symbol(k)
                    .iter()
                    .zip(&mean)
                    .map(|(x, mu)| x - mu / total)
                    .collect();
                for i in 0..n_t {
                    for j in 0..n_t {
                        let e = err[i] * err[j].conj();
                        sum[i * n_t + j] += e;
                        sq[i * n_t + j] += e.norm_sqr();
                    }
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![c64(0.0, 0.0); nn];
    let mut sq = vec![0.0; nn];
    for (s, q) in sums {
        for i in 0..nn {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let n = n_samples as f64;
    let phi = CMat::from_fn(n_t, n_t, |i, j| sum[i * n_t + j] / n);
    let std_err = DMatrix::from_fn(n_t, n_t, |i, j| {
        let mean = sum[i * n_t + j] / n;
        let var = ((sq[i * n_t + j] - n * mean.norm_sqr()) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    });
    Ok((phi, std_err))
}

/// Hermitian basis perturbation `(i, j, kind)`: diagonal, symmetric real, antisymmetric imaginary.
fn hermitian_direction(n: usize, i: usize, j: usize, imaginary: bool) -> CMat {
    let mut d = CMat::zeros(n, n);
    if i == j {
        d[(i, i)] = c64(1.0, 0.0);
    } else if imaginary {
        d[(i, j)] = c64(0.0, 1.0);
        d[(j, i)] = c64(0.0, -1.0);
    } else {
        d[(i, j)] = c64(1.0, 0.0);
        d[(j, i)] = c64(1.0, 0.0);
    }
    d
}

/// Central-difference estimate of a Hermitian gradient `S` of `f` with
/// `df = tr(S dX)`, probing each Hermitian basis direction.
pub fn finite_difference_hermitian(x: &CMat, step: f64, f: impl Fn(&CMat) -> Result<f64>) -> Result<CMat> {
    let n = x.nrows();
    let mut s = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            for imaginary in [false, true] {
                if i == j && imaginary {
                    continue;
                }
                let d = hermitian_direction(n, i, j, imaginary) * c64(step, 0.0);
                let deriv = (f(&(x + &d))? - f(&(x - &d))?) / (2.0 * step);
                if i == j {
                    s[(i, i)] = c64(deriv, 0.0);
                } else if imaginary {
                    s[(i, j)].im = deriv / 2.0;
                } else {
                    s[(i, j)].re = deriv / 2.0;
                }
            }
            if i != j {
                s[(j, i)] = s[(i, j)].conj();
            }
        }
    }
    Ok(s)
}

/// Finite-difference check of `grad_m`, perturbing `M` directly.
pub fn fd_grad_m(m: &CMat, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule, step: f64) -> Result<CMat> {
    finite_difference_hermitian(m, step, |x| {
        Ok(crate::mi::mi_gh(&EffectiveChannel::from_matrix(x.clone())?, c, noise, rule)?.bits)
    })
}

/// MI as a function of `W`, through `M = W^{1/2}`.
pub fn mi_of_w(w: &CMat, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule) -> Result<f64> {
    Ok(crate::mi::mi_gh(&EffectiveChannel::from_matrix(sqrtm_psd(w)?)?, c, noise, rule)?.bits)
}

/// Finite-difference check of `grad_w`, perturbing `W`.
pub fn fd_grad_w(w: &CMat, c: &Constellation, noise: &NoiseModel, rule: &QuadratureRule, step: f64) -> Result<CMat> {
    finite_difference_hermitian(w, step, |x| mi_of_w(x, c, noise, rule))
}

/// Finite-difference check of `grad_sigma_g2`, perturbing each `Σ_G²` entry.
pub fn fd_grad_sigma_g2(
    v_g: &CMat,
    sigma_h: &[f64],
    sigma_g2: &[f64],
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    step: f64,
) -> Result<Vec<f64>> {
    let eval = |s: &[f64]| {
        let w: Vec<f64> = sigma_h.iter().zip(s).map(|(h, g)| h * h * g).collect();
        mi_of_w(&reconstruct(v_g, &w), c, noise, rule)
    };
    (0..sigma_g2.len())
        .map(|i| {
            let mut plus = sigma_g2.to_vec();
            let mut minus = sigma_g2.to_vec();
            plus[i] += step;
            minus[i] -= step;
            Ok((eval(&plus)? - eval(&minus)?) / (2.0 * step))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;

    fn rel_err(a: &CMat, b: &CMat) -> f64 {
        (a - b).norm() / b.norm().max(1e-12)
    }

    fn random_psd(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_unitary(n, &mut rng);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.5)).collect();
        hermitian_part(&reconstruct(&q, &d))
    }

    #[test]
    fn identity_collapse() {
        let s = hermitian_part(&CMat::from_fn(3, 3, |i, j| c64(i as f64 + 1.0, j as f64 - 0.5)));
        let id = CMat::identity(3, 3);
        let t = grad_w(&id, &s).unwrap();
        assert!((t - &s * c64(0.5, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn kronecker_and_eigen_paths_agree() {
        for seed in 0..5 {
            let m = random_psd(4, seed);
            let s = hermitian_part(&CMat::from_fn(4, 4, |i, j| c64((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2)));
            let a = grad_w_kronecker(&m, &s).unwrap();
            let b = grad_w_eigen(&m, &s).unwrap();
            assert!((&a - &b).norm() < 1e-9);
            let lhs = &a * &m + &m * &a;
            assert!((lhs - &s).norm() < 1e-9);
        }
    }

    #[test]
    fn singular_handling() {
        let m = reconstruct(&CMat::identity(2, 2), &[1.0, 0.0]);
        let s = CMat::identity(2, 2);
        assert!(matches!(grad_w_kronecker(&m, &s), Err(Error::SingularSystem(_))));
        let t = grad_w(&m, &s).unwrap();
        assert!((t[(0, 0)].re - 0.5).abs() < 1e-12);
        assert_eq!(t[(1, 1)], c64(0.0, 0.0));
        assert!(matches!(grad_w(&CMat::zeros(2, 2), &s), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn sigma_gradient_cases() {
        let v = CMat::identity(2, 2);
        let t = reconstruct(&v, &[0.7, 0.2]);
        assert_eq!(grad_sigma_g2(&v, &t, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let g = grad_sigma_g2(&v, &t, &[2.0, 3.0]).unwrap();
        assert!((g[0] - 2.8).abs() < 1e-12 && (g[1] - 1.8).abs() < 1e-12);
        assert!(matches!(grad_sigma_g2(&v, &t, &[1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn grad_m_matches_finite_difference() {
        let c = Constellation::qam(16).unwrap();
        let rule = QuadratureRule::hermite(3).unwrap();
        let noise = NoiseModel::from_snr_db(0.0).unwrap();
        let m = random_psd(2, 11);
        let s = grad_m(&EffectiveChannel::sqrt_w(m.clone()).unwrap(), &c, &noise, &rule).unwrap();
        let fd = fd_grad_m(&m, &c, &noise, &rule, 1e-4).unwrap();
        assert!(rel_err(&s, &fd) < 1e-3, "{s} vs {fd}");
        assert!((&s - s.adjoint()).norm() < 1e-10);
    }

    #[test]
    fn rectangular_wirtinger_gradient() {
        let c = Constellation::qam(4).unwrap();
        let rule = QuadratureRule::hermite(4).unwrap();
        let noise = NoiseModel::from_snr_db(2.0).unwrap();
        let e = CMat::from_fn(3, 2, |i, j| c64(0.3 * i as f64 + 0.5, 0.2 * j as f64 - 0.1));
        let eval = evaluate_with_gradient(&EffectiveChannel::from_matrix(e.clone()).unwrap(), &c, &noise, &rule).unwrap();
        let h = 1e-5;
        let f = |x: CMat| crate::mi::mi_gh(&EffectiveChannel::from_matrix(x).unwrap(), &c, &noise, &rule).unwrap().bits;
        for i in 0..3 {
            for j in 0..2 {
                let mut d = CMat::zeros(3, 2);
                d[(i, j)] = c64(h, 0.0);
                let dre = (f(&e + &d) - f(&e - &d)) / (2.0 * h);
                d[(i, j)] = c64(0.0, h);
                let dim = (f(&e + &d) - f(&e - &d)) / (2.0 * h);
                // ∂f/∂z* = (∂f/∂x + i ∂f/∂y)/2
                let expected = c64(dre / 2.0, dim / 2.0);
                let got = eval.grad_conj[(i, j)];
                assert!((got - expected).norm() < 1e-6 * (1.0 + expected.norm()), "{got} vs {expected}");
            }
        }
    }

    #[test]
    fn flat_objective_at_vanishing_snr() {
        let c = Constellation::qam(16).unwrap();
        let rule = QuadratureRule::hermite(3).unwrap();
        let noise = NoiseModel::from_snr_db(-80.0).unwrap();
        let s = grad_m(&EffectiveChannel::sqrt_w(random_psd(2, 3)).unwrap(), &c, &noise, &rule).unwrap();
        assert!(s.norm() < 1e-6, "{}", s.norm());
    }

    #[test]
    fn mmse_limits() {
        let c = Constellation::qam(4).unwrap();
        let h = CMat::identity(2, 2);
        let g = CMat::identity(2, 2);
        let (phi, _) = mmse_mc(&h, &g, &c, &NoiseModel::from_snr_db(-60.0).unwrap(), 20_000, 3).unwrap();
        assert!((phi - CMat::identity(2, 2)).norm() < 0.03);
        let (phi, se) = mmse_mc(&h, &g, &c, &NoiseModel::from_snr_db(40.0).unwrap(), 20_000, 3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(phi[(i, j)].norm() <= 3.0 * se[(i, j)] + 1e-12);
            }
        }
        let big = Constellation::qam(64).unwrap();
        let h4 = CMat::identity(4, 4);
        assert!(matches!(
            mmse_mc(&h4, &h4, &big, &NoiseModel::from_snr_db(0.0).unwrap(), 100, 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
