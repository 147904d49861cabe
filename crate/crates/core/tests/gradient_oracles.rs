use precoder_core::channels::{builtin, svd_factor, BuiltinChannel, NoiseModel};
use precoder_core::gradients::{
    fd_grad_m, fd_grad_sigma_g2, fd_grad_w, gradients_at, grad_m, grad_w, grad_w_eigen, grad_w_kronecker, mi_of_w, mmse_mc,
};
use precoder_core::linalg::{c64, hermitian_eigen, hermitian_part, random_unitary, reconstruct, sqrtm_psd, CMat};
use precoder_core::mi::EffectiveChannel;
use precoder_core::{Constellation, QuadratureRule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_err(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> CMat {
    let q = random_unitary(n, rng);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    hermitian_part(&reconstruct(&q, &d))
}

fn setup() -> (Constellation, QuadratureRule, NoiseModel) {
    (
        Constellation::qam(16).unwrap(),
        QuadratureRule::hermite(3).unwrap(),
        NoiseModel::from_snr_db(0.0).unwrap(),
    )
}

#[test]
fn grad_m_against_central_differences() {
    let (c, rule, noise) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..5 {
        let m = random_psd(2, &mut rng, 0.3, 1.6);
        let s = grad_m(&EffectiveChannel::sqrt_w(m.clone()).unwrap(), &c, &noise, &rule).unwrap();
        let fd = fd_grad_m(&m, &c, &noise, &rule, 1e-4).unwrap();
        assert!(rel_err(&s, &fd) <= 1e-3, "{s}{fd}");
    }
}

#[test]
fn grad_w_against_central_differences() {
    let (c, rule, noise) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..5 {
        let w = random_psd(2, &mut rng, 0.2, 2.0);
        let m = sqrtm_psd(&w).unwrap();
        let s = grad_m(&EffectiveChannel::sqrt_w(m.clone()).unwrap(), &c, &noise, &rule).unwrap();
        let t = grad_w(&m, &s).unwrap();
        let fd = fd_grad_w(&w, &c, &noise, &rule, 1e-4).unwrap();
        assert!(rel_err(&t, &fd) <= 1e-3, "{t}{fd}");
        assert!((&t - t.adjoint()).norm() < 1e-8);
        let (values, _) = hermitian_eigen(&t).unwrap();
        assert!(values.iter().all(|&v| v > -1e-6), "{values:?}");
    }
}

#[test]
fn grad_w_predicts_random_perturbation() {
    let (c, rule, noise) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let w = random_psd(2, &mut rng, 0.5, 1.5);
    let m = sqrtm_psd(&w).unwrap();
    let s = grad_m(&EffectiveChannel::sqrt_w(m.clone()).unwrap(), &c, &noise, &rule).unwrap();
    let t = grad_w(&m, &s).unwrap();
    let d = hermitian_part(&CMat::from_fn(2, 2, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
    let h = 1e-4;
    let fd = (mi_of_w(&(&w + &d * c64(h, 0.0)), &c, &noise, &rule).unwrap()
        - mi_of_w(&(&w - &d * c64(h, 0.0)), &c, &noise, &rule).unwrap())
        / (2.0 * h);
    let predicted = (&t * &d).trace().re;
    assert!((fd - predicted).abs() <= 1e-3 * fd.abs().max(1e-6), "{fd} vs {predicted}");
}

#[test]
fn grad_sigma_against_central_differences() {
    let (c, rule, _) = setup();
    let noise = NoiseModel::from_snr_b_db(0.0, 16).unwrap();
    let sigma_h = svd_factor(&builtin(BuiltinChannel::H1)).unwrap().sigma_h;
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    for _ in 0..5 {
        let v_g = random_unitary(2, &mut rng);
        let a: f64 = rng.random_range(0.3..1.7);
        let sigma = [a, 2.0 - a];
        let (_, grads) = gradients_at(&v_g, &sigma_h, &sigma, &c, &noise, &rule).unwrap();
        let fd = fd_grad_sigma_g2(&v_g, &sigma_h, &sigma, &c, &noise, &rule, 1e-4).unwrap();
        for (g, f) in grads.grad_sigma_g2.iter().zip(&fd) {
            assert!((g - f).abs() <= 1e-3 * f.abs().max(1e-9), "{g} vs {f}");
        }
    }
}

#[test]
fn mmse_identity_on_h1() {
    let c = Constellation::qam(16).unwrap();
    let rule = QuadratureRule::hermite(3).unwrap();
    let h = builtin(BuiltinChannel::H1).into_matrix();
    let noise = NoiseModel::from_snr_b_db(0.0, 16).unwrap();
    let f = svd_factor(&builtin(BuiltinChannel::H1)).unwrap();
    let (_, grads) = gradients_at(&f.v_h, &f.sigma_h, &[1.0, 1.0], &c, &noise, &rule).unwrap();
    let (phi, _) = mmse_mc(&h, &CMat::identity(2, 2), &c, &noise, 100_000, 17).unwrap();
    let dist = (&grads.mmse_cov - &phi).norm();
    assert!(dist <= 0.05, "{dist}\n{}{phi}", grads.mmse_cov);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sylvester_solution(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_psd(n, &mut rng, 0.05, 3.0);
        let s = hermitian_part(&CMat::from_fn(n, n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        let t = grad_w(&m, &s).unwrap();
        prop_assert!((&t * &m + &m * &t - &s).norm() < 1e-8);
        prop_assert!((&t - t.adjoint()).norm() < 1e-10);
        let a = grad_w_kronecker(&m, &s).unwrap();
        let b = grad_w_eigen(&m, &s).unwrap();
        prop_assert!((a - b).norm() < 1e-9);
    }
}
