use precoder_core::channels::{builtin, random_gaussian, svd_factor, BuiltinChannel, ChannelEnsemble, ChannelMatrix, NoiseModel};
use precoder_core::linalg::{hermitian_part, sqrtm_psd};
use precoder_core::mi::{mi_gh, mi_mc, EffectiveChannel};
use precoder_core::optimizer::{optimize, OptimizerParams};
use precoder_core::pgp::{ergodic_pgp, optimize_pgp, plan_groups, GroupPlan, Pairing, PgpResult};
use precoder_core::{Constellation, QuadratureRule};

fn rule() -> QuadratureRule {
    QuadratureRule::hermite(3).unwrap()
}

fn plan_for(h: &ChannelMatrix, size: usize, pairing: Pairing) -> GroupPlan {
    plan_groups(&svd_factor(h).unwrap().sigma_h_padded(h.n_t()), size, pairing).unwrap()
}

fn check_power(h: &ChannelMatrix, r: &PgpResult) {
    let power = (&r.g_global * r.g_global.adjoint()).trace();
    assert!((power.re - h.n_t() as f64).abs() <= 1e-9, "power {power}");
    let sum: f64 = r.per_group.iter().map(|g| g.mi_bits()).sum();
    assert!((r.mi_total_bits - sum).abs() <= 1e-8);
}

#[test]
fn decoupled_groups_match_joint_evaluation() {
    let h = random_gaussian(4, 4, 21).unwrap();
    let c = Constellation::qam(4).unwrap();
    let noise = NoiseModel::from_snr_b_db(2.0, 4).unwrap();
    let rule = rule();
    for pairing in [Pairing::Consecutive, Pairing::MaxMin] {
        let plan = plan_for(&h, 2, pairing);
        let r = optimize_pgp(&h, &c, &noise, &rule, &OptimizerParams::default(), &plan).unwrap();
        check_power(&h, &r);
        let hg = h.matrix() * &r.g_global;
        let m = sqrtm_psd(&hermitian_part(&(hg.adjoint() * &hg))).unwrap();
        let joint = mi_gh(&EffectiveChannel::sqrt_w(m).unwrap(), &c, &noise, &rule).unwrap().bits;
        assert!((joint - r.mi_total_bits).abs() <= 1e-6, "{pairing:?}: {joint} vs {}", r.mi_total_bits);
    }
}

#[test]
fn single_group_is_plain_optimization() {
    let h = builtin(BuiltinChannel::H1);
    let c = Constellation::qam(16).unwrap();
    let noise = NoiseModel::from_snr_b_db(-4.0, 16).unwrap();
    let rule = rule();
    let params = OptimizerParams::default();
    let plan = plan_for(&h, 2, Pairing::Consecutive);
    let pgp = optimize_pgp(&h, &c, &noise, &rule, &params, &plan).unwrap();
    let full = optimize(&h, &c, &noise, &rule, &params, None).unwrap();
    assert_eq!(pgp.mi_total_bits.to_bits(), full.mi_bits().to_bits());
    assert_eq!(pgp.g_global, full.g);
    assert_eq!(pgp.per_group[0].trajectory, full.trajectory);
}

#[test]
fn power_is_conserved_for_every_plan() {
    let c = Constellation::qam(4).unwrap();
    let noise = NoiseModel::from_snr_b_db(0.0, 4).unwrap();
    let rule = rule();
    let params = OptimizerParams::default();
    let h = random_gaussian(5, 5, 8).unwrap();
    for pairing in [Pairing::Consecutive, Pairing::MaxMin] {
        let plan = plan_for(&h, 2, pairing);
        assert!(plan.ragged);
        check_power(&h, &optimize_pgp(&h, &c, &noise, &rule, &params, &plan).unwrap());
    }
    let mut plan = plan_for(&h, 2, Pairing::Consecutive);
    plan.power_shares = vec![2.5, 1.75, 0.75];
    let r = optimize_pgp(&h, &c, &noise, &rule, &params, &plan).unwrap();
    check_power(&h, &r);
    let h = random_gaussian(6, 3, 2).unwrap();
    check_power(&h, &optimize_pgp(&h, &c, &noise, &rule, &params, &plan_for(&h, 1, Pairing::MaxMin)).unwrap());
}

#[test]
fn h4x4_high_snr_gain_over_no_precoding() {
    let h = builtin(BuiltinChannel::H4x4);
    let c = Constellation::qam(64).unwrap();
    let noise = NoiseModel::from_snr_b_db(20.0, 64).unwrap();
    let rule = rule();
    let plan = plan_for(&h, 2, Pairing::Consecutive);
    let r = optimize_pgp(&h, &c, &noise, &rule, &OptimizerParams::default(), &plan).unwrap();
    check_power(&h, &r);
    // Exhaustive quadrature over 64⁴ vectors is out of budget; sample the baseline instead.
    let base = mi_mc(&EffectiveChannel::from_matrix(h.matrix().clone()).unwrap(), &c, &noise, 64, 3).unwrap();
    let se = base.std_err.unwrap();
    assert!(r.mi_total_bits >= base.bits + 1.0 + 3.0 * se, "pgp {} vs baseline {} ± {se}", r.mi_total_bits, base.bits);
    assert!(r.mi_total_bits <= 24.0);
    assert!((r.per_group[0].mi_bits() - 12.0).abs() < 1e-3);
}

#[test]
fn ergodic_pgp_reduces_to_fixed_channel_and_repeats() {
    let c = Constellation::qam(4).unwrap();
    let noise = NoiseModel::from_snr_b_db(0.0, 4).unwrap();
    let rule = rule();
    let params = OptimizerParams::default();
    let h = random_gaussian(4, 4, 5).unwrap();
    let plan = plan_for(&h, 2, Pairing::Consecutive);
    let single = optimize_pgp(&h, &c, &noise, &rule, &params, &plan).unwrap();
    let fixed = ergodic_pgp(&ChannelEnsemble::fixed(h, 2), &c, &noise, &rule, &params, &plan).unwrap();
    assert_eq!(fixed.bits, single.mi_total_bits);
    let ens = ChannelEnsemble::kronecker(4, 4, 0.5, 0.5, 2, 17);
    let a = ergodic_pgp(&ens, &c, &noise, &rule, &params, &plan).unwrap();
    let b = ergodic_pgp(&ens, &c, &noise, &rule, &params, &plan).unwrap();
    assert_eq!(a.bits.to_bits(), b.bits.to_bits());
    assert_eq!(a.std_err.map(f64::to_bits), b.std_err.map(f64::to_bits));
    assert!(ergodic_pgp(&ChannelEnsemble::gaussian(4, 4, 0, 1), &c, &noise, &rule, &params, &plan).is_err());
}
