//! Per-group processing: the virtual channel's singular modes are split into
//! small groups, each optimized independently under its own power share, and
//! the group precoders are assembled block-diagonally in the virtual domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{svd_factor, ChannelEnsemble, ChannelMatrix, NoiseModel};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};
use crate::mi::{mean_estimate, mi_gh, EffectiveChannel, MiEstimate, Method};
use crate::optimizer::{optimize, optimize_virtual_best, OptimizerParams, PrecoderResult, VirtualChannel};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Contiguous blocks of the descending singular values.
    Consecutive,
    /// Strongest modes paired with the weakest ones.
    MaxMin,
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consecutive" => Ok(Pairing::Consecutive),
            "max_min" | "max-min" | "maxmin" => Ok(Pairing::MaxMin),
            other => Err(Error::InvalidParameter(format!("unknown pairing `{other}`"))),
        }
    }
}

/// Partition of the virtual subchannels (0-based positions in descending
/// singular-value order) with a transmit power share per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub groups: Vec<Vec<usize>>,
    pub group_nt: Vec<usize>,
    pub group_nr: Vec<usize>,
    pub power_shares: Vec<f64>,
    /// Set when the group size does not divide `N_t` and the last group is smaller.
    pub ragged: bool,
}

impl GroupPlan {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn size(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for g in &self.groups {
            if g.is_empty() {
                return Err(Error::InvalidParameter("empty group".into()));
            }
            for &i in g {
                if i >= n || seen[i] {
                    return Err(Error::InvalidParameter(format!(
                        "groups must partition 0..{n}; index {i} is out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter(format!("groups do not cover all {n} subchannels")));
        }
        if self.power_shares.len() != self.groups.len() || self.power_shares.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidParameter("each group needs a positive power share".into()));
        }
        let total: f64 = self.power_shares.iter().sum();
        if (total - n as f64).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("power shares sum to {total}, expected {n}")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// Groups of `group_size` subchannels over the `sigma_h.len()` virtual modes.
pub fn plan_groups(sigma_h: &[f64], group_size: usize, pairing: Pairing) -> Result<GroupPlan> {
    let n = sigma_h.len();
    if group_size == 0 || group_size > n {
        return Err(Error::InvalidGroupSize { group_size, n });
    }
    let order: Vec<usize> = match pairing {
        Pairing::Consecutive => (0..n).collect(),
        Pairing::MaxMin => {
            let (mut lo, mut hi) = (0, n);
            let mut out = Vec::with_capacity(n);
            while lo < hi {
                out.push(lo);
                lo += 1;
                if lo < hi {
                    hi -= 1;
                    out.push(hi);
                }
            }
            out
        }
    };
    let groups: Vec<Vec<usize>> = order.chunks(group_size).map(|c| c.to_vec()).collect();
    let group_nt: Vec<usize> = groups.iter().map(Vec::len).collect();
    Ok(GroupPlan {
        power_shares: group_nt.iter().map(|&s| s as f64).collect(),
        group_nr: group_nt.clone(),
        group_nt,
        groups,
        ragged: !n.is_multiple_of(group_size),
    })
}

#[derive(Debug, Clone)]
pub struct PgpResult {
    pub per_group: Vec<PrecoderResult>,
    pub g_global: CMat,
    pub mi_total_bits: f64,
    pub plan: GroupPlan,
}

impl PgpResult {
    pub fn iterations(&self) -> usize {
        self.per_group.iter().map(|r| r.iterations).max().unwrap_or(0)
    }
}

/// Virtual subchannel of one group, with the power share folded into the gains
/// so that the group's own trace constraint stays equal to its size.
fn group_channel(sigma_h: &[f64], group: &[usize], share: f64) -> VirtualChannel {
    let scale = (share / group.len() as f64).sqrt();
    VirtualChannel::diagonal(group.iter().map(|&i| sigma_h[i] * scale).collect())
}

fn wrap_group(group: usize, e: Error) -> Error {
    match e {
        Error::BudgetExceeded { .. } => Error::GroupBudgetExceeded {
            group,
            source: Box::new(e),
        },
        other => other,
    }
}

fn is_whole(plan: &GroupPlan, n: usize) -> bool {
    plan.groups.len() == 1 && plan.groups[0].iter().copied().eq(0..n)
}

pub fn optimize_pgp(
    h: &ChannelMatrix,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    params: &OptimizerParams,
    plan: &GroupPlan,
) -> Result<PgpResult> {
    let n = h.n_t();
    plan.validate(n)?;
    if is_whole(plan, n) {
        let r = optimize(h, c, noise, rule, params, None).map_err(|e| wrap_group(0, e))?;
        return Ok(PgpResult {
            g_global: r.g.clone(),
            mi_total_bits: r.mi_bits(),
            per_group: vec![r],
            plan: plan.clone(),
        });
    }
    let factors = svd_factor(h)?;
    let sigma_h = factors.sigma_h_padded(n);
    let per_group = plan
        .groups
        .par_iter()
        .zip(plan.power_shares.par_iter())
        .enumerate()
        .map(|(gi, (group, &share))| {
            let ch = group_channel(&sigma_h, group, share);
            optimize_virtual_best(&ch, c, noise, rule, params, None).map_err(|e| wrap_group(gi, e))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut g_virtual = CMat::zeros(n, n);
    for ((group, &share), result) in plan.groups.iter().zip(&plan.power_shares).zip(&per_group) {
        let scale = (share / group.len() as f64).sqrt();
        for (a, &row) in group.iter().enumerate() {
            for (b, &col) in group.iter().enumerate() {
                g_virtual[(row, col)] = result.g[(a, b)] * c64(scale, 0.0);
            }
        }
    }
    let mi_total_bits = per_group.iter().map(PrecoderResult::mi_bits).sum();
    Ok(PgpResult {
        g_global: &factors.v_h * g_virtual,
        mi_total_bits,
        per_group,
        plan: plan.clone(),
    })
}

/// Sum of per-group MIs with `G = I` inside every group.
pub fn per_group_baseline(
    h: &ChannelMatrix,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    plan: &GroupPlan,
) -> Result<f64> {
    let n = h.n_t();
    plan.validate(n)?;
    let sigma_h = svd_factor(h)?.sigma_h_padded(n);
    plan.groups
        .par_iter()
        .zip(plan.power_shares.par_iter())
        .enumerate()
        .map(|(gi, (group, &share))| {
            let ch = group_channel(&sigma_h, group, share);
            let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                ch.size(),
                ch.sigma_h.iter().map(|&s| c64(s, 0.0)),
            ));
            Ok(mi_gh(&EffectiveChannel::from_matrix(d)?, c, noise, rule)
                .map_err(|e| wrap_group(gi, e))?
                .bits)
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.iter().sum())
}

/// Mean optimized PGP MI over the ensemble, re-optimizing on every draw.
pub fn ergodic_pgp(
    ensemble: &ChannelEnsemble,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    params: &OptimizerParams,
    plan: &GroupPlan,
) -> Result<MiEstimate> {
    if ensemble.draws == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one draw".into()));
    }
    let values = ensemble
        .iter()
        .map(|h| Ok(optimize_pgp(&h?, c, noise, rule, params, plan)?.mi_total_bits))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_estimate(&values, Method::GaussHermite))
}

/// Mean per-group no-precoding MI over the ensemble.
pub fn ergodic_per_group_baseline(
    ensemble: &ChannelEnsemble,
    c: &Constellation,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    plan: &GroupPlan,
) -> Result<MiEstimate> {
    if ensemble.draws == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one draw".into()));
    }
    let values = ensemble
        .iter()
        .map(|h| per_group_baseline(&h?, c, noise, rule, plan))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_estimate(&values, Method::GaussHermite))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consecutive_and_max_min() {
        let s = [4.0, 3.0, 2.0, 1.0];
        let p = plan_groups(&s, 2, Pairing::Consecutive).unwrap();
        assert_eq!(p.groups, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(p.power_shares, vec![2.0, 2.0]);
        let p = plan_groups(&s, 2, Pairing::MaxMin).unwrap();
        assert_eq!(p.groups, vec![vec![0, 3], vec![1, 2]]);
        assert!(!p.ragged);
    }

    #[test]
    fn large_and_ragged_plans() {
        let s: Vec<f64> = (0..100).rev().map(f64::from).collect();
        let p = plan_groups(&s, 2, Pairing::Consecutive).unwrap();
        assert_eq!(p.len(), 50);
        p.validate(100).unwrap();
        let p = plan_groups(&s[..5], 2, Pairing::Consecutive).unwrap();
        assert!(p.ragged);
        assert_eq!(p.group_nt, vec![2, 2, 1]);
        p.validate(5).unwrap();
    }

    #[test]
    fn invalid_sizes() {
        assert!(matches!(
            plan_groups(&[1.0, 2.0], 0, Pairing::Consecutive),
            Err(Error::InvalidGroupSize { .. })
        ));
        assert!(matches!(
            plan_groups(&[1.0, 2.0], 3, Pairing::Consecutive),
            Err(Error::InvalidGroupSize { .. })
        ));
    }

    #[test]
    fn plan_validation_and_json() {
        let p = plan_groups(&[3.0, 2.0, 1.0, 0.5], 2, Pairing::MaxMin).unwrap();
        let back = GroupPlan::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        let mut bad = p.clone();
        bad.groups[1][0] = 0;
        assert!(bad.validate(4).is_err());
        let mut bad = p;
        bad.power_shares = vec![3.0, 3.0];
        assert!(bad.validate(4).is_err());
        assert!(matches!(GroupPlan::from_json("{"), Err(Error::Parse { .. })));
    }

    #[test]
    fn pairing_from_str() {
        assert_eq!("max_min".parse::<Pairing>().unwrap(), Pairing::MaxMin);
        assert!("zigzag".parse::<Pairing>().is_err());
    }
}
