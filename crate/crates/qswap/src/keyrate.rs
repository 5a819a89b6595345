//! Asymptotic key rate of the subspace-coding protocol.
//!
//! Each user's d outcomes split into d/k blocks of k. Rounds where the
//! blocks differ (or either user aborts with ⊥) are discarded; the rest
//! are pooled into one k×k table per basis. The eavesdropper's
//! uncertainty about the key is bounded by log₂k − H(test|test), so the
//! rate per kept round is log₂k − H_test − H_key.

use serde::Serialize;

use crate::circuits::{build_network, Basis, NetworkConfig};
use crate::detection::{herald_set, joint_outcome_distribution, JointDistribution};
use crate::error::{invalid, Error, Result};

const NORM_TOL: f64 = 1e-9;

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// H(X|Y) = H(XY) − H(Y) in bits; rows index X, columns Y.
pub fn conditional_shannon_entropy(joint: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for row in joint {
        for &p in row {
            if p < 0.0 || !p.is_finite() {
                return invalid(format!("joint distribution has entry {p}"));
            }
            total += p;
        }
    }
    if (total - 1.0).abs() > NORM_TOL {
        return invalid(format!("joint distribution sums to {total}"));
    }
    let cols = joint.first().map_or(0, Vec::len);
    let h_xy: f64 = -joint.iter().flatten().map(|&p| xlog2x(p)).sum::<f64>();
    let h_y: f64 = -(0..cols).map(|y| xlog2x(joint.iter().map(|r| r[y]).sum())).sum::<f64>();
    Ok((h_xy - h_y).max(0.0))
}

/// Pooled k×k table of the rounds kept by block sifting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiftedTable {
    pub k: usize,
    /// Normalized to 1 over the kept rounds.
    pub p: Vec<Vec<f64>>,
    pub sift_probability: f64,
}

pub fn subspace_sift(joint: &JointDistribution, k: usize) -> Result<SiftedTable> {
    let d = joint.d;
    if k < 2 || d % k != 0 {
        return invalid(format!("subspace dimension k = {k} must divide d = {d}"));
    }
    let mut p = vec![vec![0.0; k]; k];
    let mut kept = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a / k == b / k {
                p[a % k][b % k] += joint.p[a][b];
                kept += joint.p[a][b];
            }
        }
    }
    if kept <= 0.0 {
        return Err(Error::Degenerate("no rounds survive sifting".into()));
    }
    for v in p.iter_mut().flatten() {
        *v /= kept;
    }
    Ok(SiftedTable { k, p, sift_probability: kept })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeraldRate {
    pub clicks: Vec<(usize, usize)>,
    pub accept_probability: f64,
    pub sift_probability: f64,
    pub h_key: f64,
    pub h_test: f64,
    pub conditional_rate: f64,
    pub bits_per_round: f64,
}

/// Aggregate over the perfect heralds. The aggregate entropies and sift
/// probability are weighted by accepted mass, and `conditional_rate` is
/// defined so that bits = accept × sift × rate holds for the totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub bits_per_round: f64,
    pub conditional_rate: f64,
    pub accept_probability: f64,
    pub sift_probability: f64,
    pub h_key: f64,
    pub h_test: f64,
    pub heralds: Vec<HeraldRate>,
}

impl RateReport {
    pub fn zero() -> Self {
        Self {
            bits_per_round: 0.0,
            conditional_rate: 0.0,
            accept_probability: 0.0,
            sift_probability: 0.0,
            h_key: 0.0,
            h_test: 0.0,
            heralds: Vec::new(),
        }
    }
}

/// Rate from per-herald key and test distributions, paired by position.
pub fn secret_key_rate(
    key: &[JointDistribution],
    test: &[JointDistribution],
    clicks: &[Vec<(usize, usize)>],
    k: usize,
) -> Result<RateReport> {
    if key.len() != test.len() || key.len() != clicks.len() || key.is_empty() {
        return invalid("key and test distributions must come from the same non-empty herald set");
    }
    let cap = (k as f64).log2();
    let mut heralds = Vec::with_capacity(key.len());
    for ((kj, tj), c) in key.iter().zip(test).zip(clicks) {
        if kj.d != tj.d || (kj.accept_probability - tj.accept_probability).abs() > 1e-6 * kj.accept_probability {
            return invalid("key and test distributions belong to different heralds");
        }
        let ks = subspace_sift(kj, k)?;
        let ts = subspace_sift(tj, k)?;
        let h_key = conditional_shannon_entropy(&ks.p)?;
        let h_test = conditional_shannon_entropy(&ts.p)?;
        let rate = (cap - h_test - h_key).clamp(0.0, cap);
        heralds.push(HeraldRate {
            clicks: c.clone(),
            accept_probability: kj.accept_probability,
            sift_probability: ks.sift_probability,
            h_key,
            h_test,
            conditional_rate: rate,
            bits_per_round: kj.accept_probability * ks.sift_probability * rate,
        });
    }
    let accept: f64 = heralds.iter().map(|h| h.accept_probability).sum();
    let kept: f64 = heralds.iter().map(|h| h.accept_probability * h.sift_probability).sum();
    let bits: f64 = heralds.iter().map(|h| h.bits_per_round).sum();
    let avg = |f: fn(&HeraldRate) -> f64| heralds.iter().map(|h| h.accept_probability * h.sift_probability * f(h)).sum::<f64>() / kept;
    Ok(RateReport {
        bits_per_round: bits,
        conditional_rate: if kept > 0.0 { bits / kept } else { 0.0 },
        accept_probability: accept.min(1.0),
        sift_probability: if accept > 0.0 { kept / accept } else { 0.0 },
        h_key: avg(|h| h.h_key),
        h_test: avg(|h| h.h_test),
        heralds,
    })
}

/// Build both bases, herald with every perfect pattern and return the rate.
pub fn evaluate(config: &NetworkConfig) -> Result<RateReport> {
    config.validate()?;
    let heralds = herald_set(config.d, config.topology)?;
    let key_net = build_network(&config.with_basis(Basis::Key))?;
    let test_net = build_network(&config.with_basis(Basis::Test))?;
    let mut key = Vec::new();
    let mut test = Vec::new();
    let mut clicks = Vec::new();
    for h in &heralds.perfect {
        key.push(joint_outcome_distribution(&key_net, h)?);
        test.push(joint_outcome_distribution(&test_net, h)?);
        clicks.push(h.clicks.clone());
    }
    secret_key_rate(&key, &test, &clicks, config.subspace())
}
