//! Cross-check of the Gaussian click statistics against the truncated Fock
//! expansion on small random networks.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::circuits::{build_network, AncillaKind, NetworkConfig};
use crate::detection::{all_pattern_distribution, click_probability, herald_set, joint_outcome_distribution};
use crate::error::Result;
use crate::fock::FockState;
use crate::gaussian::GaussianState;
use crate::{CMat, C64};

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases
/// of R's diagonal divided out.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let z = r[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// One random network in both representations.
pub struct RandomNetwork {
    pub gaussian: GaussianState,
    pub fock: FockState,
    pub n_modes: usize,
}

/// Two-mode squeezers and coherent states on disjoint modes, then a Haar
/// interferometer over everything. Per-mode mean photon number stays ≤ 0.5.
pub fn random_network(rng: &mut impl Rng, cutoff: usize, bound: usize) -> Result<RandomNetwork> {
    loop {
        let n = rng.gen_range(2..=7);
        let mut g = GaussianState::vacuum(n)?;
        let mut f = FockState::vacuum(n, cutoff, bound)?;
        let mut modes: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            modes.swap(i, rng.gen_range(0..=i));
        }
        let pairs = rng.gen_range(0..=n / 2);
        for p in 0..pairs {
            let s = rng.gen_range(0.05..0.2);
            let (a, b) = (modes[2 * p], modes[2 * p + 1]);
            g = g.two_mode_squeeze(a, b, s)?;
            f = f.add_tms(a, b, s)?;
        }
        for &m in &modes[2 * pairs..] {
            if rng.gen_bool(0.6) {
                let alpha = C64::from_polar(rng.gen_range(0.05..0.45), rng.gen_range(0.0..std::f64::consts::TAU));
                g = g.displace(m, alpha)?;
                f = f.add_coherent(m, alpha)?;
            }
        }
        let u = haar_unitary(n, rng);
        let all: Vec<usize> = (0..n).collect();
        let g = g.interfere(&u, &all)?;
        if g.mode_photon_numbers().iter().any(|&m| m > 0.5) {
            continue;
        }
        let f = f.interfere(&u, &all)?;
        return Ok(RandomNetwork { gaussian: g, fock: f, n_modes: n });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub networks: usize,
    pub patterns: usize,
    /// Largest |Gaussian − Fock| over all patterns of all networks.
    pub max_pattern_deviation: f64,
    /// Largest |Σ patterns − 1| of the Gaussian distributions.
    pub max_sum_deviation: f64,
    /// Largest probability mass lost to the Fock photon bound.
    pub max_truncation: f64,
    /// Largest |Möbius − direct inclusion–exclusion| on spot-checked patterns.
    pub max_direct_deviation: f64,
    pub seconds: f64,
}

pub fn oracle_suite(networks: usize, seed: u64, cutoff: usize, bound: usize) -> Result<OracleReport> {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rep = OracleReport {
        networks,
        patterns: 0,
        max_pattern_deviation: 0.0,
        max_sum_deviation: 0.0,
        max_truncation: 0.0,
        max_direct_deviation: 0.0,
        seconds: 0.0,
    };
    for _ in 0..networks {
        let net = random_network(&mut rng, cutoff, bound)?;
        let det: Vec<usize> = (0..net.n_modes).collect();
        let gd = all_pattern_distribution(&net.gaussian, &det)?;
        let fd = net.fock.pattern_distribution(&det)?;
        rep.patterns += gd.len();
        for (a, b) in gd.iter().zip(&fd) {
            rep.max_pattern_deviation = rep.max_pattern_deviation.max((a - b).abs());
        }
        rep.max_sum_deviation = rep.max_sum_deviation.max((gd.iter().sum::<f64>() - 1.0).abs());
        rep.max_truncation = rep.max_truncation.max(1.0 - net.fock.norm_sqr());
        for _ in 0..3 {
            let mask: usize = rng.gen_range(0..gd.len());
            let clicked: Vec<usize> = det.iter().copied().filter(|&m| mask >> m & 1 == 1).collect();
            let silent: Vec<usize> = det.iter().copied().filter(|&m| mask >> m & 1 == 0).collect();
            let p = click_probability(&net.gaussian, &clicked, &silent)?;
            rep.max_direct_deviation = rep.max_direct_deviation.max((p - gd[mask]).abs());
        }
    }
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

/// Vacuum inputs: every probability is exactly 0 or 1.
pub fn vacuum_suite(max_modes: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=max_modes {
        let st = GaussianState::vacuum(n)?;
        let det: Vec<usize> = (0..n).collect();
        let dist = all_pattern_distribution(&st, &det)?;
        worst = worst.max((dist[0] - 1.0).abs());
        for &p in &dist[1..] {
            worst = worst.max(p.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeraldTiming {
    pub d: usize,
    pub heralds: usize,
    pub search_seconds: f64,
    pub joint_seconds: f64,
    /// Σ p[a][b] − 1 over all heralds.
    pub max_normalization_error: f64,
}

/// Herald search plus one joint distribution per herald on a d = 4 TMS
/// network at moderate squeezing.
pub fn d4_suite() -> Result<HeraldTiming> {
    let t0 = Instant::now();
    let hs = herald_set(4, Default::default())?;
    let search = t0.elapsed().as_secs_f64();
    let mut cfg = NetworkConfig::new(4, 4, AncillaKind::Tms);
    cfg.s = 0.3;
    cfg.xi = 0.5;
    let net = build_network(&cfg)?;
    let t1 = Instant::now();
    let mut err = 0.0f64;
    for h in &hs.perfect {
        let j = joint_outcome_distribution(&net, h)?;
        err = err.max((j.total() - 1.0).abs());
    }
    Ok(HeraldTiming {
        d: 4,
        heralds: hs.perfect.len(),
        search_seconds: search,
        joint_seconds: t1.elapsed().as_secs_f64(),
        max_normalization_error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_error;

    #[test]
    fn haar_is_unitary() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in 1..6 {
            assert!(unitarity_error(&haar_unitary(n, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn small_suite_agrees() {
        let r = oracle_suite(5, 11, 12, 12).unwrap();
        assert!(r.max_truncation < 1e-9, "{r:?}");
        assert!(r.max_pattern_deviation < 1e-8, "{r:?}");
        assert!(r.max_sum_deviation < 1e-9, "{r:?}");
        assert!(r.max_direct_deviation < 1e-12, "{r:?}");
    }

    #[test]
    fn vacuum_is_exact() {
        assert_eq!(vacuum_suite(4).unwrap(), 0.0);
    }

    #[test]
    fn photon_bound_respected() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10 {
            let net = random_network(&mut rng, 12, 12).unwrap();
            assert!(net.gaussian.mode_photon_numbers().iter().all(|&m| m <= 0.5));
        }
    }
}
