//! Gaussian pipeline against the truncated Fock expansion of the same
//! network.

use qswap::circuits::{build_network, AncillaKind, Basis, CompiledNetwork, NetworkConfig};
use qswap::detection::{herald_set, joint_outcome_distribution, HeraldPattern, JointDistribution};
use qswap::fock::FockState;
use qswap::keyrate::secret_key_rate;

/// Joint outcome table built from Fock click probabilities, ⊥ by subtraction.
fn fock_joint(net: &CompiledNetwork, h: &HeraldPattern, fock: &FockState) -> JointDistribution {
    let lay = &net.layout;
    let d = lay.d;
    let on = h.clicked_modes(lay);
    let off: Vec<usize> = lay.bsm_modes().into_iter().filter(|m| !on.contains(m)).collect();
    let accept = fock.click_probability(&on, &off);
    let pick = |idlers: &[usize], i: usize, c: &mut Vec<usize>, s: &mut Vec<usize>| {
        c.push(idlers[i]);
        s.extend(idlers.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &m)| m));
    };
    let mut p = vec![vec![0.0; d + 1]; d + 1];
    for a in 0..d {
        for b in 0..d {
            let (mut c, mut s) = (on.clone(), off.clone());
            pick(&lay.alice_idler, a, &mut c, &mut s);
            pick(&lay.bob_idler, b, &mut c, &mut s);
            p[a][b] = fock.click_probability(&c, &s);
        }
    }
    for i in 0..d {
        let (mut c, mut s) = (on.clone(), off.clone());
        pick(&lay.alice_idler, i, &mut c, &mut s);
        p[i][d] = (fock.click_probability(&c, &s) - p[i][..d].iter().sum::<f64>()).max(0.0);
        let (mut c, mut s) = (on.clone(), off.clone());
        pick(&lay.bob_idler, i, &mut c, &mut s);
        p[d][i] = (fock.click_probability(&c, &s) - (0..d).map(|a| p[a][i]).sum::<f64>()).max(0.0);
    }
    let used: f64 = p.iter().flatten().sum();
    p[d][d] = (accept - used).max(0.0);
    for v in p.iter_mut().flatten() {
        *v /= accept;
    }
    JointDistribution { d, p, accept_probability: accept }
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn d2_config(theta: f64) -> NetworkConfig {
    let mut cfg = NetworkConfig::new(2, 2, AncillaKind::Wcs);
    cfg.s = 0.05;
    cfg.theta = theta;
    cfg
}

#[test]
fn d2_joint_tables_match_fock() {
    let hs = herald_set(2, Default::default()).unwrap();
    for theta in [0.0, 0.1] {
        for basis in [Basis::Key, Basis::Test] {
            let net = build_network(&d2_config(theta).with_basis(basis)).unwrap();
            let fock = FockState::expand(&net, 8, 10).unwrap();
            assert!(1.0 - fock.norm_sqr() < 1e-12, "{}", 1.0 - fock.norm_sqr());
            for h in &hs.perfect {
                let g = joint_outcome_distribution(&net, h).unwrap();
                let f = fock_joint(&net, h, &fock);
                assert!((g.accept_probability / f.accept_probability - 1.0).abs() < 1e-8);
                let (gx, fx): (Vec<f64>, Vec<f64>) = g.p.iter().flatten().zip(f.p.iter().flatten()).map(|(a, b)| (*a, *b)).unzip();
                assert!(correlation(&gx, &fx) >= 0.999);
                for (a, b) in gx.iter().zip(&fx) {
                    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn d2_rate_matches_fock_rate() {
    let hs = herald_set(2, Default::default()).unwrap();
    let cfg = d2_config(0.05);
    let mut tables = [Vec::new(), Vec::new()];
    let mut gauss = [Vec::new(), Vec::new()];
    for (i, basis) in [Basis::Key, Basis::Test].into_iter().enumerate() {
        let net = build_network(&cfg.with_basis(basis)).unwrap();
        let fock = FockState::expand(&net, 8, 10).unwrap();
        for h in &hs.perfect {
            tables[i].push(fock_joint(&net, h, &fock));
            gauss[i].push(joint_outcome_distribution(&net, h).unwrap());
        }
    }
    let clicks: Vec<_> = hs.perfect.iter().map(|h| h.clicks.clone()).collect();
    let oracle = secret_key_rate(&tables[0], &tables[1], &clicks, 2).unwrap();
    let ours = secret_key_rate(&gauss[0], &gauss[1], &clicks, 2).unwrap();
    let direct = qswap::keyrate::evaluate(&cfg).unwrap();
    assert_eq!(ours.bits_per_round, direct.bits_per_round);
    assert!((ours.conditional_rate - oracle.conditional_rate).abs() < 1e-6);
    assert!((ours.bits_per_round / oracle.bits_per_round - 1.0).abs() < 1e-6);
    assert!(ours.conditional_rate > 0.0 && ours.conditional_rate < 1.0);
}
