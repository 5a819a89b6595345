//! Threshold-detector statistics of Gaussian states.
//!
//! A click pattern with clicked set C and silent set N has probability
//! Σ_{Z⊆C} (−1)^{|Z|} P_vac(N ∪ Z). Each vacuum overlap is evaluated around
//! the identity (see `ln_vacuum`) and the alternating sum runs over
//! `expm1` of the log-overlaps, so the O(1) part of every term cancels
//! exactly instead of numerically. That keeps relative accuracy for the
//! 10⁻¹⁵-scale herald probabilities of weak sources.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::{build_network_uncorrected, AncillaKind, CompiledNetwork, NetworkConfig, NetworkLayout, Topology};
use crate::dd::Dd;
use crate::error::{invalid, Error, Result};
use crate::fock::FockState;
use crate::gaussian::GaussianState;
use crate::{CMat, C64};

pub const DEFAULT_FIDELITY_THRESHOLD: f64 = 1.0 - 1e-6;
const NEGATIVE_SLACK: f64 = 1e-9;

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

/// ln P_vac over `modes` from the excess covariance X = V − I.
///
/// With Y = X/2, (V + I)/2 = I + Y. The Cholesky factor is carried as
/// I + K with K small, so ln det = 2 Σ ln(1 + K_ii) keeps the relative
/// precision of X even when the overlap is 1 − 10⁻¹².
fn ln_vacuum(x: &DMatrix<f64>, disp: &DVector<f64>, modes: &[usize], k: &mut Vec<f64>, w: &mut Vec<f64>) -> Result<f64> {
    let n = 2 * modes.len();
    if n == 0 {
        return Ok(0.0);
    }
    k.clear();
    k.resize(n * n, 0.0);
    w.clear();
    w.resize(n, 0.0);
    let q = |i: usize| 2 * modes[i / 2] + (i % 2);
    let mut logdet = 0.0;
    for i in 0..n {
        let qi = q(i);
        let (ri, _) = k.split_at_mut(i * n + n);
        let row_i = &ri[i * n..i * n + i];
        let t = 0.5 * x[(qi, qi)] - row_i.iter().map(|v| v * v).sum::<f64>();
        if !(1.0 + t > 0.0) {
            return Err(Error::Numerical("V + I is not positive definite".into()));
        }
        let kii = t / ((1.0 + t).sqrt() + 1.0);
        k[i * n + i] = kii;
        logdet += 2.0 * kii.ln_1p();
        let row_i: Vec<f64> = k[i * n..i * n + i].to_vec();
        for r in i + 1..n {
            let dot: f64 = k[r * n..r * n + i].iter().zip(&row_i).map(|(a, b)| a * b).sum();
            k[r * n + i] = (0.5 * x[(q(r), qi)] - dot) / (1.0 + kii);
        }
    }
    // |L⁻¹δ|² with L = I + K
    let mut quad = 0.0;
    for i in 0..n {
        let dot: f64 = k[i * n..i * n + i].iter().zip(&w[..i]).map(|(a, b)| a * b).sum();
        let wi = (disp[q(i)] - dot) / (1.0 + k[i * n + i]);
        w[i] = wi;
        quad += wi * wi;
    }
    Ok(-0.5 * logdet - 0.25 * quad)
}

fn check_modes(state: &GaussianState, modes: &[usize]) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= state.n_modes() {
            return invalid(format!("mode {m} out of range"));
        }
        if modes[..i].contains(&m) {
            return invalid(format!("mode {m} listed twice"));
        }
    }
    Ok(())
}

/// exp(−½ δᵀ(V+I)⁻¹δ) / √det((V+I)/2) on the subset; the empty subset gives 1.
pub fn vacuum_probability(state: &GaussianState, subset: &[usize]) -> Result<f64> {
    check_modes(state, subset)?;
    let (mut k, mut w) = (Vec::new(), Vec::new());
    Ok(ln_vacuum(state.excess(), state.displacement(), subset, &mut k, &mut w)?.exp())
}

fn finish(p: f64) -> Result<f64> {
    if p < -NEGATIVE_SLACK || !p.is_finite() {
        return Err(Error::Numerical(format!("click probability {p:.3e} is negative beyond tolerance")));
    }
    Ok(p.max(0.0))
}

/// Click pattern over an ordered detector list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ClickPattern {
    pub detectors: Vec<usize>,
    pub clicks: Vec<bool>,
}

impl ClickPattern {
    pub fn new(detectors: Vec<usize>, clicks: Vec<bool>) -> Result<Self> {
        if detectors.len() != clicks.len() {
            return invalid(format!("pattern has {} entries for {} detectors", clicks.len(), detectors.len()));
        }
        Ok(Self { detectors, clicks })
    }

    pub fn clicked(&self) -> Vec<usize> {
        self.detectors.iter().zip(&self.clicks).filter(|(_, &c)| c).map(|(&m, _)| m).collect()
    }

    pub fn silent(&self) -> Vec<usize> {
        self.detectors.iter().zip(&self.clicks).filter(|(_, &c)| !c).map(|(&m, _)| m).collect()
    }
}

pub fn click_pattern_probability(state: &GaussianState, pattern: &ClickPattern) -> Result<f64> {
    click_probability(state, &pattern.clicked(), &pattern.silent())
}

/// Probability that every mode in `clicked` fires and every mode in
/// `silent` stays dark; unlisted modes are not measured.
///
/// The state is first conditioned on the silent set (one double-precision
/// Schur complement shared by every term), then the alternating sum over
/// subsets of `clicked` runs in double-double. Subsets are visited depth
/// first so each one extends its parent's Cholesky factor by two rows.
pub fn click_probability(state: &GaussianState, clicked: &[usize], silent: &[usize]) -> Result<f64> {
    let mut all = silent.to_vec();
    all.extend_from_slice(clicked);
    check_modes(state, &all)?;
    if clicked.is_empty() {
        return vacuum_probability(state, silent);
    }
    if clicked.len() > 40 {
        return invalid("more than 40 clicked modes");
    }
    let (ln_silent, y, delta) = condition_on_silent(state, clicked, silent)?;
    let c = clicked.len();
    let branch = |m: usize| -> Result<Dd> {
        let mut f = Factor::new(&y, &delta);
        let mut acc = Dd::ZERO;
        f.descend(m, Dd::ZERO, Dd::ZERO, false, &mut acc)?;
        Ok(acc)
    };
    let parts: Vec<Result<Dd>> = if c >= 12 {
        (0..c).into_par_iter().map(branch).collect()
    } else {
        (0..c).map(branch).collect()
    };
    let mut acc = Dd::ZERO;
    for p in parts {
        acc = acc + p?;
    }
    finish(ln_silent.exp() * acc.to_f64())
}

/// ln P_vac(N) plus Y_c = Y_CC − Y_CN (I + Y_NN)⁻¹ Y_NC and the matching
/// conditional displacement, so that ln P_vac(N ∪ Z) = ln P_vac(N) + ℓ_c(Z).
fn condition_on_silent(state: &GaussianState, clicked: &[usize], silent: &[usize]) -> Result<(f64, DMatrix<f64>, DVector<f64>)> {
    let (x, disp) = (state.excess(), state.displacement());
    let quads = |modes: &[usize]| -> Vec<usize> { modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect() };
    let qc = quads(clicked);
    let qn = quads(silent);
    let mut y = DMatrix::from_fn(qc.len(), qc.len(), |i, j| 0.5 * x[(qc[i], qc[j])]);
    let mut delta = DVector::from_fn(qc.len(), |i, _| disp[qc[i]]);
    if qn.is_empty() {
        return Ok((0.0, y, delta));
    }
    let (mut k, mut w) = (Vec::new(), Vec::new());
    let ln_silent = ln_vacuum(x, disp, silent, &mut k, &mut w)?;
    let m = DMatrix::from_fn(qn.len(), qn.len(), |i, j| 0.5 * x[(qn[i], qn[j])] + if i == j { 1.0 } else { 0.0 });
    let chol = m.cholesky().ok_or_else(|| Error::Numerical("V + I is not positive definite".into()))?;
    let ync = DMatrix::from_fn(qn.len(), qc.len(), |i, j| 0.5 * x[(qn[i], qc[j])]);
    let sol = chol.solve(&ync);
    y -= ync.transpose() * &sol;
    let dn = DVector::from_fn(qn.len(), |i, _| disp[qn[i]]);
    delta -= sol.transpose() * dn;
    Ok((ln_silent, y, delta))
}

/// Growing identity-centred Cholesky factor I + K of I + Y restricted to
/// the quadratures pushed so far, with w = (I + K)⁻¹δ alongside.
struct Factor<'a> {
    y: &'a DMatrix<f64>,
    delta: &'a DVector<f64>,
    rows: Vec<Vec<Dd>>,
    quads: Vec<usize>,
    w: Vec<Dd>,
}

impl<'a> Factor<'a> {
    fn new(y: &'a DMatrix<f64>, delta: &'a DVector<f64>) -> Self {
        Self { y, delta, rows: Vec::new(), quads: Vec::new(), w: Vec::new() }
    }

    fn push(&mut self, r: usize) -> Result<(Dd, Dd)> {
        let p = self.rows.len();
        let mut row: Vec<Dd> = Vec::with_capacity(p + 1);
        for j in 0..p {
            let rj = &self.rows[j];
            let mut s = Dd::from(self.y[(r, self.quads[j])]);
            for l in 0..j {
                s = s - row[l] * rj[l];
            }
            row.push(s / (Dd::ONE + rj[j]));
        }
        let mut t = Dd::from(self.y[(r, r)]);
        for v in &row {
            t = t - *v * *v;
        }
        if !(1.0 + t.hi > 0.0) {
            return Err(Error::Numerical("V + I is not positive definite".into()));
        }
        let kii = t / ((Dd::ONE + t).sqrt() + Dd::ONE);
        let mut wr = Dd::from(self.delta[r]);
        for j in 0..p {
            wr = wr - row[j] * self.w[j];
        }
        let wr = wr / (Dd::ONE + kii);
        row.push(kii);
        self.rows.push(row);
        self.quads.push(r);
        self.w.push(wr);
        Ok((kii, wr))
    }

    fn pop(&mut self) {
        self.rows.pop();
        self.quads.pop();
        self.w.pop();
    }

    /// Adds clicked mode `m` to the current subset, accumulates its signed
    /// expm1 term and recurses into every larger index. `q` is the running
    /// quadratic form and `det` the running √det(I + Y) − 1.
    fn descend(&mut self, m: usize, q: Dd, det: Dd, odd: bool, acc: &mut Dd) -> Result<()> {
        let (k1, w1) = self.push(2 * m)?;
        let (k2, w2) = self.push(2 * m + 1)?;
        let q = q + w1 * w1 + w2 * w2;
        let det = det + k1 + det * k1;
        let det = det + k2 + det * k2;
        // e^ℓ − 1 with e^ℓ = e^{−q/4} / (1 + det)
        let term = (q.scale(-0.25).expm1() - det) / (Dd::ONE + det);
        let odd = !odd;
        *acc = if odd { *acc - term } else { *acc + term };
        let c = self.y.nrows() / 2;
        for next in m + 1..c {
            self.descend(next, q, det, odd, acc)?;
        }
        self.pop();
        self.pop();
        Ok(())
    }
}

/// Exhaustive distribution over `detectors`, indexed by click bitmask
/// (bit i ↔ detectors[i]). All 2ⁿ overlaps once, then a subset Möbius
/// transform.
pub fn all_pattern_distribution(state: &GaussianState, detectors: &[usize]) -> Result<Vec<f64>> {
    let n = detectors.len();
    if n > 22 {
        return invalid(format!("{n} detectors exceed the exhaustive-enumeration limit of 22"));
    }
    check_modes(state, detectors)?;
    let (x, disp) = (state.excess(), state.displacement());
    // h[Y] = expm1 ln P_vac(detectors \ Y)
    let h: Vec<Result<f64>> = (0..1usize << n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(k, w, modes), y| {
                modes.clear();
                modes.extend((0..n).filter(|i| y >> i & 1 == 0).map(|i| detectors[i]));
                Ok(ln_vacuum(x, disp, modes, k, w)?.exp_m1())
            },
        )
        .collect();
    let mut h: Vec<f64> = h.into_iter().collect::<Result<_>>()?;
    for i in 0..n {
        let bit = 1usize << i;
        for s in 0..1usize << n {
            if s & bit != 0 {
                h[s] -= h[s ^ bit];
            }
        }
    }
    h[0] += 1.0;
    h.into_iter().map(finish).collect()
}

/// One heralding pattern: which BSM port fires in which output group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeraldPattern {
    /// (group, port) pairs, sorted.
    pub clicks: Vec<(usize, usize)>,
    /// Bob outcome b that pairs with Alice outcome a on the raw network.
    pub permutation: Vec<usize>,
    /// Best fidelity to a maximally entangled state over Bob phases and
    /// relabelings.
    pub fidelity: f64,
    /// Fidelity to Σ|mm⟩/√d after the class correction.
    pub corrected_fidelity: f64,
    /// Projection weight in the ideal-input expansion.
    pub weight: f64,
}

impl HeraldPattern {
    pub fn bsm_modes(&self, layout: &NetworkLayout) -> Vec<usize> {
        self.clicks.iter().map(|&(g, p)| layout.bsm_output[g][p]).collect()
    }

    /// Modes that must click: the BSM ports plus every HSPS herald.
    pub fn clicked_modes(&self, layout: &NetworkLayout) -> Vec<usize> {
        let mut m = self.bsm_modes(layout);
        m.extend(&layout.hsps_herald);
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HeraldSet {
    pub d: usize,
    pub topology: Topology,
    /// Patterns that all herald one and the same maximally entangled state.
    pub perfect: Vec<HeraldPattern>,
    /// Other maximally entangled heralds (a different Bell state each class).
    pub other_maxent: Vec<HeraldPattern>,
    /// Bob's d×d correction for the perfect class.
    #[serde(skip)]
    pub correction: CMat,
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; d], &mut out);
    out
}

/// max over Bob permutations π and diagonal phases φ of ⟨Φ|ρ|Φ⟩ with
/// |Φ⟩ = Σ_a e^{iφ_a}|a, π(a)⟩/√d.
pub fn entangled_fidelity(rho: &CMat, d: usize) -> Result<f64> {
    if rho.nrows() != d * d || !rho.is_square() {
        return invalid(format!("density matrix must be {0}×{0}", d * d));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return invalid(format!("density matrix trace {tr} is not 1"));
    }
    let mut best: f64 = 0.0;
    for perm in permutations(d) {
        let m = CMat::from_fn(d, d, |a, b| rho[(a * d + perm[a], b * d + perm[b])] / d as f64);
        best = best.max(max_phase_form(&m));
    }
    Ok(best.clamp(0.0, 1.0))
}

/// max over unimodular v of v†Mv for Hermitian M, by coordinate ascent
/// started from the leading eigenvector's phases.
fn max_phase_form(m: &CMat) -> f64 {
    let d = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.imax();
    let mut v: Vec<C64> = (0..d)
        .map(|a| {
            let z = eig.eigenvectors[(a, top)];
            if z.norm() > 1e-300 {
                z / z.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    let value = |v: &[C64]| -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                s += v[a].conj() * m[(a, b)] * v[b];
            }
        }
        s.re
    };
    let mut cur = value(&v);
    for _ in 0..200 {
        for a in 0..d {
            let mut f = C64::new(0.0, 0.0);
            for b in 0..d {
                if b != a {
                    f += m[(a, b)] * v[b];
                }
            }
            if f.norm() > 1e-300 {
                v[a] = f / f.norm();
            }
        }
        let next = value(&v);
        if next - cur <= 1e-15 {
            cur = cur.max(next);
            break;
        }
        cur = next;
    }
    cur
}

fn leading_vector(rho: &CMat) -> nalgebra::DVector<C64> {
    let eig = nalgebra::SymmetricEigen::new(rho.clone());
    eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned()
}

/// Bob unitary V with (I ⊗ V) ψ ∝ Σ|mm⟩ for a maximally entangled ψ.
fn bob_correction(psi: &nalgebra::DVector<C64>, d: usize) -> CMat {
    let p = CMat::from_fn(d, d, |a, b| psi[a * d + b]);
    let sd = (d as f64).sqrt();
    let mut v = p.map(|z| z.conj() * sd);
    // strip the global phase
    let (mut best, mut ph) = (0.0, C64::new(1.0, 0.0));
    for z in v.iter() {
        if z.norm() > best + 1e-12 {
            best = z.norm();
            ph = z / z.norm();
        }
    }
    v /= ph;
    v
}

fn corrected_fidelity(rho: &CMat, v: &CMat, d: usize) -> f64 {
    let full = CMat::identity(d, d).kronecker(v);
    let r = &full * rho * full.adjoint();
    let mut s = C64::new(0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            s += r[(a * d + a, b * d + b)];
        }
    }
    (s.re / d as f64).clamp(0.0, 1.0)
}

/// Exhaustive search over d-click BSM patterns with exact single-photon
/// inputs. Patterns whose idler state is maximally entangled are grouped by
/// the state they herald; the largest group (earliest pattern on ties) is the
/// perfect set.
pub fn herald_search(d: usize, topology: Topology, threshold: f64) -> Result<HeraldSet> {
    if !(2..=4).contains(&d) {
        return invalid(format!("herald search supports d = 2, 3, 4 (got {d})"));
    }
    let ancilla = if d == 2 { AncillaKind::Wcs } else { AncillaKind::IdealOracle };
    let cfg = NetworkConfig { s: 0.01, topology, ..NetworkConfig::new(d, d, ancilla) };
    let net = build_network_uncorrected(&cfg)?;
    // d + 2 photons: d BSM clicks plus one per user, nothing more
    let fock = FockState::expand(&net, 2, d + 2)?;
    let states = fock.herald_states(&net.layout, d);

    struct Cand {
        modes: Vec<usize>,
        rho: CMat,
        psi: nalgebra::DVector<C64>,
        weight: f64,
        fidelity: f64,
    }
    let mut classes: Vec<Vec<Cand>> = Vec::new();
    for (modes, (rho, weight)) in states {
        if weight <= 0.0 {
            continue;
        }
        let fidelity = entangled_fidelity(&rho, d)?;
        if fidelity < threshold {
            continue;
        }
        let psi = leading_vector(&rho);
        let cand = Cand { modes, rho, psi, weight, fidelity };
        let home = classes.iter_mut().find(|c| {
            let r = &c[0].rho;
            (r * &cand.rho).trace().re >= threshold
        });
        match home {
            Some(c) => c.push(cand),
            None => classes.push(vec![cand]),
        }
    }
    if classes.is_empty() {
        return Err(Error::NoHerald(d));
    }
    let mut best = 0;
    for (i, c) in classes.iter().enumerate() {
        if c.len() > classes[best].len() {
            best = i;
        }
    }
    let correction = bob_correction(&classes[best][0].psi, d);
    let locate = |m: usize| -> (usize, usize) {
        for (g, ports) in net.layout.bsm_output.iter().enumerate() {
            if let Some(p) = ports.iter().position(|&x| x == m) {
                return (g, p);
            }
        }
        unreachable!("herald mode outside the BSM outputs")
    };
    let to_pattern = |c: &Cand| -> HeraldPattern {
        let mut clicks: Vec<(usize, usize)> = c.modes.iter().map(|&m| locate(m)).collect();
        clicks.sort_unstable();
        let permutation = (0..d)
            .map(|a| (0..d).max_by(|&x, &y| c.psi[a * d + x].norm().total_cmp(&c.psi[a * d + y].norm())).unwrap())
            .collect();
        HeraldPattern {
            clicks,
            permutation,
            fidelity: c.fidelity,
            corrected_fidelity: corrected_fidelity(&c.rho, &correction, d),
            weight: c.weight,
        }
    };
    let perfect: Vec<HeraldPattern> = classes[best].iter().map(to_pattern).collect();
    let other_maxent = classes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .flat_map(|(_, c)| c.iter().map(to_pattern))
        .collect();
    Ok(HeraldSet { d, topology, perfect, other_maxent, correction })
}

type HeraldCache = Mutex<HashMap<(usize, Topology), Arc<HeraldSet>>>;

/// Cached [`herald_search`] at the default threshold.
pub fn herald_set(d: usize, topology: Topology) -> Result<Arc<HeraldSet>> {
    static CACHE: OnceLock<HeraldCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(h) = cache.lock().unwrap().get(&(d, topology)) {
        return Ok(h.clone());
    }
    let h = Arc::new(herald_search(d, topology, DEFAULT_FIDELITY_THRESHOLD)?);
    cache.lock().unwrap().insert((d, topology), h.clone());
    Ok(h)
}

/// Conditional user statistics given a herald. Index d stands for ⊥ (no
/// click or several clicks among that user's idler detectors).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    pub d: usize,
    pub p: Vec<Vec<f64>>,
    pub accept_probability: f64,
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// Bob's outcome b is renamed perm[b]; ⊥ stays.
    pub fn relabel_bob(&self, perm: &[usize]) -> Self {
        let d = self.d;
        let mut p = vec![vec![0.0; d + 1]; d + 1];
        for a in 0..=d {
            for b in 0..=d {
                let nb = if b == d { d } else { perm[b] };
                p[a][nb] = self.p[a][b];
            }
        }
        Self { d, p, accept_probability: self.accept_probability }
    }
}

pub fn joint_outcome_distribution(net: &CompiledNetwork, herald: &HeraldPattern) -> Result<JointDistribution> {
    let state = net.gaussian_output()?;
    let lay = &net.layout;
    let d = lay.d;
    let herald_on = herald.clicked_modes(lay);
    let bsm_off: Vec<usize> = lay.bsm_modes().into_iter().filter(|m| !herald_on.contains(m)).collect();

    let accept = click_probability(state, &herald_on, &bsm_off)?;
    if accept < 1e-300 {
        return Err(Error::Degenerate(format!("herald probability {accept:.3e} is zero")));
    }
    let single = |idlers: &[usize], i: usize, clicked: &mut Vec<usize>, silent: &mut Vec<usize>| {
        clicked.push(idlers[i]);
        silent.extend(idlers.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &m)| m));
    };

    let mut raw = vec![vec![0.0; d + 1]; d + 1];
    for a in 0..d {
        for b in 0..d {
            let (mut c, mut s) = (herald_on.clone(), bsm_off.clone());
            single(&lay.alice_idler, a, &mut c, &mut s);
            single(&lay.bob_idler, b, &mut c, &mut s);
            raw[a][b] = click_probability(state, &c, &s)?;
        }
    }
    let mut alice = vec![0.0; d];
    let mut bob = vec![0.0; d];
    for i in 0..d {
        let (mut c, mut s) = (herald_on.clone(), bsm_off.clone());
        single(&lay.alice_idler, i, &mut c, &mut s);
        alice[i] = click_probability(state, &c, &s)?;
        let (mut c, mut s) = (herald_on.clone(), bsm_off.clone());
        single(&lay.bob_idler, i, &mut c, &mut s);
        bob[i] = click_probability(state, &c, &s)?;
    }
    // ⊥ entries by subtraction; differences below 1e-9 of the herald mass
    // are rounding and clamp to zero
    let slack = 1e-9 * accept;
    let clamp = |v: f64| -> Result<f64> {
        if v < -slack {
            Err(Error::Numerical(format!("negative outcome mass {v:.3e} (herald {accept:.3e})")))
        } else {
            Ok(v.max(0.0))
        }
    };
    let mut valid = Sum::default();
    for a in 0..d {
        let row: f64 = raw[a][..d].iter().sum();
        raw[a][d] = clamp(alice[a] - row)?;
        for b in 0..d {
            valid.add(raw[a][b]);
        }
    }
    for b in 0..d {
        let col: f64 = (0..d).map(|a| raw[a][b]).sum();
        raw[d][b] = clamp(bob[b] - col)?;
    }
    let mut rest = Sum::default();
    rest.add(accept);
    rest.add(-valid.value());
    for i in 0..d {
        rest.add(-raw[i][d]);
        rest.add(-raw[d][i]);
    }
    raw[d][d] = clamp(rest.value())?;
    let p = raw.iter().map(|row| row.iter().map(|v| v / accept).collect()).collect();
    Ok(JointDistribution { d, p, accept_probability: accept })
}
