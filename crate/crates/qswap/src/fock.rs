//! Truncated Fock-space simulator: the brute-force reference for the
//! Gaussian click statistics and the tool that finds heralding patterns.
//!
//! Occupations are packed four bits per mode into a `u128` (≤ 32 modes,
//! ≤ 15 photons in total). Interferometers are applied one two-mode rotation
//! at a time, which needs no permanents and is exact at fixed photon number.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::BuildHasherDefault;

use crate::circuits::{CompiledNetwork, NetworkLayout, PrepOp};
use crate::error::{invalid, Error, Result};
use crate::linalg::{two_mode_decomposition, TwoModeOp};
use crate::{CMat, C64};

type Amps = HashMap<u128, C64, BuildHasherDefault<DefaultHasher>>;

const BITS: u32 = 4;
const MAX_MODES: usize = 32;
const MAX_PHOTONS: usize = 15;

#[inline]
fn occ(key: u128, mode: usize) -> usize {
    ((key >> (BITS as usize * mode)) & 0xF) as usize
}

#[inline]
fn with_occ(key: u128, mode: usize, n: usize) -> u128 {
    let sh = BITS as usize * mode;
    (key & !(0xFu128 << sh)) | ((n as u128) << sh)
}

fn total(key: u128, n_modes: usize) -> usize {
    (0..n_modes).map(|m| occ(key, m)).sum()
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

#[derive(Debug, Clone)]
pub struct FockState {
    n_modes: usize,
    cutoff: usize,
    bound: usize,
    amps: Amps,
}

/// Default global photon bound: one herald plus one click per user, with a
/// two-photon margin.
pub fn default_photon_bound(d: usize) -> usize {
    2 * d + 2
}

impl FockState {
    pub fn vacuum(n_modes: usize, cutoff: usize, bound: usize) -> Result<Self> {
        if cutoff == 0 {
            return invalid("Fock cutoff must be at least 1");
        }
        if n_modes == 0 || n_modes > MAX_MODES {
            return invalid(format!("Fock oracle supports 1..={MAX_MODES} modes"));
        }
        if bound > MAX_PHOTONS {
            return invalid(format!("photon bound {bound} exceeds {MAX_PHOTONS}"));
        }
        let mut amps = Amps::default();
        amps.insert(0, C64::new(1.0, 0.0));
        Ok(Self { n_modes, cutoff, bound, amps })
    }

    /// Expand a compiled network's resources and push them through its
    /// interferometer stack.
    pub fn expand(net: &CompiledNetwork, cutoff: usize, bound: usize) -> Result<Self> {
        if net.idler_loss.is_some() {
            return Err(Error::Unsupported("the Fock oracle models lossless networks only".into()));
        }
        let mut st = Self::vacuum(net.layout.n_modes, cutoff, bound)?;
        for op in &net.prep {
            st = match *op {
                PrepOp::Tms { a, b, s } => st.add_tms(a, b, s)?,
                PrepOp::Coherent { mode, alpha } => st.add_coherent(mode, alpha)?,
                PrepOp::SinglePhoton { mode } => st.add_photon(mode)?,
            };
        }
        for layer in &net.layers {
            st = st.interfere(&layer.unitary, &layer.modes)?;
        }
        Ok(st)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, occupation: &[usize]) -> C64 {
        if occupation.len() != self.n_modes || occupation.iter().any(|&n| n > MAX_PHOTONS) {
            return C64::new(0.0, 0.0);
        }
        let key = occupation.iter().enumerate().fold(0u128, |k, (m, &n)| with_occ(k, m, n));
        self.amps.get(&key).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut v: Vec<(u128, f64)> = self.amps.iter().map(|(&k, a)| (k, a.norm_sqr())).collect();
        v.sort_unstable_by_key(|e| e.0);
        v.iter().map(|e| e.1).sum()
    }

    fn fresh(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return invalid(format!("mode {mode} out of range"));
        }
        if self.amps.keys().any(|&k| occ(k, mode) != 0) {
            return invalid(format!("mode {mode} is already populated"));
        }
        Ok(())
    }

    /// Σ tanhⁿs / cosh s |n, n⟩ on two vacuum modes.
    pub fn add_tms(&self, a: usize, b: usize, s: f64) -> Result<Self> {
        self.fresh(a)?;
        self.fresh(b)?;
        if a == b {
            return invalid("two-mode squeezer needs distinct modes");
        }
        let (t, c) = (s.tanh(), s.cosh());
        let coef: Vec<f64> = (0..=self.cutoff).map(|n| t.powi(n as i32) / c).collect();
        let mut out = Amps::default();
        for (&k, &amp) in &self.amps {
            let tot = total(k, self.n_modes);
            for (n, &cf) in coef.iter().enumerate() {
                if tot + 2 * n > self.bound || (n > 0 && cf == 0.0) {
                    break;
                }
                out.insert(with_occ(with_occ(k, a, n), b, n), amp * cf);
            }
        }
        Ok(Self { amps: out, ..self.clone_meta() })
    }

    /// Coherent state Σ αⁿ e^{−|α|²/2}/√n! |n⟩ on a vacuum mode.
    pub fn add_coherent(&self, mode: usize, alpha: C64) -> Result<Self> {
        self.fresh(mode)?;
        let f = factorials(self.cutoff);
        let pre = (-alpha.norm_sqr() / 2.0).exp();
        let coef: Vec<C64> = (0..=self.cutoff).map(|n| alpha.powu(n as u32) * pre / f[n].sqrt()).collect();
        let mut out = Amps::default();
        for (&k, &amp) in &self.amps {
            let tot = total(k, self.n_modes);
            for (n, &cf) in coef.iter().enumerate() {
                if tot + n > self.bound || (n > 0 && cf.norm_sqr() == 0.0) {
                    break;
                }
                out.insert(with_occ(k, mode, n), amp * cf);
            }
        }
        Ok(Self { amps: out, ..self.clone_meta() })
    }

    pub fn add_photon(&self, mode: usize) -> Result<Self> {
        self.fresh(mode)?;
        let mut out = Amps::default();
        for (&k, &amp) in &self.amps {
            if total(k, self.n_modes) < self.bound {
                out.insert(with_occ(k, mode, 1), amp);
            }
        }
        Ok(Self { amps: out, ..self.clone_meta() })
    }

    fn clone_meta(&self) -> Self {
        Self { n_modes: self.n_modes, cutoff: self.cutoff, bound: self.bound, amps: Amps::default() }
    }

    /// Passive transformation with a_k† ↦ Σ_l U[l][k] a_l† on the listed modes.
    pub fn interfere(&self, u: &CMat, modes: &[usize]) -> Result<Self> {
        if u.nrows() != modes.len() || !u.is_square() {
            return invalid("unitary size does not match the mode list");
        }
        if modes.iter().any(|&m| m >= self.n_modes) {
            return invalid("mode out of range");
        }
        let (phases, ops) = two_mode_decomposition(u);
        let mut amps = self.amps.clone();
        for (loc, ph) in phases.iter().enumerate() {
            let m = modes[loc];
            if (*ph - C64::new(1.0, 0.0)).norm() == 0.0 {
                continue;
            }
            for (k, a) in amps.iter_mut() {
                *a *= ph.powu(occ(*k, m) as u32);
            }
        }
        for op in &ops {
            amps = apply_two_mode(&amps, modes[op.i], modes[op.j], op, self.bound);
        }
        Ok(Self { amps, ..self.clone_meta() })
    }

    /// Probability of a threshold pattern: silent modes empty, clicked modes
    /// occupied, every other mode unconstrained.
    pub fn click_probability(&self, clicked: &[usize], silent: &[usize]) -> f64 {
        let mut v: Vec<(u128, f64)> = self
            .amps
            .iter()
            .filter(|(&k, _)| silent.iter().all(|&m| occ(k, m) == 0) && clicked.iter().all(|&m| occ(k, m) > 0))
            .map(|(&k, a)| (k, a.norm_sqr()))
            .collect();
        v.sort_unstable_by_key(|e| e.0);
        v.iter().map(|e| e.1).sum()
    }

    /// Full threshold-pattern distribution over `detectors`, indexed by the
    /// click bitmask (bit i ↔ detectors[i]). One pass over the amplitudes.
    pub fn pattern_distribution(&self, detectors: &[usize]) -> Result<Vec<f64>> {
        if detectors.len() > 22 {
            return invalid("at most 22 detectors for an exhaustive distribution");
        }
        let mut entries: Vec<(u128, f64)> = self.amps.iter().map(|(&k, a)| (k, a.norm_sqr())).collect();
        entries.sort_unstable_by_key(|e| e.0);
        let mut dist = vec![0.0; 1 << detectors.len()];
        for (k, p) in entries {
            let mut mask = 0usize;
            for (i, &m) in detectors.iter().enumerate() {
                if occ(k, m) > 0 {
                    mask |= 1 << i;
                }
            }
            dist[mask] += p;
        }
        Ok(dist)
    }

    /// Two-qudit idler state given a herald: `herald_clicked` modes occupied,
    /// the other BSM outputs empty, exactly one photon among Alice's idlers
    /// and one among Bob's. Returns the normalized d²×d² density matrix
    /// (index a·d + b) and the projection weight.
    pub fn conditional_two_qudit_state(&self, herald_clicked: &[usize], layout: &NetworkLayout) -> Result<(CMat, f64)> {
        let mut heralded: Vec<usize> = herald_clicked.iter().copied().filter(|m| !layout.hsps_herald.contains(m)).collect();
        heralded.sort_unstable();
        let buckets = self.idler_buckets(layout, |clicks| clicks == heralded.as_slice());
        match buckets.into_iter().next() {
            Some((_, (rho, w))) if w > 0.0 => Ok((rho, w)),
            _ => Err(Error::Degenerate("herald has zero projection weight".into())),
        }
    }

    /// Conditional idler states for every herald with exactly `n_clicks`
    /// occupied BSM outputs (HSPS herald modes must all fire), keyed by the
    /// sorted clicked BSM modes.
    pub fn herald_states(&self, layout: &NetworkLayout, n_clicks: usize) -> BTreeMap<Vec<usize>, (CMat, f64)> {
        self.idler_buckets(layout, |clicks| clicks.len() == n_clicks)
    }

    fn idler_buckets(
        &self,
        layout: &NetworkLayout,
        accept: impl Fn(&[usize]) -> bool,
    ) -> BTreeMap<Vec<usize>, (CMat, f64)> {
        let d = layout.d;
        let bsm = layout.bsm_modes();
        let mut idler_mask = 0u128;
        for &m in layout.alice_idler.iter().chain(&layout.bob_idler) {
            idler_mask |= 0xFu128 << (BITS as usize * m);
        }
        // herald -> environment -> amplitude vector over (a, b)
        let mut groups: BTreeMap<Vec<usize>, BTreeMap<u128, Vec<C64>>> = BTreeMap::new();
        for (&k, &amp) in &self.amps {
            if layout.hsps_herald.iter().any(|&m| occ(k, m) == 0) {
                continue;
            }
            let a: Vec<usize> = (0..d).filter(|&i| occ(k, layout.alice_idler[i]) > 0).collect();
            let b: Vec<usize> = (0..d).filter(|&i| occ(k, layout.bob_idler[i]) > 0).collect();
            if a.len() != 1 || b.len() != 1 || occ(k, layout.alice_idler[a[0]]) != 1 || occ(k, layout.bob_idler[b[0]]) != 1 {
                continue;
            }
            let mut clicks: Vec<usize> = bsm.iter().copied().filter(|&m| occ(k, m) > 0).collect();
            clicks.sort_unstable();
            if !accept(&clicks) {
                continue;
            }
            let env = k & !idler_mask;
            let v = groups
                .entry(clicks)
                .or_default()
                .entry(env)
                .or_insert_with(|| vec![C64::new(0.0, 0.0); d * d]);
            v[a[0] * d + b[0]] += amp;
        }
        groups
            .into_iter()
            .map(|(clicks, envs)| {
                let mut rho = CMat::zeros(d * d, d * d);
                for v in envs.values() {
                    let col = nalgebra::DVector::from_column_slice(v);
                    rho += &col * col.adjoint();
                }
                let w = rho.trace().re;
                if w > 0.0 {
                    rho /= C64::new(w, 0.0);
                }
                (clicks, (rho, w))
            })
            .collect()
    }
}

fn two_mode_coefficients(g: &[[C64; 2]; 2], bound: usize) -> Vec<Vec<Vec<C64>>> {
    // coef[n][m][p]: |n, m⟩ ↦ Σ_p coef |p, n+m−p⟩
    let f = factorials(bound);
    let binom = |n: usize, k: usize| f[n] / (f[k] * f[n - k]);
    let mut out = vec![vec![Vec::new(); bound + 1]; bound + 1];
    for n in 0..=bound {
        for m in 0..=bound - n {
            let big = n + m;
            let mut c = vec![C64::new(0.0, 0.0); big + 1];
            for k in 0..=n {
                let t1 = g[0][0].powu(k as u32) * g[1][0].powu((n - k) as u32) * binom(n, k);
                for l in 0..=m {
                    let t2 = g[0][1].powu(l as u32) * g[1][1].powu((m - l) as u32) * binom(m, l);
                    c[k + l] += t1 * t2;
                }
            }
            let norm = (f[n] * f[m]).sqrt();
            for (p, v) in c.iter_mut().enumerate() {
                *v *= (f[p] * f[big - p]).sqrt() / norm;
            }
            out[n][m] = c;
        }
    }
    out
}

fn apply_two_mode(amps: &Amps, i: usize, j: usize, op: &TwoModeOp, bound: usize) -> Amps {
    let coef = two_mode_coefficients(&op.g, bound);
    let mut out = Amps::with_capacity_and_hasher(amps.len() * 2, Default::default());
    for (&k, &amp) in amps {
        let (n, m) = (occ(k, i), occ(k, j));
        if n + m == 0 {
            *out.entry(k).or_default() += amp;
            continue;
        }
        for (p, &c) in coef[n][m].iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let key = with_occ(with_occ(k, i, p), j, n + m - p);
            *out.entry(key).or_default() += amp * c;
        }
    }
    out.retain(|_, a| a.norm_sqr() != 0.0);
    out
}
