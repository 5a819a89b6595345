//! Mode layout, Gaussian resources and interferometer stack of the swapping
//! network.
//!
//! Alice and Bob each own d two-mode squeezers (signal m ↔ idler m). The
//! signals meet in a d²-output Bell-state measurement together with d−2
//! ancilla photons spread over the d path levels; idlers go through the
//! crosstalk channel and a basis choice before threshold detection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;
use crate::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaKind {
    /// Weak coherent state split over the levels (d = 3 only).
    Wcs,
    /// One two-mode squeezer feeding both ancilla inputs (d = 4).
    Tms,
    /// Heralded single photons, one squeezer plus herald detector per photon.
    Hsps,
    /// Exact single photons; Fock oracle only.
    IdealOracle,
}

impl AncillaKind {
    pub fn param_name(self) -> &'static str {
        match self {
            AncillaKind::Wcs => "alpha",
            _ => "xi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    #[default]
    Key,
    Test,
}

/// Which Bell-state measurement interferometer to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Per-level Fourier multiports for d = 2, 4 and the covariant
    /// nine-port for d = 3.
    #[default]
    Default,
    /// Per-level Fourier multiports for every d (no perfect heralds at d = 3).
    PerLevel,
    /// No mixing at all; a deliberately broken measurement.
    Unmixed,
}

impl Topology {
    fn resolve(self, d: usize) -> Topology {
        match (self, d) {
            (Topology::Default, 3) => Topology::Default,
            (Topology::Default, _) => Topology::PerLevel,
            (t, _) => t,
        }
    }
}

fn default_k() -> usize {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub d: usize,
    /// Subspace dimension; 0 means k = d.
    #[serde(default = "default_k")]
    pub k: usize,
    pub ancilla: AncillaKind,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub basis: Basis,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub topology: Topology,
}

impl NetworkConfig {
    pub fn new(d: usize, k: usize, ancilla: AncillaKind) -> Self {
        Self {
            d,
            k,
            ancilla,
            s: 0.0,
            xi: 0.0,
            alpha: 0.0,
            theta: 0.0,
            basis: Basis::Key,
            eta: None,
            topology: Topology::Default,
        }
    }

    pub fn subspace(&self) -> usize {
        if self.k == 0 {
            self.d
        } else {
            self.k
        }
    }

    pub fn ancilla_param(&self) -> f64 {
        match self.ancilla {
            AncillaKind::Wcs => self.alpha,
            _ => self.xi,
        }
    }

    pub fn set_ancilla_param(&mut self, v: f64) {
        match self.ancilla {
            AncillaKind::Wcs => self.alpha = v,
            _ => self.xi = v,
        }
    }

    /// True when the ancilla parameter has any effect (d > 2).
    pub fn uses_ancilla(&self) -> bool {
        self.d > 2
    }

    pub fn with_basis(&self, basis: Basis) -> Self {
        Self { basis, ..self.clone() }
    }

    /// Checks every field; the message names the offending ones.
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if !(2..=4).contains(&d) {
            return invalid(format!("field `d` = {d}: supported dimensions are 2, 3, 4"));
        }
        let k = self.subspace();
        if d % k != 0 || k < 2 {
            return invalid(format!("fields `k` = {k}, `d` = {d}: k must divide d and be at least 2"));
        }
        for (name, v) in [("s", self.s), ("xi", self.xi), ("alpha", self.alpha), ("theta", self.theta)] {
            if !v.is_finite() || v < 0.0 {
                return invalid(format!("field `{name}` = {v}: must be finite and non-negative"));
            }
        }
        if let Some(eta) = self.eta {
            if !(0.0..=1.0).contains(&eta) {
                return invalid(format!("field `eta` = {eta}: must lie in [0, 1]"));
            }
        }
        if d > 2 {
            match self.ancilla {
                AncillaKind::Wcs if d != 3 => {
                    return invalid(format!(
                        "fields `ancilla` = wcs, `d` = {d}: a coherent ancilla only works for d = 3"
                    ))
                }
                AncillaKind::Tms if d != 4 => {
                    return invalid(format!(
                        "fields `ancilla` = tms, `d` = {d}: one squeezer supplies exactly two ancilla photons (d = 4)"
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Where every role lives in the mode list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkLayout {
    pub d: usize,
    pub n_modes: usize,
    pub alice_signal: Vec<usize>,
    pub alice_idler: Vec<usize>,
    pub bob_signal: Vec<usize>,
    pub bob_idler: Vec<usize>,
    /// `ancilla[j][m]`: level-m path of ancilla input j.
    pub ancilla: Vec<Vec<usize>>,
    pub hsps_herald: Vec<usize>,
    /// `bsm_output[m][p]`: output port p of measurement group m.
    pub bsm_output: Vec<Vec<usize>>,
}

impl NetworkLayout {
    pub fn bsm_modes(&self) -> Vec<usize> {
        self.bsm_output.iter().flatten().copied().collect()
    }
}

/// State preparation step; each acts on modes still in vacuum.
#[derive(Debug, Clone, PartialEq)]
pub enum PrepOp {
    Tms { a: usize, b: usize, s: f64 },
    Coherent { mode: usize, alpha: C64 },
    SinglePhoton { mode: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub label: &'static str,
    pub modes: Vec<usize>,
    pub unitary: CMat,
}

#[derive(Debug, Clone)]
pub struct CompiledNetwork {
    pub config: NetworkConfig,
    pub layout: NetworkLayout,
    pub prep: Vec<PrepOp>,
    pub layers: Vec<Layer>,
    /// Uniform transmissivity on the idler modes, applied after all layers
    /// (it commutes with the passive idler optics).
    pub idler_loss: Option<f64>,
    pub detector_modes: Vec<usize>,
    /// Gaussian resources before any interferometer; `None` for exact ancillas.
    pub input: Option<GaussianState>,
    /// Gaussian state at the detectors.
    pub output: Option<GaussianState>,
}

impl CompiledNetwork {
    pub fn gaussian_output(&self) -> Result<&GaussianState> {
        self.output.as_ref().ok_or_else(|| {
            Error::Unsupported("exact single-photon ancillas have no Gaussian description".into())
        })
    }

    /// All layers composed into one n×n unitary.
    pub fn total_unitary(&self) -> CMat {
        let n = self.layout.n_modes;
        let mut acc = CMat::identity(n, n);
        for layer in &self.layers {
            acc = embed(&layer.unitary, &layer.modes, n) * acc;
        }
        acc
    }
}

pub fn embed(u: &CMat, modes: &[usize], n: usize) -> CMat {
    let mut e = CMat::identity(n, n);
    for (a, &ma) in modes.iter().enumerate() {
        for (b, &mb) in modes.iter().enumerate() {
            e[(ma, mb)] = u[(a, b)];
        }
    }
    e
}

pub fn dft_matrix(n: usize) -> Result<CMat> {
    if n == 0 {
        return invalid("DFT dimension must be positive");
    }
    let norm = (n as f64).sqrt();
    Ok(CMat::from_fn(n, n, |j, k| {
        C64::from_polar(1.0, 2.0 * PI * ((j * k) % n) as f64 / n as f64) / norm
    }))
}

/// exp(−iHθ) with H = Σ_i |i⟩⟨i+1 mod d| + h.c., summed literally
/// (so d = 2 gives H = 2X).
pub fn crosstalk_unitary(d: usize, theta: f64) -> Result<CMat> {
    if d < 2 {
        return invalid("crosstalk needs d ≥ 2");
    }
    if !theta.is_finite() || theta < 0.0 {
        return invalid(format!("crosstalk parameter {theta} must be finite and non-negative"));
    }
    let h = crosstalk_hamiltonian(d);
    let eig = nalgebra::SymmetricEigen::new(h);
    let q = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let ph = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * theta)));
    Ok(&q * ph * q.transpose())
}

pub fn crosstalk_hamiltonian(d: usize) -> nalgebra::DMatrix<f64> {
    let mut h = nalgebra::DMatrix::zeros(d, d);
    for i in 0..d {
        let j = (i + 1) % d;
        h[(i, j)] += 1.0;
        h[(j, i)] += 1.0;
    }
    h
}

pub fn measurement_basis_unitary(d: usize, k: usize, basis: Basis) -> Result<CMat> {
    if k == 0 || d % k != 0 {
        return invalid(format!("subspace dimension {k} does not divide {d}"));
    }
    match basis {
        Basis::Key => Ok(CMat::identity(d, d)),
        Basis::Test => {
            let f = dft_matrix(k)?;
            let mut u = CMat::zeros(d, d);
            for b in 0..d / k {
                u.view_mut((b * k, b * k), (k, k)).copy_from(&f);
            }
            Ok(u)
        }
    }
}

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Blocks W_k of the d = 3 covariant measurement. Block k acts on
/// (Alice level k, Bob level −k, ancilla Fourier mode k); row r of block k
/// feeds output port r of every group with Fourier weight ω^{nk}/√3.
/// Solved so that every group's three-click pattern projects the two
/// signal photons onto Σ_m |m⟩|m⟩ with equal weight.
#[rustfmt::skip]
const COVARIANT_D3: [[[C64; 3]; 3]; 3] = [
    [
        [c(1.30148746938673288e-01, 4.82798498692346978e-01), c(-2.97015184323854653e-01, -4.02180182204299463e-01), c(-5.75460646908989459e-01, -4.10907579040566073e-01)],
        [c(1.52918522514437882e-01, 5.93001623786476695e-01), c(-3.48683189400267102e-01, 5.03368294430198704e-01), c(4.73972404173849005e-01, -1.59234271852369852e-01)],
        [c(-3.09607889559571081e-03, 6.12309012905072558e-01), c(6.12194376019765230e-01, -1.70739826942423734e-02), c(-1.34824939047747200e-01, 4.81473621194543067e-01)],
    ],
    [
        [c(-2.96193447532768772e-01, -6.90798245392897581e-01), c(-8.92987145057274612e-02, 6.35897120949351802e-01), c(-4.69312295797696954e-03, -1.50684410453100548e-01)],
        [c(-1.47260560042036470e-01, 9.79411094780587854e-02), c(-9.00559980732607013e-02, -1.84714609248553485e-01), c(3.50188529417184924e-01, -8.96582562141448935e-01)],
        [c(5.15144866866834250e-01, 3.72041474128639749e-01), c(3.35648576729502823e-01, 6.57853368492244184e-01), c(1.71431800024063663e-01, -1.46256706213138965e-01)],
    ],
    [
        [c(-9.62198735366248670e-03, -7.51527992993947347e-01), c(6.41401692487867603e-01, 3.20452329025170957e-02), c(-1.40334729791189439e-01, 5.47378172949160163e-02)],
        [c(-4.59056391689993681e-01, 4.39508718173345470e-01), c(4.35101054003328880e-01, 5.96737730377304154e-01), c(-1.24009613066991847e-01, 1.87915102411958079e-01)],
        [c(1.59174811944972822e-01, 7.66536903633708300e-02), c(-1.23965224154043638e-01, -1.63709343263285401e-01), c(-8.46903684177169103e-01, 4.57573616866006339e-01)],
    ],
];

/// 9×9 measurement unitary on (A0,A1,A2,B0,B1,B2,C0,C1,C2), C the ancilla
/// level paths; output 3n + r is port r of group n.
pub fn covariant_bsm_d3() -> CMat {
    let d = 3;
    let w = |e: usize| C64::from_polar(1.0, 2.0 * PI * (e % d) as f64 / d as f64);
    let norm = (d as f64).sqrt();
    let mut u = CMat::zeros(9, 9);
    for n in 0..d {
        for r in 0..d {
            let row = d * n + r;
            for k in 0..d {
                let blk = &COVARIANT_D3[k];
                let ph = w(n * k) / norm;
                u[(row, k)] += ph * blk[r][0];
                u[(row, d + (d - k) % d)] += ph * blk[r][1];
                for l in 0..d {
                    // ancilla Fourier mode k in level basis: ω^{−kl}/√d
                    u[(row, 2 * d + l)] += ph * blk[r][2] * w(d * d - k * l) / norm;
                }
            }
        }
    }
    u
}

fn allocate_layout(config: &NetworkConfig) -> NetworkLayout {
    let d = config.d;
    let groups = if d == 2 {
        0
    } else {
        match config.ancilla {
            AncillaKind::Wcs => 1,
            AncillaKind::Tms => 2,
            AncillaKind::Hsps | AncillaKind::IdealOracle => d - 2,
        }
    };
    let heralds = if d > 2 && config.ancilla == AncillaKind::Hsps { d - 2 } else { 0 };
    let range = |start: usize| (start..start + d).collect::<Vec<_>>();
    let ancilla: Vec<Vec<usize>> = (0..groups).map(|j| range(4 * d + j * d)).collect();
    let hsps_herald: Vec<usize> = (0..heralds).map(|j| 4 * d + groups * d + j).collect();
    NetworkLayout {
        d,
        n_modes: 4 * d + groups * d + heralds,
        alice_signal: range(0),
        alice_idler: range(d),
        bob_signal: range(2 * d),
        bob_idler: range(3 * d),
        ancilla,
        hsps_herald,
        bsm_output: Vec::new(),
    }
}

/// Build the network without any herald-dependent correction on Bob's side.
/// Used for herald discovery; normal callers want [`build_network`].
pub fn build_network_uncorrected(config: &NetworkConfig) -> Result<CompiledNetwork> {
    compile(config, None)
}

/// Full network including Bob's fixed correction for the discovered herald
/// class, applied after the channel and before the basis choice.
pub fn build_network(config: &NetworkConfig) -> Result<CompiledNetwork> {
    config.validate()?;
    let heralds = crate::detection::herald_set(config.d, config.topology)?;
    compile(config, Some(&heralds.correction))
}

fn compile(config: &NetworkConfig, correction: Option<&CMat>) -> Result<CompiledNetwork> {
    config.validate()?;
    let d = config.d;
    let mut layout = allocate_layout(config);

    let mut prep = Vec::new();
    for m in 0..d {
        prep.push(PrepOp::Tms { a: layout.alice_signal[m], b: layout.alice_idler[m], s: config.s });
    }
    for m in 0..d {
        prep.push(PrepOp::Tms { a: layout.bob_signal[m], b: layout.bob_idler[m], s: config.s });
    }
    if d > 2 {
        match config.ancilla {
            AncillaKind::Wcs => prep.push(PrepOp::Coherent {
                mode: layout.ancilla[0][0],
                alpha: C64::new(config.alpha, 0.0),
            }),
            AncillaKind::Tms => prep.push(PrepOp::Tms {
                a: layout.ancilla[0][0],
                b: layout.ancilla[1][0],
                s: config.xi,
            }),
            AncillaKind::Hsps => {
                for (j, grp) in layout.ancilla.iter().enumerate() {
                    prep.push(PrepOp::Tms { a: layout.hsps_herald[j], b: grp[0], s: config.xi });
                }
            }
            AncillaKind::IdealOracle => {
                for grp in &layout.ancilla {
                    prep.push(PrepOp::SinglePhoton { mode: grp[0] });
                }
            }
        }
    }

    let mut layers = Vec::new();
    let fd = dft_matrix(d)?;
    for grp in &layout.ancilla {
        layers.push(Layer { label: "ancilla-split", modes: grp.clone(), unitary: fd.clone() });
    }

    let level_group = |m: usize| -> Vec<usize> {
        let mut g = vec![layout.alice_signal[m], layout.bob_signal[m]];
        g.extend(layout.ancilla.iter().map(|grp| grp[m]));
        g
    };
    match config.topology.resolve(d) {
        Topology::Default => {
            // d = 3 covariant nine-port; needs exactly one ancilla group
            if layout.ancilla.len() != 1 {
                return invalid("the d = 3 measurement expects one ancilla input");
            }
            let mut modes = layout.alice_signal.clone();
            modes.extend(&layout.bob_signal);
            modes.extend(&layout.ancilla[0]);
            layout.bsm_output = (0..d).map(|n| modes[d * n..d * n + d].to_vec()).collect();
            layers.push(Layer { label: "bsm", modes, unitary: covariant_bsm_d3() });
        }
        Topology::PerLevel => {
            for m in 0..d {
                let g = level_group(m);
                let f = dft_matrix(g.len())?;
                layout.bsm_output.push(g.clone());
                layers.push(Layer { label: "bsm", modes: g, unitary: f });
            }
        }
        Topology::Unmixed => {
            layout.bsm_output = (0..d).map(level_group).collect();
        }
    }

    if config.theta > 0.0 {
        let x = crosstalk_unitary(d, config.theta)?;
        layers.push(Layer { label: "crosstalk", modes: layout.alice_idler.clone(), unitary: x.clone() });
        layers.push(Layer { label: "crosstalk", modes: layout.bob_idler.clone(), unitary: x });
    }
    if let Some(v) = correction {
        if (v - CMat::identity(d, d)).norm() > 1e-14 {
            layers.push(Layer { label: "bob-correction", modes: layout.bob_idler.clone(), unitary: v.clone() });
        }
    }
    if config.basis == Basis::Test {
        let b = measurement_basis_unitary(d, config.subspace(), Basis::Test)?;
        layers.push(Layer { label: "basis", modes: layout.alice_idler.clone(), unitary: b.clone() });
        layers.push(Layer { label: "basis", modes: layout.bob_idler.clone(), unitary: b });
    }

    let mut detector_modes = layout.bsm_modes();
    detector_modes.extend(&layout.alice_idler);
    detector_modes.extend(&layout.bob_idler);
    detector_modes.extend(&layout.hsps_herald);

    let idler_loss = config.eta.filter(|&e| e < 1.0);
    let (input, output) = if config.ancilla == AncillaKind::IdealOracle && d > 2 {
        (None, None)
    } else {
        let mut st = GaussianState::vacuum(layout.n_modes)?;
        for op in &prep {
            st = match *op {
                PrepOp::Tms { a, b, s } => st.two_mode_squeeze(a, b, s)?,
                PrepOp::Coherent { mode, alpha } => st.displace(mode, alpha)?,
                PrepOp::SinglePhoton { .. } => unreachable!("exact photons are not Gaussian"),
            };
        }
        let input = st.clone();
        for layer in &layers {
            st = st.interfere(&layer.unitary, &layer.modes)?;
        }
        if let Some(eta) = idler_loss {
            let mut idlers = layout.alice_idler.clone();
            idlers.extend(&layout.bob_idler);
            st = st.loss(eta, &idlers)?;
        }
        (Some(input), Some(st))
    };

    Ok(CompiledNetwork {
        config: config.clone(),
        layout,
        prep,
        layers,
        idler_loss,
        detector_modes,
        input,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_error;

    #[test]
    fn dft_examples() {
        let f2 = dft_matrix(2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((f2[(1, 1)] - C64::new(-h, 0.0)).norm() < 1e-15);
        assert!((f2[(0, 1)] - C64::new(h, 0.0)).norm() < 1e-15);
        let f3 = dft_matrix(3).unwrap();
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        for k in 0..3 {
            assert!((f3[(1, k)] * 3f64.sqrt() - w.powu(k as u32)).norm() < 1e-14);
        }
        for n in 1..7 {
            assert!(unitarity_error(&dft_matrix(n).unwrap()) < 1e-12);
        }
        assert!(dft_matrix(0).is_err());
    }

    #[test]
    fn crosstalk_qubit_closed_form() {
        let th: f64 = 0.37;
        let u = crosstalk_unitary(2, th).unwrap();
        let (co, si) = ((2.0 * th).cos(), (2.0 * th).sin());
        let expect = CMat::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)]);
        assert!((u - expect).norm() < 1e-14);
        assert!((crosstalk_unitary(3, 0.0).unwrap() - CMat::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn crosstalk_matches_taylor_series() {
        for d in [3, 4] {
            let th = 0.2;
            let h = crosstalk_hamiltonian(d).map(|x| c(x, 0.0));
            assert!((&h - h.adjoint()).norm() < 1e-15);
            let a = h * c(0.0, -th);
            let mut term = CMat::identity(d, d);
            let mut sum = term.clone();
            for n in 1..40 {
                term = &term * &a / C64::new(n as f64, 0.0);
                sum += &term;
            }
            let u = crosstalk_unitary(d, th).unwrap();
            assert!((u.clone() - sum).norm() < 1e-10);
            assert!(unitarity_error(&u) < 1e-12);
        }
    }

    #[test]
    fn basis_blocks() {
        let t = measurement_basis_unitary(4, 2, Basis::Test).unwrap();
        let f2 = dft_matrix(2).unwrap();
        assert!((t.view((0, 0), (2, 2)) - &f2).norm() < 1e-15);
        assert!((t.view((2, 2), (2, 2)) - &f2).norm() < 1e-15);
        assert!(t.view((0, 2), (2, 2)).norm() == 0.0);
        let t4 = measurement_basis_unitary(4, 4, Basis::Test).unwrap();
        assert!((t4 - dft_matrix(4).unwrap()).norm() < 1e-15);
        assert_eq!(measurement_basis_unitary(3, 3, Basis::Key).unwrap(), CMat::identity(3, 3));
        assert!(measurement_basis_unitary(4, 3, Basis::Test).is_err());
    }

    #[test]
    fn covariant_block_unitarity() {
        for blk in COVARIANT_D3.iter() {
            let m = CMat::from_fn(3, 3, |r, col| blk[r][col]);
            assert!(unitarity_error(&m) < 1e-14);
        }
        assert!(unitarity_error(&covariant_bsm_d3()) < 1e-13);
    }

    fn cfg(d: usize, k: usize, a: AncillaKind) -> NetworkConfig {
        NetworkConfig { s: 0.1, xi: 0.1, alpha: 0.1, ..NetworkConfig::new(d, k, a) }
    }

    #[test]
    fn mode_counts() {
        let n = build_network_uncorrected(&cfg(3, 3, AncillaKind::Wcs)).unwrap();
        assert_eq!(n.layout.n_modes, 15);
        assert_eq!(n.detector_modes.len(), 15);
        assert_eq!(n.layout.bsm_modes().len(), 9);
        let n = build_network_uncorrected(&cfg(4, 4, AncillaKind::Tms)).unwrap();
        assert_eq!((n.layout.n_modes, n.detector_modes.len(), n.layout.bsm_modes().len()), (24, 24, 16));
        let n = build_network_uncorrected(&cfg(2, 2, AncillaKind::Wcs)).unwrap();
        assert_eq!((n.layout.n_modes, n.layout.bsm_modes().len()), (8, 4));
        let n = build_network_uncorrected(&cfg(3, 3, AncillaKind::Hsps)).unwrap();
        assert_eq!((n.layout.n_modes, n.layout.hsps_herald.len()), (16, 1));
        let n = build_network_uncorrected(&cfg(4, 2, AncillaKind::Hsps)).unwrap();
        assert_eq!((n.layout.n_modes, n.layout.hsps_herald.len()), (26, 2));
    }

    #[test]
    fn detector_list_is_a_permutation() {
        for (d, a) in [(2, AncillaKind::Wcs), (3, AncillaKind::Hsps), (4, AncillaKind::Tms)] {
            let n = build_network_uncorrected(&cfg(d, d, a)).unwrap();
            let mut m = n.detector_modes.clone();
            m.sort();
            assert_eq!(m, (0..n.layout.n_modes).collect::<Vec<_>>());
        }
    }

    #[test]
    fn validation_errors() {
        assert!(cfg(4, 4, AncillaKind::Wcs).validate().is_err());
        assert!(cfg(3, 3, AncillaKind::Tms).validate().is_err());
        let e = cfg(4, 3, AncillaKind::Tms).validate().unwrap_err().to_string();
        assert!(e.contains("`k`") && e.contains("`d`"));
        assert!(NetworkConfig { theta: -0.1, ..cfg(2, 2, AncillaKind::Wcs) }.validate().is_err());
        assert!(NetworkConfig { eta: Some(1.5), ..cfg(2, 2, AncillaKind::Wcs) }.validate().is_err());
        assert!(cfg(1, 1, AncillaKind::Wcs).validate().is_err());
    }

    #[test]
    fn stack_is_unitary() {
        let c = NetworkConfig { theta: 0.3, basis: Basis::Test, ..cfg(4, 2, AncillaKind::Tms) };
        let n = build_network_uncorrected(&c).unwrap();
        assert!(unitarity_error(&n.total_unitary()) < 1e-10);
    }

    #[test]
    fn alice_bob_symmetric_input() {
        let n = build_network_uncorrected(&cfg(3, 3, AncillaKind::Wcs)).unwrap();
        let inp = n.input.as_ref().unwrap();
        let mut a = n.layout.alice_signal.clone();
        a.extend(&n.layout.alice_idler);
        let mut b = n.layout.bob_signal.clone();
        b.extend(&n.layout.bob_idler);
        let ra = inp.reduced(&a).unwrap();
        let rb = inp.reduced(&b).unwrap();
        assert!((ra.covariance() - rb.covariance()).abs().max() < 1e-15);
    }

    #[test]
    fn zero_parameters_give_vacuum() {
        let c = NetworkConfig::new(3, 3, AncillaKind::Wcs);
        let n = build_network_uncorrected(&c).unwrap();
        let out = n.output.unwrap();
        assert!((out.covariance() - nalgebra::DMatrix::identity(30, 30)).abs().max() < 1e-13);
    }
}
