//! Multimode Gaussian states in the (x₁,p₁,…,xₙ,pₙ) ordering with vacuum
//! covariance equal to the identity.
//!
//! A coherent amplitude α on a mode shows up as displacement (2 Re α, 2 Im α).
//! States are values: every operation returns a new state.
//!
//! The covariance is stored as its excess over the vacuum, X = V − I. Weak
//! sources then keep full relative precision (cosh 2s − 1 is formed as
//! 2 sinh² s), which the vacuum-overlap sums in `detection` rely on.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::unitarity_error;
use crate::{CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    excess: DMatrix<f64>,
    disp: DVector<f64>,
}

/// Real 2m×2m matrix acting on the quadratures of m modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Symplectic(pub DMatrix<f64>);

impl Symplectic {
    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    /// Largest entry of |S Ω Sᵀ − Ω|.
    pub fn symplectic_error(&self) -> f64 {
        let om = symplectic_form(self.n_modes());
        (&self.0 * &om * self.0.transpose() - om).abs().max()
    }
}

pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        om[(2 * k, 2 * k + 1)] = 1.0;
        om[(2 * k + 1, 2 * k)] = -1.0;
    }
    om
}

/// Orthogonal symplectic image of a passive transformation `a ↦ U a`.
pub fn symplectic_from_unitary(u: &CMat) -> Result<Symplectic> {
    if !u.is_square() {
        return invalid("interferometer matrix must be square");
    }
    let err = unitarity_error(u);
    if err > 1e-10 {
        return invalid(format!("matrix is not unitary (deviation {err:.3e})"));
    }
    let m = u.nrows();
    let mut s = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        for l in 0..m {
            let z = u[(k, l)];
            s[(2 * k, 2 * l)] = z.re;
            s[(2 * k, 2 * l + 1)] = -z.im;
            s[(2 * k + 1, 2 * l)] = z.im;
            s[(2 * k + 1, 2 * l + 1)] = z.re;
        }
    }
    Ok(Symplectic(s))
}

fn quad_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

impl GaussianState {
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return invalid("a Gaussian state needs at least one mode");
        }
        Ok(Self {
            excess: DMatrix::zeros(2 * n_modes, 2 * n_modes),
            disp: DVector::zeros(2 * n_modes),
        })
    }

    /// Build from raw moments. Checks shape and symmetry only; use
    /// [`GaussianState::uncertainty_margin`] for physicality.
    pub fn from_moments(cov: DMatrix<f64>, disp: DVector<f64>) -> Result<Self> {
        let n2 = cov.nrows();
        if n2 == 0 || n2 % 2 != 0 || !cov.is_square() || disp.len() != n2 {
            return invalid("covariance must be 2n×2n and displacement length 2n");
        }
        if (&cov - cov.transpose()).abs().max() > 1e-12 {
            return invalid("covariance is not symmetric");
        }
        let excess = cov - DMatrix::identity(n2, n2);
        Ok(Self { excess, disp })
    }

    pub fn n_modes(&self) -> usize {
        self.excess.nrows() / 2
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.excess + DMatrix::identity(self.excess.nrows(), self.excess.nrows())
    }

    /// V − I.
    pub fn excess(&self) -> &DMatrix<f64> {
        &self.excess
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.disp
    }

    fn check_mode(&self, m: usize) -> Result<()> {
        if m >= self.n_modes() {
            return invalid(format!("mode {m} out of range for {} modes", self.n_modes()));
        }
        Ok(())
    }

    fn check_modes(&self, modes: &[usize]) -> Result<()> {
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return invalid(format!("mode {m} listed twice"));
            }
        }
        Ok(())
    }

    /// X ← S X Sᵀ + (S Sᵀ − I), δ ← S δ for S acting on the listed
    /// quadratures only. `growth` is S Sᵀ − I, supplied in closed form by the
    /// caller (`None` for orthogonal S).
    fn apply_local(&self, quads: &[usize], s: &DMatrix<f64>, growth: Option<&DMatrix<f64>>) -> Self {
        let n2 = self.excess.nrows();
        let q = quads.len();
        let mut x = self.excess.clone();
        let mut disp = self.disp.clone();

        let mut rows = DMatrix::zeros(q, n2);
        for (a, &qa) in quads.iter().enumerate() {
            rows.row_mut(a).copy_from(&self.excess.row(qa));
        }
        let rows = s * rows;
        for (a, &qa) in quads.iter().enumerate() {
            x.row_mut(qa).copy_from(&rows.row(a));
        }
        let mut cols = DMatrix::zeros(n2, q);
        for (a, &qa) in quads.iter().enumerate() {
            cols.column_mut(a).copy_from(&x.column(qa));
        }
        let cols = cols * s.transpose();
        for (a, &qa) in quads.iter().enumerate() {
            x.column_mut(qa).copy_from(&cols.column(a));
        }
        if let Some(g) = growth {
            for (a, &qa) in quads.iter().enumerate() {
                for (b, &qb) in quads.iter().enumerate() {
                    x[(qa, qb)] += g[(a, b)];
                }
            }
        }
        // restore exact symmetry lost to rounding
        x = (&x + x.transpose()) * 0.5;

        let local = DVector::from_iterator(q, quads.iter().map(|&qa| self.disp[qa]));
        let local = s * local;
        for (a, &qa) in quads.iter().enumerate() {
            disp[qa] = local[a];
        }
        Self { excess: x, disp }
    }

    /// Two-mode squeezer on (i, j). Acting on vacuum it yields diagonal
    /// blocks cosh 2s·I and off-diagonal blocks sinh 2s·diag(1, −1).
    pub fn two_mode_squeeze(&self, i: usize, j: usize, s: f64) -> Result<Self> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return invalid("two-mode squeezer needs two distinct modes");
        }
        if !s.is_finite() {
            return invalid("squeezing parameter must be finite");
        }
        let (c, sh) = (s.cosh(), s.sinh());
        #[rustfmt::skip]
        let sm = DMatrix::from_row_slice(4, 4, &[
            c,   0.0, sh,  0.0,
            0.0, c,   0.0, -sh,
            sh,  0.0, c,   0.0,
            0.0, -sh, 0.0, c,
        ]);
        let (g, h) = (2.0 * sh * sh, (2.0 * s).sinh());
        #[rustfmt::skip]
        let growth = DMatrix::from_row_slice(4, 4, &[
            g,   0.0, h,   0.0,
            0.0, g,   0.0, -h,
            h,   0.0, g,   0.0,
            0.0, -h,  0.0, g,
        ]);
        Ok(self.apply_local(&quad_indices(&[i, j]), &sm, Some(&growth)))
    }

    /// Single-mode squeezer: x ↦ e^{−r} x, p ↦ e^{r} p.
    pub fn single_mode_squeeze(&self, mode: usize, r: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !r.is_finite() {
            return invalid("squeezing parameter must be finite");
        }
        let sm = DMatrix::from_diagonal(&DVector::from_vec(vec![(-r).exp(), r.exp()]));
        let growth = DMatrix::from_diagonal(&DVector::from_vec(vec![(-2.0 * r).exp_m1(), (2.0 * r).exp_m1()]));
        Ok(self.apply_local(&quad_indices(&[mode]), &sm, Some(&growth)))
    }

    pub fn displace(&self, mode: usize, alpha: C64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.disp[2 * mode] += 2.0 * alpha.re;
        out.disp[2 * mode + 1] += 2.0 * alpha.im;
        Ok(out)
    }

    pub fn apply_symplectic(&self, s: &Symplectic, modes: &[usize]) -> Result<Self> {
        self.check_modes(modes)?;
        if s.n_modes() != modes.len() {
            return invalid(format!(
                "transformation acts on {} modes but {} were listed",
                s.n_modes(),
                modes.len()
            ));
        }
        let growth = &s.0 * s.0.transpose() - DMatrix::identity(s.0.nrows(), s.0.nrows());
        Ok(self.apply_local(&quad_indices(modes), &s.0, Some(&growth)))
    }

    /// Passive interferometer `a ↦ U a` on the listed modes, identity elsewhere.
    pub fn interfere(&self, u: &CMat, modes: &[usize]) -> Result<Self> {
        if u.nrows() != modes.len() {
            return invalid(format!(
                "unitary is {}×{} but {} modes were listed",
                u.nrows(),
                u.ncols(),
                modes.len()
            ));
        }
        self.check_modes(modes)?;
        let s = symplectic_from_unitary(u)?;
        Ok(self.apply_local(&quad_indices(modes), &s.0, None))
    }

    /// Pure loss with transmissivity `eta` on every mode.
    pub fn uniform_loss(&self, eta: f64) -> Result<Self> {
        let all: Vec<usize> = (0..self.n_modes()).collect();
        self.loss(eta, &all)
    }

    /// Pure loss on a subset of modes.
    pub fn loss(&self, eta: f64, modes: &[usize]) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return invalid(format!("transmissivity {eta} outside [0, 1]"));
        }
        self.check_modes(modes)?;
        // V' = T V T + (I − T²)  ⇒  X' = T X T
        let q = quad_indices(modes);
        let t = eta.sqrt();
        let mut out = self.clone();
        let n2 = out.excess.nrows();
        let mut scale = vec![1.0; n2];
        for &qa in &q {
            scale[qa] = t;
        }
        for r in 0..n2 {
            for c in 0..n2 {
                out.excess[(r, c)] *= scale[r] * scale[c];
            }
        }
        for &qa in &q {
            out.disp[qa] *= t;
        }
        Ok(out)
    }

    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return invalid("reduced state needs a non-empty mode subset");
        }
        self.check_modes(modes)?;
        let q = quad_indices(modes);
        Ok(Self {
            excess: self.excess.select_rows(&q).select_columns(&q),
            disp: self.disp.select_rows(&q),
        })
    }

    /// Relabel modes: output mode `k` is input mode `perm[k]`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_modes() {
            return invalid("permutation length must equal the mode count");
        }
        self.check_modes(perm)?;
        self.reduced(perm)
    }

    /// Σ(V_ii − 1)/4 + Σδ_i²/4.
    pub fn mean_photon_number(&self) -> f64 {
        let tr: f64 = self.excess.trace();
        (tr + self.disp.norm_squared()) / 4.0
    }

    /// Per-mode mean photon numbers.
    pub fn mode_photon_numbers(&self) -> Vec<f64> {
        (0..self.n_modes())
            .map(|k| {
                let (x, p) = (2 * k, 2 * k + 1);
                (self.excess[(x, x)] + self.excess[(p, p)]
                    + self.disp[x].powi(2)
                    + self.disp[p].powi(2))
                    / 4.0
            })
            .collect()
    }

    /// Smallest eigenvalue of V + iΩ; non-negative for physical states.
    pub fn uncertainty_margin(&self) -> Result<f64> {
        let n = self.n_modes();
        let om = symplectic_form(n);
        let v = self.covariance();
        let h = DMatrix::from_fn(2 * n, 2 * n, |r, c| C64::new(v[(r, c)], om[(r, c)]));
        let eig = nalgebra::SymmetricEigen::try_new(h, 1e-14, 10_000)
            .ok_or_else(|| Error::Numerical("eigen-decomposition did not converge".into()))?;
        Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs50() -> CMat {
        let h = 1.0 / 2f64.sqrt();
        CMat::from_row_slice(2, 2, &[h.into(), h.into(), h.into(), (-h).into()])
    }

    #[test]
    fn vacuum_is_identity() {
        let v = GaussianState::vacuum(3).unwrap();
        assert_eq!(v.covariance(), DMatrix::identity(6, 6));
        assert_eq!(v.displacement().norm(), 0.0);
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn tms_blocks() {
        let s = 0.3;
        let st = GaussianState::vacuum(2).unwrap().two_mode_squeeze(0, 1, s).unwrap();
        let v = &st.covariance();
        let (c2, s2) = ((2.0 * s).cosh(), (2.0 * s).sinh());
        assert!((v[(0, 0)] - c2).abs() < 1e-14 && (v[(1, 1)] - c2).abs() < 1e-14);
        assert!((v[(0, 2)] - s2).abs() < 1e-14 && (v[(1, 3)] + s2).abs() < 1e-14);
        assert!(v[(0, 1)].abs() < 1e-15 && v[(0, 3)].abs() < 1e-15);
        assert!(GaussianState::vacuum(2).unwrap().two_mode_squeeze(1, 1, s).is_err());
        assert!(GaussianState::vacuum(2).unwrap().two_mode_squeeze(0, 2, s).is_err());
    }

    #[test]
    fn displacement_convention() {
        let st = GaussianState::vacuum(1).unwrap().displace(0, C64::new(0.4, 0.3)).unwrap();
        assert!((st.displacement()[0] - 0.8).abs() < 1e-15);
        assert!((st.displacement()[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn phase_shifter_is_rotation() {
        let phi: f64 = 0.7;
        let u = CMat::from_element(1, 1, C64::from_polar(1.0, phi));
        let s = symplectic_from_unitary(&u).unwrap().0;
        let r = DMatrix::from_row_slice(2, 2, &[phi.cos(), -phi.sin(), phi.sin(), phi.cos()]);
        assert!((s - r).abs().max() < 1e-15);
    }

    #[test]
    fn beamsplitter_orthogonal_symplectic() {
        let s = symplectic_from_unitary(&bs50()).unwrap();
        assert!(s.symplectic_error() < 1e-14);
        assert!((&s.0 * s.0.transpose() - DMatrix::identity(4, 4)).abs().max() < 1e-14);
        let bad = CMat::from_element(2, 2, C64::new(1.0, 0.0));
        assert!(symplectic_from_unitary(&bad).is_err());
    }

    #[test]
    fn loss_limits() {
        let st = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, 0.4)
            .unwrap()
            .displace(1, C64::new(0.5, -0.2))
            .unwrap();
        assert_eq!(st.uniform_loss(1.0).unwrap(), st);
        let dead = st.uniform_loss(0.0).unwrap();
        assert!((dead.covariance() - DMatrix::identity(4, 4)).abs().max() < 1e-15);
        assert!(dead.displacement().norm() < 1e-15);
        assert!(st.uniform_loss(1.2).is_err());
    }

    #[test]
    fn reduced_tms_is_thermal() {
        let s = 0.45;
        let st = GaussianState::vacuum(2).unwrap().two_mode_squeeze(0, 1, s).unwrap();
        let r = st.reduced(&[1]).unwrap();
        let expect = DMatrix::identity(2, 2) * (2.0 * s).cosh();
        assert!((r.covariance() - expect).abs().max() < 1e-14);
        assert_eq!(st.reduced(&[0, 1]).unwrap(), st);
        assert!(st.reduced(&[]).is_err());
    }

    #[test]
    fn interferometer_errors() {
        let st = GaussianState::vacuum(3).unwrap();
        assert!(st.interfere(&bs50(), &[0, 0]).is_err());
        assert!(st.interfere(&bs50(), &[0, 1, 2]).is_err());
    }

    fn random_unitary(m: usize, seed: &[f64]) -> CMat {
        // exp(iH) of a Hermitian H built from the seed values
        let mut h = CMat::zeros(m, m);
        let mut it = seed.iter().cycle();
        for r in 0..m {
            for c in r..m {
                let re = *it.next().unwrap();
                let im = if r == c { 0.0 } else { *it.next().unwrap() };
                h[(r, c)] = C64::new(re, im);
                h[(c, r)] = C64::new(re, -im);
            }
        }
        let eig = nalgebra::SymmetricEigen::new(h);
        let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
        &eig.eigenvectors * d * eig.eigenvectors.adjoint()
    }

    fn random_state(p: &[f64]) -> GaussianState {
        let mut st = GaussianState::vacuum(3).unwrap();
        st = st.two_mode_squeeze(0, 1, p[0]).unwrap();
        st = st.single_mode_squeeze(2, p[1]).unwrap();
        st = st.displace(2, C64::new(p[2], p[3])).unwrap();
        st.interfere(&random_unitary(3, &p[4..]), &[2, 0, 1]).unwrap()
    }

    proptest! {
        #[test]
        fn interferometer_roundtrip_and_energy(p in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let st = random_state(&p);
            let u = random_unitary(3, &p[7..]);
            let there = st.interfere(&u, &[0, 2, 1]).unwrap();
            let back = there.interfere(&u.adjoint(), &[0, 2, 1]).unwrap();
            prop_assert!((back.covariance() - st.covariance()).abs().max() < 1e-10);
            prop_assert!((back.displacement() - st.displacement()).abs().max() < 1e-10);
            prop_assert!((there.mean_photon_number() - st.mean_photon_number()).abs() < 1e-10);
        }

        #[test]
        fn squeeze_inverse_and_physicality(p in proptest::collection::vec(-1.0f64..1.0, 16), s in 0.0f64..1.0) {
            let st = random_state(&p);
            let sq = st.two_mode_squeeze(1, 2, s).unwrap();
            let back = sq.two_mode_squeeze(1, 2, -s).unwrap();
            prop_assert!((back.covariance() - st.covariance()).abs().max() < 1e-10);
            prop_assert!((sq.covariance().transpose() - sq.covariance()).abs().max() < 1e-12);
            prop_assert!(sq.uncertainty_margin().unwrap() > -1e-9);
            let lossy = sq.uniform_loss(0.3).unwrap();
            prop_assert!(lossy.uncertainty_margin().unwrap() > -1e-9);
        }
    }
}
