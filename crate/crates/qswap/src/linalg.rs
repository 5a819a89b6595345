//! Small complex-matrix helpers shared by the Gaussian and Fock layers.

use crate::{CMat, C64};

pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    let p = u * u.adjoint();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((p[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    err
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    u.is_square() && unitarity_error(u) <= tol
}

/// One step of a two-mode decomposition: the local 2×2 unitary `g` acts on
/// modes `(i, j)` with `a_k† → Σ_l g[l][k] a_l†` (same convention as the
/// full matrix).
#[derive(Debug, Clone, Copy)]
pub struct TwoModeOp {
    pub i: usize,
    pub j: usize,
    pub g: [[C64; 2]; 2],
}

/// Factor a unitary into a diagonal phase layer followed by two-mode
/// rotations. Returns `(phases, ops)` such that applying `phases` first and
/// then `ops` in order reproduces `u`.
pub fn two_mode_decomposition(u: &CMat) -> (Vec<C64>, Vec<TwoModeOp>) {
    let n = u.nrows();
    let mut m = u.clone();
    let mut rotations: Vec<TwoModeOp> = Vec::new();
    for c in 0..n {
        for r in (c + 1..n).rev() {
            let a = m[(r - 1, c)];
            let b = m[(r, c)];
            if b.norm() < 1e-300 {
                continue;
            }
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            // G = [[a*, b*], [-b, a]] / rho zeroes the lower entry.
            let g = [
                [a.conj() / rho, b.conj() / rho],
                [-b / rho, a / rho],
            ];
            for col in 0..n {
                let x = m[(r - 1, col)];
                let y = m[(r, col)];
                m[(r - 1, col)] = g[0][0] * x + g[0][1] * y;
                m[(r, col)] = g[1][0] * x + g[1][1] * y;
            }
            // keep G†; applied later in reverse order
            let gd = [
                [g[0][0].conj(), g[1][0].conj()],
                [g[0][1].conj(), g[1][1].conj()],
            ];
            rotations.push(TwoModeOp { i: r - 1, j: r, g: gd });
        }
    }
    let phases = (0..n).map(|k| m[(k, k)]).collect();
    rotations.reverse();
    (phases, rotations)
}
