//! Grid scans and derivative-free optimisation of the source parameters.
//!
//! The objective has a max(0, ·) kink and flat zero regions, so the search
//! is a coarse log-spaced grid followed by a few rounds of shrinking local
//! grids around the incumbent.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::{AncillaKind, NetworkConfig};
use crate::error::{invalid, Result};
use crate::keyrate::{evaluate, RateReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// One grid cell. Failed pipeline calls become zero-rate cells carrying
/// the error text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub s: f64,
    pub ancilla_param: f64,
    pub bits_per_round: f64,
    pub accept_probability: f64,
    pub sift_probability: f64,
    pub h_key: f64,
    pub h_test: f64,
    pub error: Option<String>,
}

impl Cell {
    fn from_result(s: f64, anc: f64, r: Result<RateReport>) -> Self {
        let (rep, error) = match r {
            Ok(rep) => (rep, None),
            Err(e) => (RateReport::zero(), Some(e.to_string())),
        };
        Cell {
            s,
            ancilla_param: anc,
            bits_per_round: rep.bits_per_round,
            accept_probability: rep.accept_probability,
            sift_probability: rep.sift_probability,
            h_key: rep.h_key,
            h_test: rep.h_test,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSurface {
    pub config: NetworkConfig,
    pub s_axis: Axis,
    pub ancilla_axis: Axis,
    /// cells[i][j] at (s_axis[i], ancilla_axis[j]).
    pub cells: Vec<Vec<Cell>>,
    /// Largest rate; ties go to the lowest (i, j).
    pub argmax: (usize, usize),
}

impl RateSurface {
    pub fn bits(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j].bits_per_round
    }

    pub fn max_bits(&self) -> f64 {
        self.bits(self.argmax.0, self.argmax.1)
    }

    /// Largest rate over the outer ring of the grid.
    pub fn boundary_max(&self) -> f64 {
        let (n, m) = (self.cells.len(), self.cells[0].len());
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..m {
                if i == 0 || j == 0 || i + 1 == n || j + 1 == m {
                    best = best.max(self.bits(i, j));
                }
            }
        }
        best
    }
}

fn eval_at(config: &NetworkConfig, s: f64, anc: f64) -> Result<RateReport> {
    let mut c = config.clone();
    c.s = s;
    c.set_ancilla_param(anc);
    evaluate(&c)
}

/// Full pipeline at every (s, ancilla) pair; cells run in parallel and are
/// merged in index order.
pub fn grid_scan(config: &NetworkConfig, s_grid: &[f64], ancilla_grid: &[f64]) -> Result<RateSurface> {
    if s_grid.is_empty() || ancilla_grid.is_empty() {
        return invalid("scan grids must be non-empty");
    }
    if s_grid.iter().chain(ancilla_grid).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("scan grid values must be finite and non-negative");
    }
    config.validate()?;
    let m = ancilla_grid.len();
    let flat: Vec<Cell> = (0..s_grid.len() * m)
        .into_par_iter()
        .map(|idx| {
            let (s, a) = (s_grid[idx / m], ancilla_grid[idx % m]);
            Cell::from_result(s, a, eval_at(config, s, a))
        })
        .collect();
    let cells: Vec<Vec<Cell>> = flat.chunks(m).map(<[Cell]>::to_vec).collect();
    let mut argmax = (0, 0);
    for (i, row) in cells.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if c.bits_per_round > cells[argmax.0][argmax.1].bits_per_round {
                argmax = (i, j);
            }
        }
    }
    Ok(RateSurface {
        config: config.clone(),
        s_axis: Axis { name: "s".into(), values: s_grid.to_vec() },
        ancilla_axis: Axis { name: config.ancilla.param_name().into(), values: ancilla_grid.to_vec() },
        cells,
        argmax,
    })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub s: (f64, f64),
    pub ancilla: (f64, f64),
}

impl Bounds {
    pub fn default_for(kind: AncillaKind) -> Self {
        let ancilla = match kind {
            AncillaKind::Wcs => (1e-3, 1.5),
            _ => (1e-3, 1.2),
        };
        Bounds { s: (1e-3, 1.2), ancilla }
    }

    fn check(&self) -> Result<()> {
        for (lo, hi) in [self.s, self.ancilla] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return invalid(format!("bounds [{lo}, {hi}] must be positive and ordered"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSettings {
    pub coarse: usize,
    pub rounds: usize,
    pub shrink: f64,
    /// Points per axis in each refinement grid (odd).
    pub refine: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { coarse: 12, rounds: 4, shrink: 3.0, refine: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub theta: f64,
    pub s: f64,
    pub ancilla_param: f64,
    pub bits_per_round: f64,
    pub evaluations: usize,
}

/// Memoised objective in log coordinates; keys are exact bit patterns so
/// repeated points are never re-evaluated.
struct Objective<'a> {
    config: &'a NetworkConfig,
    seen: BTreeMap<(u64, u64), f64>,
}

impl Objective<'_> {
    fn batch(&mut self, pts: &[(f64, f64)]) -> Vec<f64> {
        let fresh: Vec<(f64, f64)> = {
            let mut v: Vec<(f64, f64)> = Vec::new();
            for &p in pts {
                let key = (p.0.to_bits(), p.1.to_bits());
                if !self.seen.contains_key(&key) && !v.iter().any(|q| (q.0.to_bits(), q.1.to_bits()) == key) {
                    v.push(p);
                }
            }
            v
        };
        let vals: Vec<f64> = fresh
            .par_iter()
            .map(|&(s, a)| eval_at(self.config, s, a).map_or(0.0, |r| r.bits_per_round))
            .collect();
        for (p, v) in fresh.iter().zip(vals) {
            self.seen.insert((p.0.to_bits(), p.1.to_bits()), v);
        }
        pts.iter().map(|p| self.seen[&(p.0.to_bits(), p.1.to_bits())]).collect()
    }
}

fn best_of(pts: &[(f64, f64)], vals: &[f64], incumbent: &mut ((f64, f64), f64)) {
    for (p, &v) in pts.iter().zip(vals) {
        if v > incumbent.1 {
            *incumbent = (*p, v);
        }
    }
}

pub fn optimize_rate(config: &NetworkConfig, theta: f64, bounds: &Bounds) -> Result<OptResult> {
    optimize_rate_with(config, theta, bounds, &SearchSettings::default(), None)
}

/// Coarse grid, then `rounds` local grids whose half-width shrinks by
/// `shrink` each round. `seed` is an extra starting candidate (warm start).
pub fn optimize_rate_with(
    config: &NetworkConfig,
    theta: f64,
    bounds: &Bounds,
    settings: &SearchSettings,
    seed: Option<(f64, f64)>,
) -> Result<OptResult> {
    bounds.check()?;
    if settings.coarse < 2 || settings.refine < 3 || settings.shrink <= 1.0 {
        return invalid("search needs ≥ 2 coarse points, ≥ 3 refine points and shrink > 1");
    }
    let mut cfg = config.clone();
    cfg.theta = theta;
    cfg.validate()?;
    let two_d = cfg.uses_ancilla();
    let s_lo = bounds.s.0.ln();
    let s_hi = bounds.s.1.ln();
    let a_lo = bounds.ancilla.0.ln();
    let a_hi = bounds.ancilla.1.ln();
    let a_fixed = bounds.ancilla.0;

    let mut obj = Objective { config: &cfg, seen: BTreeMap::new() };
    let s_axis = log_grid(bounds.s.0, bounds.s.1, settings.coarse);
    let a_axis = if two_d { log_grid(bounds.ancilla.0, bounds.ancilla.1, settings.coarse) } else { vec![a_fixed] };
    let mut pts: Vec<(f64, f64)> = s_axis.iter().flat_map(|&s| a_axis.iter().map(move |&a| (s, a))).collect();
    if let Some((s, a)) = seed {
        let a = if two_d { a.clamp(bounds.ancilla.0, bounds.ancilla.1) } else { a_fixed };
        pts.push((s.clamp(bounds.s.0, bounds.s.1), a));
    }
    let vals = obj.batch(&pts);
    let mut inc = (pts[0], vals[0]);
    best_of(&pts, &vals, &mut inc);

    let step = |lo: f64, hi: f64| (hi - lo) / (settings.coarse - 1) as f64;
    let mut hs = step(s_lo, s_hi);
    let mut ha = step(a_lo, a_hi);
    let half = (settings.refine / 2) as f64;
    for _ in 0..settings.rounds {
        let (cs, ca) = (inc.0 .0.ln(), inc.0 .1.ln());
        let ls: Vec<f64> = (0..settings.refine)
            .map(|i| (cs + hs * (i as f64 - half) / half).clamp(s_lo, s_hi).exp())
            .collect();
        let la: Vec<f64> = if two_d {
            (0..settings.refine).map(|i| (ca + ha * (i as f64 - half) / half).clamp(a_lo, a_hi).exp()).collect()
        } else {
            vec![a_fixed]
        };
        let pts: Vec<(f64, f64)> = ls.iter().flat_map(|&s| la.iter().map(move |&a| (s, a))).collect();
        let vals = obj.batch(&pts);
        best_of(&pts, &vals, &mut inc);
        hs /= settings.shrink;
        ha /= settings.shrink;
    }
    Ok(OptResult {
        theta,
        s: inc.0 .0,
        ancilla_param: inc.0 .1,
        bits_per_round: inc.1,
        evaluations: obj.seen.len(),
    })
}

/// Optimise at every θ; with `warm_start` each search also tries the
/// previous optimum.
pub fn noise_sweep(config: &NetworkConfig, thetas: &[f64], bounds: &Bounds, warm_start: bool) -> Result<Vec<OptResult>> {
    noise_sweep_with(config, thetas, bounds, &SearchSettings::default(), warm_start)
}

pub fn noise_sweep_with(
    config: &NetworkConfig,
    thetas: &[f64],
    bounds: &Bounds,
    settings: &SearchSettings,
    warm_start: bool,
) -> Result<Vec<OptResult>> {
    if thetas.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || thetas.windows(2).any(|w| w[1] < w[0]) {
        return invalid("θ values must be non-negative and sorted");
    }
    let mut out: Vec<OptResult> = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let seed = if warm_start { out.last().map(|r| (r.s, r.ancilla_param)) } else { None };
        out.push(optimize_rate_with(config, t, bounds, settings, seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1.0, 4);
        assert_eq!(g.len(), 4);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[3] - 1.0).abs() < 1e-15);
        assert!((g[1] - 1e-2).abs() < 1e-15);
        assert_eq!(log_grid(0.5, 2.0, 1), vec![0.5]);
    }

    #[test]
    fn zero_grid_is_zero() {
        let cfg = NetworkConfig::new(2, 2, AncillaKind::Wcs);
        let surf = grid_scan(&cfg, &[0.0], &[0.0]).unwrap();
        assert_eq!(surf.max_bits(), 0.0);
        assert!(surf.cells[0][0].error.is_some());
        assert!(grid_scan(&cfg, &[], &[0.1]).is_err());
    }

    #[test]
    fn single_cell_matches_pipeline() {
        let mut cfg = NetworkConfig::new(2, 2, AncillaKind::Wcs);
        cfg.s = 0.1;
        let surf = grid_scan(&cfg, &[0.1], &[0.0]).unwrap();
        let direct = evaluate(&cfg).unwrap();
        assert_eq!(surf.max_bits(), direct.bits_per_round);
    }

    #[test]
    fn bad_bounds_rejected() {
        let cfg = NetworkConfig::new(2, 2, AncillaKind::Wcs);
        let b = Bounds { s: (0.0, 1.0), ancilla: (1e-3, 1.0) };
        assert!(optimize_rate(&cfg, 0.0, &b).is_err());
        let b = Bounds::default_for(AncillaKind::Wcs);
        assert!(noise_sweep(&cfg, &[0.2, 0.1], &b, false).is_err());
    }

    #[test]
    fn search_is_deterministic_and_stays_in_bounds() {
        let cfg = NetworkConfig::new(2, 2, AncillaKind::Wcs);
        let b = Bounds::default_for(AncillaKind::Wcs);
        let fast = SearchSettings { coarse: 6, rounds: 2, ..Default::default() };
        let a = optimize_rate_with(&cfg, 0.05, &b, &fast, None).unwrap();
        let again = optimize_rate_with(&cfg, 0.05, &b, &fast, None).unwrap();
        assert_eq!(a.bits_per_round.to_bits(), again.bits_per_round.to_bits());
        assert_eq!((a.s, a.evaluations), (again.s, again.evaluations));
        assert!(a.s >= b.s.0 && a.s <= b.s.1);
        assert!(a.bits_per_round > 0.0);
        // d = 2 has no ancilla to tune
        assert_eq!(a.ancilla_param, b.ancilla.0);
        let seeded = optimize_rate_with(&cfg, 0.05, &b, &fast, Some((a.s, a.ancilla_param))).unwrap();
        assert!(seeded.bits_per_round >= a.bits_per_round);
    }
}
