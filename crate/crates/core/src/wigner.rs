//! Wigner function `W(α)` of a Fock-basis density matrix, sampled on a
//! grid, and the negativity functional `N = ∫d²α (W − |W|)/2`.
//!
//! Evaluation uses the displaced-parity identity
//! `W(α) = (2/π)·tr[ρ·D(2α)·Π]`, expanded over the side-diagonals of ρ
//! with generalized-Laguerre recurrences, so one grid node costs
//! O(dim²) and nodes are independent work items.

use crate::fock::{CMat, DensityMatrix};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Sample layout and quadrature rule of a Wigner grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridLayout {
    /// Cell-centered rectangular nodes, weight `dx·dy` (midpoint rule).
    Cartesian {
        x_min: f64,
        x_max: f64,
        nx: usize,
        y_min: f64,
        y_max: f64,
        ny: usize,
    },
    /// Staggered polar nodes `r_j = (j+½)Δr`, `θ_i = iΔθ`, weight
    /// `r_j·Δr·Δθ`; matches the phase-space solver's grid.
    Polar { r_max: f64, nr: usize, ntheta: usize },
}

impl GridLayout {
    /// Symmetric square window sized for mean photon number `n_bar`:
    /// `[−(√n̄+4), +(√n̄+4)]²`.
    pub fn default_window(n_bar: f64, n: usize) -> Self {
        let w = n_bar.max(0.0).sqrt() + 4.0;
        GridLayout::Cartesian {
            x_min: -w,
            x_max: w,
            nx: n,
            y_min: -w,
            y_max: w,
            ny: n,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            GridLayout::Cartesian { nx, ny, .. } => (nx, ny),
            GridLayout::Polar { nr, ntheta, .. } => (nr, ntheta),
        }
    }

    /// Phase-space point of node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> C64 {
        match *self {
            GridLayout::Cartesian {
                x_min,
                x_max,
                nx,
                y_min,
                y_max,
                ny,
            } => {
                let dx = (x_max - x_min) / nx as f64;
                let dy = (y_max - y_min) / ny as f64;
                C64::new(
                    x_min + (i as f64 + 0.5) * dx,
                    y_min + (j as f64 + 0.5) * dy,
                )
            }
            GridLayout::Polar { r_max, nr, ntheta } => {
                let dr = r_max / nr as f64;
                let dth = std::f64::consts::TAU / ntheta as f64;
                let r = (i as f64 + 0.5) * dr;
                let th = j as f64 * dth;
                C64::new(r * th.cos(), r * th.sin())
            }
        }
    }

    /// Quadrature weight `d²α` of node `(i, j)`.
    pub fn weight(&self, i: usize, _j: usize) -> f64 {
        match *self {
            GridLayout::Cartesian {
                x_min,
                x_max,
                nx,
                y_min,
                y_max,
                ny,
            } => {
                let dx = (x_max - x_min) / nx as f64;
                let dy = (y_max - y_min) / ny as f64;
                dx * dy
            }
            GridLayout::Polar { r_max, nr, ntheta } => {
                let dr = r_max / nr as f64;
                let dth = std::f64::consts::TAU / ntheta as f64;
                (i as f64 + 0.5) * dr * dr * dth
            }
        }
    }
}

/// Sampled Wigner function with its quadrature metadata.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub layout: GridLayout,
    /// `W` at nodes; shape `(nx, ny)` or `(nr, nθ)`.
    pub values: Array2<f64>,
    /// Nodes outside the truncation trust region `|α|² ≤ n_cut/2`
    /// (computed anyway, counted here).
    pub trust_violations: usize,
}

impl WignerGrid {
    /// `Σ w·W`; ≈ 1 for states with negligible mass outside the window.
    pub fn total_mass(&self) -> f64 {
        let (n0, n1) = self.values.dim();
        let mut s = 0.0;
        for i in 0..n0 {
            let w = self.layout.weight(i, 0);
            for j in 0..n1 {
                s += w * self.values[[i, j]];
            }
        }
        s
    }

    pub fn negativity(&self) -> f64 {
        negativity(self)
    }

    /// Location of the maximum of `W` (phase-space point).
    pub fn peak(&self) -> (C64, f64) {
        let mut best = (0usize, 0usize);
        let mut val = f64::NEG_INFINITY;
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > val {
                val = v;
                best = (i, j);
            }
        }
        (self.layout.node(best.0, best.1), val)
    }
}

/// Negativity `N = Σ w·(W − |W|)/2 = Σ_{W<0} w·W ≤ 0`; zero iff the
/// sampled W is nonnegative everywhere.
pub fn negativity(grid: &WignerGrid) -> f64 {
    let (n0, n1) = grid.values.dim();
    let mut s = 0.0;
    for i in 0..n0 {
        let w = grid.layout.weight(i, 0);
        for j in 0..n1 {
            let v = grid.values[[i, j]];
            if v < 0.0 {
                s += w * v;
            }
        }
    }
    s
}

/// Reusable per-state evaluator: side-diagonal bands of ρ plus scratch
/// tables, shared read-only across grid nodes.
pub struct WignerEvaluator {
    dim: usize,
    /// `bands[k][p] = ρ[p, p+k]`, kept only for bands with non-negligible norm.
    bands: Vec<(usize, Vec<C64>)>,
    n_cut: usize,
}

const BAND_NORM_CUTOFF: f64 = 1e-16;

impl WignerEvaluator {
    pub fn new(rho: &DensityMatrix) -> Self {
        Self::from_entries(rho.entries(), rho.space().n_cut())
    }

    pub(crate) fn from_entries(r: &CMat, n_cut: usize) -> Self {
        let d = r.nrows();
        let mut bands = Vec::new();
        for k in 0..d {
            let band: Vec<C64> = (0..d - k).map(|p| r[[p, p + k]]).collect();
            let norm: f64 = band.iter().map(|z| z.norm()).sum();
            if norm > BAND_NORM_CUTOFF {
                bands.push((k, band));
            }
        }
        Self {
            dim: d,
            bands,
            n_cut,
        }
    }

    /// `W(α)` and whether `α` lies inside the truncation trust region.
    pub fn eval(&self, alpha: C64) -> (f64, bool) {
        let beta = alpha * 2.0;
        let x = beta.norm_sqr();
        let expf = (-0.5 * x).exp();
        let mut total = 0.0;
        for (k, band) in &self.bands {
            let k = *k;
            // prefactor √(p!/(p+k)!)·β^k, advanced in p; Laguerre L_p^k(x)
            // by upward recurrence.
            let mut beta_k = C64::new(1.0, 0.0);
            for _ in 0..k {
                beta_k *= beta;
            }
            let mut c = 1.0;
            for j in 1..=k {
                c /= (j as f64).sqrt();
            }
            let mut lag_prev = 0.0;
            let mut lag = 1.0; // L_0^k
            let mut sum = C64::new(0.0, 0.0);
            for (p, rho_el) in band.iter().enumerate() {
                if p > 0 {
                    // (p)L_p^k = (2p-1+k-x)L_{p-1}^k − (p-1+k)L_{p-2}^k
                    let pf = p as f64;
                    let next =
                        ((2.0 * pf - 1.0 + k as f64 - x) * lag - (pf - 1.0 + k as f64) * lag_prev)
                            / pf;
                    lag_prev = lag;
                    lag = next;
                    c *= (pf / (pf + k as f64)).sqrt();
                }
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                sum += rho_el * (sign * c * lag);
            }
            let contrib = sum * beta_k;
            total += if k == 0 { contrib.re } else { 2.0 * contrib.re };
        }
        let val = std::f64::consts::FRAC_2_PI * expf * total;
        let trusted = alpha.norm_sqr() <= 0.5 * self.n_cut as f64 + 1.0;
        let _ = self.dim;
        (val, trusted)
    }
}

/// `W(α)` at a single point.
pub fn wigner_point(rho: &DensityMatrix, alpha: C64) -> f64 {
    WignerEvaluator::new(rho).eval(alpha).0
}

/// Sample `W` on a grid; node-parallel over rows.
pub fn wigner_grid(rho: &DensityMatrix, layout: GridLayout) -> WignerGrid {
    let ev = WignerEvaluator::new(rho);
    let (n0, n1) = layout.shape();
    let rows: Vec<(Vec<f64>, usize)> = (0..n0)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n1];
            let mut violations = 0;
            for (j, slot) in row.iter_mut().enumerate() {
                let (v, trusted) = ev.eval(layout.node(i, j));
                *slot = v;
                if !trusted {
                    violations += 1;
                }
            }
            (row, violations)
        })
        .collect();
    let mut values = Array2::zeros((n0, n1));
    let mut trust_violations = 0;
    for (i, (row, viol)) in rows.into_iter().enumerate() {
        trust_violations += viol;
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    WignerGrid {
        layout,
        values,
        trust_violations,
    }
}
