//! Time integration of `dρ/dt` and steady-state extraction.
//!
//! Two routes to the steady state are provided and are kept mutually
//! independent so they can serve as cross-checks:
//!
//! * [`steady_state_march`] integrates the master equation (RK4 by
//!   default) until `‖dρ/dt‖₁` falls below tolerance;
//! * [`steady_state_direct`] extracts the null space of the vectorized
//!   generator by shift-inverted inverse iteration, with explicit
//!   handling of degenerate null spaces.
//!
//! Degeneracy is not hypothetical here: for the laser generator the
//! quartic saturation makes the upward rate `A·n − B·n²` negative beyond
//! `n = A/B`, and whenever the cutoff exceeds that point the truncated
//! generator acquires an exactly-null, sign-alternating mode localized
//! at the truncation edge. The direct solver therefore selects, within
//! the numerical null space, the combination with the largest minimum
//! eigenvalue — the physical state.

use crate::fock::{CMat, DensityMatrix, FockSpace};
use crate::liouvillian::{
    liouvillian_matrix, phase_sums, LiouvError, LiouvillianOp, LiouvillianSpec,
};
use ndarray::{Array1, Array2};
use ndarray_linalg::error::LinalgError;
use ndarray_linalg::{Factorize, Solve, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("state became non-finite at t = {0:.4} (reduce dt or check rates)")]
    NonFinite(f64),
    #[error(
        "truncation leak at t = {t:.4}: edge population {edge:.3e} exceeds {limit:.1e}; raise n_cut"
    )]
    TruncationLeak { t: f64, edge: f64, limit: f64 },
    #[error("invalid evolve configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Liouvillian(#[from] LiouvError),
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] LinalgError),
    #[error("direct solve found no null vector (best residual {0:.3e})")]
    NoNullVector(f64),
}

/// Population allowed in the top two Fock levels before the march aborts.
pub const TRUNCATION_LEAK_LIMIT: f64 = 1e-6;

/// Residual bound certifying a direct steady state, `‖L·vec(ρ)‖∞`.
pub const DIRECT_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

/// Integration controls. `dt = None` picks a step from a power-iteration
/// estimate of the generator's spectral radius (`safety·2.8/λ̂`).
#[derive(Debug, Clone, Copy)]
pub struct EvolveConfig {
    pub dt: Option<f64>,
    pub t_max: f64,
    pub tol_steady: f64,
    pub method: Method,
    pub checkpoint_every: usize,
    pub safety: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 200.0,
            tol_steady: 1e-8,
            method: Method::Rk4,
            checkpoint_every: 200,
            safety: 0.5,
        }
    }
}

impl EvolveConfig {
    fn validate(&self) -> Result<(), EvolveError> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(EvolveError::BadConfig("dt must be positive"));
            }
        }
        if !(self.t_max > 0.0) {
            return Err(EvolveError::BadConfig("t_max must be positive"));
        }
        if !(self.tol_steady > 0.0) {
            return Err(EvolveError::BadConfig("tol_steady must be positive"));
        }
        if self.checkpoint_every == 0 {
            return Err(EvolveError::BadConfig("checkpoint_every must be nonzero"));
        }
        Ok(())
    }
}

/// Scalar diagnostics of a steady state.
#[derive(Debug, Clone)]
pub struct Observables {
    pub mean_n: f64,
    pub purity: f64,
    /// `P_k = Σ_n ρ_{n,n+k}` for k = 0..=4.
    pub phase_sums: Vec<C64>,
}

impl Observables {
    pub fn of(rho: &DensityMatrix) -> Self {
        Self {
            mean_n: rho.mean_photon_number(),
            purity: rho.purity(),
            phase_sums: phase_sums(rho, 4),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyResult {
    pub rho: DensityMatrix,
    /// `‖dρ/dt‖₁` (entrywise) at exit for the march; `‖L·vec(ρ)‖∞` for
    /// the direct solve.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub observables: Observables,
    /// Set when the numerical null space of the generator had dimension
    /// greater than one and a physical member was selected.
    pub degenerate_null_space: bool,
}

/// Entrywise 1-norm, the residual measure for `dρ/dt`.
pub fn l1_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).sum()
}

struct Stepper {
    op: LiouvillianOp,
    dt: f64,
    method: Method,
    k1: CMat,
    k2: CMat,
    k3: CMat,
    k4: CMat,
    tmp: CMat,
}

impl Stepper {
    fn new(op: LiouvillianOp, cfg: &EvolveConfig) -> Self {
        let dt = cfg.dt.unwrap_or_else(|| {
            let lambda = op.spectral_radius_estimate().max(1e-12);
            cfg.safety * 2.8 / lambda
        });
        let d = op.space().dim();
        Self {
            op,
            dt,
            method: cfg.method,
            k1: CMat::zeros((d, d)),
            k2: CMat::zeros((d, d)),
            k3: CMat::zeros((d, d)),
            k4: CMat::zeros((d, d)),
            tmp: CMat::zeros((d, d)),
        }
    }

    fn step(&mut self, rho: &mut CMat) {
        let dt = self.dt;
        match self.method {
            Method::Euler => {
                self.op.apply_into(rho, &mut self.k1);
                rho.zip_mut_with(&self.k1, |r, k| *r += dt * k);
            }
            Method::Rk4 => {
                self.op.apply_into(rho, &mut self.k1);
                self.tmp.assign(rho);
                self.tmp.zip_mut_with(&self.k1, |t, k| *t += 0.5 * dt * k);
                self.op.apply_into(&self.tmp, &mut self.k2);
                self.tmp.assign(rho);
                self.tmp.zip_mut_with(&self.k2, |t, k| *t += 0.5 * dt * k);
                self.op.apply_into(&self.tmp, &mut self.k3);
                self.tmp.assign(rho);
                self.tmp.zip_mut_with(&self.k3, |t, k| *t += dt * k);
                self.op.apply_into(&self.tmp, &mut self.k4);
                let w = dt / 6.0;
                for (((r, k1), (k2, k3)), k4) in rho
                    .iter_mut()
                    .zip(self.k1.iter())
                    .zip(self.k2.iter().zip(self.k3.iter()))
                    .zip(self.k4.iter())
                {
                    *r += w * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
            }
        }
    }
}

fn checkpoint_guards(rho: &mut DensityMatrix, t: f64) -> Result<(), EvolveError> {
    if !rho.trace().re.is_finite() || rho.entries().iter().any(|z| !z.re.is_finite()) {
        return Err(EvolveError::NonFinite(t));
    }
    rho.hermitize();
    rho.renormalize().map_err(|_| EvolveError::NonFinite(t))?;
    let edge = rho.edge_population();
    if edge > TRUNCATION_LEAK_LIMIT {
        return Err(EvolveError::TruncationLeak {
            t,
            edge,
            limit: TRUNCATION_LEAK_LIMIT,
        });
    }
    Ok(())
}

/// Integrate the master equation, returning `(t, ρ)` checkpoints
/// (including the initial state). Checkpoints are hermitized and
/// renormalized to unit trace.
pub fn evolve(
    spec: &LiouvillianSpec,
    rho0: &DensityMatrix,
    cfg: &EvolveConfig,
) -> Result<Vec<(f64, DensityMatrix)>, EvolveError> {
    cfg.validate()?;
    let op = LiouvillianOp::new(spec, rho0.space())?;
    let mut stepper = Stepper::new(op, cfg);
    let mut rho = rho0.clone();
    let mut out = vec![(0.0, rho.clone())];
    let steps = (cfg.t_max / stepper.dt).ceil() as usize;
    let mut entries = rho.entries().clone();
    for i in 1..=steps {
        stepper.step(&mut entries);
        if i % cfg.checkpoint_every == 0 || i == steps {
            let t = i as f64 * stepper.dt;
            rho = DensityMatrix::from_parts_unchecked(rho0.space(), entries.clone());
            checkpoint_guards(&mut rho, t)?;
            entries.assign(rho.entries());
            out.push((t, rho.clone()));
        }
    }
    Ok(out)
}

/// March to the steady state. Returns `converged = false` (with the best
/// state) if the residual tolerance is not reached by `t_max`.
pub fn steady_state_march(
    spec: &LiouvillianSpec,
    rho0: &DensityMatrix,
    cfg: &EvolveConfig,
) -> Result<SteadyResult, EvolveError> {
    cfg.validate()?;
    let op = LiouvillianOp::new(spec, rho0.space())?;
    let mut stepper = Stepper::new(op, cfg);
    let mut entries = rho0.entries().clone();
    let steps = (cfg.t_max / stepper.dt).ceil() as usize;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for i in 1..=steps {
        stepper.step(&mut entries);
        iterations = i;
        if i % cfg.checkpoint_every == 0 || i == steps {
            let t = i as f64 * stepper.dt;
            let mut rho = DensityMatrix::from_parts_unchecked(rho0.space(), entries);
            checkpoint_guards(&mut rho, t)?;
            entries = rho.into_entries();
            stepper.op.apply_into(&entries, &mut stepper.k1);
            residual = l1_norm(&stepper.k1);
            if residual <= cfg.tol_steady {
                converged = true;
                break;
            }
        }
    }
    let rho = DensityMatrix::from_parts_unchecked(rho0.space(), entries);
    Ok(SteadyResult {
        observables: Observables::of(&rho),
        rho,
        residual,
        converged,
        iterations,
        degenerate_null_space: false,
    })
}

fn vec_to_state(space: FockSpace, v: &Array1<C64>) -> Option<DensityMatrix> {
    let d = space.dim();
    let m = Array2::from_shape_vec((d, d), v.to_vec()).ok()?;
    let mut rho = DensityMatrix::from_parts_unchecked(space, m);
    rho.hermitize();
    let tr = rho.trace().re;
    if tr.abs() < 1e-8 {
        return None;
    }
    rho.renormalize().ok()?;
    Some(rho)
}

fn state_to_vec(rho: &DensityMatrix) -> Array1<C64> {
    Array1::from_iter(rho.entries().iter().cloned())
}

/// Steady state from the null space of the vectorized generator.
///
/// Shift-inverted inverse iteration from a thermal-diagonal start finds
/// the null vector reachable from physical states; a second, deflated
/// iteration probes for null-space degeneracy. When degenerate, the
/// combination maximizing the smallest eigenvalue is returned and
/// flagged.
pub fn steady_state_direct(
    spec: &LiouvillianSpec,
    space: FockSpace,
) -> Result<SteadyResult, EvolveError> {
    let l = liouvillian_matrix(spec, space)?;
    let dim = l.nrows();
    let op = LiouvillianOp::new(spec, space)?;
    let lambda = op.spectral_radius_estimate().max(1.0);
    let sigma = C64::new(lambda * 1e-12, 0.0);
    let mut shifted = l.clone();
    for i in 0..dim {
        shifted[[i, i]] -= sigma;
    }
    let lu = shifted.factorize()?;

    let d = space.dim();
    // thermal-diagonal start biased toward the physical sector
    let n_bar = spec.mean_photon_estimate().max(0.5);
    let mut therm = vec![0.0; d];
    for (n, p) in therm.iter_mut().enumerate() {
        *p = (-(n as f64) / n_bar).exp();
    }
    let start = DensityMatrix::from_diagonal(space, &therm).expect("thermal weights positive");
    let mut v = state_to_vec(&start);
    for _ in 0..12 {
        v = lu.solve(&v)?;
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(EvolveError::NoNullVector(f64::INFINITY));
        }
        v.mapv_inplace(|z| z / norm);
    }
    let resid_of = |v: &Array1<C64>| -> f64 {
        let lv = l.dot(v);
        lv.iter().map(|z| z.norm()).fold(0.0, f64::max)
    };

    // deflated probe for a second null direction
    let mut w = Array1::from_shape_fn(dim, |i| {
        let x = (i as f64 * 0.7511 + 0.3).sin();
        let y = (i as f64 * 1.3197 + 1.1).cos();
        C64::new(x, y)
    });
    let project_out = |w: &mut Array1<C64>, v: &Array1<C64>| {
        let overlap: C64 = v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
        w.zip_mut_with(v, |wi, vi| *wi -= overlap * vi);
    };
    project_out(&mut w, &v);
    for _ in 0..12 {
        w = lu.solve(&w)?;
        project_out(&mut w, &v);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        w.mapv_inplace(|z| z / norm);
    }
    let degenerate = resid_of(&w) <= DIRECT_RESIDUAL_TOL * lambda.max(1.0);

    let candidate = if degenerate {
        // pick the most positive-semidefinite member of span{v, w}
        let mut best: Option<(f64, DensityMatrix)> = None;
        let steps = 96;
        for k in 0..steps {
            let t = std::f64::consts::PI * k as f64 / steps as f64;
            let combo = v.mapv(|z| z * t.cos()) + w.mapv(|z| z * t.sin());
            if let Some(rho) = vec_to_state(space, &combo) {
                let min_ev = rho.min_eigenvalue();
                if best.as_ref().map_or(true, |(b, _)| min_ev > *b) {
                    best = Some((min_ev, rho));
                }
            }
        }
        best.map(|(_, rho)| rho)
    } else {
        vec_to_state(space, &v)
    };
    let mut rho = candidate.ok_or(EvolveError::NoNullVector(resid_of(&v)))?;
    rho.hermitize();
    rho.renormalize().map_err(|_| EvolveError::NonFinite(0.0))?;

    let residual = resid_of(&state_to_vec(&rho));
    let converged = residual <= DIRECT_RESIDUAL_TOL;
    Ok(SteadyResult {
        observables: Observables::of(&rho),
        rho,
        residual,
        converged,
        iterations: 12,
        degenerate_null_space: degenerate,
    })
}

/// Eigenvalues of the dense vectorized generator (small cutoffs only);
/// used to check that dissipative spectra stay in the closed left half
/// plane.
pub fn liouvillian_spectrum(
    spec: &LiouvillianSpec,
    space: FockSpace,
) -> Result<Vec<C64>, EvolveError> {
    use ndarray_linalg::Eig;
    let l = liouvillian_matrix(spec, space)?;
    let (vals, _) = l.eig()?;
    Ok(vals.to_vec())
}

/// Smallest eigenvalue of a Hermitian matrix (helper for PSD checks).
pub fn min_eigenvalue(m: &CMat) -> Result<f64, EvolveError> {
    use ndarray_linalg::Eigh;
    let (vals, _) = m.eigh(UPLO::Lower)?;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}
