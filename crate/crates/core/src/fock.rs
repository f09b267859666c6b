//! Truncated Fock-space operators and density matrices.
//!
//! The basis is `|0⟩ … |n_cut⟩`; every operator is a dense complex matrix
//! of dimension `n_cut + 1`. Truncation follows the projected-operator
//! convention: `a†|n_cut⟩ = 0`, so products like `a a†` pick up a zero in
//! the top-right corner of their diagonal.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Dense complex matrix over a Fock space.
pub type CMat = Array2<C64>;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("photon-number cutoff must be at least 1")]
    CutoffTooSmall,
    #[error("matrix shape ({0}, {1}) does not match Fock dimension {2}")]
    ShapeMismatch(usize, usize, usize),
    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("trace {0:.3e} too small to normalize")]
    BadTrace(f64),
}

/// Photon-number truncation defining the working basis `|0⟩ … |n_cut⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n_cut: usize,
}

impl FockSpace {
    pub fn new(n_cut: usize) -> Result<Self, FockError> {
        if n_cut < 1 {
            return Err(FockError::CutoffTooSmall);
        }
        Ok(Self { n_cut })
    }

    /// Cutoff sized for a state with mean photon number `n_bar`:
    /// `n_cut = ceil(n̄ + 6√n̄ + 10)`, which keeps edge populations
    /// below ~1e-10 for Poissonian-width states.
    pub fn for_mean_photon_number(n_bar: f64) -> Self {
        let n_bar = n_bar.max(0.0);
        let n_cut = (n_bar + 6.0 * n_bar.sqrt() + 10.0).ceil() as usize;
        Self { n_cut }
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    /// Matrix dimension, `n_cut + 1`.
    pub fn dim(&self) -> usize {
        self.n_cut + 1
    }
}

/// Annihilation operator: entry `(n-1, n)` is `√n`.
pub fn annihilation(space: FockSpace) -> CMat {
    let d = space.dim();
    let mut a = CMat::zeros((d, d));
    for n in 1..d {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Creation operator, the conjugate transpose of [`annihilation`].
pub fn creation(space: FockSpace) -> CMat {
    let d = space.dim();
    let mut ad = CMat::zeros((d, d));
    for n in 1..d {
        ad[[n, n - 1]] = C64::new((n as f64).sqrt(), 0.0);
    }
    ad
}

/// Number operator `a†a = diag(0, 1, …, n_cut)`.
pub fn number_operator(space: FockSpace) -> CMat {
    let d = space.dim();
    let mut n_op = CMat::zeros((d, d));
    for n in 0..d {
        n_op[[n, n]] = C64::new(n as f64, 0.0);
    }
    n_op
}

/// Kerr self-interaction `(U/2) a†a†aa = diag((U/2) n(n-1))`.
pub fn kerr_hamiltonian(space: FockSpace, kerr_u: f64) -> CMat {
    let d = space.dim();
    let mut h = CMat::zeros((d, d));
    for n in 0..d {
        h[[n, n]] = C64::new(0.5 * kerr_u * (n * n.saturating_sub(1)) as f64, 0.0);
    }
    h
}

/// Injection-locking Hamiltonian `iK(a† − a)` for a resonant coherent
/// drive of strength `K` with drive phase zero. Hermitian by construction.
pub fn lock_hamiltonian(space: FockSpace, lock_k: f64) -> CMat {
    let d = space.dim();
    let mut h = CMat::zeros((d, d));
    for n in 1..d {
        let s = lock_k * (n as f64).sqrt();
        h[[n, n - 1]] = C64::new(0.0, s); //  iK a†
        h[[n - 1, n]] = C64::new(0.0, -s); // -iK a
    }
    h
}

/// Density matrix over a [`FockSpace`]; element `(n, m)` is `⟨n|ρ|m⟩`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: FockSpace,
    entries: CMat,
}

impl DensityMatrix {
    const HERMITICITY_TOL: f64 = 1e-12;

    /// Validate hermiticity and normalize the trace to one.
    pub fn from_matrix(space: FockSpace, entries: CMat) -> Result<Self, FockError> {
        let d = space.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(FockError::ShapeMismatch(entries.nrows(), entries.ncols(), d));
        }
        let herm = hermiticity_residual(&entries);
        if herm > Self::HERMITICITY_TOL {
            return Err(FockError::NotHermitian(herm));
        }
        let mut rho = Self { space, entries };
        rho.renormalize()?;
        Ok(rho)
    }

    pub fn vacuum(space: FockSpace) -> Self {
        Self::fock_state(space, 0)
    }

    /// Pure number state `|n⟩⟨n|` (clamped to the cutoff).
    pub fn fock_state(space: FockSpace, n: usize) -> Self {
        let d = space.dim();
        let mut entries = CMat::zeros((d, d));
        let n = n.min(d - 1);
        entries[[n, n]] = C64::new(1.0, 0.0);
        Self { space, entries }
    }

    /// Pure coherent state `|α⟩⟨α|`, truncated and renormalized.
    pub fn coherent(space: FockSpace, alpha: C64) -> Self {
        let d = space.dim();
        let mut c = vec![C64::new(0.0, 0.0); d];
        c[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 1..d {
            c[n] = c[n - 1] * alpha / C64::new((n as f64).sqrt(), 0.0);
        }
        let mut entries = CMat::zeros((d, d));
        for n in 0..d {
            for m in 0..d {
                entries[[n, m]] = c[n] * c[m].conj();
            }
        }
        let mut rho = Self { space, entries };
        rho.renormalize().expect("coherent state has positive trace");
        rho
    }

    /// Diagonal mixture with the given populations (renormalized).
    pub fn from_diagonal(space: FockSpace, populations: &[f64]) -> Result<Self, FockError> {
        let d = space.dim();
        let mut entries = CMat::zeros((d, d));
        for (n, &p) in populations.iter().take(d).enumerate() {
            entries[[n, n]] = C64::new(p, 0.0);
        }
        let mut rho = Self { space, entries };
        rho.renormalize()?;
        Ok(rho)
    }

    /// Fully phase-diffused state of amplitude `r`: the uniform phase
    /// mixture of coherent states `|r e^{iθ}⟩`, i.e. the Poissonian
    /// diagonal `e^{-r²} r^{2n}/n! |n⟩⟨n|`.
    pub fn phase_mixed(space: FockSpace, r: f64) -> Self {
        let d = space.dim();
        let u = r * r;
        let mut p = vec![0.0; d];
        // log-space Poisson weights, stable for large r²
        let mut logw = -u;
        p[0] = logw.exp();
        for n in 1..d {
            logw += u.ln() - (n as f64).ln();
            p[n] = logw.exp();
        }
        if u == 0.0 {
            p = vec![0.0; d];
            p[0] = 1.0;
        }
        Self::from_diagonal(space, &p).expect("Poisson weights are positive")
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub(crate) fn from_parts_unchecked(space: FockSpace, entries: CMat) -> Self {
        Self { space, entries }
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diag().iter().map(|z| z.re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.entries
            .diag()
            .iter()
            .enumerate()
            .map(|(n, z)| n as f64 * z.re)
            .sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.entries)
    }

    /// Sum of `|ρ_nm|` over all off-diagonal elements.
    pub fn off_diagonal_l1(&self) -> f64 {
        let mut s = 0.0;
        for ((n, m), z) in self.entries.indexed_iter() {
            if n != m {
                s += z.norm();
            }
        }
        s
    }

    /// Population of the top two Fock levels, the truncation-leak indicator.
    pub fn edge_population(&self) -> f64 {
        let d = self.space.dim();
        self.entries[[d - 1, d - 1]].re + self.entries[[d - 2, d - 2]].re.max(0.0)
    }

    /// Replace ρ by (ρ + ρ†)/2.
    pub fn hermitize(&mut self) {
        let d = self.space.dim();
        for n in 0..d {
            for m in (n + 1)..d {
                let avg = 0.5 * (self.entries[[n, m]] + self.entries[[m, n]].conj());
                self.entries[[n, m]] = avg;
                self.entries[[m, n]] = avg.conj();
            }
            self.entries[[n, n]] = C64::new(self.entries[[n, n]].re, 0.0);
        }
    }

    /// Rescale so that the trace is exactly one.
    pub fn renormalize(&mut self) -> Result<(), FockError> {
        let tr = self.trace().re;
        if tr.abs() < 1e-300 || !tr.is_finite() {
            return Err(FockError::BadTrace(tr));
        }
        self.entries.mapv_inplace(|z| z / tr);
        Ok(())
    }

    /// Trace distance `½ tr |ρ − σ|` via the eigenvalues of the difference.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        use ndarray_linalg::Eigh;
        let diff = &self.entries - &other.entries;
        let (vals, _) = diff
            .eigh(ndarray_linalg::UPLO::Lower)
            .expect("hermitian difference is diagonalizable");
        0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Smallest eigenvalue; physical states satisfy `λ_min ≥ -1e-8`.
    pub fn min_eigenvalue(&self) -> f64 {
        use ndarray_linalg::Eigh;
        let (vals, _) = self
            .entries
            .eigh(ndarray_linalg::UPLO::Lower)
            .expect("hermitian matrix is diagonalizable");
        vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn hermiticity_residual(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..m.nrows() {
        for mm in n..m.ncols() {
            let r = (m[[n, mm]] - m[[mm, n]].conj()).norm();
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn space(n_cut: usize) -> FockSpace {
        FockSpace::new(n_cut).unwrap()
    }

    #[test]
    fn annihilation_small_cases() {
        let a = annihilation(space(1));
        assert_eq!(a[[0, 1]], C64::new(1.0, 0.0));
        assert_eq!(a[[0, 0]], C64::new(0.0, 0.0));
        assert_eq!(a[[1, 0]], C64::new(0.0, 0.0));
        assert_eq!(a[[1, 1]], C64::new(0.0, 0.0));

        let a2 = annihilation(space(2));
        assert_abs_diff_eq!(a2[[1, 2]].re, 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn number_operator_is_creation_times_annihilation() {
        let s = space(3);
        let prod = creation(s).dot(&annihilation(s));
        let n_op = number_operator(s);
        for n in 0..4 {
            assert_abs_diff_eq!(prod[[n, n]].re, n_op[[n, n]].re, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(prod[[3, 3]].re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn kerr_diagonal_values() {
        let h = kerr_hamiltonian(space(3), 2.0);
        assert_abs_diff_eq!(h[[3, 3]].re, 6.0, epsilon = 1e-15); // (2/2)·3·2
        assert_eq!(h[[0, 0]], C64::new(0.0, 0.0));
        assert_eq!(h[[1, 1]], C64::new(0.0, 0.0));
    }

    #[test]
    fn lock_hamiltonian_two_level() {
        let h = lock_hamiltonian(space(1), 1.0);
        assert_eq!(h[[0, 1]], C64::new(0.0, -1.0));
        assert_eq!(h[[1, 0]], C64::new(0.0, 1.0));
    }

    #[test]
    fn lock_hamiltonian_is_hermitian_and_vanishes_at_zero() {
        for n_cut in [1, 5, 17] {
            let h = lock_hamiltonian(space(n_cut), 3.7);
            assert!(hermiticity_residual(&h) < 1e-15);
        }
        let z = lock_hamiltonian(space(4), 0.0);
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn coherent_state_moments() {
        let s = space(30);
        let alpha = C64::new(1.2, -0.7);
        let rho = DensityMatrix::coherent(s, alpha);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.mean_photon_number(), alpha.norm_sqr(), epsilon = 1e-9);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn phase_mixed_matches_poisson() {
        let s = space(30);
        let rho = DensityMatrix::phase_mixed(s, 2.0f64.sqrt());
        let p = rho.populations();
        // e^{-2} 2^n / n!
        assert_abs_diff_eq!(p[0], (-2.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(p[3], (-2.0f64).exp() * 8.0 / 6.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rho.mean_photon_number(), 2.0, epsilon = 1e-9);
        assert_eq!(rho.off_diagonal_l1(), 0.0);
    }

    #[test]
    fn from_matrix_rejects_non_hermitian() {
        let s = space(2);
        let mut m = CMat::zeros((3, 3));
        m[[0, 1]] = C64::new(0.5, 0.0);
        m[[0, 0]] = C64::new(1.0, 0.0);
        assert!(matches!(
            DensityMatrix::from_matrix(s, m),
            Err(FockError::NotHermitian(_))
        ));
    }

    #[test]
    fn cutoff_guard() {
        assert!(FockSpace::new(0).is_err());
        assert_eq!(FockSpace::for_mean_photon_number(2.0).n_cut(), 21);
    }
}
