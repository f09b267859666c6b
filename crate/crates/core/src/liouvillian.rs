//! Master-equation generators for the nonlinear laser and the polariton
//! condensate, in the paper-facing sign convention
//!
//! `ℒ[O,ρ] = ρO†O + O†Oρ − 2OρO†`,
//!
//! which is the *negative* of the more common Lindblad dissipator
//! `D[O]ρ = OρO† − ½{O†O,ρ}`; generators subtract `ℒ` with positive
//! prefactors, so `−(γ/2)ℒ[a,ρ] = γ D[a]ρ`.
//!
//! The laser generator is
//!
//! `dρ/dt = −i[H,ρ] − (A/2)ℒ[a†,ρ] − (γ/2)ℒ[a,ρ]
//!          + (B/8)[ρ(aa†)² + 3aa†ρaa† − 4a†ρa·a†a + H.c.]`
//!
//! with `H = (U/2)a†a†aa + iK(a†−a)`; the polariton generator is
//!
//! `dρ/dt = −i[H,ρ] − Γ₂ℒ[aa,ρ] − Δ₂ℒ[a†a†,ρ] − (Γ₁+γ₀)ℒ[a,ρ] − Δ₁ℒ[a†,ρ]`.
//!
//! [`LiouvillianOp`] applies the generator through index-shifted
//! elementwise passes in O(dim²). For the laser the inward-flow
//! coefficient is fused to `√(nm)·(A − (B/2)(n+m))` so that gain and
//! saturation cancel *exactly* (not to round-off) wherever they balance
//! algebraically; this keeps vacuum-seeded evolutions from ever
//! populating the region `n+m > 2A/B` where the quartic saturation
//! truncation turns anti-dissipative.

use crate::fock::{
    annihilation, creation, hermiticity_residual, kerr_hamiltonian, lock_hamiltonian, CMat,
    DensityMatrix, FockSpace,
};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LiouvError {
    #[error("negative rate or strength: {0} = {1}")]
    NegativeRate(&'static str, f64),
    #[error("operator shape ({0}, {1}) incompatible with state shape ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("n_cut {0} exceeds the dense-solve guard {1}")]
    DimensionGuard(usize, usize),
}

/// Scully-Lamb laser with Kerr interaction and injection locking.
/// All quantities share one inverse-time unit (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserSpec {
    /// Linear gain coefficient A.
    pub gain: f64,
    /// Self-saturation coefficient B.
    pub saturation: f64,
    /// Cavity loss rate γ.
    pub loss: f64,
    /// Kerr interaction U.
    pub kerr: f64,
    /// Injection-locking strength K (drive rate × injected amplitude).
    pub lock: f64,
}

/// Polariton condensate with one- and two-particle scattering channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonSpec {
    /// One-polariton scattering gain Δ₁.
    pub gain1: f64,
    /// Two-polariton scattering gain Δ₂.
    pub gain2: f64,
    /// One-polariton scattering loss Γ₁.
    pub loss1: f64,
    /// Two-polariton scattering loss Γ₂.
    pub loss2: f64,
    /// Cavity leak rate γ₀.
    pub leak: f64,
    /// Kerr interaction U.
    pub kerr: f64,
    /// Injection-locking strength K.
    pub lock: f64,
}

impl PolaritonSpec {
    /// Net one-polariton gain `G₁ = Δ₁ − Γ₁`.
    pub fn g1(&self) -> f64 {
        self.gain1 - self.loss1
    }
    /// Net two-polariton gain `G₂ = Δ₂ − Γ₂ − γ₀`; its sign change marks
    /// the condensation threshold.
    pub fn g2(&self) -> f64 {
        self.gain2 - self.loss2 - self.leak
    }
    /// One-polariton diffusion `D₁ = Δ₁ + Γ₁`.
    pub fn d1(&self) -> f64 {
        self.gain1 + self.loss1
    }
    /// Two-polariton diffusion `D₂ = Δ₂ + Γ₂ + γ₀`.
    pub fn d2(&self) -> f64 {
        self.gain2 + self.loss2 + self.leak
    }

    /// Build from net gain/diffusion targets: `Δᵢ = (Dᵢ + Gᵢ)/2`,
    /// `Γ₁ = (D₁ − G₁)/2`, `Γ₂ = (D₂ − G₂)/2 − γ₀`.
    pub fn from_targets(
        g1: f64,
        d1: f64,
        g2: f64,
        d2: f64,
        leak: f64,
        kerr: f64,
        lock: f64,
    ) -> Result<Self, LiouvError> {
        let spec = Self {
            gain1: 0.5 * (d1 + g1),
            loss1: 0.5 * (d1 - g1),
            gain2: 0.5 * (d2 + g2),
            loss2: 0.5 * (d2 - g2) - leak,
            leak,
            kerr,
            lock,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), LiouvError> {
        for (name, v) in [
            ("gain1", self.gain1),
            ("gain2", self.gain2),
            ("loss1", self.loss1),
            ("loss2", self.loss2),
            ("leak", self.leak),
            ("kerr", self.kerr),
            ("lock", self.lock),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(LiouvError::NegativeRate(name, v));
            }
        }
        Ok(())
    }
}

impl LaserSpec {
    fn validate(&self) -> Result<(), LiouvError> {
        for (name, v) in [
            ("gain", self.gain),
            ("saturation", self.saturation),
            ("loss", self.loss),
            ("kerr", self.kerr),
            ("lock", self.lock),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(LiouvError::NegativeRate(name, v));
            }
        }
        Ok(())
    }
}

/// Parameter record selecting which master equation generates `dρ/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiouvillianSpec {
    Laser(LaserSpec),
    Polariton(PolaritonSpec),
}

impl LiouvillianSpec {
    pub fn validate(&self) -> Result<(), LiouvError> {
        match self {
            Self::Laser(s) => s.validate(),
            Self::Polariton(s) => s.validate(),
        }
    }

    pub fn kerr(&self) -> f64 {
        match self {
            Self::Laser(s) => s.kerr,
            Self::Polariton(s) => s.kerr,
        }
    }

    pub fn lock(&self) -> f64 {
        match self {
            Self::Laser(s) => s.lock,
            Self::Polariton(s) => s.lock,
        }
    }

    /// Deterministic fixed-point estimate of the steady mean photon
    /// number, used to size truncations.
    pub fn mean_photon_estimate(&self) -> f64 {
        match self {
            Self::Laser(s) => {
                let free = if s.saturation > 0.0 && s.gain > s.loss {
                    (s.gain - s.loss) / s.saturation
                } else {
                    0.0
                };
                // locked amplitude from K + (A−γ)α/2 − (B/2)α³ = 0
                let locked = if s.lock > 0.0 && s.saturation > 0.0 {
                    let mut a = (2.0 * s.lock / s.saturation).cbrt().max(free.sqrt());
                    for _ in 0..60 {
                        let f = s.lock + 0.5 * (s.gain - s.loss) * a - 0.5 * s.saturation * a * a * a;
                        let df = 0.5 * (s.gain - s.loss) - 1.5 * s.saturation * a * a;
                        let step = f / df;
                        a -= step;
                        if step.abs() < 1e-12 * a.abs().max(1.0) {
                            break;
                        }
                    }
                    a * a
                } else {
                    0.0
                };
                free.max(locked)
            }
            Self::Polariton(s) => {
                let g1 = s.g1();
                let g2 = s.g2();
                // drift zero of r(G₂ + 2G₁ r²) balanced against the lock 2K
                let free = if g1 < 0.0 && g2 > 0.0 {
                    g2 / (2.0 * g1.abs())
                } else {
                    0.0
                };
                let locked = if g1 < 0.0 && s.lock > 0.0 {
                    (s.lock / g1.abs()).powf(2.0 / 3.0)
                } else {
                    0.0
                };
                free.max(locked)
            }
        }
    }
}

/// The paper's Lindblad form `ℒ[O,ρ] = ρO†O + O†Oρ − 2OρO†`.
///
/// Note the sign: this must be *subtracted* (with positive prefactor)
/// to obtain a decay channel.
pub fn lindblad_dissipator(op: &CMat, rho: &CMat) -> Result<CMat, LiouvError> {
    if op.nrows() != rho.nrows() || op.ncols() != rho.ncols() || op.nrows() != op.ncols() {
        return Err(LiouvError::ShapeMismatch(
            op.nrows(),
            op.ncols(),
            rho.nrows(),
            rho.ncols(),
        ));
    }
    let od = conj_transpose(op);
    let odo = od.dot(op);
    Ok(rho.dot(&odo) + odo.dot(rho) - op.dot(rho).dot(&od).mapv(|z| 2.0 * z))
}

/// The laser's quartic gain-saturation term,
/// `(B/8)[ρ(aa†)² + 3aa†ρaa† − 4a†ρa·a†a + H.c.]`,
/// returned as a matrix to be added to `dρ/dt`.
pub fn saturation_term(space: FockSpace, b_sat: f64, rho: &DensityMatrix) -> CMat {
    let a = annihilation(space);
    let ad = creation(space);
    let aad = a.dot(&ad);
    let aad2 = aad.dot(&aad);
    let ada = ad.dot(&a);
    let r = rho.entries();
    let t = r.dot(&aad2) + aad.dot(r).dot(&aad).mapv(|z| 3.0 * z)
        - ad.dot(r).dot(&a).dot(&ada).mapv(|z| 4.0 * z);
    let th = conj_transpose(&t);
    (&t + &th).mapv(|z| z * (b_sat / 8.0))
}

fn conj_transpose(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Precomputed structured form of a generator over a fixed space.
/// Applying it costs O(dim²).
pub struct LiouvillianOp {
    space: FockSpace,
    /// Elementwise complex coefficient of ρ\[n,m\].
    diag: CMat,
    /// Coefficient of ρ\[n-1,m-1\] (one-quantum inward flow, gain-saturation fused).
    up1: Array2<f64>,
    /// Coefficient of ρ\[n+1,m+1\] (one-quantum outward flow).
    dn1: Array2<f64>,
    /// Coefficient of ρ\[n-2,m-2\] (two-quantum gain; polariton only).
    up2: Option<Array2<f64>>,
    /// Coefficient of ρ\[n+2,m+2\] (two-quantum loss; polariton only).
    dn2: Option<Array2<f64>>,
    /// Lock strength K.
    lock: f64,
    /// √n table, last entry √n_cut.
    sqrt_n: Vec<f64>,
}

impl LiouvillianOp {
    pub fn new(spec: &LiouvillianSpec, space: FockSpace) -> Result<Self, LiouvError> {
        spec.validate()?;
        let d = space.dim();
        let mut diag = CMat::zeros((d, d));
        let mut up1 = Array2::zeros((d, d));
        let mut dn1 = Array2::zeros((d, d));
        let mut up2 = None;
        let mut dn2 = None;

        // truncated aa† diagonal: n+1 below the edge, 0 at the top
        let top = |n: usize| -> f64 {
            if n + 1 < d {
                (n + 1) as f64
            } else {
                0.0
            }
        };

        match spec {
            LiouvillianSpec::Laser(s) => {
                for n in 0..d {
                    for m in 0..d {
                        let nf = n as f64;
                        let mf = m as f64;
                        let np = top(n);
                        let mp = top(m);
                        let kerr = -0.5 * s.kerr * (nf * (nf - 1.0) - mf * (mf - 1.0));
                        let re = -0.5 * s.gain * (np + mp) - 0.5 * s.loss * (nf + mf)
                            + (s.saturation / 8.0) * (np * np + mp * mp + 6.0 * np * mp);
                        diag[[n, m]] = C64::new(re, kerr);
                        if n >= 1 && m >= 1 {
                            // gain and saturation fused: A√(nm) − (B/2)(n+m)√(nm)
                            up1[[n, m]] = (nf * mf).sqrt()
                                * (s.gain - 0.5 * s.saturation * (nf + mf));
                        }
                        if n + 1 < d && m + 1 < d {
                            dn1[[n, m]] = s.loss * ((nf + 1.0) * (mf + 1.0)).sqrt();
                        }
                    }
                }
            }
            LiouvillianSpec::Polariton(s) => {
                let l1 = s.loss1 + s.leak;
                let mut u2 = Array2::zeros((d, d));
                let mut d2m = Array2::zeros((d, d));
                // truncated aa a†a† diagonal: (n+1)(n+2) two steps below the edge
                let top2 = |n: usize| -> f64 {
                    if n + 2 < d {
                        ((n + 1) * (n + 2)) as f64
                    } else {
                        0.0
                    }
                };
                for n in 0..d {
                    for m in 0..d {
                        let nf = n as f64;
                        let mf = m as f64;
                        let np = top(n);
                        let mp = top(m);
                        let kerr = -0.5 * s.kerr * (nf * (nf - 1.0) - mf * (mf - 1.0));
                        let re = -s.loss2 * (nf * (nf - 1.0) + mf * (mf - 1.0))
                            - s.gain2 * (top2(n) + top2(m))
                            - l1 * (nf + mf)
                            - s.gain1 * (np + mp);
                        diag[[n, m]] = C64::new(re, kerr);
                        if n >= 1 && m >= 1 {
                            up1[[n, m]] = 2.0 * s.gain1 * (nf * mf).sqrt();
                        }
                        if n + 1 < d && m + 1 < d {
                            dn1[[n, m]] = 2.0 * l1 * ((nf + 1.0) * (mf + 1.0)).sqrt();
                        }
                        if n >= 2 && m >= 2 {
                            u2[[n, m]] = 2.0
                                * s.gain2
                                * (nf * (nf - 1.0) * mf * (mf - 1.0)).sqrt();
                        }
                        if n + 2 < d && m + 2 < d {
                            d2m[[n, m]] = 2.0
                                * s.loss2
                                * ((nf + 1.0) * (nf + 2.0) * (mf + 1.0) * (mf + 2.0)).sqrt();
                        }
                    }
                }
                if s.gain2 > 0.0 {
                    up2 = Some(u2);
                }
                if s.loss2 > 0.0 {
                    dn2 = Some(d2m);
                }
            }
        }

        let sqrt_n: Vec<f64> = (0..d).map(|n| (n as f64).sqrt()).collect();
        Ok(Self {
            space,
            diag,
            up1,
            dn1,
            up2,
            dn2,
            lock: spec.lock(),
            sqrt_n,
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    /// Evaluate `dρ/dt` into `out`.
    pub fn apply_into(&self, rho: &CMat, out: &mut CMat) {
        let d = self.space.dim();
        for n in 0..d {
            for m in 0..d {
                let mut acc = self.diag[[n, m]] * rho[[n, m]];
                if n >= 1 && m >= 1 {
                    acc += self.up1[[n, m]] * rho[[n - 1, m - 1]];
                }
                if n + 1 < d && m + 1 < d {
                    acc += self.dn1[[n, m]] * rho[[n + 1, m + 1]];
                }
                if let Some(u2) = &self.up2 {
                    if n >= 2 && m >= 2 {
                        acc += u2[[n, m]] * rho[[n - 2, m - 2]];
                    }
                }
                if let Some(d2) = &self.dn2 {
                    if n + 2 < d && m + 2 < d {
                        acc += d2[[n, m]] * rho[[n + 2, m + 2]];
                    }
                }
                if self.lock != 0.0 {
                    let mut l = C64::new(0.0, 0.0);
                    if n >= 1 {
                        l += self.sqrt_n[n] * rho[[n - 1, m]];
                    }
                    if n + 1 < d {
                        l -= self.sqrt_n[n + 1] * rho[[n + 1, m]];
                    }
                    if m + 1 < d {
                        l -= self.sqrt_n[m + 1] * rho[[n, m + 1]];
                    }
                    if m >= 1 {
                        l += self.sqrt_n[m] * rho[[n, m - 1]];
                    }
                    acc += self.lock * l;
                }
                out[[n, m]] = acc;
            }
        }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(rho.raw_dim());
        self.apply_into(rho, &mut out);
        out
    }

    /// Power-iteration estimate of the spectral radius, for step-size
    /// control. Deterministic (fixed pseudo-random start).
    pub fn spectral_radius_estimate(&self) -> f64 {
        let d = self.space.dim();
        let mut v = CMat::zeros((d, d));
        // simple LCG; any broadband hermitian start works
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in 0..d {
            for m in n..d {
                let z = C64::new(next(), if n == m { 0.0 } else { next() });
                v[[n, m]] = z;
                v[[m, n]] = z.conj();
            }
        }
        let mut w = CMat::zeros((d, d));
        let mut lambda = 1.0;
        for _ in 0..30 {
            self.apply_into(&v, &mut w);
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            lambda = norm;
            let inv = 1.0 / norm;
            v.zip_mut_with(&w, |a, b| *a = b * inv);
        }
        lambda
    }
}

/// `dρ/dt` for the given spec; output is Hermitian and traceless up to
/// truncation round-off.
pub fn apply_liouvillian(spec: &LiouvillianSpec, rho: &DensityMatrix) -> Result<CMat, LiouvError> {
    let op = LiouvillianOp::new(spec, rho.space())?;
    Ok(op.apply(rho.entries()))
}

/// Reference evaluation through dense operator products, term by term as
/// printed. Used to cross-check the structured fast path.
pub fn apply_liouvillian_dense(
    spec: &LiouvillianSpec,
    rho: &DensityMatrix,
) -> Result<CMat, LiouvError> {
    spec.validate()?;
    let space = rho.space();
    let r = rho.entries();
    let a = annihilation(space);
    let ad = creation(space);
    let (h, mut out) = match spec {
        LiouvillianSpec::Laser(s) => {
            let h = kerr_hamiltonian(space, s.kerr) + lock_hamiltonian(space, s.lock);
            let gain = s.gain;
            let loss = s.loss;
            let mut out = lindblad_dissipator(&ad, r)?.mapv(|z| z * (-0.5 * gain))
                + lindblad_dissipator(&a, r)?.mapv(|z| z * (-0.5 * loss));
            out = out + saturation_term(space, s.saturation, rho);
            (h, out)
        }
        LiouvillianSpec::Polariton(s) => {
            let h = kerr_hamiltonian(space, s.kerr) + lock_hamiltonian(space, s.lock);
            let aa = a.dot(&a);
            let adad = ad.dot(&ad);
            let out = lindblad_dissipator(&aa, r)?.mapv(|z| z * -s.loss2)
                + lindblad_dissipator(&adad, r)?.mapv(|z| z * -s.gain2)
                + lindblad_dissipator(&a, r)?.mapv(|z| z * -(s.loss1 + s.leak))
                + lindblad_dissipator(&ad, r)?.mapv(|z| z * -s.gain1);
            (h, out)
        }
    };
    let i = C64::new(0.0, 1.0);
    out = out - i * (h.dot(r) - r.dot(&h));
    Ok(out)
}

/// Default `n_cut` guard for dense vectorized-generator work.
pub const DENSE_GUARD_N_CUT: usize = 80;

/// Dense matrix `L` over row-major vectorized ρ with
/// `vec(dρ/dt) = L·vec(ρ)`.
pub fn liouvillian_matrix(spec: &LiouvillianSpec, space: FockSpace) -> Result<CMat, LiouvError> {
    liouvillian_matrix_with_guard(spec, space, DENSE_GUARD_N_CUT)
}

pub fn liouvillian_matrix_with_guard(
    spec: &LiouvillianSpec,
    space: FockSpace,
    max_n_cut: usize,
) -> Result<CMat, LiouvError> {
    spec.validate()?;
    if space.n_cut() > max_n_cut {
        return Err(LiouvError::DimensionGuard(space.n_cut(), max_n_cut));
    }
    let d = space.dim();
    let a = annihilation(space);
    let ad = creation(space);
    let eye = CMat::eye(d);
    let h = match spec {
        LiouvillianSpec::Laser(s) => kerr_hamiltonian(space, s.kerr) + lock_hamiltonian(space, s.lock),
        LiouvillianSpec::Polariton(s) => {
            kerr_hamiltonian(space, s.kerr) + lock_hamiltonian(space, s.lock)
        }
    };
    let i = C64::new(0.0, 1.0);
    // row-major vec: AρB ↦ kron(A, Bᵀ)
    let mut l = (&kron(&h, &eye) - &kron(&eye, &h.t().to_owned())).mapv(|z| z * -i);
    let mut add_dissipator = |op: &CMat, rate: f64, l: &mut CMat| {
        if rate == 0.0 {
            return;
        }
        let od = conj_transpose(op);
        let odo = od.dot(op);
        let term = kron(&eye, &odo.t().to_owned()) + kron(&odo, &eye)
            - kron(op, &op.mapv(|z| z.conj())).mapv(|z| 2.0 * z);
        *l = &*l - &term.mapv(|z| z * rate);
    };
    match spec {
        LiouvillianSpec::Laser(s) => {
            add_dissipator(&ad, 0.5 * s.gain, &mut l);
            add_dissipator(&a, 0.5 * s.loss, &mut l);
            if s.saturation != 0.0 {
                let aad = a.dot(&ad);
                let aad2 = aad.dot(&aad);
                let ada = ad.dot(&a);
                let a_ada = a.dot(&ada);
                let ada_ad = ada.dot(&ad);
                let t = kron(&eye, &aad2.t().to_owned())
                    + kron(&aad2, &eye)
                    + kron(&aad, &aad.t().to_owned()).mapv(|z| 6.0 * z)
                    - kron(&ad, &a_ada.t().to_owned()).mapv(|z| 4.0 * z)
                    - kron(&ada_ad, &a.t().to_owned()).mapv(|z| 4.0 * z);
                l = &l + &t.mapv(|z| z * (s.saturation / 8.0));
            }
        }
        LiouvillianSpec::Polariton(s) => {
            let aa = a.dot(&a);
            let adad = ad.dot(&ad);
            add_dissipator(&aa, s.loss2, &mut l);
            add_dissipator(&adad, s.gain2, &mut l);
            add_dissipator(&a, s.loss1 + s.leak, &mut l);
            add_dissipator(&ad, s.gain1, &mut l);
        }
    }
    Ok(l)
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = CMat::zeros((ra * rb, ca * cb));
    for ia in 0..ra {
        for ja in 0..ca {
            let v = a[[ia, ja]];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..rb {
                for jb in 0..cb {
                    out[[ia * rb + ib, ja * cb + jb]] = v * b[[ib, jb]];
                }
            }
        }
    }
    out
}

/// Phase sums `P_k = Σ_n ρ_{n,n+k}` for `k = 0..=k_max`.
pub fn phase_sums(rho: &DensityMatrix, k_max: usize) -> Vec<C64> {
    let d = rho.space().dim();
    let r = rho.entries();
    (0..=k_max)
        .map(|k| (0..d.saturating_sub(k)).map(|n| r[[n, n + k]]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;

    fn space(n_cut: usize) -> FockSpace {
        FockSpace::new(n_cut).unwrap()
    }

    fn laser(gain: f64, saturation: f64, loss: f64, kerr: f64, lock: f64) -> LiouvillianSpec {
        LiouvillianSpec::Laser(LaserSpec {
            gain,
            saturation,
            loss,
            kerr,
            lock,
        })
    }

    fn random_hermitian(d: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMat::zeros((d, d));
        for n in 0..d {
            for mm in n..d {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[[n, mm]] = z;
                m[[mm, n]] = z.conj();
            }
            m[[n, n]] = C64::new(m[[n, n]].re, 0.0);
        }
        m
    }

    #[test]
    fn dissipator_on_fock_one() {
        // ℒ[a, |1⟩⟨1|] = 2|1⟩⟨1| − 2|0⟩⟨0|
        let s = space(3);
        let a = annihilation(s);
        let rho = DensityMatrix::fock_state(s, 1);
        let l = lindblad_dissipator(&a, rho.entries()).unwrap();
        assert_abs_diff_eq!(l[[1, 1]].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l[[0, 0]].re, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.iter().map(|z| z.norm()).sum::<f64>(), 4.0, epsilon = 1e-13);
    }

    #[test]
    fn dissipator_annihilates_vacuum() {
        let s = space(3);
        let a = annihilation(s);
        let rho = DensityMatrix::vacuum(s);
        let l = lindblad_dissipator(&a, rho.entries()).unwrap();
        assert!(l.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn dissipator_shape_mismatch() {
        let a = annihilation(space(3));
        let rho = DensityMatrix::vacuum(space(2));
        assert!(lindblad_dissipator(&a, rho.entries()).is_err());
    }

    #[test]
    fn dissipator_is_traceless_on_random_states() {
        // trace(ℒ[O,ρ]) = 0 by cyclicity, for any O and ρ
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..20 {
            let d = 6;
            let mut o = CMat::zeros((d, d));
            for v in o.iter_mut() {
                *v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let rho = random_hermitian(d, 100 + trial);
            let l = lindblad_dissipator(&o, &rho).unwrap();
            let tr: C64 = l.diag().sum();
            assert!(tr.norm() < 1e-12, "trial {trial}: trace {tr}");
        }
    }

    #[test]
    fn saturation_on_vacuum() {
        // B=8, ρ=|0⟩⟨0|: term-by-term the printed expression plus its
        // Hermitian conjugate gives 8|0⟩⟨0| − 8|1⟩⟨1| (the pre-H.c. sum
        // 4|0⟩⟨0| − 4|1⟩⟨1| is itself Hermitian, so H.c. doubles it;
        // tracelessness pins the split).
        let s = space(4);
        let rho = DensityMatrix::vacuum(s);
        let t = saturation_term(s, 8.0, &rho);
        assert_abs_diff_eq!(t[[0, 0]].re, 8.0, epsilon = 1e-13);
        assert_abs_diff_eq!(t[[1, 1]].re, -8.0, epsilon = 1e-13);
        let tr: C64 = t.diag().sum();
        assert!(tr.norm() < 1e-13);
        let rest: f64 = t
            .indexed_iter()
            .filter(|((n, m), _)| !(n == m && *n < 2))
            .map(|(_, z)| z.norm())
            .sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn saturation_zero_and_hermitian() {
        let s = space(6);
        let rho =
            DensityMatrix::from_matrix(s, random_hermitian(7, 3).mapv(|z| z * 0.1) + CMat::eye(7))
                .unwrap();
        let t0 = saturation_term(s, 0.0, &rho);
        assert!(t0.iter().all(|z| z.norm() == 0.0));
        let t = saturation_term(s, 1.3, &rho);
        assert!(hermiticity_residual(&t) < 1e-13);
    }

    #[test]
    fn kerr_commutator_element() {
        // ⟨3|[H_int,ρ]|1⟩ = (U/2)[3·2 − 0]ρ31 = 6ρ31 at U=2
        let s = space(5);
        let mut m = CMat::eye(6);
        m[[3, 1]] = C64::new(0.25, 0.1);
        m[[1, 3]] = C64::new(0.25, -0.1);
        let rho = DensityMatrix::from_matrix(s, m).unwrap();
        let h = kerr_hamiltonian(s, 2.0);
        let com = h.dot(rho.entries()) - rho.entries().dot(&h);
        let expect = 6.0 * rho.entries()[[3, 1]];
        assert_abs_diff_eq!(com[[3, 1]].re, expect.re, epsilon = 1e-13);
        assert_abs_diff_eq!(com[[3, 1]].im, expect.im, epsilon = 1e-13);
    }

    #[test]
    fn pure_loss_channel_example() {
        // γ=2, ρ=|1⟩⟨1|: dρ/dt = −2|1⟩⟨1| + 2|0⟩⟨0|
        let s = space(3);
        let spec = laser(0.0, 0.0, 2.0, 0.0, 0.0);
        let rho = DensityMatrix::fock_state(s, 1);
        let out = apply_liouvillian(&spec, &rho).unwrap();
        assert_abs_diff_eq!(out[[1, 1]].re, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out[[0, 0]].re, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_states_kill_the_kerr_commutator() {
        let s = space(8);
        let rho = DensityMatrix::phase_mixed(s, 1.3);
        for kerr in [0.0, 0.1, 10.0] {
            let spec = laser(3.0, 1.0, 1.0, kerr, 0.0);
            let out = apply_liouvillian(&spec, &rho).unwrap();
            let off: f64 = out
                .indexed_iter()
                .filter(|((n, m), _)| n != m)
                .map(|(_, z)| z.norm())
                .sum();
            assert!(off < 1e-12, "kerr={kerr}: off-diagonal leak {off}");
        }
    }

    #[test]
    fn fast_path_matches_dense_reference() {
        let specs = [
            laser(3.0, 1.0, 1.0, 0.1, 50.0),
            laser(1.04, 0.02, 1.0, 0.0, 0.0),
            LiouvillianSpec::Polariton(PolaritonSpec {
                gain1: 0.3,
                gain2: 2.0,
                loss1: 1.3,
                loss2: 1.5,
                leak: 0.5,
                kerr: 3.0,
                lock: 7.0,
            }),
        ];
        let s = space(9);
        for (i, spec) in specs.iter().enumerate() {
            let rho = DensityMatrix::from_matrix(
                s,
                random_hermitian(10, 7 + i as u64).mapv(|z| z * 0.05) + CMat::eye(10),
            )
            .unwrap();
            let fast = apply_liouvillian(spec, &rho).unwrap();
            let dense = apply_liouvillian_dense(spec, &rho).unwrap();
            let err = (&fast - &dense).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let scale = dense.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(
                err <= 1e-12 * scale.max(1.0),
                "spec {i}: fast/dense mismatch {err} (scale {scale})"
            );
        }
    }

    #[test]
    fn vectorized_matrix_consistent_with_apply() {
        use rand::SeedableRng;
        let s = space(5);
        let specs = [
            laser(3.0, 1.0, 1.0, 0.1, 2.0),
            LiouvillianSpec::Polariton(PolaritonSpec {
                gain1: 0.2,
                gain2: 1.0,
                loss1: 0.7,
                loss2: 0.9,
                leak: 0.3,
                kerr: 1.0,
                lock: 3.0,
            }),
        ];
        let _ = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for spec in &specs {
            let l = liouvillian_matrix(spec, s).unwrap();
            for trial in 0..20 {
                let m = random_hermitian(6, 1000 + trial);
                let rho = DensityMatrix::from_parts_unchecked(s, m);
                let direct = apply_liouvillian(spec, &rho).unwrap();
                let v = Array1::from_iter(rho.entries().iter().cloned());
                let lv = l.dot(&v);
                let err = lv
                    .iter()
                    .zip(direct.iter())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-12, "trial {trial}: |L·vec(ρ) − dρ/dt| = {err}");
            }
        }
    }

    #[test]
    fn hermiticity_and_trace_preservation_randomized() {
        let s = space(7);
        let specs = [
            laser(3.0, 1.0, 1.0, 0.1, 5.0),
            LiouvillianSpec::Polariton(PolaritonSpec {
                gain1: 0.4,
                gain2: 1.2,
                loss1: 0.9,
                loss2: 1.0,
                leak: 0.2,
                kerr: 2.0,
                lock: 1.0,
            }),
        ];
        for spec in &specs {
            for trial in 0..100 {
                let m = random_hermitian(8, 5000 + trial);
                let rho = DensityMatrix::from_parts_unchecked(s, m);
                let out = apply_liouvillian(spec, &rho).unwrap();
                assert!(hermiticity_residual(&out) < 1e-12);
                let tr: C64 = out.diag().sum();
                assert!(tr.norm() < 1e-10, "trace leak {}", tr.norm());
            }
        }
    }

    #[test]
    fn pure_loss_matrix_annihilates_vacuum() {
        let s = space(6);
        let spec = laser(0.0, 0.0, 1.7, 0.0, 0.0);
        let l = liouvillian_matrix(&spec, s).unwrap();
        let rho = DensityMatrix::vacuum(s);
        let v = Array1::from_iter(rho.entries().iter().cloned());
        let lv = l.dot(&v);
        assert!(lv.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn dimension_guard_enforced() {
        let spec = laser(1.0, 0.1, 1.0, 0.0, 0.0);
        let s = space(81);
        assert!(matches!(
            liouvillian_matrix(&spec, s),
            Err(LiouvError::DimensionGuard(81, 80))
        ));
    }

    #[test]
    fn phase_sums_basics() {
        let s = space(10);
        let vac = DensityMatrix::vacuum(s);
        let p = phase_sums(&vac, 4);
        assert_abs_diff_eq!(p[0].re, 1.0, epsilon = 1e-15);
        for k in 1..=4 {
            assert!(p[k].norm() < 1e-15);
        }
        // fully phase-diffused state: P_k = 0 for all k ≥ 1
        let dough = DensityMatrix::phase_mixed(s, 1.2);
        let p = phase_sums(&dough, 4);
        assert_abs_diff_eq!(p[0].re, 1.0, epsilon = 1e-10);
        for k in 1..=4 {
            assert!(p[k].norm() < 1e-15);
        }
    }

    #[test]
    fn phase_sum_p1_of_coherent_state_matches_series() {
        // P₁(|α⟩⟨α|) = e^{−|α|²} Σ_n α̅·|α|^{2n}/(n!·√(n+1)) at α real
        let s = space(40);
        let alpha = 1.0;
        let rho = DensityMatrix::coherent(s, C64::new(alpha, 0.0));
        let p = phase_sums(&rho, 1);
        let mut expect = 0.0;
        let mut term = (-alpha * alpha as f64).exp(); // n = 0 weight e^{-1}/0!
        for n in 0..40 {
            expect += term * alpha / ((n as f64) + 1.0).sqrt();
            term *= alpha * alpha / (n as f64 + 1.0);
        }
        assert_abs_diff_eq!(p[1].re, expect, epsilon = 1e-10);
        assert_abs_diff_eq!(p[1].im, 0.0, epsilon = 1e-12);
    }
}
