//! Hamiltonian builders for the electron-transfer (ET) control knob and the
//! target systems it pumps, plus the perturbative-validity checks.
//!
//! Energies are in units of the damped-mode frequency ω₀ (so ω₀ = 1 inside
//! every builder). Global constants such as the λ/4 offset of the displaced
//! oscillator are dropped; compare spectra through gaps.

mod couplings;
mod ghz;
mod perturbative;
mod spin;

pub use couplings::{
    ms_coupling_matrix, parse_coupling_csv, selective_hopping, write_coupling_csv, CouplingMatrix, HoppingReport,
    MsDriveSpec, SEVEN_ION_COUPLINGS_KHZ, SEVEN_ION_CONTROL,
};
pub use ghz::{build_ghz, ghz_external_hamiltonians, GhzParams};
pub use perturbative::{check_perturbative, default_vibronic_cutoff, Condition, PerturbativeReport, Relation, Scheme};
pub(crate) use spin::qubit_couplings;
pub use spin::{build_boson_w, build_dicke_pump, build_multi_control_dicke, SpinNetwork};

use crate::error::{Error, Result};
use crate::hilbert::{embed, embed_product, fock_ops, pauli_ops, Factor, Operator, SpaceSpec, StateVector};
use crate::scalar::{cr, Real};

/// Default ceiling on the composite dimension (dense ρ of 4096² entries).
pub const DEFAULT_DIM_GUARD: usize = 4096;

/// Single-site ET parameters, energies in units of ω₀.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtParams<T: Real> {
    delta_e: T,
    g: T,
    v: T,
    omega0_rad_per_ms: T,
    reversed_g: bool,
}

impl<T: Real> EtParams<T> {
    /// `omega0_rad_per_ms` is ω₀ in angular kHz; it only sets the physical time scale.
    pub fn new(delta_e: T, g: T, v: T, omega0_rad_per_ms: T) -> Result<Self> {
        if !(g >= T::zero()) {
            return Err(Error::InvalidParameter(format!("spin-boson coupling g must be non-negative, got {g}")));
        }
        if !(omega0_rad_per_ms > T::zero()) {
            return Err(Error::InvalidParameter("omega0 must be positive".into()));
        }
        if !delta_e.is_finite() || !v.is_finite() {
            return Err(Error::InvalidParameter("non-finite ET parameter".into()));
        }
        Ok(Self { delta_e, g, v, omega0_rad_per_ms, reversed_g: false })
    }

    pub fn delta_e(&self) -> T {
        self.delta_e
    }

    /// Magnitude of the spin-boson coupling.
    pub fn g(&self) -> T {
        self.g
    }

    /// Coupling with its displacement sign applied (see [`EtParams::with_reversed_g`]).
    pub fn signed_g(&self) -> T {
        if self.reversed_g {
            -self.g
        } else {
            self.g
        }
    }

    pub fn v(&self) -> T {
        self.v
    }

    pub fn omega0_rad_per_ms(&self) -> T {
        self.omega0_rad_per_ms
    }

    /// `g̃ = g/ω₀`
    pub fn g_tilde(&self) -> T {
        self.g
    }

    /// Reorganization energy `λ = g²/ω₀`.
    pub fn reorganization_energy(&self) -> T {
        self.g * self.g
    }

    pub fn is_g_reversed(&self) -> bool {
        self.reversed_g
    }

    /// Same parameters with the sign of the spin-dependent displacement flipped.
    pub fn with_reversed_g(&self) -> Self {
        Self { reversed_g: !self.reversed_g, ..*self }
    }

    pub fn with_delta_e(&self, delta_e: T) -> Self {
        Self { delta_e, ..*self }
    }

    pub fn with_v(&self, v: T) -> Self {
        Self { v, ..*self }
    }
}

/// Markovian bath of the damped mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathParams<T: Real> {
    gamma: T,
    n_bar: T,
}

impl<T: Real> BathParams<T> {
    pub fn new(gamma: T, n_bar: T) -> Result<Self> {
        if !(gamma >= T::zero()) || !(n_bar >= T::zero()) {
            return Err(Error::InvalidParameter(format!("bath needs gamma >= 0 and n_bar >= 0 (got {gamma}, {n_bar})")));
        }
        Ok(Self { gamma, n_bar })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn n_bar(&self) -> T {
        self.n_bar
    }

    pub fn with_gamma(&self, gamma: T) -> Result<Self> {
        Self::new(gamma, self.n_bar)
    }

    /// `(a, γ(n̄+1))` and `(a†, γn̄)`; zero-rate channels are omitted.
    pub fn channels(&self, a: &Operator<T>) -> Vec<(Operator<T>, T)> {
        let mut out = Vec::with_capacity(2);
        let down = self.gamma * (self.n_bar + T::one());
        if down > T::zero() {
            out.push((a.clone(), down));
        }
        let up = self.gamma * self.n_bar;
        if up > T::zero() {
            out.push((a.adjoint(), up));
        }
        out
    }
}

/// Control-qubit branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Donor,
    Acceptor,
}

pub(crate) fn check_guard(space: &SpaceSpec, guard: usize) -> Result<()> {
    let dim = space.dim();
    if dim > guard {
        Err(Error::DimensionGuard { dim, limit: guard })
    } else {
        Ok(())
    }
}

/// Damped-mode annihilation operator embedded on factor `site`.
pub fn mode_annihilation<T: Real>(space: &SpaceSpec, site: usize) -> Result<Operator<T>> {
    let n_c = match space.factor(site)? {
        Factor::Boson { cutoff } => cutoff,
        Factor::Qubit => return Err(Error::InvalidParameter(format!("factor {site} is not a boson"))),
    };
    let (a, _, _) = fock_ops::<T>(n_c)?;
    embed(&a, site, space)
}

/// `(ΔE/2)σz + (g/2)σz(a+a†) + ω₀a†a`, plus `Vσx` when `with_tunneling`,
/// for a control qubit on `control` and its damped mode on `mode`.
pub fn et_terms<T: Real>(
    p: &EtParams<T>,
    space: &SpaceSpec,
    control: usize,
    mode: usize,
    with_tunneling: bool,
) -> Result<Operator<T>> {
    let n_c = match space.factor(mode)? {
        Factor::Boson { cutoff } => cutoff,
        Factor::Qubit => return Err(Error::InvalidParameter(format!("factor {mode} is not a boson"))),
    };
    if space.factor(control)? != Factor::Qubit {
        return Err(Error::InvalidParameter(format!("factor {control} is not a qubit")));
    }
    let half = T::lit(0.5);
    let s = pauli_ops::<T>();
    let (a, a_dag, n) = fock_ops::<T>(n_c)?;
    let x = &a + &a_dag;
    let mut h = embed(&s.z, control, space)?.scale(half * p.delta_e())
        + embed_product(&[(control, &s.z), (mode, &x)], space)?.scale(half * p.signed_g())
        + embed(&n, mode, space)?;
    if with_tunneling && p.v() != T::zero() {
        h = h + embed(&s.x, control, space)?.scale(p.v());
    }
    Ok(h)
}

/// `H = (ΔE/2)σz + (g/2)σz(a+a†) + ω₀a†a + Vσx` on `[Qubit, Boson(n_c)]`.
pub fn build_single_site_et<T: Real>(p: &EtParams<T>, n_c: usize) -> Result<Operator<T>> {
    let space = SpaceSpec::new(vec![Factor::Qubit, Factor::Boson { cutoff: n_c }])?;
    et_terms(p, &space, 0, 1, true)
}

/// `Ω σx` on the control qubit (factor `control`) of `space`.
pub fn build_pi_pulse<T: Real>(space: &SpaceSpec, control: usize, omega_pi: T) -> Result<Operator<T>> {
    Ok(embed(&pauli_ops::<T>().x, control, space)?.scale(omega_pi))
}

/// Donor/acceptor vibronic state `|D⟩U(−g̃/2)|n⟩` or `|A⟩U(+g̃/2)|n⟩` on
/// `[Qubit, Boson(n_c)]`. The displacement follows the signed coupling.
pub fn vibronic_state<T: Real>(branch: Branch, n: usize, p: &EtParams<T>, n_c: usize) -> Result<StateVector<T>> {
    if n >= n_c {
        return Err(Error::InvalidParameter(format!("vibronic level {n} outside cutoff {n_c}")));
    }
    let (spin, alpha) = vibronic_parts(branch, p);
    let boson = displaced_fock(alpha, n, n_c)?;
    let qubit = StateVector::basis(&SpaceSpec::qubit(), &[spin])?;
    Ok(qubit.tensor(&boson))
}

/// Spin level index and displacement amplitude of a vibronic branch.
pub(crate) fn vibronic_parts<T: Real>(branch: Branch, p: &EtParams<T>) -> (usize, T) {
    let half = T::lit(0.5) * p.signed_g();
    match branch {
        Branch::Donor => (0, -half),
        Branch::Acceptor => (1, half),
    }
}

/// `U(α)|n⟩` on a single mode.
pub fn displaced_fock<T: Real>(alpha: T, n: usize, n_c: usize) -> Result<StateVector<T>> {
    let u = crate::hilbert::displacement(cr(alpha), n_c)?;
    let fock = StateVector::basis(&SpaceSpec::boson(n_c)?, &[n])?;
    u.apply(&fock)
}

/// Franck–Condon factor `g̃ⁿ e^{−g̃²/2} / √n!` between `|D,0⟩` and `|A,n⟩`.
pub fn franck_condon<T: Real>(g_tilde: T, n: usize) -> T {
    let mut fact = T::one();
    for k in 1..=n {
        fact *= T::from_usize_lossy(k);
    }
    g_tilde.abs().powi(n as i32) * (-(g_tilde * g_tilde) * T::lit(0.5)).exp() / fact.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn p(de: f64, g: f64, v: f64) -> EtParams<f64> {
        EtParams::new(de, g, v, std::f64::consts::TAU * 20.0).unwrap()
    }

    #[test]
    fn displaced_oscillator_spectrum() {
        // H0 = ±ΔE/2 + nω₀ − g²/(4ω₀) per branch
        let h = build_single_site_et(&p(1.0, 1.0, 0.0), 40).unwrap();
        let mut ev: Vec<f64> = h.matrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-0.5 - 0.25, 0.5 - 0.25, 0.5 - 0.25, 1.5 - 0.25];
        for (e, x) in ev.iter().zip(expect) {
            assert!((e - x).abs() < 1e-6, "{e} vs {x}");
        }
    }

    #[test]
    fn uncoupled_is_diagonal() {
        let h = build_single_site_et(&p(1.0, 0.0, 0.0), 6).unwrap();
        let off = h.matrix() - DMatrix::from_diagonal(&h.matrix().diagonal());
        assert_eq!(off.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn single_site_is_hermitian() {
        let h = build_single_site_et(&p(1.0, 1.0, 0.025), 12).unwrap();
        assert!(h.hermiticity_error() < 1e-12);
    }

    #[test]
    fn vibronic_states() {
        let v0 = vibronic_state(Branch::Donor, 0, &p(1.0, 0.0, 0.0), 8).unwrap();
        assert_eq!(v0, StateVector::basis(v0.space(), &[0, 0]).unwrap());

        let params = p(1.0, 1.0, 0.0);
        let d0 = vibronic_state(Branch::Donor, 0, &params, 40).unwrap();
        let h0 = build_single_site_et(&params, 40).unwrap();
        let e = h0.expectation(&d0).unwrap().re;
        // ΔE/2 + λ/4 − λ/2 = ΔE/2 − λ/4 with the dropped-constant convention
        assert!((e - (0.5 - 0.25)).abs() < 1e-6, "{e}");
        assert!((d0.norm() - 1.0).abs() < 1e-10);

        let bd = displaced_fock(-0.5, 0, 30).unwrap();
        let ba = displaced_fock(0.5, 0, 30).unwrap();
        let ov = bd.inner(&ba).unwrap().norm();
        assert!((ov - (-0.5f64).exp()).abs() < 1e-6);
        assert!(vibronic_state(Branch::Acceptor, 8, &params, 8).is_err());
    }

    #[test]
    fn franck_condon_matches_overlap() {
        let params = p(2.0, 1.0, 0.0);
        let d0 = displaced_fock(-0.5, 0, 30).unwrap();
        for n in 0..5 {
            let an = displaced_fock(0.5, n, 30).unwrap();
            let ov = d0.inner(&an).unwrap().norm();
            assert!((ov - franck_condon(params.g_tilde(), n)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn bath_channels() {
        let a = mode_annihilation::<f64>(&SpaceSpec::boson(4).unwrap(), 0).unwrap();
        assert_eq!(BathParams::new(0.1, 0.0).unwrap().channels(&a).len(), 1);
        let ch = BathParams::new(0.1, 0.5).unwrap().channels(&a);
        assert_eq!(ch.len(), 2);
        assert!((ch[0].1 - 0.15).abs() < 1e-15 && (ch[1].1 - 0.05).abs() < 1e-15);
        assert!(BathParams::new(-0.1, 0.0).is_err());
        assert!(EtParams::new(1.0, -1.0, 0.0, 1.0).is_err());
    }
}
