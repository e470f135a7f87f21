//! Initial states and target-state libraries.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{displacement, DensityMatrix, Factor, SpaceSpec, StateVector};
use crate::models::{vibronic_parts, Branch, EtParams};
use crate::scalar::{cr, Real};

/// Thermal-tail weight above which [`displaced_thermal`] warns.
pub const THERMAL_TAIL_WARN: f64 = 1e-6;

/// Boltzmann populations `p_n = (1/(1+n₀))(n₀/(1+n₀))ⁿ`, `n < n_c`,
/// renormalized to the truncated space.
pub fn thermal_populations<T: Real>(n0: T, n_c: usize) -> Result<Vec<T>> {
    if !(n0 >= T::zero()) || !n0.is_finite() {
        return Err(Error::InvalidParameter(format!("thermal occupation must be ≥ 0, got {n0}")));
    }
    let q = n0 / (T::one() + n0);
    let tail = q.powi(n_c as i32);
    if tail.as_f64() > THERMAL_TAIL_WARN {
        log::warn!("thermal tail weight {tail} beyond cutoff {n_c} exceeds {THERMAL_TAIL_WARN}");
    }
    let mut p: Vec<T> = (0..n_c).map(|n| q.powi(n as i32) / (T::one() + n0)).collect();
    let total = p.iter().fold(T::zero(), |a, &b| a + b);
    for x in &mut p {
        *x /= total;
    }
    Ok(p)
}

/// `U(α) ρ_th(n₀) U(α)†` on a single mode of cutoff `n_c`.
pub fn displaced_thermal<T: Real>(n0: T, alpha: T, n_c: usize) -> Result<DensityMatrix<T>> {
    let p = thermal_populations(n0, n_c)?;
    let space = SpaceSpec::boson(n_c)?;
    let th = DMatrix::from_diagonal(&DVector::from_iterator(n_c, p.into_iter().map(cr)));
    let rho = DensityMatrix::new(space, th)?;
    if alpha == T::zero() {
        return Ok(rho);
    }
    rho.conjugate_by(&displacement(cr(alpha), n_c)?)
}

fn qubit_register(n: usize) -> Result<SpaceSpec> {
    SpaceSpec::new(vec![Factor::Qubit; n])
}

/// `|W_N^m⟩`: equal superposition of the `C(N,m)` product states with `m`
/// spins up (level 0).
pub fn dicke_state<T: Real>(n: usize, m: usize) -> Result<StateVector<T>> {
    if n == 0 || m > n {
        return Err(Error::InvalidParameter(format!("Dicke state needs 0 ≤ m ≤ N with N ≥ 1, got N={n}, m={m}")));
    }
    let space = qubit_register(n)?;
    let dim = 1usize << n;
    // level 0 (up) at a site means a zero bit, so m ups ⇔ N − m set bits
    let amps = DVector::from_iterator(
        dim,
        (0..dim).map(|i| if (i as u64).count_ones() as usize == n - m { cr(T::one()) } else { cr(T::zero()) }),
    );
    Ok(StateVector::new(space, amps)?.normalized())
}

/// `(1/√N) Σᵢ |0…1ᵢ…0⟩` over `n_modes` bosonic modes of cutoff `n_t`.
pub fn boson_w_state<T: Real>(n_modes: usize, n_t: usize) -> Result<StateVector<T>> {
    if n_modes == 0 || n_t < 2 {
        return Err(Error::InvalidParameter(format!("boson W state needs N ≥ 1 and n_t ≥ 2, got N={n_modes}, n_t={n_t}")));
    }
    let space = SpaceSpec::new(vec![Factor::Boson { cutoff: n_t }; n_modes])?;
    let mut amps = DVector::zeros(space.dim());
    for i in 0..n_modes {
        let mut levels = vec![0; n_modes];
        levels[i] = 1;
        amps[space.index_of(&levels)?] = cr(T::one());
    }
    Ok(StateVector::new(space, amps)?.normalized())
}

/// Relative sign of the GHZ superposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhzSign {
    Plus,
    Minus,
}

/// `(|↑…↑⟩ ± |↓…↓⟩)/√2`
pub fn ghz_state<T: Real>(n_qubits: usize, sign: GhzSign) -> Result<StateVector<T>> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("GHZ state needs at least one qubit".into()));
    }
    let space = qubit_register(n_qubits)?;
    let mut amps = DVector::zeros(space.dim());
    amps[0] = cr(T::one());
    amps[space.dim() - 1] = cr(if sign == GhzSign::Plus { T::one() } else { -T::one() });
    Ok(StateVector::new(space, amps)?.normalized())
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetState<T: Real> {
    Dicke { n: usize, m: usize },
    BosonW { n_modes: usize, n_t: usize },
    Ghz { n_qubits: usize, sign: GhzSign },
    Custom(StateVector<T>),
}

impl<T: Real> TargetState<T> {
    pub fn vector(&self) -> Result<StateVector<T>> {
        match self {
            TargetState::Dicke { n, m } => dicke_state(*n, *m),
            TargetState::BosonW { n_modes, n_t } => boson_w_state(*n_modes, *n_t),
            TargetState::Ghz { n_qubits, sign } => ghz_state(*n_qubits, *sign),
            TargetState::Custom(v) => Ok(v.clone().normalized()),
        }
    }
}

/// `⟨ψ|ρ|ψ⟩` for `ρ` already reduced to the target factors.
pub fn fidelity<T: Real>(rho: &DensityMatrix<T>, target: &StateVector<T>) -> Result<T> {
    if rho.space() != target.space() {
        return Err(Error::DimensionMismatch { expected: target.space().dim(), found: rho.dim() });
    }
    rho.overlap(&target.clone().normalized())
}

/// `Σ_kl |ψ_k||ψ_l||ρ_kl|`: the largest fidelity attainable by re-phasing
/// the components of `ψ`.
pub fn phase_insensitive_overlap<T: Real>(rho: &DensityMatrix<T>, target: &StateVector<T>) -> Result<T> {
    if rho.space() != target.space() {
        return Err(Error::DimensionMismatch { expected: target.space().dim(), found: rho.dim() });
    }
    let psi = target.clone().normalized();
    let mags: Vec<T> = psi.amplitudes().iter().map(|z| z.norm_sqr().sqrt()).collect();
    let m = rho.matrix();
    let mut acc = T::zero();
    for (k, &a) in mags.iter().enumerate() {
        for (l, &b) in mags.iter().enumerate() {
            acc += a * b * m[(k, l)].norm_sqr().sqrt();
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BosonInit<T: Real> {
    /// Vibronic ground state of the chosen branch.
    GroundDisplaced,
    /// Branch-displaced thermal state with mean occupation `n₀`.
    DisplacedThermal(T),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetInit<T: Real> {
    /// Every target qubit in `|↓⟩`.
    AllDown,
    /// Every target qubit in `|↑⟩`.
    AllUp,
    /// Every target mode in vacuum.
    AllVacuum,
    /// Every target mode thermal with occupation `n₀`.
    Thermal(T),
    /// Product basis state given by per-factor levels.
    Levels(Vec<usize>),
}

/// Product initial state `control ⊗ damped mode ⊗ targets`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialStateSpec<T: Real> {
    pub control: Branch,
    pub boson: BosonInit<T>,
    pub targets: TargetInit<T>,
}

impl<T: Real> InitialStateSpec<T> {
    /// `|D, n=0⟩ ⊗ |↓…↓⟩`
    pub fn donor_ground() -> Self {
        Self { control: Branch::Donor, boson: BosonInit::GroundDisplaced, targets: TargetInit::AllDown }
    }
}

/// Builds the product state on `space = [Qubit, Boson(n_c), targets…]`.
/// The damped mode is displaced as the vibronic states of `control`.
pub fn build_initial<T: Real>(spec: &InitialStateSpec<T>, p: &EtParams<T>, space: &SpaceSpec) -> Result<DensityMatrix<T>> {
    let factors = space.factors();
    if factors.len() < 2 || factors[0] != Factor::Qubit {
        return Err(Error::InvalidParameter("space must start with the control qubit and its damped mode".into()));
    }
    let n_c = match factors[1] {
        Factor::Boson { cutoff } => cutoff,
        Factor::Qubit => return Err(Error::InvalidParameter("factor 1 must be the damped mode".into())),
    };
    let (level, alpha) = vibronic_parts(spec.control, p);
    let control = DensityMatrix::pure(&StateVector::basis(&SpaceSpec::qubit(), &[level])?)?;
    let n0 = match spec.boson {
        BosonInit::GroundDisplaced => T::zero(),
        BosonInit::DisplacedThermal(n0) => n0,
    };
    let mut rho = control.tensor(&displaced_thermal(n0, alpha, n_c)?);
    let targets = &factors[2..];
    if let TargetInit::Levels(levels) = &spec.targets {
        if levels.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: targets.len(), found: levels.len() });
        }
    }
    for (k, f) in targets.iter().enumerate() {
        let single = SpaceSpec::new(vec![*f])?;
        let part = match (&spec.targets, f) {
            (TargetInit::AllDown, Factor::Qubit) => DensityMatrix::pure(&StateVector::basis(&single, &[1])?)?,
            (TargetInit::AllUp, Factor::Qubit) => DensityMatrix::pure(&StateVector::basis(&single, &[0])?)?,
            (TargetInit::AllVacuum, Factor::Boson { .. }) => DensityMatrix::pure(&StateVector::basis(&single, &[0])?)?,
            (TargetInit::Thermal(n0), Factor::Boson { cutoff }) => displaced_thermal(*n0, T::zero(), *cutoff)?,
            (TargetInit::Levels(levels), _) => DensityMatrix::pure(&StateVector::basis(&single, &[levels[k]])?)?,
            _ => {
                return Err(Error::InvalidParameter(format!("target initializer {:?} does not fit factor {f:?}", spec.targets)))
            }
        };
        rho = rho.tensor(&part);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_populations() {
        let p = thermal_populations(0.05f64, 12).unwrap();
        assert!((p[0] - 1.0 / 1.05).abs() < 1e-12);
        assert!((p[1] - 0.05 / 1.05 / 1.05).abs() < 1e-12);
        assert!(thermal_populations(-0.1f64, 12).is_err());
    }

    #[test]
    fn dicke_counts() {
        let w = dicke_state::<f64>(4, 1).unwrap();
        let nz: Vec<f64> = w.amplitudes().iter().filter(|z| z.norm() > 0.0).map(|z| z.re).collect();
        assert_eq!(nz.len(), 4);
        assert!(nz.iter().all(|&a| (a - 0.5).abs() < 1e-15));
        let w2 = dicke_state::<f64>(4, 2).unwrap();
        assert_eq!(w2.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 6);
        let d0 = dicke_state::<f64>(3, 0).unwrap();
        assert_eq!(d0.amplitudes()[7].re, 1.0);
        assert!(dicke_state::<f64>(3, 4).is_err());
    }

    #[test]
    fn boson_w_triplet() {
        let w = boson_w_state::<f64>(2, 3).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w.amplitudes()[1].re - r).abs() < 1e-15 && (w.amplitudes()[3].re - r).abs() < 1e-15);
        let one = boson_w_state::<f64>(1, 2).unwrap();
        assert_eq!(one.amplitudes()[1].re, 1.0);
        assert!(boson_w_state::<f64>(2, 1).is_err());
    }
}
