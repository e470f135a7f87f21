use nalgebra::DMatrix;

use super::{check_guard, et_terms, CouplingMatrix, EtParams, DEFAULT_DIM_GUARD};
use crate::error::{Error, Result};
use crate::hilbert::{embed, embed_product, fock_ops, pauli_ops, Factor, Operator, SpaceSpec};
use crate::scalar::Real;

/// Couplings from the control qubit to `n_targets` target qubits.
///
/// `j[i]` couples the control to target `i`. When `j_matrix` is present it
/// supersedes `j` and also supplies target-target couplings; its rows are in
/// chain order with the control at [`CouplingMatrix::control`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpinNetwork<T: Real> {
    pub n_targets: usize,
    pub j: Vec<T>,
    pub j_matrix: Option<CouplingMatrix<T>>,
    pub b_field: T,
    pub include_counter_rotating: bool,
}

impl<T: Real> SpinNetwork<T> {
    /// Ideal network: equal couplings `j`, no field, excitation conserving.
    pub fn uniform(n_targets: usize, j: T) -> Self {
        Self { n_targets, j: vec![j; n_targets], j_matrix: None, b_field: T::zero(), include_counter_rotating: false }
    }

    pub fn with_matrix(n_targets: usize, m: CouplingMatrix<T>, b_field: T, include_counter_rotating: bool) -> Result<Self> {
        let net = Self { n_targets, j: m.control_row(), j_matrix: Some(m), b_field, include_counter_rotating };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_targets == 0 {
            return Err(Error::InvalidParameter("network needs at least one target".into()));
        }
        if self.j.len() != self.n_targets {
            return Err(Error::Coupling(format!("{} couplings for {} targets", self.j.len(), self.n_targets)));
        }
        if self.j.iter().any(|x| !x.is_finite()) || !self.b_field.is_finite() {
            return Err(Error::Coupling("non-finite coupling".into()));
        }
        if let Some(m) = &self.j_matrix {
            if m.size() != self.n_targets + 1 {
                return Err(Error::Coupling(format!(
                    "coupling matrix of size {} does not match {} targets plus control",
                    m.size(),
                    self.n_targets
                )));
            }
        }
        Ok(())
    }

    /// Full symmetric coupling matrix in space order (control first, then targets).
    pub fn space_ordered_matrix(&self) -> DMatrix<T> {
        match &self.j_matrix {
            Some(m) => m.space_ordered(),
            None => {
                let n = self.n_targets + 1;
                let mut out = DMatrix::zeros(n, n);
                for (i, &j) in self.j.iter().enumerate() {
                    out[(0, i + 1)] = j;
                    out[(i + 1, 0)] = j;
                }
                out
            }
        }
    }

    /// `δJ = max_{i,j} |J_{0,i} − J_{0,j}|`
    pub fn imbalance(&self) -> T {
        let row: Vec<T> = match &self.j_matrix {
            Some(m) => m.control_row(),
            None => self.j.clone(),
        };
        let max = row.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b));
        let min = row.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
        max - min
    }

    /// `J_res = max_{i,j≠0} |J_ij|`
    pub fn residual(&self) -> T {
        let m = self.space_ordered_matrix();
        let mut worst = T::zero();
        for i in 1..m.nrows() {
            for j in 1..m.ncols() {
                worst = worst.max(m[(i, j)].abs());
            }
        }
        worst
    }
}

pub(crate) fn qubit_couplings<T: Real>(
    net: &SpinNetwork<T>,
    space: &SpaceSpec,
    control: usize,
    targets: &[usize],
) -> Result<Operator<T>> {
    let s = pauli_ops::<T>();
    let sites: Vec<usize> = std::iter::once(control).chain(targets.iter().copied()).collect();
    let j = net.space_ordered_matrix();
    let mut h = Operator::zeros(space);
    for a in 0..sites.len() {
        for b in (a + 1)..sites.len() {
            let jab = j[(a, b)];
            if jab == T::zero() {
                continue;
            }
            let term = if net.include_counter_rotating {
                embed_product(&[(sites[a], &s.x), (sites[b], &s.x)], space)?
            } else {
                let pm = embed_product(&[(sites[a], &s.plus), (sites[b], &s.minus)], space)?;
                &pm + &pm.adjoint()
            };
            h = h + term.scale(jab);
        }
    }
    if net.b_field != T::zero() {
        for &site in &sites {
            h = h + embed(&s.z, site, space)?.scale(net.b_field);
        }
    }
    Ok(h)
}

/// Pump Hamiltonian on `[Qubit(control), Boson(n_c), Qubit × N]`.
///
/// Excitation-conserving mode (`include_counter_rotating = false`):
/// `H_ET(V=0) + Σ_{i<j} J_ij(σᵢ⁺σⱼ⁻ + h.c.) + BΣσᶻ`, which for the list form
/// reduces to `σ₀⁺ΣJᵢσᵢ⁻ + h.c.`. Realistic mode replaces the hopping by
/// `Σ_{i<j} J_ij σᵢˣσⱼˣ`.
pub fn build_dicke_pump<T: Real>(p: &EtParams<T>, net: &SpinNetwork<T>, n_c: usize) -> Result<Operator<T>> {
    net.validate()?;
    let mut factors = vec![Factor::Qubit, Factor::Boson { cutoff: n_c }];
    factors.extend(std::iter::repeat_n(Factor::Qubit, net.n_targets));
    let space = SpaceSpec::new(factors)?;
    check_guard(&space, DEFAULT_DIM_GUARD)?;
    let targets: Vec<usize> = (2..2 + net.n_targets).collect();
    Ok(et_terms(p, &space, 0, 1, false)? + qubit_couplings(net, &space, 0, &targets)?)
}

/// `M` controls, each with its own damped mode, coupled to the same `N` targets.
///
/// Space: `[Qubit, Boson(n_c)] × M` then `Qubit × N`. Only the list couplings
/// `net.j` are used (identical for every control).
pub fn build_multi_control_dicke<T: Real>(
    p: &EtParams<T>,
    m_controls: usize,
    net: &SpinNetwork<T>,
    n_c: usize,
    guard: usize,
) -> Result<Operator<T>> {
    net.validate()?;
    if m_controls == 0 {
        return Err(Error::InvalidParameter("need at least one control qubit".into()));
    }
    let mut factors = Vec::new();
    for _ in 0..m_controls {
        factors.push(Factor::Qubit);
        factors.push(Factor::Boson { cutoff: n_c });
    }
    factors.extend(std::iter::repeat_n(Factor::Qubit, net.n_targets));
    let space = SpaceSpec::new(factors)?;
    check_guard(&space, guard)?;
    let targets: Vec<usize> = (2 * m_controls..2 * m_controls + net.n_targets).collect();
    let list_only = SpinNetwork { j_matrix: None, ..net.clone() };
    let mut h = Operator::zeros(&space);
    for k in 0..m_controls {
        h = h + et_terms(p, &space, 2 * k, 2 * k + 1, false)?;
        h = h + qubit_couplings(&SpinNetwork { b_field: T::zero(), ..list_only.clone() }, &space, 2 * k, &targets)?;
    }
    if net.b_field != T::zero() {
        let s = pauli_ops::<T>();
        for k in 0..m_controls {
            h = h + embed(&s.z, 2 * k, &space)?.scale(net.b_field);
        }
        for &t in &targets {
            h = h + embed(&s.z, t, &space)?.scale(net.b_field);
        }
    }
    Ok(h)
}

/// `H_ET(V=0) + J Σᵢ(σ₀⁺bᵢ + h.c.)` on `[Qubit, Boson(n_c), Boson(n_t) × n_modes]`.
///
/// Returns the Hamiltonian and the collapse operators of the damped mode
/// (`a`, to which a bath attaches its rates). Target modes are undamped.
pub fn build_boson_w<T: Real>(
    p: &EtParams<T>,
    n_modes: usize,
    j: T,
    n_t: usize,
    n_c: usize,
) -> Result<(Operator<T>, Vec<Operator<T>>)> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("need at least one target mode".into()));
    }
    let mut factors = vec![Factor::Qubit, Factor::Boson { cutoff: n_c }];
    factors.extend(std::iter::repeat_n(Factor::Boson { cutoff: n_t }, n_modes));
    let space = SpaceSpec::new(factors)?;
    check_guard(&space, DEFAULT_DIM_GUARD)?;
    let s = pauli_ops::<T>();
    let (b, _, _) = fock_ops::<T>(n_t)?;
    let mut h = et_terms(p, &space, 0, 1, false)?;
    for i in 0..n_modes {
        let term = embed_product(&[(0, &s.plus), (2 + i, &b)], &space)?;
        h = h + (&term + &term.adjoint()).scale(j);
    }
    let a = super::mode_annihilation(&space, 1)?;
    Ok((h, vec![a]))
}
