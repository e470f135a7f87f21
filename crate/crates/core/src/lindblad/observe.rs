use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceSpec, StateVector, TraceMap};
use crate::scalar::{Ket, Mat, Real, C};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug)]
enum Kind<T: Real> {
    Expectation(CsrMatrix<T>),
    Fidelity { map: Option<TraceMap>, target: Ket<T> },
    PhaseInsensitive { map: Option<TraceMap>, magnitudes: Vec<T> },
    Coherence { bra: Ket<T>, ket: Ket<T> },
}

/// A named real quantity sampled from `ρ(t)`.
#[derive(Clone, Debug)]
pub struct Observable<T: Real> {
    name: String,
    dim: usize,
    kind: Kind<T>,
}

fn reducer<T: Real>(space: &SpaceSpec, keep: &[usize], target: &StateVector<T>) -> Result<Option<TraceMap>> {
    let map = TraceMap::new(space, keep)?;
    if map.kept_space() != target.space() {
        return Err(Error::DimensionMismatch { expected: map.kept_space().dim(), found: target.space().dim() });
    }
    Ok(if map.kept_space() == space { None } else { Some(map) })
}

impl<T: Real> Observable<T> {
    /// `Re Tr(Oρ)`
    pub fn expectation(name: impl Into<String>, op: &Operator<T>) -> Self {
        Self { name: name.into(), dim: op.dim(), kind: Kind::Expectation(CsrMatrix::from_operator(op)) }
    }

    /// `⟨ψ|Tr_rest(ρ)|ψ⟩` with `ψ` living on the sites `keep` of `space`.
    pub fn fidelity(name: impl Into<String>, space: &SpaceSpec, keep: &[usize], target: &StateVector<T>) -> Result<Self> {
        let map = reducer(space, keep, target)?;
        Ok(Self { name: name.into(), dim: space.dim(), kind: Kind::Fidelity { map, target: target.amplitudes().clone() } })
    }

    /// `Σ_kl |ψ_k||ψ_l||ρ_kl|` on the reduced state: an upper bound on the
    /// fidelity with any state that differs from `ψ` by per-component phases.
    pub fn phase_insensitive_fidelity(
        name: impl Into<String>,
        space: &SpaceSpec,
        keep: &[usize],
        target: &StateVector<T>,
    ) -> Result<Self> {
        let map = reducer(space, keep, target)?;
        let magnitudes = target.amplitudes().iter().map(|z| z.norm_sqr().sqrt()).collect();
        Ok(Self { name: name.into(), dim: space.dim(), kind: Kind::PhaseInsensitive { map, magnitudes } })
    }

    /// Population `⟨ψ|ρ|ψ⟩` of a full-space state.
    pub fn population(name: impl Into<String>, state: &StateVector<T>) -> Result<Self> {
        let keep: Vec<usize> = (0..state.space().len()).collect();
        Self::fidelity(name, state.space(), &keep, state)
    }

    /// `|⟨a|ρ|b⟩|` for full-space states.
    pub fn coherence(name: impl Into<String>, a: &StateVector<T>, b: &StateVector<T>) -> Result<Self> {
        if a.space() != b.space() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            name: name.into(),
            dim: a.space().dim(),
            kind: Kind::Coherence { bra: a.amplitudes().clone(), ket: b.amplitudes().clone() },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, rho: &Mat<T>) -> T {
        match &self.kind {
            Kind::Expectation(op) => op.trace_product(rho).re,
            Kind::Fidelity { map, target } => {
                let reduced;
                let r = match map {
                    Some(m) => {
                        reduced = m.apply(rho);
                        &reduced
                    }
                    None => rho,
                };
                sandwich(target, r, target).re
            }
            Kind::PhaseInsensitive { map, magnitudes } => {
                let reduced;
                let r = match map {
                    Some(m) => {
                        reduced = m.apply(rho);
                        &reduced
                    }
                    None => rho,
                };
                let mut acc = T::zero();
                for (l, &ml) in magnitudes.iter().enumerate() {
                    if ml == T::zero() {
                        continue;
                    }
                    for (k, &mk) in magnitudes.iter().enumerate() {
                        acc += mk * ml * r[(k, l)].norm_sqr().sqrt();
                    }
                }
                acc
            }
            Kind::Coherence { bra, ket } => {
                let z = sandwich(bra, rho, ket);
                z.norm_sqr().sqrt()
            }
        }
    }
}

fn sandwich<T: Real>(a: &Ket<T>, m: &Mat<T>, b: &Ket<T>) -> C<T> {
    let mut acc = C::new(T::zero(), T::zero());
    for (l, bl) in b.iter().enumerate() {
        if bl.re == T::zero() && bl.im == T::zero() {
            continue;
        }
        let col = m.column(l);
        let mut s = C::new(T::zero(), T::zero());
        for (k, ak) in a.iter().enumerate() {
            s += ak.conj() * col[k];
        }
        acc += s * bl;
    }
    acc
}
